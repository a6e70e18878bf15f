#include "cpop/chordal.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "cpop/linalg.hpp"

namespace cpop {

void CouplingGraph::add_edge(int i, int j) {
  if (i < 0 || j < 0 || i >= n || j >= n) throw StructuralError("edge vertex out of range");
  if (i == j) return;
  edges.insert({std::min(i, j), std::max(i, j)});
}

bool CouplingGraph::has_edge(int i, int j) const {
  return edges.count({std::min(i, j), std::max(i, j)}) > 0;
}

void CouplingGraph::add_clique(const std::vector<int>& vs) {
  for (size_t a = 0; a < vs.size(); ++a)
    for (size_t b = a + 1; b < vs.size(); ++b) add_edge(vs[a], vs[b]);
}

std::vector<std::vector<int>> CouplingGraph::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (auto [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

std::vector<int> support(const ComplexPolynomial& p) {
  std::vector<bool> used(p.num_vars(), false);
  for (const auto& [e, c] : p.terms())
    for (int k = 0; k < p.num_vars(); ++k)
      if (e.alpha[k] + e.beta[k] > 0) used[k] = true;
  std::vector<int> s;
  for (int k = 0; k < p.num_vars(); ++k)
    if (used[k]) s.push_back(k);
  return s;
}

CouplingGraph mono_coupling_graph(int n, const std::vector<ComplexPolynomial>& polys) {
  CouplingGraph g(n);
  for (const auto& p : polys) {
    if (p.num_vars() != n) throw StructuralError("polynomial variable count differs from graph");
    for (const auto& [e, c] : p.terms()) {
      std::vector<int> s;
      for (int k = 0; k < n; ++k)
        if (e.alpha[k] + e.beta[k] > 0) s.push_back(k);
      g.add_clique(s);
    }
  }
  return g;
}

CouplingGraph con_coupling_graph(const CouplingGraph& base, const std::vector<int>& orders,
                                 const std::vector<int>& half_degrees,
                                 const std::vector<std::vector<int>>& supports) {
  if (orders.size() != supports.size() || half_degrees.size() != supports.size())
    throw StructuralError("order, degree and support lists differ in length");
  CouplingGraph g = base;
  for (size_t i = 0; i < supports.size(); ++i) {
    if (orders[i] < half_degrees[i]) throw StructuralError("constraint order below its half-degree");
    if (orders[i] > half_degrees[i]) g.add_clique(supports[i]);
  }
  return g;
}

std::vector<int> CliqueDecomposition::cover_vertices(int i) const {
  std::vector<int> vs;
  for (int l : covers.at(i)) vs.insert(vs.end(), cliques[l].begin(), cliques[l].end());
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

std::string CliqueDecomposition::fingerprint() const {
  // FNV-1a over a canonical text form.
  std::ostringstream os;
  os << n << '|';
  for (const auto& c : cliques) {
    for (int v : c) os << v << ',';
    os << ';';
  }
  os << '|';
  for (const auto& c : covers) {
    for (int v : c) os << v << ',';
    os << ';';
  }
  os << '|';
  for (int d : clique_orders) os << d << ',';
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool is_perfect_elimination_order(const CouplingGraph& g, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != g.n) return false;
  std::vector<int> pos(g.n, -1);
  for (int k = 0; k < g.n; ++k) {
    if (order[k] < 0 || order[k] >= g.n || pos[order[k]] >= 0) return false;
    pos[order[k]] = k;
  }
  const auto adj = g.adjacency();
  for (int v = 0; v < g.n; ++v) {
    std::vector<int> later;
    for (int w : adj[v])
      if (pos[w] > pos[v]) later.push_back(w);
    for (size_t a = 0; a < later.size(); ++a)
      for (size_t b = a + 1; b < later.size(); ++b)
        if (!g.has_edge(later[a], later[b])) return false;
  }
  return true;
}

namespace {

// Orders cliques by a maximum-weight spanning tree of the intersection graph, rooted at the
// clique holding the lowest vertex, breadth first. The result has the running-intersection
// property whenever the cliques come from a chordal graph.
void build_clique_tree(CliqueDecomposition& dec) {
  const int p = static_cast<int>(dec.cliques.size());
  auto weight = [&](int a, int b) {
    std::vector<int> out;
    std::set_intersection(dec.cliques[a].begin(), dec.cliques[a].end(), dec.cliques[b].begin(),
                          dec.cliques[b].end(), std::back_inserter(out));
    return static_cast<int>(out.size());
  };
  std::vector<int> parent(p, -1), order;
  std::vector<bool> in(p, false);
  std::vector<int> best(p, -1), best_from(p, -1);
  in[0] = true;
  order.push_back(0);
  for (int b = 1; b < p; ++b) best[b] = weight(0, b), best_from[b] = 0;
  for (int step = 1; step < p; ++step) {
    int pick = -1;
    for (int b = 0; b < p; ++b)
      if (!in[b] && (pick < 0 || best[b] > best[pick])) pick = b;
    in[pick] = true;
    parent[pick] = best_from[pick];
    order.push_back(pick);
    for (int b = 0; b < p; ++b)
      if (!in[b]) {
        const int w = weight(pick, b);
        if (w > best[b]) best[b] = w, best_from[b] = pick;
      }
  }
  // Prim order already lists every clique after its parent.
  std::vector<int> new_index(p);
  for (int k = 0; k < p; ++k) new_index[order[k]] = k;
  std::vector<std::vector<int>> cliques(p);
  std::vector<int> new_parent(p, -1);
  for (int k = 0; k < p; ++k) {
    cliques[k] = dec.cliques[order[k]];
    new_parent[k] = parent[order[k]] < 0 ? -1 : new_index[parent[order[k]]];
  }
  dec.cliques = std::move(cliques);
  dec.parent = std::move(new_parent);
}

}  // namespace

CliqueDecomposition chordal_extend_and_cliques(const CouplingGraph& g) {
  CliqueDecomposition dec;
  dec.n = g.n;
  dec.extension = g;
  std::vector<std::set<int>> adj(g.n);
  for (auto [i, j] : g.edges) adj[i].insert(j), adj[j].insert(i);
  std::vector<bool> gone(g.n, false);
  for (int step = 0; step < g.n; ++step) {
    int v = -1;
    for (int u = 0; u < g.n; ++u)
      if (!gone[u] && (v < 0 || adj[u].size() < adj[v].size())) v = u;
    dec.elimination_order.push_back(v);
    std::vector<int> nb(adj[v].begin(), adj[v].end());
    for (size_t a = 0; a < nb.size(); ++a)
      for (size_t b = a + 1; b < nb.size(); ++b) {
        adj[nb[a]].insert(nb[b]);
        adj[nb[b]].insert(nb[a]);
        dec.extension.add_edge(nb[a], nb[b]);
      }
    for (int w : nb) adj[w].erase(v);
    gone[v] = true;
    std::vector<int> candidate = nb;
    candidate.push_back(v);
    std::sort(candidate.begin(), candidate.end());
    dec.cliques.push_back(candidate);
  }
  if (!is_perfect_elimination_order(dec.extension, dec.elimination_order))
    throw std::logic_error("elimination order is not perfect on the extension");
  // Keep the maximal candidates.
  std::vector<std::vector<int>> maximal;
  for (size_t a = 0; a < dec.cliques.size(); ++a) {
    bool contained = false;
    for (size_t b = 0; b < dec.cliques.size() && !contained; ++b) {
      if (a == b) continue;
      const auto& A = dec.cliques[a];
      const auto& B = dec.cliques[b];
      if (A.size() > B.size() || (A.size() == B.size() && (A != B || b > a))) continue;
      contained = std::includes(B.begin(), B.end(), A.begin(), A.end());
    }
    if (!contained) maximal.push_back(dec.cliques[a]);
  }
  std::sort(maximal.begin(), maximal.end());
  dec.cliques = std::move(maximal);
  if (dec.cliques.empty()) return dec;
  build_clique_tree(dec);
  return dec;
}

CliqueDecomposition dense_decomposition(int n) {
  CliqueDecomposition dec;
  dec.n = n;
  dec.extension = CouplingGraph(n);
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  dec.extension.add_clique(all);
  dec.cliques = {all};
  dec.parent = {-1};
  dec.elimination_order = all;
  return dec;
}

std::vector<int> min_clique_cover(const std::vector<std::vector<int>>& cliques,
                                  const std::vector<int>& target_in) {
  std::vector<int> target = target_in;
  std::sort(target.begin(), target.end());
  target.erase(std::unique(target.begin(), target.end()), target.end());
  if (target.empty()) return {};
  std::vector<int> cand;
  for (int l = 0; l < static_cast<int>(cliques.size()); ++l)
    for (int v : target)
      if (std::binary_search(cliques[l].begin(), cliques[l].end(), v)) {
        cand.push_back(l);
        break;
      }
  auto covered_by = [&](const std::vector<int>& chosen, int v) {
    for (int l : chosen)
      if (std::binary_search(cliques[l].begin(), cliques[l].end(), v)) return true;
    return false;
  };
  using Key = std::tuple<long, long, std::vector<int>>;
  auto key_of = [&](std::vector<int> chosen) {
    std::sort(chosen.begin(), chosen.end());
    long total = 0;
    std::set<int> uni;
    for (int l : chosen) {
      total += static_cast<long>(cliques[l].size());
      uni.insert(cliques[l].begin(), cliques[l].end());
    }
    return Key{total, static_cast<long>(uni.size()), chosen};
  };
  std::vector<int> best;
  bool found = false;
  Key best_key;
  std::vector<int> chosen;
  if (static_cast<int>(cand.size()) <= kMaxExactCover) {
    std::function<void(long)> dfs = [&](long total) {
      if (found && total > std::get<0>(best_key)) return;
      int v = -1;
      for (int t : target)
        if (!covered_by(chosen, t)) {
          v = t;
          break;
        }
      if (v < 0) {
        Key k = key_of(chosen);
        if (!found || k < best_key) best_key = k, best = std::get<2>(k), found = true;
        return;
      }
      for (int l : cand) {
        if (!std::binary_search(cliques[l].begin(), cliques[l].end(), v)) continue;
        chosen.push_back(l);
        dfs(total + static_cast<long>(cliques[l].size()));
        chosen.pop_back();
      }
    };
    dfs(0);
  } else {
    // Greedy: most new target vertices per clique size, then lowest index.
    while (true) {
      int pick = -1;
      double ratio = 0.0;
      for (int l : cand) {
        int gain = 0;
        for (int v : cliques[l])
          if (std::binary_search(target.begin(), target.end(), v) && !covered_by(chosen, v)) ++gain;
        const double r = static_cast<double>(gain) / static_cast<double>(cliques[l].size());
        if (gain > 0 && r > ratio) ratio = r, pick = l;
      }
      if (pick < 0) break;
      chosen.push_back(pick);
    }
    found = std::all_of(target.begin(), target.end(), [&](int v) { return covered_by(chosen, v); });
    std::sort(chosen.begin(), chosen.end());
    best = chosen;
  }
  if (!found) throw StructuralError("no clique cover exists for a constraint support");
  return best;
}

void assign_covers_and_orders(CliqueDecomposition& dec, const std::vector<std::vector<int>>& supports,
                              const std::vector<int>& orders, const std::vector<int>& half_degrees,
                              int min_order) {
  const size_t m = supports.size();
  if (orders.size() != m || half_degrees.size() != m)
    throw StructuralError("order, degree and support lists differ in length");
  const int p = static_cast<int>(dec.cliques.size());
  dec.covers.assign(m, {});
  for (size_t i = 0; i < m; ++i) {
    if (orders[i] < half_degrees[i]) throw StructuralError("constraint order below its half-degree");
    std::vector<int> s = supports[i];
    std::sort(s.begin(), s.end());
    if (orders[i] > half_degrees[i]) {
      int pick = -1;
      for (int l = 0; l < p; ++l)
        if (std::includes(dec.cliques[l].begin(), dec.cliques[l].end(), s.begin(), s.end()) &&
            (pick < 0 || dec.cliques[l].size() < dec.cliques[pick].size()))
          pick = l;
      if (pick < 0) throw StructuralError("raised constraint support is not inside one clique");
      dec.covers[i] = {pick};
    } else if (s.empty()) {
      dec.covers[i] = {0};
    } else {
      dec.covers[i] = min_clique_cover(dec.cliques, s);
    }
  }
  int dmin = std::numeric_limits<int>::max();
  for (int d : orders) dmin = std::min(dmin, d);
  if (m == 0) dmin = 1;
  dec.clique_orders.assign(p, -1);
  for (size_t i = 0; i < m; ++i)
    if (dec.covers[i].size() == 1) {
      const int l = dec.covers[i][0];
      dec.clique_orders[l] = std::max(dec.clique_orders[l], orders[i]);
    }
  for (int l = 0; l < p; ++l) {
    if (dec.clique_orders[l] < 0) dec.clique_orders[l] = dmin;
    dec.clique_orders[l] = std::max(dec.clique_orders[l], min_order);
  }
}

Eigen::MatrixXcd psd_complete(const Eigen::MatrixXcd& partial, const CliqueDecomposition& dec) {
  const int n = static_cast<int>(partial.rows());
  Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(n, n);
  std::vector<int> done;
  for (const auto& C : dec.cliques) {
    for (int i : C)
      for (int j : C) Z(i, j) = partial(i, j);
    std::vector<int> sep, rest, outside;
    for (int v : C) (std::binary_search(done.begin(), done.end(), v) ? sep : rest).push_back(v);
    for (int v : done)
      if (!std::binary_search(C.begin(), C.end(), v)) outside.push_back(v);
    // Z[outside, rest] = Z[outside, sep] Z[sep, sep]^+ Z[sep, rest]
    if (!outside.empty() && !rest.empty()) {
      auto block = [&](const std::vector<int>& r, const std::vector<int>& c) {
        Eigen::MatrixXcd B(r.size(), c.size());
        for (size_t a = 0; a < r.size(); ++a)
          for (size_t b = 0; b < c.size(); ++b) B(a, b) = Z(r[a], c[b]);
        return B;
      };
      Eigen::MatrixXcd fill = Eigen::MatrixXcd::Zero(outside.size(), rest.size());
      if (!sep.empty()) {
        Eigen::MatrixXcd S = block(sep, sep);
        HermitianEigen e = hermitian_eig(hermitian_part(S));
        const double cut = 1e-12 * std::max(1.0, e.values.cwiseAbs().maxCoeff());
        Eigen::MatrixXcd pinv = Eigen::MatrixXcd::Zero(sep.size(), sep.size());
        for (int k = 0; k < e.values.size(); ++k)
          if (e.values(k) > cut) pinv += e.vectors.col(k) * e.vectors.col(k).adjoint() / e.values(k);
        fill = block(outside, sep) * pinv * block(sep, rest);
      }
      for (size_t a = 0; a < outside.size(); ++a)
        for (size_t b = 0; b < rest.size(); ++b) {
          Z(outside[a], rest[b]) = fill(a, b);
          Z(rest[b], outside[a]) = std::conj(fill(a, b));
        }
    }
    done.insert(done.end(), C.begin(), C.end());
    std::sort(done.begin(), done.end());
    done.erase(std::unique(done.begin(), done.end()), done.end());
  }
  return Z;
}

void write_dot(const CouplingGraph& g, std::ostream& os, const CouplingGraph* base) {
  os << "graph coupling {\n";
  for (int v = 0; v < g.n; ++v) os << "  " << v + 1 << ";\n";
  for (auto [i, j] : g.edges) {
    os << "  " << i + 1 << " -- " << j + 1;
    if (base && !base->has_edge(i, j)) os << " [style=dashed]";
    os << ";\n";
  }
  os << "}\n";
}

void write_dot(const CliqueDecomposition& dec, std::ostream& os) {
  os << "graph clique_tree {\n";
  for (size_t l = 0; l < dec.cliques.size(); ++l) {
    os << "  C" << l + 1 << " [label=\"{";
    for (size_t k = 0; k < dec.cliques[l].size(); ++k) os << (k ? "," : "") << dec.cliques[l][k] + 1;
    os << "}";
    if (l < dec.clique_orders.size()) os << " d=" << dec.clique_orders[l];
    os << "\"];\n";
  }
  for (size_t l = 0; l < dec.parent.size(); ++l)
    if (dec.parent[l] >= 0) os << "  C" << dec.parent[l] + 1 << " -- C" << l + 1 << ";\n";
  os << "}\n";
}

}  // namespace cpop
