#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "cpop/chordal.hpp"
#include "cpop/linalg.hpp"
#include "support/random.hpp"

using namespace cpop;
using cpop::testing::Rng;

namespace {

// Five-bus coupling: solid edges 12, 24, 45, 53, 31, 23 (1-based).
CouplingGraph five_bus_mono() {
  CouplingGraph g(5);
  for (auto [i, j] : {std::pair{1, 2}, {2, 4}, {4, 5}, {5, 3}, {3, 1}, {2, 3}}) g.add_edge(i - 1, j - 1);
  return g;
}

CouplingGraph random_graph(Rng& rng, int n, double density) {
  CouplingGraph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (cpop::testing::uniform(rng, 0, 1) < density) g.add_edge(i, j);
  return g;
}

// Running intersection: C_k intersected with the union of earlier cliques lies in C_parent(k).
bool running_intersection(const CliqueDecomposition& dec) {
  std::set<int> seen(dec.cliques[0].begin(), dec.cliques[0].end());
  for (size_t k = 1; k < dec.cliques.size(); ++k) {
    const int p = dec.parent[k];
    if (p < 0 || p >= static_cast<int>(k)) return false;
    for (int v : dec.cliques[k])
      if (seen.count(v) && !std::binary_search(dec.cliques[p].begin(), dec.cliques[p].end(), v)) return false;
    seen.insert(dec.cliques[k].begin(), dec.cliques[k].end());
  }
  return true;
}

// Exhaustive minimum of (sum of sizes, union size, sorted indices) over clique subsets.
std::vector<int> brute_force_cover(const std::vector<std::vector<int>>& cliques, const std::vector<int>& target) {
  const int p = static_cast<int>(cliques.size());
  std::tuple<long, long, std::vector<int>> best{1L << 40, 0, {}};
  for (int mask = 1; mask < (1 << p); ++mask) {
    std::set<int> uni;
    long total = 0;
    std::vector<int> idx;
    for (int l = 0; l < p; ++l)
      if (mask >> l & 1) {
        idx.push_back(l);
        total += static_cast<long>(cliques[l].size());
        uni.insert(cliques[l].begin(), cliques[l].end());
      }
    if (!std::all_of(target.begin(), target.end(), [&](int v) { return uni.count(v) > 0; })) continue;
    std::tuple<long, long, std::vector<int>> key{total, static_cast<long>(uni.size()), idx};
    if (key < best) best = key;
  }
  return std::get<2>(best);
}

}  // namespace

TEST(Chordal, MonomialCouplingUsesJointSupport) {
  // Re{z1 (z2 + z3)}
  ComplexPolynomial g(3);
  g.add_term(ExponentPair({0, 0, 0}, {1, 1, 0}), 0.5);
  g.add_term(ExponentPair({1, 1, 0}, {0, 0, 0}), 0.5);
  g.add_term(ExponentPair({0, 0, 0}, {1, 0, 1}), 0.5);
  g.add_term(ExponentPair({1, 0, 1}, {0, 0, 0}), 0.5);
  CouplingGraph cg = mono_coupling_graph(3, {g});
  std::set<std::pair<int, int>> expected{{0, 1}, {0, 2}};
  EXPECT_EQ(cg.edges, expected);
}

TEST(Chordal, SingleVariableHasNoEdges) {
  CouplingGraph cg = mono_coupling_graph(1, {ComplexPolynomial::abs2(1, 0)});
  EXPECT_TRUE(cg.edges.empty());
}

TEST(Chordal, ConstraintCouplingAddsRaisedSupports) {
  CouplingGraph base = five_bus_mono();
  CouplingGraph con = con_coupling_graph(base, {2, 2, 1}, {1, 1, 1}, {{1, 4}, {2, 3}, {0, 4}});
  std::set<std::pair<int, int>> added;
  for (auto e : con.edges)
    if (!base.edges.count(e)) added.insert(e);
  EXPECT_EQ(added, (std::set<std::pair<int, int>>{{1, 4}, {2, 3}}));
  EXPECT_EQ(con_coupling_graph(base, {1}, {1}, {{0, 4}}).edges, base.edges);
  CouplingGraph full = con_coupling_graph(CouplingGraph(4), {2}, {1}, {{0, 1, 2, 3}});
  EXPECT_EQ(full.edges.size(), 6u);
  EXPECT_THROW(con_coupling_graph(base, {0}, {1}, {{0}}), StructuralError);
}

TEST(Chordal, FiveBusCliques) {
  CouplingGraph con = con_coupling_graph(five_bus_mono(), {2, 2}, {1, 1}, {{1, 4}, {2, 3}});
  CliqueDecomposition dec = chordal_extend_and_cliques(con);
  std::set<std::vector<int>> got(dec.cliques.begin(), dec.cliques.end());
  EXPECT_EQ(got, (std::set<std::vector<int>>{{0, 1, 2}, {1, 2, 3, 4}}));
  EXPECT_EQ(dec.extension.edges, con.edges);  // already chordal

  // Raised constraints live on C2 = {2,3,4,5}; a first-order one on bus 1 only.
  assign_covers_and_orders(dec, {{1, 4}, {2, 3}, {0}}, {2, 2, 1}, {1, 1, 1});
  const int c2 = dec.cliques[0].size() == 4 ? 0 : 1;
  EXPECT_EQ(dec.covers[0], std::vector<int>{c2});
  EXPECT_EQ(dec.covers[1], std::vector<int>{c2});
  EXPECT_EQ(dec.clique_orders[c2], 2);
  EXPECT_EQ(dec.clique_orders[1 - c2], 1);
}

TEST(Chordal, TriangleAndFourCycle) {
  CouplingGraph tri(3);
  tri.add_clique({0, 1, 2});
  CliqueDecomposition d3 = chordal_extend_and_cliques(tri);
  ASSERT_EQ(d3.cliques.size(), 1u);
  EXPECT_EQ(d3.cliques[0], (std::vector<int>{0, 1, 2}));

  CouplingGraph cyc(4);
  for (int i = 0; i < 4; ++i) cyc.add_edge(i, (i + 1) % 4);
  CliqueDecomposition d4 = chordal_extend_and_cliques(cyc);
  EXPECT_EQ(d4.extension.edges.size(), 5u);
  ASSERT_EQ(d4.cliques.size(), 2u);
  EXPECT_EQ(d4.cliques[0].size(), 3u);
  EXPECT_EQ(d4.cliques[1].size(), 3u);
  EXPECT_FALSE(is_perfect_elimination_order(cyc, {0, 1, 2, 3}));
}

TEST(Chordal, RandomGraphInvariants) {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = cpop::testing::uniform_int(rng, 1, 14);
    CouplingGraph g = random_graph(rng, n, cpop::testing::uniform(rng, 0.05, 0.5));
    CliqueDecomposition dec = chordal_extend_and_cliques(g);
    EXPECT_TRUE(is_perfect_elimination_order(dec.extension, dec.elimination_order));
    for (auto e : g.edges) EXPECT_TRUE(dec.extension.edges.count(e));
    std::set<int> uni;
    for (const auto& c : dec.cliques) {
      uni.insert(c.begin(), c.end());
      for (size_t a = 0; a < c.size(); ++a)
        for (size_t b = a + 1; b < c.size(); ++b) EXPECT_TRUE(dec.extension.has_edge(c[a], c[b]));
    }
    EXPECT_EQ(static_cast<int>(uni.size()), n);
    for (size_t a = 0; a < dec.cliques.size(); ++a)
      for (size_t b = 0; b < dec.cliques.size(); ++b)
        if (a != b)
          EXPECT_FALSE(std::includes(dec.cliques[b].begin(), dec.cliques[b].end(), dec.cliques[a].begin(),
                                     dec.cliques[a].end()));
    // Every extension edge lies in some clique.
    for (auto [i, j] : dec.extension.edges) {
      bool in = false;
      for (const auto& c : dec.cliques)
        in |= std::binary_search(c.begin(), c.end(), i) && std::binary_search(c.begin(), c.end(), j);
      EXPECT_TRUE(in);
    }
    EXPECT_TRUE(running_intersection(dec));
  }
}

TEST(Chordal, CoverMatchesExhaustiveSearch) {
  Rng rng(22);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = cpop::testing::uniform_int(rng, 4, 16);
    CliqueDecomposition dec = chordal_extend_and_cliques(random_graph(rng, n, 0.25));
    if (dec.cliques.size() > 12) continue;
    std::vector<int> target;
    for (int v = 0; v < n; ++v)
      if (cpop::testing::uniform(rng, 0, 1) < 0.3) target.push_back(v);
    if (target.empty()) target.push_back(0);
    EXPECT_EQ(min_clique_cover(dec.cliques, target), brute_force_cover(dec.cliques, target));
  }
}

TEST(Chordal, AssignmentRules) {
  CouplingGraph g(4);
  g.add_clique({0, 1, 2, 3});
  CliqueDecomposition dec = chordal_extend_and_cliques(g);
  assign_covers_and_orders(dec, {{0}, {1, 2}}, {1, 1}, {1, 1}, 2);
  EXPECT_EQ(dec.covers[0], std::vector<int>{0});
  EXPECT_EQ(dec.covers[1], std::vector<int>{0});
  EXPECT_EQ(dec.clique_orders[0], 2);  // floor from min_order

  CliqueDecomposition path = chordal_extend_and_cliques(con_coupling_graph(CouplingGraph(3), {1}, {1}, {{0}}));
  EXPECT_EQ(path.cliques.size(), 3u);
  EXPECT_THROW(assign_covers_and_orders(path, {{0, 1}}, {2}, {1}), StructuralError);
}

TEST(Chordal, DeterministicFingerprint) {
  Rng a(23), b(23);
  CliqueDecomposition d1 = chordal_extend_and_cliques(random_graph(a, 10, 0.3));
  CliqueDecomposition d2 = chordal_extend_and_cliques(random_graph(b, 10, 0.3));
  assign_covers_and_orders(d1, {{0, 1}}, {1}, {1});
  assign_covers_and_orders(d2, {{0, 1}}, {1}, {1});
  EXPECT_EQ(d1.fingerprint(), d2.fingerprint());
  EXPECT_EQ(d1.fingerprint().size(), 16u);
}

TEST(Chordal, CliquewisePsdMatricesComplete) {
  Rng rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = cpop::testing::uniform_int(rng, 3, 10);
    CliqueDecomposition dec = chordal_extend_and_cliques(random_graph(rng, n, 0.3));
    Eigen::MatrixXcd W = cpop::testing::random_psd(rng, n, cpop::testing::uniform_int(rng, 1, n));
    // Perturb entries outside the extension: they must not matter.
    Eigen::MatrixXcd partial = W;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && !dec.extension.has_edge(i, j)) partial(i, j) = 100.0;
    Eigen::MatrixXcd Z = psd_complete(partial, dec);
    EXPECT_GE(min_eigenvalue(Z), -1e-9 * (1 + W.norm()));
    for (const auto& c : dec.cliques)
      for (int i : c)
        for (int j : c) EXPECT_NEAR(std::abs(Z(i, j) - W(i, j)), 0.0, 1e-12);
  }
}

TEST(Chordal, DotExport) {
  CouplingGraph base = five_bus_mono();
  CouplingGraph con = con_coupling_graph(base, {2}, {1}, {{1, 4}});
  std::ostringstream os;
  write_dot(con, os, &base);
  EXPECT_NE(os.str().find("2 -- 5 [style=dashed]"), std::string::npos);
  CliqueDecomposition dec = chordal_extend_and_cliques(con);
  std::ostringstream ot;
  write_dot(dec, ot);
  EXPECT_NE(ot.str().find("clique_tree"), std::string::npos);
}
