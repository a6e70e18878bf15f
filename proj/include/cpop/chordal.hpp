#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpop/poly.hpp"

namespace cpop {

// Undirected simple graph on vertices 0..n-1.
struct CouplingGraph {
  int n = 0;
  std::set<std::pair<int, int>> edges;  // (i, j) with i < j

  CouplingGraph() = default;
  explicit CouplingGraph(int n_) : n(n_) {}
  void add_edge(int i, int j);
  bool has_edge(int i, int j) const;
  void add_clique(const std::vector<int>& vs);
  std::vector<std::vector<int>> adjacency() const;
};

// Variables appearing in p (0-based, sorted).
std::vector<int> support(const ComplexPolynomial& p);

// Edge {l, m} iff some monomial of some polynomial has l, m in supp(alpha + beta).
CouplingGraph mono_coupling_graph(int n, const std::vector<ComplexPolynomial>& polys);
// Adds a clique on supports[i] for every i with orders[i] > half_degrees[i].
CouplingGraph con_coupling_graph(const CouplingGraph& base, const std::vector<int>& orders,
                                 const std::vector<int>& half_degrees,
                                 const std::vector<std::vector<int>>& supports);

struct CliqueDecomposition {
  int n = 0;
  std::vector<std::vector<int>> cliques;  // sorted vertex lists, running-intersection order
  std::vector<int> parent;                // clique tree, -1 at the root (clique 0)
  std::vector<int> elimination_order;
  CouplingGraph extension;
  // Filled by assign_covers_and_orders.
  std::vector<std::vector<int>> covers;  // clique indices per constraint, sorted
  std::vector<int> clique_orders;

  // Vertex set I_i of constraint i.
  std::vector<int> cover_vertices(int i) const;
  // Hex digest of cliques, covers and orders, stable across runs.
  std::string fingerprint() const;
};

bool is_perfect_elimination_order(const CouplingGraph& g, const std::vector<int>& order);
// Minimum-degree elimination (ties to the lowest index), maximal cliques and a clique tree.
CliqueDecomposition chordal_extend_and_cliques(const CouplingGraph& g);
// Single clique holding every vertex (dense relaxation).
CliqueDecomposition dense_decomposition(int n);

// Minimum cover of target by cliques: lexicographic in (sum of sizes, union size, indices).
// Exact branch and bound up to kMaxExactCover candidate cliques, greedy above.
inline constexpr int kMaxExactCover = 32;
std::vector<int> min_clique_cover(const std::vector<std::vector<int>>& cliques,
                                  const std::vector<int>& target);

// Covers I_i and clique orders d^cl. Constraints with orders[i] > half_degrees[i] get a single
// clique. d^cl_l = max{d_i : I_i = C_l}, else min_i d_i, and never below min_order.
void assign_covers_and_orders(CliqueDecomposition& dec, const std::vector<std::vector<int>>& supports,
                              const std::vector<int>& orders, const std::vector<int>& half_degrees,
                              int min_order = 0);

// Completes a matrix specified on the clique blocks (entries outside are ignored) to a
// Hermitian PSD matrix, processing cliques in running-intersection order.
Eigen::MatrixXcd psd_complete(const Eigen::MatrixXcd& partial, const CliqueDecomposition& dec);

void write_dot(const CouplingGraph& g, std::ostream& os, const CouplingGraph* base = nullptr);
void write_dot(const CliqueDecomposition& dec, std::ostream& os);

}  // namespace cpop
