#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>

#include "cpop/conic.hpp"
#include "cpop/poly.hpp"

namespace cpop {

namespace {

// One SDPA entry position: output block (1-based), row, col (1-based, row <= col).
struct Slot {
  int block;
  int i;
  int j;
  double factor;  // multiply the svec/linear value by this
};

using EntryMap = std::map<std::tuple<int, int, int, int>, double>;  // (mat, blk, i, j)

void add_entry(EntryMap& entries, int mat, const Slot& sl, double v) {
  if (v == 0.0) return;
  entries[{mat, sl.block, sl.i, sl.j}] += sl.factor * v;
}

}  // namespace

void write_sdpa(const ConicProgram& p, std::ostream& os) {
  p.validate();
  const int n = p.num_variables();
  const int neq = p.num_equalities();
  // Block list: one diagonal block with all orthant rows and the equality pairs,
  // then PSD blocks, second-order cones as arrow matrices.
  int lp_rows = 2 * neq;
  for (const Cone& k : p.cones)
    if (k.type == ConeType::kNonnegative) lp_rows += k.size;
  std::vector<int> struct_sizes;
  int lp_block = 0;
  if (lp_rows > 0) {
    struct_sizes.push_back(-lp_rows);
    lp_block = 1;
  }
  // For each cone row, the slots it contributes to (arrow matrices need several).
  std::vector<std::vector<Slot>> row_slots(p.num_cone_rows());
  int lp_pos = 0;
  int off = 0;
  const double r2 = std::sqrt(2.0);
  for (const Cone& k : p.cones) {
    switch (k.type) {
      case ConeType::kNonnegative:
        for (int i = 0; i < k.size; ++i) {
          ++lp_pos;
          row_slots[off + i].push_back({lp_block, lp_pos, lp_pos, 1.0});
        }
        break;
      case ConeType::kSecondOrder: {
        struct_sizes.push_back(k.size);
        const int blk = static_cast<int>(struct_sizes.size());
        for (int d = 1; d <= k.size; ++d) row_slots[off].push_back({blk, d, d, 1.0});
        for (int i = 1; i < k.size; ++i) row_slots[off + i].push_back({blk, 1, i + 1, 1.0});
        break;
      }
      case ConeType::kPsd: {
        struct_sizes.push_back(k.size);
        const int blk = static_cast<int>(struct_sizes.size());
        for (int j = 0; j < k.size; ++j)
          for (int i = j; i < k.size; ++i)
            row_slots[off + svec_index(k.size, i, j)].push_back({blk, j + 1, i + 1, i == j ? 1.0 : 1.0 / r2});
        break;
      }
    }
    off += cone_rows(k);
  }

  EntryMap entries;
  // s = h - G x  =>  F_0 = -mat(h), F_i = -mat(G_i)
  for (int r = 0; r < p.num_cone_rows(); ++r)
    for (const Slot& sl : row_slots[r]) add_entry(entries, 0, sl, -p.h(r));
  for (int col = 0; col < p.G.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.G, col); it; ++it)
      for (const Slot& sl : row_slots[it.row()]) add_entry(entries, col + 1, sl, -it.value());
  // A x = b as two diagonal inequalities A x - b >= 0, -A x + b >= 0
  for (int r = 0; r < neq; ++r) {
    Slot up{lp_block, lp_pos + 2 * r + 1, lp_pos + 2 * r + 1, 1.0};
    Slot dn{lp_block, lp_pos + 2 * r + 2, lp_pos + 2 * r + 2, 1.0};
    add_entry(entries, 0, up, p.b(r));
    add_entry(entries, 0, dn, -p.b(r));
  }
  for (int col = 0; col < p.A.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      add_entry(entries, col + 1, {lp_block, lp_pos + 2 * r + 1, lp_pos + 2 * r + 1, 1.0}, it.value());
      add_entry(entries, col + 1, {lp_block, lp_pos + 2 * r + 2, lp_pos + 2 * r + 2, 1.0}, -it.value());
    }

  os << std::setprecision(17);
  os << "* sparse SDPA: min c^T x s.t. sum_i F_i x_i - F_0 psd\n";
  os << "*offset " << p.offset << "\n";
  os << n << "\n" << struct_sizes.size() << "\n";
  for (size_t i = 0; i < struct_sizes.size(); ++i) os << (i ? " " : "") << struct_sizes[i];
  os << "\n";
  for (int i = 0; i < n; ++i) os << (i ? " " : "") << p.c(i);
  os << "\n";
  for (const auto& [key, v] : entries) {
    if (v == 0.0) continue;
    const auto& [mat, blk, i, j] = key;
    os << mat << " " << blk << " " << i << " " << j << " " << v << "\n";
  }
}

ConicProgram read_sdpa(std::istream& is) {
  std::string line;
  double offset = 0.0;
  std::vector<std::string> data;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '*' || line[0] == '"') {
      if (line.rfind("*offset", 0) == 0) offset = std::stod(line.substr(7));
      continue;
    }
    for (char& ch : line)
      if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
    data.push_back(line);
  }
  std::stringstream ss;
  for (const auto& l : data) ss << l << "\n";
  int n = 0, nblocks = 0;
  if (!(ss >> n >> nblocks) || n < 0 || nblocks < 0) throw StructuralError("sdpa: bad header");
  std::vector<int> sizes(nblocks);
  for (int& s : sizes)
    if (!(ss >> s) || s == 0) throw StructuralError("sdpa: bad block structure");
  ConicBuilder cb;
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) {
    if (!(ss >> c(i))) throw StructuralError("sdpa: bad objective");
    cb.add_variable(c(i));
  }
  cb.add_offset(offset);
  // block -> map (i, j) -> expression X = sum F_i x_i - F_0
  std::vector<std::map<std::pair<int, int>, AffineExpr>> blk(nblocks);
  int mat, b, i, j;
  double v;
  while (ss >> mat >> b >> i >> j >> v) {
    if (mat < 0 || mat > n || b < 1 || b > nblocks) throw StructuralError("sdpa: entry out of range");
    const int dim = std::abs(sizes[b - 1]);
    if (i < 1 || j < 1 || i > dim || j > dim) throw StructuralError("sdpa: index out of range");
    if (sizes[b - 1] < 0 && i != j) throw StructuralError("sdpa: off-diagonal entry in diagonal block");
    auto key = std::make_pair(std::max(i, j) - 1, std::min(i, j) - 1);
    AffineExpr& e = blk[b - 1][key];
    if (mat == 0)
      e.constant -= v;
    else
      e.add(mat - 1, v);
  }
  for (int k = 0; k < nblocks; ++k) {
    const int dim = std::abs(sizes[k]);
    if (sizes[k] < 0) {
      for (int d = 0; d < dim; ++d) {
        auto it = blk[k].find({d, d});
        cb.add_nonnegative(it == blk[k].end() ? AffineExpr() : it->second);
      }
    } else {
      std::vector<AffineExpr> lower;
      for (int jj = 0; jj < dim; ++jj)
        for (int ii = jj; ii < dim; ++ii) {
          auto it = blk[k].find({ii, jj});
          lower.push_back(it == blk[k].end() ? AffineExpr() : it->second);
        }
      cb.add_psd(dim, lower);
    }
  }
  return cb.build();
}

}  // namespace cpop
