#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coarsekit {

// ------------------------------------------------------------------ rings

enum class RingTag { Integers, Rationals, ModP };

struct RingSpec {
  RingTag tag = RingTag::Integers;
  std::int64_t p = 0;  // prime when tag == ModP

  static RingSpec integers() { return {RingTag::Integers, 0}; }
  static RingSpec rationals() { return {RingTag::Rationals, 0}; }
  // Throws InputError unless p is a prime below 2^31.
  static RingSpec mod_p(std::int64_t p);
  // "Z", "Q", "Z/3".
  static RingSpec parse(const std::string& text);

  bool is_field() const { return tag != RingTag::Integers; }
  std::string name() const;
  bool operator==(const RingSpec&) const = default;
};

// ------------------------------------------------------------ sparse matrix

// Integer matrix stored by columns; each column is sorted by row and holds
// no zeros. Arithmetic is overflow-checked.
class SparseMatrix {
 public:
  using Entry = std::pair<std::size_t, std::int64_t>;  // (row, value)

  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), columns_(cols) {}
  static SparseMatrix from_dense(const std::vector<std::vector<std::int64_t>>& rows_major, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<Entry>& column(std::size_t c) const { return columns_[c]; }

  std::int64_t at(std::size_t r, std::size_t c) const;
  void add(std::size_t r, std::size_t c, std::int64_t v);  // accumulates
  std::size_t nonzeros() const;
  bool is_zero() const { return nonzeros() == 0; }

  SparseMatrix transpose() const;
  SparseMatrix multiply(const SparseMatrix& rhs) const;  // this * rhs
  std::vector<std::vector<std::int64_t>> to_dense() const;

  bool operator==(const SparseMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::vector<Entry>> columns_;
};

// ----------------------------------------------------------- metric window

// Finite metric point set. `depth` (optional) is the distance of each point
// to the frontier of the window inside the ambient space; windows without
// depth data have no frontier.
class MetricWindow {
 public:
  using DistanceFn = std::function<double(std::size_t, std::size_t)>;
  using NeighborFn = std::function<std::vector<std::size_t>(std::size_t, double)>;

  MetricWindow(std::vector<std::string> labels, DistanceFn distance, std::vector<double> depth = {});

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  double distance(std::size_t i, std::size_t j) const { return distance_(i, j); }
  bool has_frontier() const { return !depth_.empty(); }
  double depth(std::size_t i) const { return depth_.empty() ? 0.0 : depth_[i]; }
  double radius() const;  // largest depth, 0 without a frontier

  // Points j != i with d(i, j) <= r, ascending. Uses the neighbor function
  // when one is installed, otherwise scans all points.
  std::vector<std::size_t> neighbors_within(std::size_t i, double r) const;
  void set_neighbor_fn(NeighborFn fn) { neighbors_ = std::move(fn); }

 private:
  std::vector<std::string> labels_;
  DistanceFn distance_;
  std::vector<double> depth_;
  NeighborFn neighbors_;
};

// {lo, ..., hi} in Z with the absolute-value metric; depth to the nearer end.
std::shared_ptr<MetricWindow> integer_window(std::int64_t lo, std::int64_t hi);
// Arbitrary finite subset of Z, in the given order, without a frontier.
std::shared_ptr<MetricWindow> integer_points_window(const std::vector<std::int64_t>& points);
// Dense distance matrix.
std::shared_ptr<MetricWindow> matrix_window(std::vector<std::string> labels, std::vector<std::vector<double>> distance,
                                            std::vector<double> depth = {});

// --------------------------------------------------------- chain complexes

struct BasedFreeModule {
  std::vector<std::string> basis;                   // distinct cell identifiers
  std::vector<std::size_t> control;                 // window point per cell; empty when uncontrolled
  std::vector<std::vector<std::size_t>> vertices;   // spanned window points, simplicial complexes only

  std::size_t rank() const { return basis.size(); }
  bool controlled() const { return !control.empty() || basis.empty(); }
};

struct ProperChainComplex {
  RingSpec ring;
  std::vector<BasedFreeModule> modules;  // degrees 0..n
  // boundary[k] maps degree k to degree k-1 (rank C_{k-1} x rank C_k);
  // boundary[0] is the zero map to the zero module.
  std::vector<SparseMatrix> boundary;
  std::shared_ptr<const MetricWindow> window;  // control space
  std::optional<double> displacement_bound;

  // Set on tensor products: each cell of degree n is sigma (x) lambda with
  // sigma a cell of `left` in degree left_degree.
  struct Factor {
    std::size_t left_degree;
    std::size_t left_index;
    std::size_t right_index;
  };
  std::vector<std::vector<Factor>> factors;
  std::shared_ptr<const ProperChainComplex> left;
  std::shared_ptr<const ProperChainComplex> right;

  int top_degree() const { return static_cast<int>(modules.size()) - 1; }
  std::size_t rank(int k) const;
  // Boundary out of degree k; a zero matrix of the right shape outside 1..n.
  SparseMatrix d(int k) const;
  std::vector<std::size_t> ranks() const;
  bool controlled() const;
};

// Complex with identifiers "e<k>_<i>" from ranks and boundary matrices
// (boundaries[k-1] maps degree k to k-1). Validates shapes and d∘d = 0.
ProperChainComplex algebraic_complex(const std::vector<std::size_t>& ranks,
                                     const std::vector<SparseMatrix>& boundaries,
                                     RingSpec ring = RingSpec::integers());

// Throws ContractError on a broken invariant: shapes, distinct identifiers,
// total control, d∘d = 0, declared displacement.
void validate(const ProperChainComplex& c);
bool boundary_squares_to_zero(const ProperChainComplex& c);
// Largest d(p(sigma), p(tau)) over cells tau in the boundary of sigma.
double measured_displacement(const ProperChainComplex& c);

// Rips complex P_r(window) up to dimension dim_cap. Simplices are sorted
// vertex tuples in window order, each controlled by its first vertex.
// Throws ResourceError when more than max_cells simplices are needed.
ProperChainComplex rips_complex(std::shared_ptr<const MetricWindow> window, double r, int dim_cap = 3,
                                std::size_t max_cells = 2'000'000);

// C (x) D with d(s (x) l) = ds (x) l + (-1)^i s (x) dl. When both factors are
// controlled the product cell is controlled by the control point of l.
ProperChainComplex tensor_product(const ProperChainComplex& C, const ProperChainComplex& D);

struct Chain {
  int degree = 0;
  std::vector<std::pair<std::size_t, std::int64_t>> coefficients;  // (cell, value)
  std::vector<std::size_t> support() const;  // cells whose summed coefficient is nonzero, ascending
};

struct SupportSets {
  std::vector<std::size_t> x;  // points of the (fiber) control space
  std::vector<std::size_t> b;  // points of the base control space (products only)
  bool has_base = false;
};

// supp_X is the image of the support under the control map; for a tensor
// product it is the union of p(lambda) over the cells s (x) l in the support,
// and supp_B the union of p(sigma). Throws ContractError without control.
SupportSets supports(const ProperChainComplex& c, const Chain& chain);

struct ProperMapReport {
  bool proper = true;
  std::size_t max_preimage_count = 0;  // max over targets of sources hitting it
};
ProperMapReport is_proper_map(const SparseMatrix& f);

struct CochainComplex {
  RingSpec ring;
  std::vector<BasedFreeModule> modules;
  // coboundary[k] maps degree k to k+1, the transpose of boundary[k+1].
  std::vector<SparseMatrix> coboundary;
  std::shared_ptr<const MetricWindow> window;
};

CochainComplex compact_dual(const ProperChainComplex& c);
// Dual of a cochain complex with finite bases.
ProperChainComplex dual(const CochainComplex& c);

// Quotient by the subcomplex of cells whose spanned points (or control point
// for non-simplicial cells) all have depth < w. Throws ContractError without
// control or when that set is not a subcomplex, DegenerateInputError when
// no cell survives.
ProperChainComplex relative_collar_complex(const ProperChainComplex& c, double w);

// Text export: one block per boundary map, "degree rows cols nnz" followed
// by "row col value" triplets.
std::string export_sparse_text(const ProperChainComplex& c);

}  // namespace coarsekit
