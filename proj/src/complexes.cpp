#include "coarsekit/complexes.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "checked_math.hpp"
#include "coarsekit/errors.hpp"

namespace coarsekit {

using detail::checked_add;
using detail::checked_mul;

// ------------------------------------------------------------------ rings

RingSpec RingSpec::mod_p(std::int64_t p) {
  if (p < 2 || p >= (std::int64_t{1} << 31)) throw InputError("modulus must be a prime below 2^31");
  for (std::int64_t q = 2; q * q <= p; ++q)
    if (p % q == 0) throw InputError("modulus " + std::to_string(p) + " is not prime");
  return {RingTag::ModP, p};
}

RingSpec RingSpec::parse(const std::string& text) {
  if (text == "Z" || text == "integers") return integers();
  if (text == "Q" || text == "rationals") return rationals();
  std::string digits;
  if (text.rfind("Z/", 0) == 0) digits = text.substr(2);
  else if (text.rfind("Z_", 0) == 0) digits = text.substr(2);
  else if (text.rfind("integers_mod_", 0) == 0) digits = text.substr(13);
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos || digits.size() > 10)
    throw InputError("unknown ring '" + text + "' (expected Z, Q or Z/p)");
  return mod_p(std::stoll(digits));
}

std::string RingSpec::name() const {
  switch (tag) {
    case RingTag::Integers: return "Z";
    case RingTag::Rationals: return "Q";
    case RingTag::ModP: return "Z/" + std::to_string(p);
  }
  return "?";
}

// ------------------------------------------------------------ sparse matrix

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<std::int64_t>>& rows_major, std::size_t cols) {
  SparseMatrix m(rows_major.size(), cols);
  for (std::size_t r = 0; r < rows_major.size(); ++r) {
    if (rows_major[r].size() != cols) throw InputError("ragged dense matrix");
    for (std::size_t c = 0; c < cols; ++c)
      if (rows_major[r][c] != 0) m.columns_[c].push_back({r, rows_major[r][c]});
  }
  return m;
}

std::int64_t SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto& col = columns_.at(c);
  auto it = std::lower_bound(col.begin(), col.end(), r, [](const Entry& e, std::size_t row) { return e.first < row; });
  return it != col.end() && it->first == r ? it->second : 0;
}

void SparseMatrix::add(std::size_t r, std::size_t c, std::int64_t v) {
  if (r >= rows_ || c >= cols_) throw ContractError("sparse matrix index out of range");
  if (v == 0) return;
  auto& col = columns_[c];
  auto it = std::lower_bound(col.begin(), col.end(), r, [](const Entry& e, std::size_t row) { return e.first < row; });
  if (it != col.end() && it->first == r) {
    it->second = checked_add(it->second, v);
    if (it->second == 0) col.erase(it);
  } else {
    col.insert(it, {r, v});
  }
}

std::size_t SparseMatrix::nonzeros() const {
  std::size_t n = 0;
  for (const auto& col : columns_) n += col.size();
  return n;
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t(cols_, rows_);
  for (std::size_t c = 0; c < cols_; ++c)
    for (const auto& [r, v] : columns_[c]) t.columns_[r].push_back({c, v});
  return t;
}

SparseMatrix SparseMatrix::multiply(const SparseMatrix& rhs) const {
  if (cols_ != rhs.rows_) throw ContractError("sparse matrix product shape mismatch");
  SparseMatrix out(rows_, rhs.cols_);
  std::map<std::size_t, std::int64_t> acc;
  for (std::size_t c = 0; c < rhs.cols_; ++c) {
    acc.clear();
    for (const auto& [k, b] : rhs.columns_[c])
      for (const auto& [r, a] : columns_[k]) acc[r] = checked_add(acc[r], checked_mul(a, b));
    for (const auto& [r, v] : acc)
      if (v != 0) out.columns_[c].push_back({r, v});
  }
  return out;
}

std::vector<std::vector<std::int64_t>> SparseMatrix::to_dense() const {
  std::vector<std::vector<std::int64_t>> d(rows_, std::vector<std::int64_t>(cols_, 0));
  for (std::size_t c = 0; c < cols_; ++c)
    for (const auto& [r, v] : columns_[c]) d[r][c] = v;
  return d;
}

// ----------------------------------------------------------- metric window

MetricWindow::MetricWindow(std::vector<std::string> labels, DistanceFn distance, std::vector<double> depth)
    : labels_(std::move(labels)), distance_(std::move(distance)), depth_(std::move(depth)) {
  if (!depth_.empty() && depth_.size() != labels_.size())
    throw ContractError("window depth must be given for every point");
}

double MetricWindow::radius() const {
  double r = 0;
  for (double d : depth_) r = std::max(r, d);
  return r;
}

std::vector<std::size_t> MetricWindow::neighbors_within(std::size_t i, double r) const {
  if (neighbors_) return neighbors_(i, r);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j)
    if (j != i && distance_(i, j) <= r) out.push_back(j);
  return out;
}

std::shared_ptr<MetricWindow> integer_window(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw InputError("integer window needs lo <= hi");
  std::vector<std::string> labels;
  std::vector<double> depth;
  for (std::int64_t x = lo; x <= hi; ++x) {
    labels.push_back(std::to_string(x));
    depth.push_back(static_cast<double>(std::min(x - lo, hi - x)));
  }
  auto w = std::make_shared<MetricWindow>(
      std::move(labels), [](std::size_t i, std::size_t j) { return std::abs(static_cast<double>(i) - static_cast<double>(j)); },
      std::move(depth));
  const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
  w->set_neighbor_fn([n](std::size_t i, double r) {
    std::vector<std::size_t> out;
    const auto reach = static_cast<std::size_t>(std::max(0.0, r));
    for (std::size_t j = i > reach ? i - reach : 0; j < n && j <= i + reach; ++j)
      if (j != i) out.push_back(j);
    return out;
  });
  return w;
}

std::shared_ptr<MetricWindow> integer_points_window(const std::vector<std::int64_t>& points) {
  std::vector<std::string> labels;
  for (auto x : points) labels.push_back(std::to_string(x));
  return std::make_shared<MetricWindow>(std::move(labels), [points](std::size_t i, std::size_t j) {
    return std::abs(static_cast<double>(points[i]) - static_cast<double>(points[j]));
  });
}

std::shared_ptr<MetricWindow> matrix_window(std::vector<std::string> labels, std::vector<std::vector<double>> distance,
                                            std::vector<double> depth) {
  if (distance.size() != labels.size()) throw InputError("distance matrix size differs from label count");
  for (const auto& row : distance)
    if (row.size() != labels.size()) throw InputError("distance matrix is not square");
  auto shared = std::make_shared<std::vector<std::vector<double>>>(std::move(distance));
  return std::make_shared<MetricWindow>(
      std::move(labels), [shared](std::size_t i, std::size_t j) { return (*shared)[i][j]; }, std::move(depth));
}

// --------------------------------------------------------- chain complexes

std::size_t ProperChainComplex::rank(int k) const {
  return k < 0 || k > top_degree() ? 0 : modules[static_cast<std::size_t>(k)].rank();
}

SparseMatrix ProperChainComplex::d(int k) const {
  if (k >= 1 && k <= top_degree()) return boundary[static_cast<std::size_t>(k)];
  return SparseMatrix(rank(k - 1), rank(k));
}

std::vector<std::size_t> ProperChainComplex::ranks() const {
  std::vector<std::size_t> r;
  for (const auto& m : modules) r.push_back(m.rank());
  return r;
}

bool ProperChainComplex::controlled() const {
  if (!window) return false;
  for (const auto& m : modules)
    if (!m.controlled()) return false;
  return true;
}

ProperChainComplex algebraic_complex(const std::vector<std::size_t>& ranks, const std::vector<SparseMatrix>& boundaries,
                                     RingSpec ring) {
  if (ranks.empty()) throw InputError("a complex needs at least degree 0");
  if (boundaries.size() + 1 != ranks.size()) throw InputError("need one boundary matrix per positive degree");
  ProperChainComplex c;
  c.ring = ring;
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    BasedFreeModule m;
    for (std::size_t i = 0; i < ranks[k]; ++i) m.basis.push_back("e" + std::to_string(k) + "_" + std::to_string(i));
    c.modules.push_back(std::move(m));
  }
  c.boundary.push_back(SparseMatrix(0, ranks[0]));
  for (const auto& b : boundaries) c.boundary.push_back(b);
  validate(c);
  return c;
}

bool boundary_squares_to_zero(const ProperChainComplex& c) {
  for (int k = 2; k <= c.top_degree(); ++k)
    if (!c.d(k - 1).multiply(c.d(k)).is_zero()) return false;
  return true;
}

double measured_displacement(const ProperChainComplex& c) {
  if (!c.controlled()) throw ContractError("displacement needs control maps");
  double worst = 0;
  for (int k = 1; k <= c.top_degree(); ++k) {
    const auto& d = c.boundary[static_cast<std::size_t>(k)];
    const auto& src = c.modules[static_cast<std::size_t>(k)];
    const auto& dst = c.modules[static_cast<std::size_t>(k - 1)];
    for (std::size_t s = 0; s < d.cols(); ++s)
      for (const auto& [t, v] : d.column(s)) worst = std::max(worst, c.window->distance(src.control[s], dst.control[t]));
  }
  return worst;
}

void validate(const ProperChainComplex& c) {
  if (c.modules.empty()) throw ContractError("complex has no degrees");
  if (c.boundary.size() != c.modules.size()) throw ContractError("complex needs one boundary slot per degree");
  for (int k = 0; k <= c.top_degree(); ++k) {
    const auto& m = c.modules[static_cast<std::size_t>(k)];
    std::set<std::string> ids(m.basis.begin(), m.basis.end());
    if (ids.size() != m.basis.size())
      throw ContractError("duplicate basis identifier in degree " + std::to_string(k));
    if (!m.control.empty()) {
      if (m.control.size() != m.rank()) throw ContractError("control map must be total");
      if (!c.window) throw ContractError("control map without a control space");
      for (auto p : m.control)
        if (p >= c.window->size()) throw ContractError("control point outside the window");
    }
    const auto& b = c.boundary[static_cast<std::size_t>(k)];
    const std::size_t want_rows = k == 0 ? 0 : c.rank(k - 1);
    if (b.rows() != want_rows || b.cols() != m.rank())
      throw ContractError("boundary out of degree " + std::to_string(k) + " has the wrong shape");
  }
  if (!boundary_squares_to_zero(c)) throw ContractError("boundary does not square to zero");
  if (c.displacement_bound && c.controlled() && measured_displacement(c) > *c.displacement_bound)
    throw ContractError("boundary exceeds the declared displacement bound");
}

namespace {

struct TupleHash {
  std::size_t operator()(const std::vector<std::size_t>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto x : v) h = (h ^ x) * 1099511628211ull;
    return h;
  }
};

std::string simplex_id(const MetricWindow& w, const std::vector<std::size_t>& s) {
  std::string id = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) id += ",";
    id += w.label(s[i]);
  }
  return id + "]";
}

}  // namespace

ProperChainComplex rips_complex(std::shared_ptr<const MetricWindow> window, double r, int dim_cap,
                                std::size_t max_cells) {
  if (!window) throw ContractError("rips_complex needs a window");
  if (dim_cap < 1) throw ContractError("rips_complex needs dim_cap >= 1");
  if (r < 0) throw ContractError("rips scale must be non-negative");
  const std::size_t n = window->size();
  std::vector<std::vector<std::size_t>> up(n);  // neighbors with larger index
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : window->neighbors_within(i, r))
      if (j > i) up[i].push_back(j);

  std::vector<std::vector<std::vector<std::size_t>>> cells(static_cast<std::size_t>(dim_cap) + 1);
  std::size_t total = 0;
  auto bump = [&] {
    if (++total > max_cells)
      throw ResourceError("rips complex exceeds " + std::to_string(max_cells) + " cells", static_cast<long>(max_cells));
  };
  // Depth-first clique extension; emits each degree in lexicographic order.
  std::vector<std::size_t> current;
  std::function<void(const std::vector<std::size_t>&)> extend = [&](const std::vector<std::size_t>& candidates) {
    const std::size_t deg = current.size() - 1;
    bump();
    cells[deg].push_back(current);
    if (deg == static_cast<std::size_t>(dim_cap)) return;
    for (std::size_t a = 0; a < candidates.size(); ++a) {
      const std::size_t v = candidates[a];
      std::vector<std::size_t> next;
      std::set_intersection(candidates.begin() + static_cast<std::ptrdiff_t>(a) + 1, candidates.end(), up[v].begin(),
                            up[v].end(), std::back_inserter(next));
      current.push_back(v);
      extend(next);
      current.pop_back();
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    current = {v};
    extend(up[v]);
  }
  for (auto& level : cells) std::sort(level.begin(), level.end());

  ProperChainComplex c;
  c.window = window;
  c.displacement_bound = r;
  int top = dim_cap;
  while (top > 0 && cells[static_cast<std::size_t>(top)].empty()) --top;
  std::vector<std::unordered_map<std::vector<std::size_t>, std::size_t, TupleHash>> index(
      static_cast<std::size_t>(top) + 1);
  for (int k = 0; k <= top; ++k) {
    BasedFreeModule m;
    const auto& level = cells[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < level.size(); ++i) {
      m.basis.push_back(simplex_id(*window, level[i]));
      m.control.push_back(level[i].front());
      m.vertices.push_back(level[i]);
      index[static_cast<std::size_t>(k)].emplace(level[i], i);
    }
    c.modules.push_back(std::move(m));
  }
  c.boundary.push_back(SparseMatrix(0, c.rank(0)));
  for (int k = 1; k <= top; ++k) {
    SparseMatrix d(c.rank(k - 1), c.rank(k));
    const auto& level = cells[static_cast<std::size_t>(k)];
    for (std::size_t s = 0; s < level.size(); ++s)
      for (std::size_t j = 0; j < level[s].size(); ++j) {
        std::vector<std::size_t> face = level[s];
        face.erase(face.begin() + static_cast<std::ptrdiff_t>(j));
        d.add(index[static_cast<std::size_t>(k - 1)].at(face), s, j % 2 == 0 ? 1 : -1);
      }
    c.boundary.push_back(std::move(d));
  }
  return c;
}

ProperChainComplex tensor_product(const ProperChainComplex& C, const ProperChainComplex& D) {
  if (!(C.ring == D.ring)) throw ContractError("tensor product needs complexes over the same ring");
  ProperChainComplex T;
  T.ring = C.ring;
  T.left = std::make_shared<ProperChainComplex>(C);
  T.right = std::make_shared<ProperChainComplex>(D);
  const bool controlled = C.controlled() && D.controlled();
  if (controlled) {
    T.window = D.window;
    T.displacement_bound = D.displacement_bound;
  }
  const int top = C.top_degree() + D.top_degree();
  // offset[n][i]: first index of the C_i (x) D_{n-i} block in degree n.
  std::vector<std::vector<std::size_t>> offset(static_cast<std::size_t>(top) + 1);
  for (int n = 0; n <= top; ++n) {
    BasedFreeModule m;
    std::vector<ProperChainComplex::Factor> fac;
    auto& off = offset[static_cast<std::size_t>(n)];
    off.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i <= n; ++i) {
      off[static_cast<std::size_t>(i)] = m.rank();
      const int j = n - i;
      if (i > C.top_degree() || j > D.top_degree()) continue;
      const auto& Ci = C.modules[static_cast<std::size_t>(i)];
      const auto& Dj = D.modules[static_cast<std::size_t>(j)];
      for (std::size_t s = 0; s < Ci.rank(); ++s)
        for (std::size_t l = 0; l < Dj.rank(); ++l) {
          m.basis.push_back(Ci.basis[s] + "⊗" + Dj.basis[l]);
          fac.push_back({static_cast<std::size_t>(i), s, l});
          if (controlled) m.control.push_back(Dj.control[l]);
        }
    }
    T.modules.push_back(std::move(m));
    T.factors.push_back(std::move(fac));
  }
  T.boundary.push_back(SparseMatrix(0, T.rank(0)));
  for (int n = 1; n <= top; ++n) {
    SparseMatrix d(T.rank(n - 1), T.rank(n));
    const auto& fac = T.factors[static_cast<std::size_t>(n)];
    const auto& off = offset[static_cast<std::size_t>(n - 1)];
    for (std::size_t cell = 0; cell < fac.size(); ++cell) {
      const auto [i, s, l] = fac[cell];
      const std::size_t j = static_cast<std::size_t>(n) - i;
      if (i >= 1) {
        const auto dC = C.d(static_cast<int>(i));
        const std::size_t block = off[i - 1], width = D.rank(static_cast<int>(j));
        for (const auto& [t, v] : dC.column(s)) d.add(block + t * width + l, cell, v);
      }
      if (j >= 1) {
        const auto dD = D.d(static_cast<int>(j));
        const std::size_t block = off[i], width = D.rank(static_cast<int>(j) - 1);
        const std::int64_t sign = i % 2 == 0 ? 1 : -1;
        for (const auto& [t, v] : dD.column(l)) d.add(block + s * width + t, cell, sign * v);
      }
    }
    T.boundary.push_back(std::move(d));
  }
  return T;
}

std::vector<std::size_t> Chain::support() const {
  std::map<std::size_t, std::int64_t> total;
  for (const auto& [cell, v] : coefficients) total[cell] = checked_add(total[cell], v);
  std::vector<std::size_t> s;
  for (const auto& [cell, v] : total)
    if (v != 0) s.push_back(cell);
  return s;
}

SupportSets supports(const ProperChainComplex& c, const Chain& chain) {
  if (!c.controlled()) throw ContractError("supports need control maps");
  if (chain.degree < 0 || chain.degree > c.top_degree()) throw ContractError("chain degree outside the complex");
  for (const auto& [cell, v] : chain.coefficients)
    if (cell >= c.rank(chain.degree)) throw ContractError("chain cell index out of range");
  const auto& m = c.modules[static_cast<std::size_t>(chain.degree)];
  std::set<std::size_t> x, b;
  const bool product = c.left && c.right && c.left->controlled();
  for (std::size_t cell : chain.support()) {
    x.insert(m.control[cell]);
    if (product) {
      const auto& f = c.factors[static_cast<std::size_t>(chain.degree)][cell];
      b.insert(c.left->modules[f.left_degree].control[f.left_index]);
    }
  }
  return {{x.begin(), x.end()}, {b.begin(), b.end()}, product};
}

ProperMapReport is_proper_map(const SparseMatrix& f) {
  std::vector<std::size_t> hits(f.rows(), 0);
  for (std::size_t c = 0; c < f.cols(); ++c)
    for (const auto& [r, v] : f.column(c)) ++hits[r];
  ProperMapReport rep;
  for (auto h : hits) rep.max_preimage_count = std::max(rep.max_preimage_count, h);
  return rep;
}

CochainComplex compact_dual(const ProperChainComplex& c) {
  CochainComplex out;
  out.ring = c.ring;
  out.modules = c.modules;
  out.window = c.window;
  for (int k = 0; k <= c.top_degree(); ++k) out.coboundary.push_back(c.d(k + 1).transpose());
  return out;
}

ProperChainComplex dual(const CochainComplex& c) {
  ProperChainComplex out;
  out.ring = c.ring;
  out.modules = c.modules;
  out.window = c.window;
  if (out.modules.empty()) return out;
  out.boundary.push_back(SparseMatrix(0, out.modules[0].rank()));
  for (std::size_t k = 1; k < out.modules.size(); ++k) out.boundary.push_back(c.coboundary[k - 1].transpose());
  return out;
}

ProperChainComplex relative_collar_complex(const ProperChainComplex& c, double w) {
  if (!c.controlled()) throw ContractError("relative collar needs control maps");
  if (!c.window->has_frontier()) return c;
  if (w >= c.window->radius()) throw DegenerateInputError("collar width must be smaller than the window radius");
  const auto& W = *c.window;
  std::vector<std::vector<char>> killed(c.modules.size());
  for (std::size_t k = 0; k < c.modules.size(); ++k) {
    const auto& m = c.modules[k];
    killed[k].assign(m.rank(), 0);
    for (std::size_t i = 0; i < m.rank(); ++i) {
      bool all = true;
      if (!m.vertices.empty()) {
        for (auto v : m.vertices[i]) all = all && W.depth(v) < w;
      } else {
        all = W.depth(m.control[i]) < w;
      }
      killed[k][i] = all ? 1 : 0;
    }
  }
  for (int k = 1; k <= c.top_degree(); ++k) {
    const auto& d = c.boundary[static_cast<std::size_t>(k)];
    for (std::size_t s = 0; s < d.cols(); ++s) {
      if (!killed[static_cast<std::size_t>(k)][s]) continue;
      for (const auto& [t, v] : d.column(s))
        if (!killed[static_cast<std::size_t>(k - 1)][t])
          throw ContractError("collar cells do not form a subcomplex");
    }
  }
  ProperChainComplex out;
  out.ring = c.ring;
  out.window = c.window;
  out.displacement_bound = c.displacement_bound;
  std::vector<std::vector<std::size_t>> keep_index(c.modules.size());
  std::size_t survivors = 0;
  for (std::size_t k = 0; k < c.modules.size(); ++k) {
    const auto& m = c.modules[k];
    BasedFreeModule n;
    keep_index[k].assign(m.rank(), SIZE_MAX);
    for (std::size_t i = 0; i < m.rank(); ++i) {
      if (killed[k][i]) continue;
      keep_index[k][i] = n.rank();
      n.basis.push_back(m.basis[i]);
      n.control.push_back(m.control[i]);
      if (!m.vertices.empty()) n.vertices.push_back(m.vertices[i]);
    }
    survivors += n.rank();
    out.modules.push_back(std::move(n));
  }
  if (survivors == 0) throw DegenerateInputError("collar of width " + std::to_string(w) + " removes every cell");
  out.boundary.push_back(SparseMatrix(0, out.rank(0)));
  for (int k = 1; k <= c.top_degree(); ++k) {
    SparseMatrix d(out.rank(k - 1), out.rank(k));
    const auto& old = c.boundary[static_cast<std::size_t>(k)];
    for (std::size_t s = 0; s < old.cols(); ++s) {
      const auto ns = keep_index[static_cast<std::size_t>(k)][s];
      if (ns == SIZE_MAX) continue;
      for (const auto& [t, v] : old.column(s)) {
        const auto nt = keep_index[static_cast<std::size_t>(k - 1)][t];
        if (nt != SIZE_MAX) d.add(nt, ns, v);
      }
    }
    out.boundary.push_back(std::move(d));
  }
  return out;
}

std::string export_sparse_text(const ProperChainComplex& c) {
  std::ostringstream os;
  for (int k = 1; k <= c.top_degree(); ++k) {
    const auto& d = c.boundary[static_cast<std::size_t>(k)];
    os << k << ' ' << d.rows() << ' ' << d.cols() << ' ' << d.nonzeros() << '\n';
    for (std::size_t col = 0; col < d.cols(); ++col)
      for (const auto& [r, v] : d.column(col)) os << r << ' ' << col << ' ' << v << '\n';
  }
  return os.str();
}

}  // namespace coarsekit
