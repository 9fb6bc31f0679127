#include "coarsekit/homology.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "coarsekit/errors.hpp"

namespace coarsekit {

BigMatrix to_big(const SparseMatrix& m) {
  BigMatrix out(m.rows(), std::vector<mpz_class>(m.cols(), 0));
  for (std::size_t c = 0; c < m.cols(); ++c)
    for (const auto& [r, v] : m.column(c)) out[r][c] = static_cast<long>(v);
  return out;
}

// ------------------------------------------------------------- dense SNF

namespace {

BigMatrix identity(std::size_t n) {
  BigMatrix I(n, std::vector<mpz_class>(n, 0));
  for (std::size_t i = 0; i < n; ++i) I[i][i] = 1;
  return I;
}

// In-place dense reduction; U and V (when non-null) accumulate the row and
// column operations so that U * M * V equals the final A.
void dense_snf(BigMatrix& A, BigMatrix* U, BigMatrix* V) {
  const std::size_t m = A.size();
  const std::size_t n = m == 0 ? 0 : A[0].size();
  auto swap_rows = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    std::swap(A[i], A[j]);
    if (U) std::swap((*U)[i], (*U)[j]);
  };
  auto swap_cols = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    for (auto& row : A) std::swap(row[i], row[j]);
    if (V)
      for (auto& row : *V) std::swap(row[i], row[j]);
  };
  // row_i += f * row_j
  auto add_row = [&](std::size_t i, std::size_t j, const mpz_class& f) {
    for (std::size_t c = 0; c < n; ++c) A[i][c] += f * A[j][c];
    if (U)
      for (std::size_t c = 0; c < m; ++c) (*U)[i][c] += f * (*U)[j][c];
  };
  auto add_col = [&](std::size_t i, std::size_t j, const mpz_class& f) {
    for (std::size_t r = 0; r < m; ++r) A[r][i] += f * A[r][j];
    if (V)
      for (std::size_t r = 0; r < n; ++r) (*V)[r][i] += f * (*V)[r][j];
  };

  for (std::size_t t = 0; t < std::min(m, n); ++t) {
    // Smallest nonzero magnitude in the trailing block.
    std::size_t pi = m, pj = n;
    for (std::size_t i = t; i < m; ++i)
      for (std::size_t j = t; j < n; ++j)
        if (sgn(A[i][j]) != 0 && (pi == m || abs(A[i][j]) < abs(A[pi][pj]))) pi = i, pj = j;
    if (pi == m) break;
    swap_rows(t, pi);
    swap_cols(t, pj);
    for (;;) {
      bool clean = true;
      for (std::size_t i = t + 1; i < m; ++i) {
        if (sgn(A[i][t]) == 0) continue;
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), A[i][t].get_mpz_t(), A[t][t].get_mpz_t());
        add_row(i, t, -q);
        if (sgn(A[i][t]) != 0) clean = false;
      }
      for (std::size_t j = t + 1; j < n; ++j) {
        if (sgn(A[t][j]) == 0) continue;
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), A[t][j].get_mpz_t(), A[t][t].get_mpz_t());
        add_col(j, t, -q);
        if (sgn(A[t][j]) != 0) clean = false;
      }
      if (!clean) {
        // A remainder smaller than the pivot: move it to the pivot position.
        std::size_t bi = t, bj = t;
        for (std::size_t i = t + 1; i < m; ++i)
          if (sgn(A[i][t]) != 0 && abs(A[i][t]) < abs(A[bi][bj])) bi = i, bj = t;
        for (std::size_t j = t + 1; j < n; ++j)
          if (sgn(A[t][j]) != 0 && abs(A[t][j]) < abs(A[bi][bj])) bi = t, bj = j;
        swap_rows(t, bi);
        swap_cols(t, bj);
        continue;
      }
      // Divisibility of the trailing block by the pivot.
      std::size_t bad = m;
      for (std::size_t i = t + 1; i < m && bad == m; ++i)
        for (std::size_t j = t + 1; j < n; ++j)
          if (sgn(A[i][j]) != 0 && !mpz_divisible_p(A[i][j].get_mpz_t(), A[t][t].get_mpz_t())) {
            bad = i;
            break;
          }
      if (bad == m) break;
      add_row(t, bad, 1);
    }
    if (sgn(A[t][t]) < 0) {
      for (std::size_t c = 0; c < n; ++c) A[t][c] = -A[t][c];
      if (U)
        for (std::size_t c = 0; c < m; ++c) (*U)[t][c] = -(*U)[t][c];
    }
  }
}

std::vector<mpz_class> diagonal_of(const BigMatrix& A) {
  std::vector<mpz_class> d;
  const std::size_t m = A.size();
  const std::size_t n = m == 0 ? 0 : A[0].size();
  for (std::size_t i = 0; i < std::min(m, n); ++i) d.push_back(A[i][i]);
  return d;
}

std::size_t count_nonzero(const std::vector<mpz_class>& d) {
  std::size_t r = 0;
  for (const auto& x : d) r += sgn(x) != 0 ? 1 : 0;
  return r;
}

// Eliminates unit pivots from a sparse integer matrix. Returns the number of
// pivots and leaves the unreduced block in `rest`.
std::size_t eliminate_units(const SparseMatrix& M, BigMatrix& rest) {
  using Row = std::vector<std::pair<std::size_t, mpz_class>>;
  std::vector<Row> rows(M.rows());
  std::vector<std::set<std::size_t>> col_rows(M.cols());
  {
    const SparseMatrix T = M.transpose();
    for (std::size_t r = 0; r < M.rows(); ++r)
      for (const auto& [c, v] : T.column(r)) {
        rows[r].push_back({c, mpz_class(static_cast<long>(v))});
        col_rows[c].insert(r);
      }
  }
  std::vector<char> row_alive(M.rows(), 1), col_alive(M.cols(), 1);
  std::size_t pivots = 0;

  auto eliminate = [&](std::size_t pr, std::size_t pc) {
    const Row pivot_row = rows[pr];
    mpz_class u;
    for (const auto& [c, v] : pivot_row)
      if (c == pc) u = v;
    const std::vector<std::size_t> targets(col_rows[pc].begin(), col_rows[pc].end());
    for (std::size_t k : targets) {
      if (k == pr) continue;
      mpz_class f;
      for (const auto& [c, v] : rows[k])
        if (c == pc) f = v * u;  // u = +-1, so u^-1 = u
      Row merged;
      merged.reserve(rows[k].size() + pivot_row.size());
      auto a = rows[k].begin();
      auto b = pivot_row.begin();
      while (a != rows[k].end() || b != pivot_row.end()) {
        if (b == pivot_row.end() || (a != rows[k].end() && a->first < b->first)) {
          merged.push_back(std::move(*a));
          ++a;
        } else if (a == rows[k].end() || b->first < a->first) {
          merged.push_back({b->first, -f * b->second});
          col_rows[b->first].insert(k);
          ++b;
        } else {
          mpz_class v = a->second - f * b->second;
          if (sgn(v) != 0) merged.push_back({a->first, std::move(v)});
          else col_rows[a->first].erase(k);
          ++a;
          ++b;
        }
      }
      rows[k] = std::move(merged);
    }
    for (const auto& [c, v] : pivot_row) col_rows[c].erase(pr);
    rows[pr].clear();
    row_alive[pr] = 0;
    col_alive[pc] = 0;
    ++pivots;
  };

  for (bool progress = true; progress;) {
    progress = false;
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < M.cols(); ++c)
      if (col_alive[c] && !col_rows[c].empty()) order.push_back(c);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return col_rows[a].size() < col_rows[b].size(); });
    for (std::size_t c : order) {
      if (!col_alive[c] || col_rows[c].empty()) continue;
      std::size_t best = SIZE_MAX;
      for (std::size_t r : col_rows[c]) {
        for (const auto& [cc, v] : rows[r])
          if (cc == c && abs(v) == 1 && (best == SIZE_MAX || rows[r].size() < rows[best].size())) best = r;
      }
      if (best == SIZE_MAX) continue;
      eliminate(best, c);
      progress = true;
    }
  }

  std::vector<std::size_t> live_rows, live_cols;
  std::map<std::size_t, std::size_t> col_pos;
  for (std::size_t r = 0; r < M.rows(); ++r)
    if (row_alive[r] && !rows[r].empty()) live_rows.push_back(r);
  for (std::size_t c = 0; c < M.cols(); ++c)
    if (col_alive[c] && !col_rows[c].empty()) {
      col_pos[c] = live_cols.size();
      live_cols.push_back(c);
    }
  rest.assign(live_rows.size(), std::vector<mpz_class>(live_cols.size(), 0));
  for (std::size_t i = 0; i < live_rows.size(); ++i)
    for (const auto& [c, v] : rows[live_rows[i]]) rest[i][col_pos.at(c)] = v;
  return pivots;
}

}  // namespace

SNFResult smith_normal_form(const BigMatrix& m, bool transforms) {
  const std::size_t rows = m.size();
  const std::size_t cols = rows == 0 ? 0 : m[0].size();
  for (const auto& r : m)
    if (r.size() != cols) throw InputError("ragged matrix");
  BigMatrix A = m;
  SNFResult out;
  if (transforms) {
    out.U = identity(rows);
    out.V = identity(cols);
  }
  dense_snf(A, transforms ? &*out.U : nullptr, transforms ? &*out.V : nullptr);
  out.diagonal = diagonal_of(A);
  out.rank = count_nonzero(out.diagonal);
  return out;
}

SNFResult smith_normal_form(const SparseMatrix& m, bool transforms) {
  if (transforms) return smith_normal_form(to_big(m), true);
  BigMatrix rest;
  const std::size_t units = eliminate_units(m, rest);
  dense_snf(rest, nullptr, nullptr);
  SNFResult out;
  out.diagonal.assign(units, mpz_class(1));
  for (auto& d : diagonal_of(rest))
    if (sgn(d) != 0) out.diagonal.push_back(d);
  out.rank = out.diagonal.size();
  out.diagonal.resize(std::min(m.rows(), m.cols()), mpz_class(0));
  return out;
}

namespace {

MatrixInvariants invariants_from_diagonal(const std::vector<mpz_class>& diag, RingSpec ring) {
  MatrixInvariants inv;
  for (const auto& d : diag) {
    if (sgn(d) == 0) continue;
    switch (ring.tag) {
      case RingTag::Integers:
        ++inv.rank;
        if (d != 1) inv.torsion.push_back(d);
        break;
      case RingTag::Rationals: ++inv.rank; break;
      case RingTag::ModP:
        if (!mpz_divisible_ui_p(d.get_mpz_t(), static_cast<unsigned long>(ring.p))) ++inv.rank;
        break;
    }
  }
  return inv;
}

void check_ring(const ProperChainComplex& c, RingSpec ring) {
  if (!(c.ring == ring) && c.ring.tag != RingTag::Integers)
    throw ContractError("complex over " + c.ring.name() + " cannot be read over " + ring.name());
}

// Homology from the integer Smith forms of the boundary maps; d[k] is the
// diagonal of the map out of degree k, for k = 0..top+1.
std::vector<HomologyGroup> assemble(const std::vector<std::size_t>& ranks,
                                    const std::vector<std::vector<mpz_class>>& out_of, RingSpec ring) {
  std::vector<HomologyGroup> H;
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    const auto a = invariants_from_diagonal(out_of[k], ring);
    const auto b = invariants_from_diagonal(out_of[k + 1], ring);
    HomologyGroup h;
    h.free_rank = ranks[k] - a.rank - b.rank;
    h.torsion = b.torsion;
    H.push_back(std::move(h));
  }
  return H;
}

}  // namespace

MatrixInvariants matrix_invariants(const SparseMatrix& m, RingSpec ring) {
  return invariants_from_diagonal(smith_normal_form(m).diagonal, ring);
}

std::string HomologyGroup::to_string() const {
  if (is_zero()) return "0";
  std::string s;
  if (free_rank > 0) s = free_rank == 1 ? "Z" : "Z^" + std::to_string(free_rank);
  for (const auto& t : torsion) {
    if (!s.empty()) s += " + ";
    s += "Z/" + t.get_str();
  }
  return s;
}

bool HomologyGroup::operator==(const HomologyGroup& other) const {
  return free_rank == other.free_rank && torsion == other.torsion;
}

std::vector<mpz_class> normalize_torsion(std::vector<mpz_class> orders) {
  std::erase_if(orders, [](const mpz_class& x) { return abs(x) == 1; });
  for (auto& x : orders) {
    if (sgn(x) == 0) throw ContractError("torsion order 0 is not a finite cyclic group");
    x = abs(x);
  }
  if (orders.empty()) return {};
  BigMatrix D(orders.size(), std::vector<mpz_class>(orders.size(), 0));
  for (std::size_t i = 0; i < orders.size(); ++i) D[i][i] = orders[i];
  dense_snf(D, nullptr, nullptr);
  std::vector<mpz_class> out;
  for (auto& d : diagonal_of(D))
    if (d != 1) out.push_back(d);
  return out;
}

HomologyGroup direct_sum(const HomologyGroup& a, const HomologyGroup& b) {
  HomologyGroup s;
  s.free_rank = a.free_rank + b.free_rank;
  s.torsion = a.torsion;
  s.torsion.insert(s.torsion.end(), b.torsion.begin(), b.torsion.end());
  s.torsion = normalize_torsion(std::move(s.torsion));
  return s;
}

std::vector<HomologyGroup> homology(const ProperChainComplex& c, RingSpec ring) {
  check_ring(c, ring);
  std::vector<std::vector<mpz_class>> out_of;
  for (int k = 0; k <= c.top_degree() + 1; ++k) out_of.push_back(smith_normal_form(c.d(k)).diagonal);
  return assemble(c.ranks(), out_of, ring);
}

std::vector<HomologyGroup> cohomology_c(const ProperChainComplex& c, RingSpec ring, std::optional<double> collar) {
  check_ring(c, ring);
  const ProperChainComplex rel = collar ? relative_collar_complex(c, *collar) : c;
  const CochainComplex dual_complex = compact_dual(rel);
  std::vector<MatrixInvariants> delta;  // delta[k] maps degree k to k+1
  for (const auto& m : dual_complex.coboundary) delta.push_back(matrix_invariants(m, ring));
  std::vector<HomologyGroup> H;
  for (std::size_t k = 0; k < dual_complex.modules.size(); ++k) {
    HomologyGroup h;
    const std::size_t into = k == 0 ? 0 : delta[k - 1].rank;
    h.free_rank = dual_complex.modules[k].rank() - delta[k].rank - into;
    if (k > 0) h.torsion = delta[k - 1].torsion;
    H.push_back(std::move(h));
  }
  return H;
}

std::pair<HomologyGroup, HomologyGroup> tensor_and_tor(const HomologyGroup& a, const HomologyGroup& b, RingSpec ring) {
  HomologyGroup tensor, tor;
  tensor.free_rank = a.free_rank * b.free_rank;
  if (ring.is_field()) {
    if (!a.torsion.empty() || !b.torsion.empty()) throw ContractError("modules over a field carry no torsion");
    return {tensor, tor};
  }
  std::vector<mpz_class> t, r;
  for (std::size_t i = 0; i < a.free_rank; ++i) t.insert(t.end(), b.torsion.begin(), b.torsion.end());
  for (std::size_t i = 0; i < b.free_rank; ++i) t.insert(t.end(), a.torsion.begin(), a.torsion.end());
  for (const auto& x : a.torsion)
    for (const auto& y : b.torsion) {
      mpz_class g = gcd(x, y);
      t.push_back(g);
      r.push_back(g);
    }
  tensor.torsion = normalize_torsion(std::move(t));
  tor.torsion = normalize_torsion(std::move(r));
  return {tensor, tor};
}

bool CheckReport::passed() const {
  for (const auto& d : degrees)
    if (!d.equal) return false;
  return true;
}

namespace {

CheckReport kunneth_from(const std::vector<HomologyGroup>& HC, const std::vector<HomologyGroup>& HD,
                         const std::vector<HomologyGroup>& HT, RingSpec ring) {
  CheckReport rep;
  for (std::size_t k = 0; k < HT.size(); ++k) {
    HomologyGroup rhs;
    for (std::size_t i = 0; i < HC.size(); ++i) {
      if (i <= k && k - i < HD.size()) rhs = direct_sum(rhs, tensor_and_tor(HC[i], HD[k - i], ring).first);
      if (k >= 1 && i <= k - 1 && k - 1 - i < HD.size())
        rhs = direct_sum(rhs, tensor_and_tor(HC[i], HD[k - 1 - i], ring).second);
    }
    rep.degrees.push_back({static_cast<int>(k), HT[k], rhs, HT[k] == rhs});
  }
  return rep;
}

HomologyGroup base_change(const HomologyGroup& g, RingSpec target) {
  HomologyGroup out;
  out.free_rank = g.free_rank;
  if (target.tag == RingTag::ModP)
    for (const auto& t : g.torsion) out.free_rank += mpz_divisible_ui_p(t.get_mpz_t(), static_cast<unsigned long>(target.p)) ? 1 : 0;
  return out;
}

HomologyGroup tor_with(const HomologyGroup& g, RingSpec target) {
  HomologyGroup out;
  if (target.tag == RingTag::ModP)
    for (const auto& t : g.torsion) out.free_rank += mpz_divisible_ui_p(t.get_mpz_t(), static_cast<unsigned long>(target.p)) ? 1 : 0;
  return out;
}

CheckReport uct_from(const std::vector<HomologyGroup>& HZ, const std::vector<HomologyGroup>& HF, RingSpec target) {
  CheckReport rep;
  for (std::size_t k = 0; k < HF.size(); ++k) {
    HomologyGroup rhs = base_change(HZ[k], target);
    if (k + 1 < HZ.size()) rhs = direct_sum(rhs, tor_with(HZ[k + 1], target));
    rep.degrees.push_back({static_cast<int>(k), HF[k], rhs, HF[k] == rhs});
  }
  return rep;
}

}  // namespace

CheckReport kunneth_check(const ProperChainComplex& C, const ProperChainComplex& D, RingSpec ring) {
  check_ring(C, ring);
  check_ring(D, ring);
  const ProperChainComplex T = tensor_product(C, D);
  return kunneth_from(homology(C, ring), homology(D, ring), homology(T, ring), ring);
}

CheckReport uct_check(const ProperChainComplex& C, RingSpec target) {
  if (C.ring.tag != RingTag::Integers) throw ContractError("universal coefficients need a complex over Z");
  if (!target.is_field()) throw ContractError("universal coefficient target must be Q or Z/p");
  return uct_from(cohomology_c(C, RingSpec::integers()), cohomology_c(C, target), target);
}

// ------------------------------------------------------- exhaustive family

std::vector<ProperChainComplex> exhaustive_family(std::size_t max_rank, std::int64_t entry_bound) {
  std::vector<ProperChainComplex> family;
  const std::int64_t width = 2 * entry_bound + 1;
  auto decode = [&](std::size_t rows, std::size_t cols, std::uint64_t code) {
    SparseMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        m.add(r, c, static_cast<std::int64_t>(code % static_cast<std::uint64_t>(width)) - entry_bound);
        code /= static_cast<std::uint64_t>(width);
      }
    return m;
  };
  auto count = [&](std::size_t cells) {
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < cells; ++i) n *= static_cast<std::uint64_t>(width);
    return n;
  };
  for (std::size_t r0 = 0; r0 <= max_rank; ++r0)
    for (std::size_t r1 = 0; r1 <= max_rank; ++r1)
      for (std::size_t r2 = 0; r2 <= max_rank; ++r2) {
        const std::uint64_t n1 = count(r0 * r1), n2 = count(r1 * r2);
        for (std::uint64_t a = 0; a < n1; ++a) {
          const SparseMatrix d1 = decode(r0, r1, a);
          for (std::uint64_t b = 0; b < n2; ++b) {
            SparseMatrix d2 = decode(r1, r2, b);
            if (!d1.multiply(d2).is_zero()) continue;
            family.push_back(algebraic_complex({r0, r1, r2}, {d1, d2}));
          }
        }
      }
  return family;
}

namespace {

const std::vector<RingSpec>& sweep_rings_all() {
  static const std::vector<RingSpec> rings = {RingSpec::integers(), RingSpec::rationals(), RingSpec::mod_p(2),
                                              RingSpec::mod_p(3)};
  return rings;
}

constexpr std::size_t kFailureExamples = 5;

// Integer Smith diagonals of every boundary map, reusable across rings.
std::vector<std::vector<mpz_class>> boundary_diagonals(const ProperChainComplex& c) {
  std::vector<std::vector<mpz_class>> out;
  for (int k = 0; k <= c.top_degree() + 1; ++k) out.push_back(smith_normal_form(c.d(k)).diagonal);
  return out;
}

}  // namespace

SweepReport kunneth_sweep(std::uint64_t seed, std::size_t random_pairs) {
  SweepReport rep;
  rep.check = "kunneth";
  rep.seed = seed;
  const auto& rings = sweep_rings_all();
  for (const auto& r : rings) rep.rings.push_back(r.name());
  const auto family = exhaustive_family();
  rep.family_size = family.size();

  std::vector<std::vector<std::vector<HomologyGroup>>> H(family.size());
  std::vector<std::size_t> small;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto diag = boundary_diagonals(family[i]);
    for (const auto& ring : rings) H[i].push_back(assemble(family[i].ranks(), diag, ring));
    const auto rk = family[i].ranks();
    if (*std::max_element(rk.begin(), rk.end()) <= 1) small.push_back(i);
  }

  auto run = [&](std::size_t a, std::size_t b) {
    const ProperChainComplex T = tensor_product(family[a], family[b]);
    const auto diag = boundary_diagonals(T);
    for (std::size_t r = 0; r < rings.size(); ++r) {
      auto report = kunneth_from(H[a][r], H[b][r], assemble(T.ranks(), diag, rings[r]), rings[r]);
      ++rep.cases;
      if (!report.passed()) {
        ++rep.failures;
        if (rep.examples.size() < kFailureExamples) rep.examples.push_back({a, b, rings[r].name(), std::move(report)});
      }
    }
  };
  for (std::size_t s : small)
    for (std::size_t i = 0; i < family.size(); ++i) {
      run(s, i);
      run(i, s);
    }
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < random_pairs; ++k) {
    const std::size_t a = static_cast<std::size_t>(rng() % family.size());
    const std::size_t b = static_cast<std::size_t>(rng() % family.size());
    run(a, b);
  }
  return rep;
}

SweepReport uct_sweep() {
  SweepReport rep;
  rep.check = "uct";
  const std::vector<RingSpec> targets = {RingSpec::rationals(), RingSpec::mod_p(2), RingSpec::mod_p(3)};
  for (const auto& r : targets) rep.rings.push_back(r.name());
  const auto family = exhaustive_family();
  rep.family_size = family.size();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto HZ = cohomology_c(family[i], RingSpec::integers());
    for (const auto& t : targets) {
      auto report = uct_from(HZ, cohomology_c(family[i], t), t);
      ++rep.cases;
      if (!report.passed()) {
        ++rep.failures;
        if (rep.examples.size() < kFailureExamples) rep.examples.push_back({i, i, t.name(), std::move(report)});
      }
    }
  }
  return rep;
}

}  // namespace coarsekit
