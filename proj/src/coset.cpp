#include "coarsekit/coset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "checked_math.hpp"
#include "coarsekit/catalog.hpp"
#include "coarsekit/errors.hpp"

namespace coarsekit {

namespace {
constexpr std::size_t kDefaultTableBudget = 200000;
}

namespace {

// ------------------------------------------------------------ coset oracles

class TrivialOracle final : public CosetOracle {
 public:
  NormalForm key(const NormalForm& g) const override { return g; }
  std::string kind() const override { return "trivial-subgroup"; }
};

class WholeOracle final : public CosetOracle {
 public:
  explicit WholeOracle(NormalForm identity) : identity_(std::move(identity)) {}
  NormalForm key(const NormalForm&) const override { return identity_; }
  std::string kind() const override { return "whole-group"; }

 private:
  NormalForm identity_;
};

// Sublattice of Z^n: reduce modulo an echelon basis.
class LatticeOracle final : public CosetOracle {
 public:
  explicit LatticeOracle(std::vector<NormalForm> generators, std::size_t n) {
    std::vector<NormalForm> rows = std::move(generators);
    std::size_t next = 0;
    for (std::size_t col = 0; col < n && next < rows.size(); ++col) {
      // Euclid on column `col` among rows next.. to leave one nonzero entry.
      while (true) {
        std::size_t best = rows.size();
        for (std::size_t r = next; r < rows.size(); ++r)
          if (rows[r][col] != 0 && (best == rows.size() || std::llabs(rows[r][col]) < std::llabs(rows[best][col])))
            best = r;
        if (best == rows.size()) break;
        std::swap(rows[next], rows[best]);
        bool others = false;
        for (std::size_t r = next + 1; r < rows.size(); ++r) {
          if (rows[r][col] == 0) continue;
          const std::int64_t q = rows[r][col] / rows[next][col];
          for (std::size_t c = col; c < n; ++c)
            rows[r][c] = detail::checked_sub(rows[r][c], detail::checked_mul(q, rows[next][c]));
          if (rows[r][col] != 0) others = true;
        }
        if (!others) break;
      }
      if (next < rows.size() && rows[next][col] != 0) {
        if (rows[next][col] < 0)
          for (auto& v : rows[next]) v = -v;
        pivots_.push_back(col);
        basis_.push_back(rows[next]);
        ++next;
      }
    }
  }
  NormalForm key(const NormalForm& g) const override {
    NormalForm v = g;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      const std::size_t col = pivots_[i];
      const std::int64_t q = detail::floor_div(v[col], basis_[i][col]);
      if (q == 0) continue;
      for (std::size_t c = col; c < v.size(); ++c)
        v[c] = detail::checked_sub(v[c], detail::checked_mul(q, basis_[i][c]));
    }
    return v;
  }
  std::string kind() const override { return "lattice-reduction"; }

 private:
  std::vector<std::size_t> pivots_;
  std::vector<NormalForm> basis_;
};

// <a^k> in BS(m,n): the coset of a Britton form is determined by everything
// except the residue of the trailing a-exponent modulo k.
class BrittonTailOracle final : public CosetOracle {
 public:
  explicit BrittonTailOracle(std::int64_t k) : k_(k) {}
  NormalForm key(const NormalForm& g) const override {
    NormalForm out = g;
    out[0] = detail::floor_mod(out[0], k_);
    return out;
  }
  std::string kind() const override { return "britton-tail"; }

 private:
  std::int64_t k_;
};

// Subgroup of a free group generated by some basis letters: strip the
// maximal reduced suffix in those letters.
class SuffixOracle final : public CosetOracle {
 public:
  explicit SuffixOracle(std::vector<bool> in_subgroup) : in_(std::move(in_subgroup)) {}
  NormalForm key(const NormalForm& g) const override {
    std::size_t end = g.size();
    while (end > 0 && in_[static_cast<std::size_t>(std::llabs(g[end - 1]) - 1)]) --end;
    return NormalForm(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(end));
  }
  std::string kind() const override { return "reduced-suffix"; }

 private:
  std::vector<bool> in_;
};

class ProductOracle final : public CosetOracle {
 public:
  ProductOracle(MarkedGroup group, std::shared_ptr<const CosetOracle> left, std::shared_ptr<const CosetOracle> right)
      : group_(std::move(group)), left_(std::move(left)), right_(std::move(right)) {}
  NormalForm key(const NormalForm& g) const override {
    const auto& dp = static_cast<const DirectProduct&>(*group_);
    auto [l, r] = dp.split(g);
    return dp.join(left_->key(l), right_->key(r));
  }
  std::string kind() const override { return "factor-projection(" + left_->kind() + "," + right_->kind() + ")"; }

 private:
  MarkedGroup group_;
  std::shared_ptr<const CosetOracle> left_, right_;
};

class FreeFactorOracle final : public CosetOracle {
 public:
  FreeFactorOracle(MarkedGroup group, int factor) : group_(std::move(group)), factor_(factor) {}
  NormalForm key(const NormalForm& g) const override {
    const auto& fp = static_cast<const FreeProduct&>(*group_);
    auto pieces = fp.decode(g);
    if (!pieces.empty() && pieces.back().factor == factor_) pieces.pop_back();
    return fp.encode(pieces);
  }
  std::string kind() const override { return "free-factor-suffix"; }

 private:
  MarkedGroup group_;
  int factor_;
};

std::int64_t dot2(Eisenstein a, Eisenstein b) {
  // Twice the Euclidean inner product in the basis 1, w.
  using detail::checked_mul;
  return 2 * checked_mul(a.x, b.x) + 2 * checked_mul(a.y, b.y) - checked_mul(a.x, b.y) - checked_mul(a.y, b.x);
}

// Cyclic subgroup <h> of the triangle group. Finite <h>: minimum over the
// coset. Infinite <h>: h^p is a translation T; each (g h^i)<T> is reduced to
// the representative whose translation part projects into [-1/2, 1/2) along
// the translation direction, then the minimum over i < p is taken.
class TriangleCyclicOracle final : public CosetOracle {
 public:
  using Iso = TriangleGroup333::Isometry;
  explicit TriangleCyclicOracle(const NormalForm& h) {
    Iso f = TriangleGroup333::decode(h);
    Iso id{};
    powers_.push_back(id);
    if (!f.reflect && f.unit == 0) {
      translation_ = f.shift;
      return;
    }
    if (!f.reflect) {
      for (Iso p = f; !(p.unit == 0 && p.reflect == 0 && p.shift == Eisenstein{}); p = TriangleGroup333::compose(p, f))
        powers_.push_back(p);
      finite_ = true;
      return;
    }
    Iso f2 = TriangleGroup333::compose(f, f);
    powers_.push_back(f);
    if (f2.shift == Eisenstein{}) {
      finite_ = true;
      return;
    }
    translation_ = f2.shift;
  }
  NormalForm key(const NormalForm& g) const override {
    Iso f = TriangleGroup333::decode(g);
    NormalForm best;
    for (const Iso& p : powers_) {
      Iso c = TriangleGroup333::compose(f, p);
      if (!finite_) {
        const Eisenstein d = unit_power(c.unit) * (c.reflect ? conj(translation_) : translation_);
        const std::int64_t n2 = dot2(d, d);
        const std::int64_t a2 = dot2(c.shift, d);
        const std::int64_t j = detail::floor_div(n2 - 2 * a2, 2 * n2);
        c.shift = c.shift + Eisenstein{j * d.x, j * d.y};
      }
      NormalForm k = TriangleGroup333::encode(c);
      if (best.empty() || k < best) best = std::move(k);
    }
    return best;
  }
  std::string kind() const override { return finite_ ? "finite-cyclic-orbit" : "lattice-line"; }

 private:
  std::vector<Iso> powers_;
  Eisenstein translation_;
  bool finite_ = false;
};

// Union-find over a ball under right multiplication by the generators of H.
class UnionFindOracle final : public CosetOracle {
 public:
  UnionFindOracle(const MarkedGroup& group, const std::vector<NormalForm>& generators, int radius,
                  std::size_t budget)
      : ball_(ball(group, radius, budget)) {
    std::vector<std::size_t> parent(ball_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < ball_.size(); ++i) {
      for (const auto& h : generators) {
        for (const auto& hh : {h, group->inverse(h)}) {
          auto j = ball_.index_of(group->multiply(ball_.element(i), hh));
          if (!j) continue;
          std::size_t a = find(i), b = find(*j);
          if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
      }
    }
    root_.resize(ball_.size());
    for (std::size_t i = 0; i < ball_.size(); ++i) root_[i] = find(i);
  }
  NormalForm key(const NormalForm& g) const override {
    auto i = ball_.index_of(g);
    if (!i) throw WindowError("approximate coset key requested outside Ball(" + std::to_string(ball_.radius()) + ")");
    return ball_.element(root_[*i]);
  }
  bool exact() const override { return false; }
  std::string kind() const override { return "union-find-window"; }

 private:
  Ball ball_;
  std::vector<std::size_t> root_;
};

bool generates_everything(const Group& g, const std::vector<NormalForm>& gens) {
  for (int i = 0; i < g.rank(); ++i) {
    NormalForm s = g.evaluate({{i, 1}}), s_inv = g.evaluate({{i, -1}});
    bool found = std::any_of(gens.begin(), gens.end(), [&](const NormalForm& h) { return h == s || h == s_inv; });
    if (!found) return false;
  }
  return true;
}

std::shared_ptr<const CosetOracle> exact_oracle(const MarkedGroup& group, std::vector<NormalForm> gens) {
  const Group& G = *group;
  gens.erase(std::remove_if(gens.begin(), gens.end(), [&](const NormalForm& h) { return G.is_identity(h); }),
             gens.end());
  if (gens.empty()) return std::make_shared<TrivialOracle>();
  if (generates_everything(G, gens)) return std::make_shared<WholeOracle>(G.identity());

  if (auto* za = dynamic_cast<const FreeAbelianGroup*>(&G))
    return std::make_shared<LatticeOracle>(gens, static_cast<std::size_t>(za->dimension()));

  if (dynamic_cast<const BaumslagSolitarGroup*>(&G)) {
    std::int64_t k = 0;
    for (const auto& h : gens) {
      if (h.size() != 1) return nullptr;
      k = std::gcd(k, std::llabs(h[0]));
    }
    return std::make_shared<BrittonTailOracle>(k);
  }

  if (auto* fg = dynamic_cast<const FreeGroup*>(&G)) {
    std::vector<bool> in(static_cast<std::size_t>(fg->free_rank()), false);
    for (const auto& h : gens) {
      if (h.size() != 1) return nullptr;
      in[static_cast<std::size_t>(std::llabs(h[0]) - 1)] = true;
    }
    return std::make_shared<SuffixOracle>(std::move(in));
  }

  if (auto* dp = dynamic_cast<const DirectProduct*>(&G)) {
    std::vector<NormalForm> left, right;
    for (const auto& h : gens) {
      auto [l, r] = dp->split(h);
      if (dp->right()->is_identity(r))
        left.push_back(l);
      else if (dp->left()->is_identity(l))
        right.push_back(r);
      else
        return nullptr;
    }
    auto lo = exact_oracle(dp->left(), left);
    auto ro = exact_oracle(dp->right(), right);
    if (!lo || !ro) return nullptr;
    return std::make_shared<ProductOracle>(group, lo, ro);
  }

  if (auto* fp = dynamic_cast<const FreeProduct*>(&G)) {
    for (int f = 0; f < 2; ++f) {
      const int offset = f == 0 ? 0 : fp->factor(0)->rank();
      std::vector<NormalForm> factor_gens;
      for (int i = 0; i < fp->factor(f)->rank(); ++i) factor_gens.push_back(G.evaluate({{offset + i, 1}}));
      bool all_in_factor = std::all_of(gens.begin(), gens.end(), [&](const NormalForm& h) {
        auto pieces = fp->decode(h);
        return pieces.size() == 1 && pieces[0].factor == f;
      });
      bool all_gens = std::all_of(factor_gens.begin(), factor_gens.end(), [&](const NormalForm& s) {
        return std::find(gens.begin(), gens.end(), s) != gens.end() ||
               std::find(gens.begin(), gens.end(), G.inverse(s)) != gens.end();
      });
      if (all_in_factor && all_gens) return std::make_shared<FreeFactorOracle>(group, f);
    }
    return nullptr;
  }

  if (dynamic_cast<const TriangleGroup333*>(&G)) {
    if (gens.size() == 1) return std::make_shared<TriangleCyclicOracle>(gens[0]);
    return nullptr;
  }
  return nullptr;
}

}  // namespace

bool SubgroupSpec::contains(const NormalForm& h) const { return key(h) == key(owner->identity()); }

std::string SubgroupSpec::describe() const {
  std::string out = "<";
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (i) out += ", ";
    out += owner->format(generators[i]);
  }
  return out + ">";
}

SubgroupSpec make_subgroup(const MarkedGroup& group, std::vector<NormalForm> generators, int fallback_radius,
                           std::size_t node_budget) {
  SubgroupSpec spec{group, std::move(generators), nullptr};
  spec.oracle = exact_oracle(group, spec.generators);
  if (!spec.oracle)
    spec.oracle = std::make_shared<UnionFindOracle>(group, spec.generators, fallback_radius, node_budget);
  return spec;
}

SubgroupSpec make_subgroup(const MarkedGroup& group, const std::vector<std::string>& generator_words,
                           int fallback_radius, std::size_t node_budget) {
  std::vector<NormalForm> gens;
  for (const auto& w : generator_words) gens.push_back(group->evaluate(group->parse_word(w)));
  return make_subgroup(group, std::move(gens), fallback_radius, node_budget);
}

// ---------------------------------------------------------------- tables

double MonotoneTable::operator()(double t) const {
  if (x.empty()) throw ContractError("empty monotone table");
  if (t <= x.front()) return y.front();
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (t <= x[i + 1]) return y[i] + (y[i + 1] - y[i]) * (t - x[i]) / (x[i + 1] - x[i]);
  return y.back() + tail_slope * (t - x.back());
}

void MonotoneTable::validate() const {
  if (x.empty() || x.size() != y.size()) throw ContractError("monotone table needs matching nonempty x and y");
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (!(x[i] < x[i + 1])) throw ContractError("monotone table: x must strictly increase");
    if (y[i] > y[i + 1]) throw ContractError("monotone table: function must be nondecreasing");
  }
  if (!(tail_slope > 0.0)) throw ContractError("monotone table: a proper function needs a positive tail slope");
}

double proper_inverse(const MonotoneTable& phi, double R) {
  phi.validate();
  if (R < phi.y.front()) return 0.0;
  for (std::size_t i = 0; i + 1 < phi.x.size(); ++i) {
    if (phi.y[i + 1] > R) {
      // phi(x_i) <= R < phi(x_{i+1}): interpolate on the rising segment.
      return phi.x[i] + (R - phi.y[i]) * (phi.x[i + 1] - phi.x[i]) / (phi.y[i + 1] - phi.y[i]);
    }
  }
  return phi.x.back() + (R - phi.y.back()) / phi.tail_slope;
}

// --------------------------------------------------------- Hausdorff distance

namespace {

struct Directed {
  std::int64_t value = 0;
  bool exceeded = false;
};

// max over a in `from` of min{|x| : a x in B}, x ranging over `search` in BFS order.
Directed directed_distance(const Group& G, const std::vector<NormalForm>& from, const Membership& to,
                           const Ball& search) {
  Directed d;
  for (const auto& a : from) {
    std::int64_t best = -1;
    for (std::size_t i = 0; i < search.size(); ++i) {
      if (to(G.multiply(a, search.element(i)))) {
        best = search.length(i);
        break;
      }
    }
    if (best < 0) {
      d.exceeded = true;
      best = search.radius() + 1;
    }
    d.value = std::max(d.value, best);
  }
  return d;
}

}  // namespace

DistanceEstimate hausdorff_distance(const MarkedGroup& group, const Membership& A, const Membership& B, int radius,
                                    int margin, int search_cap, std::size_t node_budget) {
  if (radius < 0 || margin < 0) throw ContractError("hausdorff_distance: radius and margin must be non-negative");
  const Ball outer = ball(group, radius + margin, node_budget);
  const Ball search = ball(group, search_cap, node_budget);
  auto estimate = [&](int S, bool& exceeded) {
    std::vector<NormalForm> as, bs;
    for (std::size_t i = 0; i < outer.size() && outer.length(i) <= S; ++i) {
      if (A(outer.element(i))) as.push_back(outer.element(i));
      if (B(outer.element(i))) bs.push_back(outer.element(i));
    }
    if (as.empty() || bs.empty()) throw WindowError("hausdorff_distance: a set has no point in the window");
    Directed ab = directed_distance(*group, as, B, search), ba = directed_distance(*group, bs, A, search);
    exceeded = exceeded || ab.exceeded || ba.exceeded;
    return std::max(ab.value, ba.value);
  };
  DistanceEstimate out;
  out.value = estimate(radius, out.exceeds_cap);
  out.enlarged = estimate(radius + margin, out.exceeds_cap);
  out.converged = !out.exceeds_cap && out.value == out.enlarged;
  return out;
}

DistanceEstimate hausdorff_distance(const std::vector<NormalForm>& A, const std::vector<NormalForm>& B,
                                    const Ball& window, int margin, int search_cap) {
  std::unordered_set<NormalForm, NormalFormHash> sa(A.begin(), A.end()), sb(B.begin(), B.end());
  return hausdorff_distance(
      window.group(), [&](const NormalForm& g) { return sa.count(g) > 0; },
      [&](const NormalForm& g) { return sb.count(g) > 0; }, window.radius(), margin, search_cap);
}

// ---------------------------------------------------------- quotient window

bool QuotientWindow::all_converged() const {
  if (!has_full_matrix()) return false;
  for (const auto& row : converged_)
    for (char c : row)
      if (!c) return false;
  return true;
}

std::optional<std::size_t> QuotientWindow::find(const NormalForm& key) const {
  for (std::size_t i = 0; i < cosets_.size(); ++i)
    if (cosets_[i].key == key) return i;
  return std::nullopt;
}

namespace {

// Shared state for distance evaluation in a quotient window.
class CosetDistances {
 public:
  CosetDistances(const MarkedGroup& group, const SubgroupSpec& sub, Ball table)
      : G_(*group), sub_(sub), table_(std::move(table)) {
    for (std::size_t i = 0; i < table_.size(); ++i) {
      NormalForm k = sub_.key(table_.element(i));
      minlen_.emplace(std::move(k), table_.length(i));
      if (sub_.contains(table_.element(i))) h_elements_.push_back(i);
    }
  }

  // F_S(cH) = max over h in H, |h| <= S of min length in h^-1 c H.
  std::int64_t F(const NormalForm& c, int S, bool& exceeded) {
    NormalForm ck = sub_.key(c);
    auto memo_key = std::make_pair(ck, S);
    if (auto it = memo_.find(memo_key); it != memo_.end()) {
      exceeded = exceeded || it->second.second;
      return it->second.first;
    }
    std::int64_t best = 0;
    bool ex = false;
    for (std::size_t idx : h_elements_) {
      if (table_.length(idx) > S) break;
      NormalForm x = G_.multiply(G_.inverse(table_.element(idx)), c);
      auto it = minlen_.find(sub_.key(x));
      std::int64_t v;
      if (it == minlen_.end()) {
        ex = true;
        v = table_.radius() + 1;
      } else {
        v = it->second;
      }
      best = std::max(best, v);
    }
    memo_.emplace(memo_key, std::make_pair(best, ex));
    exceeded = exceeded || ex;
    return best;
  }

  std::int64_t distance(const NormalForm& g, const NormalForm& k, int S, bool& exceeded) {
    const NormalForm gi = G_.inverse(g), ki = G_.inverse(k);
    return std::max(F(G_.multiply(gi, k), S, exceeded), F(G_.multiply(ki, g), S, exceeded));
  }

  int table_radius() const { return table_.radius(); }

 private:
  struct PairHash {
    std::size_t operator()(const std::pair<NormalForm, int>& p) const noexcept {
      return NormalFormHash{}(p.first) * 31 + static_cast<std::size_t>(p.second);
    }
  };
  const Group& G_;
  const SubgroupSpec& sub_;
  Ball table_;
  std::unordered_map<NormalForm, int, NormalFormHash> minlen_;
  std::vector<std::size_t> h_elements_;
  std::unordered_map<std::pair<NormalForm, int>, std::pair<std::int64_t, bool>, PairHash> memo_;
};

}  // namespace

QuotientWindow quotient_window(const MarkedGroup& group, const SubgroupSpec& subgroup, const QuotientParams& params) {
  if (params.radius < 1) throw ContractError("quotient_window: radius must be >= 1");
  if (params.margin < 0 || params.margin_cap < 1) throw ContractError("quotient_window: bad margin settings");
  if (params.margin > params.radius) throw ContractError("quotient_window: margin must not exceed the radius");
  if (subgroup.owner != group) throw InputError("quotient_window: subgroup belongs to a different group");

  QuotientWindow qw;
  qw.group_ = group;
  qw.subgroup_ = subgroup;
  qw.params_ = params;
  qw.ball_ = ball(group, params.radius, params.node_budget);

  std::unordered_map<NormalForm, std::size_t, NormalFormHash> index;
  for (std::size_t i = 0; i < qw.ball_.size(); ++i) {
    NormalForm k = subgroup.key(qw.ball_.element(i));
    auto [it, fresh] = index.emplace(k, qw.cosets_.size());
    if (fresh) qw.cosets_.push_back({std::move(k), qw.ball_.element(i), qw.ball_.length(i), {}});
    qw.cosets_[it->second].fiber.push_back(i);
  }
  for (int r = 0; r <= params.radius; ++r) {
    std::size_t count = 0;
    for (const auto& c : qw.cosets_) count += c.min_length <= r ? 1 : 0;
    qw.count_schedule_.push_back(count);
  }

  const int max_margin = params.margin > 0 ? params.margin : params.margin_cap;
  const int base_table = params.radius + max_margin;
  Ball table;
  if (params.table_radius > 0) {
    table = ball(group, std::max(params.table_radius, base_table), params.node_budget);
  } else {
    // Far pairs need a table of radius about 2R; take as much of it as the
    // budget allows, never less than R + margin.
    const int wanted = qw.cosets_.size() <= params.full_matrix_limit ? 2 * params.radius + max_margin : base_table;
    table = ball_within_budget(group, wanted, std::min<std::size_t>(params.node_budget, kDefaultTableBudget));
    if (table.radius() < base_table) table = ball(group, base_table, params.node_budget);
  }
  CosetDistances dist(group, subgroup, std::move(table));
  auto pair_distance = [&](std::size_t i, std::size_t j) {
    const auto& g = qw.cosets_[i].representative;
    const auto& k = qw.cosets_[j].representative;
    bool exceeded = false;
    const std::int64_t est = dist.distance(g, k, params.radius, exceeded);
    const int m = params.margin > 0 ? params.margin
                                    : static_cast<int>(std::min<std::int64_t>(std::max<std::int64_t>(3 * est, 1),
                                                                              params.margin_cap));
    const std::int64_t enlarged = dist.distance(g, k, params.radius + m, exceeded);
    return std::make_pair(enlarged, !exceeded && est == enlarged);
  };

  const std::size_t n = qw.cosets_.size();
  std::map<std::pair<std::size_t, std::size_t>, std::pair<std::int64_t, bool>> cache;
  auto lookup = [&](std::size_t i, std::size_t j) {
    auto key = std::minmax(i, j);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, pair_distance(key.first, key.second)).first;
    return it->second;
  };

  if (n <= params.full_matrix_limit) {
    qw.distance_.assign(n, std::vector<std::int64_t>(n, 0));
    qw.converged_.assign(n, std::vector<char>(n, 1));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        auto [d, c] = lookup(i, j);
        qw.distance_[i][j] = qw.distance_[j][i] = d;
        qw.converged_[i][j] = qw.converged_[j][i] = c ? 1 : 0;
      }
  }

  qw.neighbors_.assign(n, {});
  const std::size_t near = qw.ball_.count_within(params.neighbor_scale);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> candidates;
    for (std::size_t x = 1; x < near; ++x) {
      auto it = index.find(subgroup.key(group->multiply(qw.cosets_[i].representative, qw.ball_.element(x))));
      if (it != index.end() && it->second != i) candidates.push_back(it->second);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (std::size_t j : candidates) {
      auto [d, c] = lookup(i, j);
      if (d <= params.neighbor_scale) qw.neighbors_[i].push_back({j, d, c});
    }
  }
  return qw;
}

// --------------------------------------------------------- commensuration

std::string to_string(CommensurationVerdict v) {
  switch (v) {
    case CommensurationVerdict::ExactFinite:
      return "exact-finite";
    case CommensurationVerdict::WindowFinite:
      return "finite-in-window";
    case CommensurationVerdict::NoBoundUpToRadius:
      return "no-bound-up-to-radius";
  }
  return "unknown";
}

CommensurationCertificate commensuration_witness(const MarkedGroup& group, const SubgroupSpec& subgroup,
                                                 const NormalForm& g, int radius) {
  const Group& G = *group;
  auto len = word_length(G, g, radius);
  if (!len) throw ContractError("commensuration_witness: conjugator lies outside Ball(" + std::to_string(radius) + ")");
  CommensurationCertificate cert;
  cert.conjugator = g;
  cert.conjugator_word = G.format(g);
  cert.radius = radius;

  std::vector<NormalForm> moves;
  for (const auto& h : subgroup.generators) {
    if (G.is_identity(h)) continue;
    moves.push_back(h);
    moves.push_back(G.inverse(h));
  }
  // Orbit of gH under left multiplication by H, breadth first in H-word length.
  std::unordered_set<NormalForm, NormalFormHash> seen;
  std::vector<NormalForm> frontier{g};
  seen.insert(subgroup.key(g));
  bool closed = true;
  try {
    for (int layer = 0; layer < radius && !frontier.empty(); ++layer) {
      std::vector<NormalForm> next;
      for (const auto& x : frontier)
        for (const auto& h : moves) {
          NormalForm y = G.multiply(h, x);
          if (seen.insert(subgroup.key(y)).second) next.push_back(std::move(y));
        }
      frontier = std::move(next);
    }
    if (!frontier.empty()) {
      // One more layer decides whether the orbit already closed.
      for (const auto& x : frontier)
        for (const auto& h : moves)
          if (!seen.count(subgroup.key(G.multiply(h, x)))) closed = false;
    }
  } catch (const WindowError&) {
    closed = false;  // approximate oracle ran out of window
  }
  cert.index_lower_bound = seen.size();
  if (closed) {
    cert.index = seen.size();
    cert.verdict = subgroup.exact() ? CommensurationVerdict::ExactFinite : CommensurationVerdict::WindowFinite;
  } else {
    cert.verdict = CommensurationVerdict::NoBoundUpToRadius;
  }
  return cert;
}

std::vector<CommensurationCertificate> almost_normality_certificates(const MarkedGroup& group,
                                                                     const SubgroupSpec& subgroup, int radius) {
  std::vector<CommensurationCertificate> out;
  for (const auto& l : group->letters()) {
    NormalForm s = group->identity();
    group->right_multiply(s, l.generator, l.sign);
    out.push_back(commensuration_witness(group, subgroup, s, radius));
  }
  return out;
}

// ----------------------------------------------------------- bundle checks

BundleReport verify_bundle_axioms(const QuotientWindow& qw, std::size_t sample_pairs, std::uint64_t seed) {
  if (!qw.has_full_matrix())
    throw ContractError("verify_bundle_axioms: the window has no full distance matrix (too many cosets)");
  const Group& G = *qw.group();
  const Ball& B = qw.window();
  std::vector<std::size_t> coset_of(B.size());
  for (std::size_t c = 0; c < qw.size(); ++c)
    for (std::size_t i : qw.cosets()[c].fiber) coset_of[i] = c;

  BundleReport rep;
  // Axiom 1: in a word metric it suffices to bound adjacent pairs, and every
  // one of those distances must have converged.
  for (std::size_t i = 0; i < B.size(); ++i)
    for (const auto& l : G.letters()) {
      NormalForm y = B.element(i);
      G.right_multiply(y, l.generator, l.sign);
      auto j = B.index_of(y);
      if (!j) continue;
      const std::size_t a = coset_of[i], b = coset_of[*j];
      if (!qw.converged(a, b))
        throw ContractError("verify_bundle_axioms: distance between adjacent cosets " + std::to_string(a) + " and " +
                            std::to_string(b) + " has not converged; enlarge the margin or table radius");
      rep.K = std::max(rep.K, qw.distance(a, b));
    }
  rep.A = 0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, B.size() - 1);
  for (std::size_t s = 0; s < sample_pairs; ++s) {
    const std::size_t x = pick(rng), y = pick(rng);
    if (!qw.converged(coset_of[x], coset_of[y])) {
      ++rep.pairs_skipped;
      continue;
    }
    auto dxy = word_length(G, G.multiply(G.inverse(B.element(x)), B.element(y)), 2 * B.radius());
    const std::int64_t base = qw.distance(coset_of[x], coset_of[y]);
    ++rep.pairs_checked;
    if (base > rep.K * *dxy + rep.A) rep.violations.push_back({x, y, base, *dxy});
  }

  // Axiom 3.
  rep.spread_complete = true;
  for (std::size_t i = 0; i < qw.size(); ++i)
    for (std::size_t j = 0; j < qw.size(); ++j) {
      if (!qw.converged(i, j)) {
        rep.spread_complete = false;
        continue;
      }
      rep.fiber_spread = std::max(rep.fiber_spread, qw.distance(i, j));
    }

  // Axiom 2: H-word length by BFS over H generators restricted to the window.
  const SubgroupSpec& H = qw.subgroup();
  std::vector<NormalForm> moves;
  for (const auto& h : H.generators)
    if (!G.is_identity(h)) {
      moves.push_back(h);
      moves.push_back(G.inverse(h));
    }
  std::unordered_map<NormalForm, std::int64_t, NormalFormHash> h_length{{G.identity(), 0}};
  std::vector<NormalForm> frontier{G.identity()};
  std::size_t in_window = 0;
  for (std::size_t i = 0; i < B.size(); ++i) in_window += H.contains(B.element(i)) ? 1 : 0;
  std::size_t found = 1;
  // Stop once every element of H ∩ Ball(R) has been reached.
  for (std::int64_t layer = 1; found < in_window && !frontier.empty() && layer < 4096; ++layer) {
    std::vector<NormalForm> next;
    for (const auto& x : frontier)
      for (const auto& h : moves) {
        NormalForm y = G.multiply(x, h);
        if (h_length.emplace(y, layer).second) {
          if (B.contains(y)) ++found;
          next.push_back(std::move(y));
        }
      }
    frontier = std::move(next);
  }
  std::int64_t max_h = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> samples;  // (H-length, G-length)
  for (std::size_t i = 0; i < B.size(); ++i) {
    auto it = h_length.find(B.element(i));
    if (it == h_length.end()) continue;
    samples.emplace_back(it->second, B.length(i));
    max_h = std::max(max_h, it->second);
  }
  rep.eta_table.assign(static_cast<std::size_t>(max_h + 1), std::numeric_limits<std::int64_t>::max());
  rep.phi_table.assign(static_cast<std::size_t>(max_h + 1), 0);
  for (auto [hl, gl] : samples) {
    auto t = static_cast<std::size_t>(hl);
    rep.eta_table[t] = std::min(rep.eta_table[t], gl);
    rep.phi_table[t] = std::max(rep.phi_table[t], gl);
  }
  for (std::size_t t = rep.eta_table.size(); t-- > 1;)
    rep.eta_table[t - 1] = std::min(rep.eta_table[t - 1], rep.eta_table[t]);
  for (std::size_t t = 1; t < rep.phi_table.size(); ++t) rep.phi_table[t] = std::max(rep.phi_table[t], rep.phi_table[t - 1]);
  for (auto& v : rep.eta_table)
    if (v == std::numeric_limits<std::int64_t>::max()) v = rep.phi_table.back();

  rep.distortion.assign(static_cast<std::size_t>(B.radius() + 1), 0);
  for (auto [hl, gl] : samples)
    for (auto r = static_cast<std::size_t>(gl); r < rep.distortion.size(); ++r)
      rep.distortion[r] = std::max(rep.distortion[r], hl);
  // Superlinear when the ratio distortion(r)/r at least doubles from r/2 to r.
  const std::size_t top = rep.distortion.size() - 1;
  if (top >= 4) {
    const std::size_t half = top / 2;
    const double outer = static_cast<double>(rep.distortion[top]) / static_cast<double>(top);
    const double inner = static_cast<double>(rep.distortion[half]) / static_cast<double>(half);
    rep.distortion_superlinear = inner > 0 && outer >= 2.0 * inner;
  }

  for (std::size_t t = 0; t < rep.eta_table.size(); ++t) {
    rep.profile.eta.x.push_back(static_cast<double>(t));
    rep.profile.eta.y.push_back(static_cast<double>(rep.eta_table[t]));
    rep.profile.phi.x.push_back(static_cast<double>(t));
    rep.profile.phi.y.push_back(static_cast<double>(rep.phi_table[t]));
  }
  // Tails: continue with the last observed average slope (at least a small positive value).
  auto slope = [](const std::vector<std::int64_t>& tab) {
    if (tab.size() < 2) return 1.0;
    double s = static_cast<double>(tab.back() - tab.front()) / static_cast<double>(tab.size() - 1);
    return std::max(s, 1e-3);
  };
  rep.profile.eta.tail_slope = slope(rep.eta_table);
  rep.profile.phi.tail_slope = slope(rep.phi_table);
  return rep;
}

// ----------------------------------------------------------- finite index

FiniteIndexVerdict finite_index_check(const QuotientWindow& qw) {
  FiniteIndexVerdict v;
  v.count_schedule = qw.coset_count_schedule();
  for (std::size_t r = 0; r + 1 < v.count_schedule.size(); ++r) {
    if (v.count_schedule[r] == v.count_schedule[r + 1]) {
      v.finite = true;
      v.index = v.count_schedule[r];
      v.stabilized_at = static_cast<int>(r);
      break;
    }
  }
  v.exact = v.finite && !qw.approximate();
  if (qw.has_full_matrix()) {
    v.window_diameter = 0;
    for (std::size_t i = 0; i < qw.size(); ++i)
      for (std::size_t j = 0; j < qw.size(); ++j) v.window_diameter = std::max(v.window_diameter, qw.distance(i, j));
  }
  return v;
}

}  // namespace coarsekit
