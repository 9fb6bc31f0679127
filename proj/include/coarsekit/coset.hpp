#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coarsekit/ball.hpp"
#include "coarsekit/group.hpp"

namespace coarsekit {

// Canonical keys for left cosets gH.
class CosetOracle {
 public:
  virtual ~CosetOracle() = default;
  // key(g) == key(g') iff gH == g'H. Approximate oracles throw WindowError
  // outside the ball they were built on.
  virtual NormalForm key(const NormalForm& g) const = 0;
  virtual bool exact() const { return true; }
  virtual std::string kind() const = 0;
};

struct SubgroupSpec {
  MarkedGroup owner;
  std::vector<NormalForm> generators;
  std::shared_ptr<const CosetOracle> oracle;

  bool exact() const { return oracle->exact(); }
  NormalForm key(const NormalForm& g) const { return oracle->key(g); }
  bool contains(const NormalForm& h) const;
  std::string describe() const;  // "<a, t^2>"
};

// Picks an exact coset oracle when the pair is one the library can decide
// (trivial or whole subgroup, sublattices of Z^n, subgroups of <a> in
// BS(m,n), subgroups of a free group generated by basis letters, products of
// such factor subgroups, a free factor of a free product, cyclic subgroups of
// the triangle group). Otherwise falls back to union-find over
// Ball(fallback_radius), flagged approximate.
SubgroupSpec make_subgroup(const MarkedGroup& group, std::vector<NormalForm> generators, int fallback_radius = 8,
                           std::size_t node_budget = kDefaultNodeBudget);
SubgroupSpec make_subgroup(const MarkedGroup& group, const std::vector<std::string>& generator_words,
                           int fallback_radius = 8, std::size_t node_budget = kDefaultNodeBudget);

// ------------------------------------------------------------- distortion

// Nondecreasing function given by a piecewise-linear table through
// (x[i], y[i]) and an affine tail of slope `tail_slope` beyond the last point.
struct MonotoneTable {
  std::vector<double> x;
  std::vector<double> y;
  double tail_slope = 0.0;

  double operator()(double t) const;
  // Throws ContractError unless x strictly increases, y is nondecreasing and
  // the table is proper (unbounded).
  void validate() const;
};

struct DistortionProfile {
  MonotoneTable eta;  // lower control: eta(d_H) <= d_G
  MonotoneTable phi;  // upper control: d_G <= phi(d_H)
};

// sup { x >= 0 : phi(x) <= R }; 0 when R < phi(0).
double proper_inverse(const MonotoneTable& phi, double R);

// --------------------------------------------------------- Hausdorff distance

struct DistanceEstimate {
  std::int64_t value = 0;    // estimate at the base window
  std::int64_t enlarged = 0;  // estimate at the enlarged window
  bool converged = false;
  bool exceeds_cap = false;   // some point had no partner within the search cap
};

using Membership = std::function<bool(const NormalForm&)>;

// Hausdorff distance between A and B (membership predicates) using the
// points of each set inside Ball(radius); recomputed with Ball(radius+margin)
// to decide convergence. Nearest partners are searched up to `search_cap`.
// Throws WindowError when A or B has no point in Ball(radius).
DistanceEstimate hausdorff_distance(const MarkedGroup& group, const Membership& A, const Membership& B, int radius,
                                    int margin, int search_cap = 16, std::size_t node_budget = kDefaultNodeBudget);

// Finite element sets inside a window ball.
DistanceEstimate hausdorff_distance(const std::vector<NormalForm>& A, const std::vector<NormalForm>& B,
                                    const Ball& window, int margin, int search_cap = 16);

// ---------------------------------------------------------- quotient window

struct QuotientParams {
  int radius = 6;
  // Stabilization margin; 0 selects the per-pair rule min(max(3*estimate,1), margin_cap).
  int margin = 0;
  int margin_cap = 4;
  // Pairs at distance <= neighbor_scale are always recorded as neighbors.
  int neighbor_scale = 2;
  // Full distance matrix is computed when the window has at most this many cosets.
  std::size_t full_matrix_limit = 400;
  // Radius of the ball used to find the shortest element of a coset; 0 means
  // radius + margin. Distances beyond it are reported unconverged.
  int table_radius = 0;
  std::size_t node_budget = kDefaultNodeBudget;
};

struct Coset {
  NormalForm key;
  NormalForm representative;   // shortlex-first element of the coset in Ball(R)
  int min_length = 0;          // word length of the representative
  std::vector<std::size_t> fiber;  // ball indices of D_b ∩ Ball(R)
};

struct CosetNeighbor {
  std::size_t index;
  std::int64_t distance;
  bool converged;
};

class QuotientWindow {
 public:
  const MarkedGroup& group() const { return group_; }
  const SubgroupSpec& subgroup() const { return subgroup_; }
  int radius() const { return params_.radius; }
  const QuotientParams& params() const { return params_; }
  const Ball& window() const { return ball_; }
  const std::vector<Coset>& cosets() const { return cosets_; }
  std::size_t size() const { return cosets_.size(); }
  bool approximate() const { return !subgroup_.exact(); }

  bool has_full_matrix() const { return !distance_.empty(); }
  std::int64_t distance(std::size_t i, std::size_t j) const { return distance_[i][j]; }
  bool converged(std::size_t i, std::size_t j) const { return converged_[i][j] != 0; }
  bool all_converged() const;
  const std::vector<CosetNeighbor>& neighbors(std::size_t i) const { return neighbors_[i]; }
  std::optional<std::size_t> find(const NormalForm& key) const;

  // Cosets met by Ball(r) for r = 0..radius.
  const std::vector<std::size_t>& coset_count_schedule() const { return count_schedule_; }

  friend QuotientWindow quotient_window(const MarkedGroup&, const SubgroupSpec&, const QuotientParams&);

 private:
  MarkedGroup group_;
  SubgroupSpec subgroup_;
  QuotientParams params_;
  Ball ball_;
  std::vector<Coset> cosets_;
  std::vector<std::vector<std::int64_t>> distance_;
  std::vector<std::vector<char>> converged_;
  std::vector<std::vector<CosetNeighbor>> neighbors_;
  std::vector<std::size_t> count_schedule_;
};

// Cosets met by Ball(R) in order of first appearance, with Hausdorff
// distances. The fiber gH is sampled as {g h : |h| <= S} for S = R and
// S = R + margin; a pair is converged when the two estimates agree.
// Throws ContractError unless R >= 1, ResourceError when a ball exceeds the
// node budget.
QuotientWindow quotient_window(const MarkedGroup& group, const SubgroupSpec& subgroup, const QuotientParams& params);

// --------------------------------------------------------- commensuration

enum class CommensurationVerdict { ExactFinite, WindowFinite, NoBoundUpToRadius };
std::string to_string(CommensurationVerdict v);

struct CommensurationCertificate {
  NormalForm conjugator;
  std::string conjugator_word;
  // Size of the <H>-orbit of gH, i.e. [H : H ∩ gHg^-1], as far as explored.
  std::size_t index_lower_bound = 0;
  std::optional<std::size_t> index;  // set when the orbit closed
  CommensurationVerdict verdict = CommensurationVerdict::NoBoundUpToRadius;
  int radius = 0;
  bool finite() const { return verdict != CommensurationVerdict::NoBoundUpToRadius; }
};

// Explores the orbit of gH under left multiplication by H through `radius`
// layers of H-words. Throws ContractError if |g| > radius.
CommensurationCertificate commensuration_witness(const MarkedGroup& group, const SubgroupSpec& subgroup,
                                                 const NormalForm& g, int radius);

// Certificates for every generator and inverse generator of G.
std::vector<CommensurationCertificate> almost_normality_certificates(const MarkedGroup& group,
                                                                     const SubgroupSpec& subgroup, int radius);

// ----------------------------------------------------------- bundle checks

struct BundleViolation {
  std::size_t x;  // ball indices
  std::size_t y;
  std::int64_t base_distance;   // d(p(x), p(y))
  std::int64_t total_distance;  // d(x, y)
};

struct BundleReport {
  // Axiom 1: d(p(x), p(y)) <= K d(x, y) + A.
  std::int64_t K = 0;
  std::int64_t A = 0;
  // Axiom 3: d_Haus(D_b, D_b') <= K3 d(b, b') + E. The quotient metric is the
  // Hausdorff distance of fibers, so K3 = 1, E = 0; `fiber_spread` is the
  // largest pairwise fiber distance in the window.
  std::int64_t K3 = 1;
  std::int64_t E = 0;
  std::int64_t fiber_spread = 0;  // over converged pairs
  bool spread_complete = false;    // every pair converged
  // Axiom 2: fibers are left translates of H, so one profile controls all of
  // them. Tables are indexed by H-word length t = 0..max observed.
  DistortionProfile profile;
  std::vector<std::int64_t> eta_table;   // min G-length with H-length >= t
  std::vector<std::int64_t> phi_table;   // max G-length with H-length <= t
  // distortion[r] = largest H-length of an element of H with G-length <= r.
  std::vector<std::int64_t> distortion;
  bool distortion_superlinear = false;
  std::size_t pairs_checked = 0;
  std::size_t pairs_skipped = 0;  // sampled pairs with unconverged distance
  std::vector<BundleViolation> violations;
};

// Requires a full distance matrix whose adjacent-coset entries converged
// (ContractError otherwise); sampled pairs with unconverged distance are skipped.
BundleReport verify_bundle_axioms(const QuotientWindow& qw, std::size_t sample_pairs = 2000, std::uint64_t seed = 1);

// ----------------------------------------------------------- finite index

struct FiniteIndexVerdict {
  bool finite = false;
  std::optional<std::size_t> index;          // coset count once it stabilized
  bool exact = false;                        // index from an exact oracle
  std::vector<std::size_t> count_schedule;   // cosets met by Ball(r)
  std::int64_t window_diameter = -1;         // largest pairwise distance, if known
  int stabilized_at = -1;
};

// If the cosets met by Ball(r) and Ball(r+1) coincide they are closed under
// left multiplication by generators, hence are all of G/H.
FiniteIndexVerdict finite_index_check(const QuotientWindow& qw);

}  // namespace coarsekit
