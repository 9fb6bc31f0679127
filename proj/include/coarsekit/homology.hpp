#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coarsekit/complexes.hpp"

namespace coarsekit {

using BigMatrix = std::vector<std::vector<mpz_class>>;

BigMatrix to_big(const SparseMatrix& m);

struct SNFResult {
  std::vector<mpz_class> diagonal;  // min(rows, cols) entries, divisibility chain, zeros last
  std::size_t rank = 0;
  std::optional<BigMatrix> U;  // U * M * V = diag, U and V unimodular
  std::optional<BigMatrix> V;
};

// Dense Smith normal form with smallest-magnitude pivoting.
SNFResult smith_normal_form(const BigMatrix& m, bool transforms = false);
// Sparse input: unit pivots are eliminated first, the remaining block goes
// through the dense algorithm. Transforms force the dense path.
SNFResult smith_normal_form(const SparseMatrix& m, bool transforms = false);

// Rank of an integer matrix over the given ring plus (over Z) its invariant
// factors larger than one.
struct MatrixInvariants {
  std::size_t rank = 0;
  std::vector<mpz_class> torsion;
};
MatrixInvariants matrix_invariants(const SparseMatrix& m, RingSpec ring);

// Free rank plus invariant factors d1 | d2 | ... (all > 1); no torsion over fields.
struct HomologyGroup {
  std::size_t free_rank = 0;
  std::vector<mpz_class> torsion;

  bool is_zero() const { return free_rank == 0 && torsion.empty(); }
  std::string to_string() const;  // "Z^2 + Z/2 + Z/4", "0"
  bool operator==(const HomologyGroup& other) const;
};

// Invariant factors of the cyclic sum of the given orders (entries 1 dropped).
std::vector<mpz_class> normalize_torsion(std::vector<mpz_class> orders);
HomologyGroup direct_sum(const HomologyGroup& a, const HomologyGroup& b);

// Homology in degrees 0..top. A complex over Z may be read over any ring;
// otherwise the rings must agree (ContractError).
std::vector<HomologyGroup> homology(const ProperChainComplex& c, RingSpec ring);
// Cohomology of the compact dual, after relative_collar_complex when a
// collar width is given.
std::vector<HomologyGroup> cohomology_c(const ProperChainComplex& c, RingSpec ring,
                                        std::optional<double> collar = std::nullopt);

// (A (x) B, Tor_1(A, B)); over a field Tor vanishes and ranks multiply.
std::pair<HomologyGroup, HomologyGroup> tensor_and_tor(const HomologyGroup& a, const HomologyGroup& b, RingSpec ring);

struct DegreeVerdict {
  int degree = 0;
  HomologyGroup lhs;  // computed directly
  HomologyGroup rhs;  // assembled from the split short exact sequence
  bool equal = false;
};

struct CheckReport {
  std::vector<DegreeVerdict> degrees;
  bool passed() const;
};

// H_k(C (x) D) against sum_{i+j=k} H_i(C) (x) H_j(D) + sum_{i+j=k-1} Tor(H_i(C), H_j(D)).
CheckReport kunneth_check(const ProperChainComplex& C, const ProperChainComplex& D, RingSpec ring);
// H^k_c(C; F) against H^k_c(C; Z) (x) F + Tor(H^{k+1}_c(C; Z), F) for F = Q or Z/p.
CheckReport uct_check(const ProperChainComplex& C, RingSpec target);

// ------------------------------------------------------- exhaustive family

// All complexes in degrees 0..2 with ranks <= max_rank and boundary entries
// in [-entry_bound, entry_bound] satisfying d∘d = 0, in lexicographic order
// of (ranks, entries).
std::vector<ProperChainComplex> exhaustive_family(std::size_t max_rank = 2, std::int64_t entry_bound = 2);

struct FamilyFailure {
  std::size_t left = 0;   // family indices
  std::size_t right = 0;  // equals left for single-complex checks
  std::string ring;
  CheckReport report;
};

struct SweepReport {
  std::string check;
  std::vector<std::string> rings;
  std::size_t family_size = 0;
  std::size_t cases = 0;  // (pair or complex, ring) combinations checked
  std::size_t failures = 0;
  std::vector<FamilyFailure> examples;  // first few failures
  std::uint64_t seed = 0;
};

// Kunneth over Z, Q, Z/2, Z/3 on every pair (C, D) with one member from the
// rank <= 1 sub-family (both orders), plus `random_pairs` seeded pairs from
// the whole family.
SweepReport kunneth_sweep(std::uint64_t seed, std::size_t random_pairs = 20000);
// UCT for targets Q, Z/2, Z/3 on every member of the family.
SweepReport uct_sweep();

}  // namespace coarsekit
