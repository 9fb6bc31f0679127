#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace coarsekit {

using Rational = mpq_class;

std::string to_string(const Rational& q);  // "1/6", "-2", "0"
Rational parse_rational(const std::string& text);  // "1/6", "-2"

// Catalog values: "trivial" 1, "Z" 0, "free(r)" 1 - r, "free_abelian(n)" 0
// (n >= 1), "surface(g)" 2 - 2g. InputError otherwise.
Rational catalog_chi(const std::string& name);

Rational chi_amalgam(const Rational& a, const Rational& b, const Rational& c);  // a + b - c
Rational chi_hnn(const Rational& a, const Rational& c);                         // a - c
// chi of an index-`index` subgroup: chi_G * index. InputError unless index >= 1.
Rational chi_finite_index(const Rational& chi_G, std::int64_t index);

struct GraphOfGroups {
  struct Vertex {
    std::string label;
    Rational chi;
  };
  struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    Rational chi;
    // [A:C] into each endpoint; nullopt means the edge group equals the vertex group.
    std::optional<std::int64_t> index_u;
    std::optional<std::int64_t> index_v;
  };
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  bool reduced = false;

  // InputError on bad endpoints, indices < 1, disconnection, or a reduced
  // flag contradicted by an index-1 edge at a non-loop endpoint.
  void validate() const;
};

// Sum of vertex chi minus sum of edge chi.
Rational chi_graph(const GraphOfGroups& g);

struct AmalgamShape {
  std::int64_t p = 2;        // [A:C]
  std::int64_t q = 2;        // [B:C]
  std::int64_t c_index = 1;  // [C:H]
};
struct HnnShape {
  std::int64_t p = 1;  // [A:C]
  std::int64_t c_index = 1;
};
using GogShape = std::variant<AmalgamShape, HnnShape>;
std::string describe(const GogShape& s);

struct GogEulerResult {
  Rational chi_G;
  int ratio_sign = 0;      // sign of chi(G) / chi(H); 0 when either vanishes
  bool line_case = false;  // (2,2) amalgam or HNN with C = A
  std::string quotient;    // "Z2*Z2" or "Z" in the line case
};

// chi(G) = chi(H) / [C:H] * (1/p + 1/q - 1) for amalgams, (1/p - 1) for HNN.
// InputError for amalgam indices < 2 (not reduced) or other indices < 1.
GogEulerResult gogeuler_check(const Rational& chi_H, const GogShape& shape);

struct OneRelatorChi {
  Rational chi;
  bool outside_regime = false;  // chi > 0
};
// 1 - n + 1/m; InputError unless n, m >= 1.
OneRelatorChi one_relator_chi(std::int64_t n, std::int64_t m);

enum class EulerCase { HZero, LineCase, Contradiction };
std::string to_string(EulerCase c);

struct EulerClassification {
  EulerCase kind = EulerCase::Contradiction;
  std::string detail;
  std::optional<GogEulerResult> shape_result;
  bool ratio_consistent = true;  // chi(G)/chi(H) <= 0 where defined
};

// Requires chi_G <= 0 and chi_H <= 0 (Refusal naming the failed inequality).
EulerClassification eulerchar_report(const Rational& chi_G, const Rational& chi_H,
                                     const std::optional<GogShape>& shape = std::nullopt);

struct EulerSignSweep {
  std::size_t cases = 0;
  std::size_t sign_violations = 0;      // chi(G)/chi(H) > 0
  std::size_t zero_mismatches = 0;      // chi(G) = 0 away from the line cases or vice versa
  std::size_t one_edge_mismatches = 0;  // chi_graph disagrees with the shape formula
};
// Amalgams p, q in [2, max_index], HNN p in [1, max_index], c_index in
// [1, max_c], chi_H in [min_chi, -1].
EulerSignSweep euler_sign_sweep(std::int64_t max_index = 6, std::int64_t max_c = 4, std::int64_t min_chi = -3);

struct OneRelatorSweep {
  std::vector<std::pair<std::int64_t, std::int64_t>> zero_locus;   // (n, m) with chi = 0, n >= 2
  std::vector<std::pair<std::int64_t, std::int64_t>> flagged;      // outside the chi <= 0 regime
};
OneRelatorSweep one_relator_sweep(std::int64_t max_n = 20, std::int64_t max_m = 20);

}  // namespace coarsekit
