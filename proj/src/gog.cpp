#include "coarsekit/gog.hpp"

#include <numeric>
#include <regex>

#include "coarsekit/errors.hpp"

namespace coarsekit {

std::string to_string(const Rational& q) { return q.get_str(); }

Rational parse_rational(const std::string& text) {
  static const std::regex pattern(R"(\s*(-?\d+)(?:\s*/\s*(\d+))?\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw InputError("not a rational number: '" + text + "'");
  mpz_class num(m[1].str()), den(m[2].matched ? m[2].str() : "1");
  if (den == 0) throw InputError("rational with zero denominator: '" + text + "'");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

Rational catalog_chi(const std::string& name) {
  static const std::regex call(R"((\w+)\((\d+)\))");
  if (name == "trivial") return 1;
  if (name == "Z") return 0;
  std::smatch m;
  if (std::regex_match(name, m, call)) {
    const long k = std::stol(m[2].str());
    if (m[1] == "free") return 1 - k;
    if (m[1] == "free_abelian" && k >= 1) return 0;
    if (m[1] == "surface") return 2 - 2 * k;
  }
  throw InputError("no catalog Euler characteristic for '" + name + "'");
}

Rational chi_amalgam(const Rational& a, const Rational& b, const Rational& c) { return a + b - c; }

Rational chi_hnn(const Rational& a, const Rational& c) { return a - c; }

Rational chi_finite_index(const Rational& chi_G, std::int64_t index) {
  if (index < 1) throw InputError("index must be a positive integer");
  return chi_G * Rational(static_cast<long>(index));
}

void GraphOfGroups::validate() const {
  const std::size_t n = vertices.size();
  if (n == 0) throw InputError("graph of groups has no vertices");
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) throw InputError("edge endpoint out of range");
    for (const auto& idx : {e.index_u, e.index_v})
      if (idx && *idx < 1) throw InputError("edge indices must be >= 1");
    if (reduced && e.u != e.v) {
      const bool unit_u = !e.index_u || *e.index_u == 1;
      const bool unit_v = !e.index_v || *e.index_v == 1;
      if (unit_u || unit_v) throw InputError("graph marked reduced has an index-1 edge at a non-loop endpoint");
    }
    parent[find(e.u)] = find(e.v);
  }
  for (std::size_t v = 1; v < n; ++v)
    if (find(v) != find(0)) throw InputError("graph of groups is disconnected");
}

Rational chi_graph(const GraphOfGroups& g) {
  g.validate();
  Rational chi = 0;
  for (const auto& v : g.vertices) chi += v.chi;
  for (const auto& e : g.edges) chi -= e.chi;
  return chi;
}

std::string describe(const GogShape& s) {
  if (const auto* a = std::get_if<AmalgamShape>(&s))
    return "amalgam(" + std::to_string(a->p) + "," + std::to_string(a->q) + "; c_index " + std::to_string(a->c_index) + ")";
  const auto& h = std::get<HnnShape>(s);
  return "hnn(" + std::to_string(h.p) + "; c_index " + std::to_string(h.c_index) + ")";
}

namespace {

int sign_of(const Rational& q) { return sgn(q); }

}  // namespace

GogEulerResult gogeuler_check(const Rational& chi_H, const GogShape& shape) {
  GogEulerResult r;
  Rational factor;
  std::int64_t c_index = 1;
  if (const auto* a = std::get_if<AmalgamShape>(&shape)) {
    if (a->p < 2 || a->q < 2) throw InputError("amalgam indices must be >= 2 in a reduced graph of groups");
    if (a->c_index < 1) throw InputError("[C:H] must be >= 1");
    factor = Rational(1, a->p) + Rational(1, a->q) - 1;
    c_index = a->c_index;
    r.line_case = a->p == 2 && a->q == 2;
    if (r.line_case) r.quotient = "Z2*Z2";
  } else {
    const auto& h = std::get<HnnShape>(shape);
    if (h.p < 1 || h.c_index < 1) throw InputError("HNN indices must be >= 1");
    factor = Rational(1, h.p) - 1;
    c_index = h.c_index;
    r.line_case = h.p == 1;
    if (r.line_case) r.quotient = "Z";
  }
  factor.canonicalize();
  if (sgn(chi_H) == 0) {
    r.chi_G = 0;
    return r;
  }
  r.chi_G = chi_H / Rational(static_cast<long>(c_index)) * factor;
  r.chi_G.canonicalize();
  r.ratio_sign = sign_of(r.chi_G) * sign_of(chi_H);
  return r;
}

OneRelatorChi one_relator_chi(std::int64_t n, std::int64_t m) {
  if (n < 1 || m < 1) throw InputError("one-relator chi needs n >= 1 and m >= 1");
  OneRelatorChi r;
  r.chi = Rational(1 - n) + Rational(1, m);
  r.chi.canonicalize();
  r.outside_regime = sgn(r.chi) > 0;
  return r;
}

std::string to_string(EulerCase c) {
  switch (c) {
    case EulerCase::HZero: return "chi-H-zero";
    case EulerCase::LineCase: return "line-case";
    case EulerCase::Contradiction: return "contradiction";
  }
  return "?";
}

EulerClassification eulerchar_report(const Rational& chi_G, const Rational& chi_H, const std::optional<GogShape>& shape) {
  if (sgn(chi_G) > 0)
    throw Refusal("chi(G) = " + to_string(chi_G) + " violates chi(G) <= 0", "chi_G_nonpositive",
                  "the classification assumes chi(G) <= 0");
  if (sgn(chi_H) > 0)
    throw Refusal("chi(H) = " + to_string(chi_H) + " violates chi(H) <= 0", "chi_H_nonpositive",
                  "the classification assumes chi(H) <= 0");
  EulerClassification out;
  if (shape) {
    out.shape_result = gogeuler_check(chi_H, *shape);
    out.ratio_consistent = out.shape_result->ratio_sign <= 0;
  }
  if (sgn(chi_H) == 0) {
    if (sgn(chi_G) == 0) {
      out.kind = EulerCase::HZero;
      out.detail = "chi(H) = 0, hence chi(G) = 0";
    } else {
      out.kind = EulerCase::Contradiction;
      out.detail = "chi(H) = 0 forces chi(G) = 0, but chi(G) = " + to_string(chi_G);
    }
    return out;
  }
  if (sgn(chi_G) != 0) {
    out.kind = EulerCase::Contradiction;
    out.detail = "chi(G) != 0: the hypotheses force a contradiction";
    return out;
  }
  if (out.shape_result && !out.shape_result->line_case) {
    out.kind = EulerCase::Contradiction;
    out.detail = "chi(G) = 0 with chi(H) != 0 requires a line-shaped graph of groups, got " + describe(*shape) +
                 " giving chi(G) = " + to_string(out.shape_result->chi_G);
    return out;
  }
  out.kind = EulerCase::LineCase;
  out.detail = "Bass-Serre tree is a line: G has a normal subgroup N with G/N isomorphic to " +
               (out.shape_result ? out.shape_result->quotient : std::string("Z or Z2*Z2"));
  return out;
}

EulerSignSweep euler_sign_sweep(std::int64_t max_index, std::int64_t max_c, std::int64_t min_chi) {
  EulerSignSweep s;
  auto check = [&](const Rational& chi_H, const GogShape& shape) {
    const auto r = gogeuler_check(chi_H, shape);
    ++s.cases;
    if (r.ratio_sign > 0) ++s.sign_violations;
    if ((sgn(r.chi_G) == 0) != r.line_case) ++s.zero_mismatches;
    // One-edge graph with chi(C) = chi(H)/[C:H], chi(A) = chi(C)/[A:C], chi(B) = chi(C)/[B:C].
    GraphOfGroups g;
    std::visit(
        [&](const auto& sh) {
          const Rational chi_C = chi_H / Rational(static_cast<long>(sh.c_index));
          using T = std::decay_t<decltype(sh)>;
          if constexpr (std::is_same_v<T, AmalgamShape>) {
            g.vertices = {{"A", chi_C / Rational(static_cast<long>(sh.p))}, {"B", chi_C / Rational(static_cast<long>(sh.q))}};
            g.edges = {{0, 1, chi_C, sh.p, sh.q}};
          } else {
            g.vertices = {{"A", chi_C / Rational(static_cast<long>(sh.p))}};
            g.edges = {{0, 0, chi_C, sh.p, std::int64_t{1}}};
          }
        },
        shape);
    if (chi_graph(g) != r.chi_G) ++s.one_edge_mismatches;
  };
  for (std::int64_t chi = min_chi; chi <= -1; ++chi)
    for (std::int64_t c = 1; c <= max_c; ++c) {
      for (std::int64_t p = 2; p <= max_index; ++p)
        for (std::int64_t q = 2; q <= max_index; ++q) check(Rational(static_cast<long>(chi)), AmalgamShape{p, q, c});
      for (std::int64_t p = 1; p <= max_index; ++p) check(Rational(static_cast<long>(chi)), HnnShape{p, c});
    }
  return s;
}

OneRelatorSweep one_relator_sweep(std::int64_t max_n, std::int64_t max_m) {
  OneRelatorSweep s;
  for (std::int64_t n = 1; n <= max_n; ++n)
    for (std::int64_t m = 1; m <= max_m; ++m) {
      const auto r = one_relator_chi(n, m);
      if (r.outside_regime) s.flagged.push_back({n, m});
      else if (n >= 2 && sgn(r.chi) == 0) s.zero_locus.push_back({n, m});
    }
  return s;
}

}  // namespace coarsekit
