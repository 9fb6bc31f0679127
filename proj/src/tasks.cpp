#include "coarsekit/tasks.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include "coarsekit/ball.hpp"
#include "coarsekit/catalog.hpp"
#include "coarsekit/complexes.hpp"
#include "coarsekit/coset.hpp"
#include "coarsekit/ends.hpp"
#include "coarsekit/errors.hpp"
#include "coarsekit/gog.hpp"
#include "coarsekit/homology.hpp"

namespace coarsekit {

namespace {

using json = nlohmann::json;

// Invalid config: wrong type, unknown key, missing field, value out of range.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// ------------------------------------------------------------ config access

// Read-only view of one JSON object that records which keys were consumed,
// so leftovers can be rejected as unknown.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object() && !j_.is_null()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ConfigError(path(key) + ": required");
    return j_.at(key);
  }

  void allow(const std::string& key) { used_.insert(key); }

  Section child(const std::string& key) {
    used_.insert(key);
    static const json kNull;
    return Section(has(key) ? j_.at(key) : kNull, path(key));
  }

  std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t lo, std::int64_t hi) {
    used_.insert(key);
    if (!has(key)) return def;
    return checked_integer(j_.at(key), path(key), lo, hi);
  }
  std::int64_t require_integer(const std::string& key, std::int64_t lo, std::int64_t hi) {
    return checked_integer(raw(key), path(key), lo, hi);
  }

  double number(const std::string& key, double def, double lo, double hi) {
    used_.insert(key);
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    const double x = v.get<double>();
    if (!(x >= lo && x <= hi)) throw ConfigError(path(key) + ": must lie in [" + fmt(lo) + ", " + fmt(hi) + "]");
    return x;
  }

  bool boolean(const std::string& key, bool def) {
    used_.insert(key);
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) throw ConfigError(path(key) + ": expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    used_.insert(key);
    if (!has(key)) return def;
    return checked_string(j_.at(key), path(key));
  }
  std::string require_string(const std::string& key) { return checked_string(raw(key), path(key)); }

  std::vector<int> int_list(const std::string& key, std::vector<int> def, int lo, int hi) {
    used_.insert(key);
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(path(key) + ": expected a non-empty array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(static_cast<int>(checked_integer(v[i], path(key) + "[" + std::to_string(i) + "]", lo, hi)));
    return out;
  }

  std::vector<std::string> string_list(const std::string& key, std::vector<std::string> def) {
    used_.insert(key);
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(path(key) + ": expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(checked_string(v[i], path(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  // Throws on keys that were never read.
  void finish() const {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!it.value().is_null() && !used_.count(it.key())) throw ConfigError(path(it.key()) + ": unknown key");
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

 private:
  static std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }
  static std::int64_t checked_integer(const json& v, const std::string& where, std::int64_t lo, std::int64_t hi) {
    if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
    std::int64_t x;
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        throw ConfigError(where + ": out of range");
      x = static_cast<std::int64_t>(u);
    } else {
      x = v.get<std::int64_t>();
    }
    if (x < lo || x > hi)
      throw ConfigError(where + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }
  static std::string checked_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where + ": expected a string");
    return v.get<std::string>();
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

// Documented parameter ranges.
constexpr std::int64_t kMaxBudget = 50'000'000;
constexpr std::int64_t kMaxBallRadius = 64;
constexpr std::int64_t kMaxQuotientRadius = 40;
constexpr std::int64_t kMaxWindowRadius = 400;
constexpr int kMaxScale = 16;

struct Context {
  json config;  // effective config, output section removed
  std::string task;
  std::uint64_t seed = 1;
  std::optional<std::size_t> budget;
  json partial;  // filled by tasks that can report progress before a budget error
};

std::size_t node_budget(const Context& ctx) { return ctx.budget.value_or(kDefaultNodeBudget); }

// ------------------------------------------------------------- serializers

json big(const mpz_class& z) { return z.get_str(); }

json to_json(const HomologyGroup& h) {
  json t = json::array();
  for (const auto& d : h.torsion) t.push_back(big(d));
  return {{"free_rank", h.free_rank}, {"torsion", t}, {"text", h.to_string()}};
}

json to_json(const std::vector<HomologyGroup>& hs) {
  json out = json::array();
  for (const auto& h : hs) out.push_back(to_json(h));
  return out;
}

json to_json(const CheckReport& r) {
  json degrees = json::array();
  for (const auto& d : r.degrees)
    degrees.push_back({{"degree", d.degree}, {"lhs", to_json(d.lhs)}, {"rhs", to_json(d.rhs)}, {"equal", d.equal}});
  return {{"passed", r.passed()}, {"degrees", degrees}};
}

json to_json(const SweepReport& s) {
  json examples = json::array();
  for (const auto& f : s.examples)
    examples.push_back({{"left", f.left}, {"right", f.right}, {"ring", f.ring}, {"report", to_json(f.report)}});
  return {{"check", s.check},       {"rings", s.rings},         {"family_size", s.family_size},
          {"cases", s.cases},       {"failures", s.failures},   {"failure_examples", examples},
          {"seed", s.seed},         {"passed", s.failures == 0}};
}

json to_json(const EndsReport& e) {
  json schedule = json::array();
  for (const auto& en : e.schedule) schedule.push_back({{"r", en.r}, {"count", en.count}, {"reliable", en.reliable}});
  return {{"schedule", schedule},
          {"verdict", to_string(e.verdict)},
          {"value", e.value},
          {"monotone", e.monotone},
          {"boundary_distance", e.boundary_distance},
          {"summary", e.describe()}};
}

json to_json(const CommensurationCertificate& c) {
  json j = {{"conjugator", c.conjugator_word},
            {"index_lower_bound", c.index_lower_bound},
            {"verdict", to_string(c.verdict)},
            {"radius", c.radius},
            {"finite", c.finite()}};
  j["index"] = c.index ? json(*c.index) : json(nullptr);
  return j;
}

json to_json(const FiniteIndexVerdict& f) {
  return {{"finite", f.finite},
          {"index", f.index ? json(*f.index) : json(nullptr)},
          {"exact", f.exact},
          {"count_schedule", f.count_schedule},
          {"window_diameter", f.window_diameter},
          {"stabilized_at", f.stabilized_at}};
}

json to_json(const GraphWindow& g) {
  std::size_t boundary = 0;
  for (char b : g.boundary) boundary += b != 0;
  return {{"source", g.source},
          {"vertices", g.size()},
          {"edges", g.edge_count()},
          {"boundary_vertices", boundary},
          {"base", g.labels.empty() ? json(nullptr) : json(g.labels[g.base])}};
}

json to_json(const GogEulerResult& r) {
  return {{"chi_G", to_string(r.chi_G)}, {"ratio_sign", r.ratio_sign}, {"line_case", r.line_case}, {"quotient", r.quotient}};
}

// ---------------------------------------------------------------- builders

MarkedGroup group_from(Section& top) {
  return parse_group(top.require_string("group"));
}

SubgroupSpec subgroup_from(const MarkedGroup& g, Section& top, std::size_t budget) {
  const auto words = top.string_list("subgroup", {});
  return make_subgroup(g, words, 8, budget);
}

QuotientParams quotient_params(Section& p, std::size_t budget, int default_radius) {
  QuotientParams q;
  q.radius = static_cast<int>(p.integer("radius", default_radius, 1, kMaxQuotientRadius));
  q.margin = static_cast<int>(p.integer("margin", q.margin, 0, 16));
  q.margin_cap = static_cast<int>(p.integer("margin_cap", q.margin_cap, 1, 16));
  q.neighbor_scale = static_cast<int>(p.integer("neighbor_scale", q.neighbor_scale, 1, kMaxScale));
  q.full_matrix_limit = static_cast<std::size_t>(p.integer("full_matrix_limit", static_cast<std::int64_t>(q.full_matrix_limit), 0, 5000));
  q.table_radius = static_cast<int>(p.integer("table_radius", q.table_radius, 0, 2 * kMaxQuotientRadius));
  q.node_budget = budget;
  return q;
}

// Graph windows shared by the ends and homology tasks.
struct WindowBuild {
  GraphWindow graph;
  std::optional<QuotientWindow> quotient;
};

WindowBuild graph_window_from(Section w, Context& ctx, Section& top) {
  const std::string kind = w.require_string("kind");
  WindowBuild out;
  if (kind == "path") {
    out.graph = path_window(static_cast<int>(w.require_integer("radius", 1, kMaxWindowRadius)));
  } else if (kind == "grid") {
    out.graph = grid_window(static_cast<int>(w.require_integer("radius", 1, kMaxWindowRadius)));
  } else if (kind == "tree") {
    const int degree = static_cast<int>(w.integer("degree", 3, 2, 16));
    const int radius = static_cast<int>(w.require_integer("radius", 1, kMaxWindowRadius));
    out.graph = tree_window(degree, radius, ctx.budget.value_or(4'000'000));
  } else if (kind == "cayley") {
    const auto g = group_from(top);
    out.graph = cayley_ball_window(g, static_cast<int>(w.require_integer("radius", 1, kMaxBallRadius)), node_budget(ctx));
  } else if (kind == "quotient") {
    const auto g = group_from(top);
    const auto h = subgroup_from(g, top, node_budget(ctx));
    Section qp = w.child("quotient");
    const auto params = quotient_params(qp, node_budget(ctx), 10);
    qp.finish();
    const int scale = static_cast<int>(w.integer("scale", 1, 1, kMaxScale));
    out.quotient = quotient_window(g, h, params);
    out.graph = quotient_graph_window(*out.quotient, scale);
  } else if (kind == "explicit") {
    const auto labels = w.string_list("labels", {});
    const json& edges = w.raw("edges");
    if (!edges.is_array()) throw ConfigError(w.path("edges") + ": expected an array of pairs");
    std::vector<std::pair<std::size_t, std::size_t>> e;
    std::size_t n = labels.size();
    for (const auto& pr : edges) {
      if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number_unsigned() || !pr[1].is_number_unsigned())
        throw ConfigError(w.path("edges") + ": expected pairs of vertex indices");
      e.emplace_back(pr[0].get<std::size_t>(), pr[1].get<std::size_t>());
      n = std::max({n, e.back().first + 1, e.back().second + 1});
    }
    std::vector<std::string> names = labels;
    if (names.empty())
      for (std::size_t i = 0; i < n; ++i) names.push_back(std::to_string(i));
    if (names.size() != n) throw ConfigError(w.path("labels") + ": fewer labels than vertices");
    std::vector<char> boundary;
    if (w.has("boundary")) {
      boundary.assign(n, 0);
      for (int v : w.int_list("boundary", {}, 0, static_cast<int>(n) - 1)) boundary[static_cast<std::size_t>(v)] = 1;
    }
    const auto base = static_cast<std::size_t>(w.integer("base", 0, 0, static_cast<std::int64_t>(n) - 1));
    out.graph = explicit_window(names, e, boundary, base);
  } else {
    throw ConfigError(w.path("kind") + ": unknown window kind '" + kind + "'");
  }
  w.finish();
  return out;
}

ProperChainComplex complex_from(Section c, Context& ctx, Section& top) {
  const std::string kind = c.require_string("kind");
  ProperChainComplex out;
  if (kind == "algebraic") {
    std::vector<std::size_t> ranks;
    for (int r : c.int_list("ranks", {}, 0, 10000)) ranks.push_back(static_cast<std::size_t>(r));
    if (ranks.empty()) throw ConfigError(c.path("ranks") + ": required");
    const json& bs = c.raw("boundaries");
    if (!bs.is_array() || bs.size() + 1 != ranks.size())
      throw ConfigError(c.path("boundaries") + ": expected one matrix per degree 1..n");
    std::vector<SparseMatrix> mats;
    for (std::size_t k = 0; k < bs.size(); ++k) {
      const json& m = bs[k];
      const std::string where = c.path("boundaries") + "[" + std::to_string(k) + "]";
      if (!m.is_array() || m.size() != ranks[k]) throw ConfigError(where + ": expected " + std::to_string(ranks[k]) + " rows");
      std::vector<std::vector<std::int64_t>> rows;
      for (const auto& row : m) {
        if (!row.is_array() || row.size() != ranks[k + 1])
          throw ConfigError(where + ": expected rows of length " + std::to_string(ranks[k + 1]));
        std::vector<std::int64_t> r;
        for (const auto& x : row) {
          if (!x.is_number_integer()) throw ConfigError(where + ": entries must be integers");
          r.push_back(x.get<std::int64_t>());
        }
        rows.push_back(std::move(r));
      }
      mats.push_back(SparseMatrix::from_dense(rows, ranks[k + 1]));
    }
    out = algebraic_complex(ranks, mats);
  } else if (kind == "rips") {
    Section w = c.child("window");
    const double scale = c.number("scale", 1.0, 0.0, 64.0);
    const int dim_cap = static_cast<int>(c.integer("dim_cap", 2, 0, 4));
    const std::size_t max_cells = ctx.budget.value_or(2'000'000);
    const std::string wk = w.require_string("kind");
    std::shared_ptr<const MetricWindow> mw;
    if (wk == "integers") {
      const auto lo = w.require_integer("lo", -100000, 100000);
      const auto hi = w.require_integer("hi", lo, 100000);
      w.finish();
      mw = integer_window(lo, hi);
    } else if (wk == "points") {
      const json& pts = w.raw("points");
      if (!pts.is_array() || pts.empty()) throw ConfigError(w.path("points") + ": expected a non-empty array");
      std::vector<std::int64_t> p;
      for (const auto& x : pts) {
        if (!x.is_number_integer()) throw ConfigError(w.path("points") + ": entries must be integers");
        p.push_back(x.get<std::int64_t>());
      }
      w.finish();
      mw = integer_points_window(p);
    } else {
      const auto built = graph_window_from(w, ctx, top);
      mw = built.quotient ? quotient_metric_window(*built.quotient) : graph_metric_window(built.graph);
    }
    out = rips_complex(mw, scale, dim_cap, max_cells);
  } else if (kind == "family") {
    static const std::vector<ProperChainComplex> family = exhaustive_family();
    const auto i = c.require_integer("index", 0, static_cast<std::int64_t>(family.size()) - 1);
    out = family[static_cast<std::size_t>(i)];
  } else if (kind == "cycle") {
    // Simplicial circle with n vertices and n edges.
    const auto n = static_cast<std::size_t>(c.require_integer("n", 3, 10000));
    SparseMatrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      d.add((i + 1) % n, i, 1);
      d.add(i, i, -1);
    }
    out = algebraic_complex({n, n}, {d});
  } else if (kind == "multiplication") {
    // Z --k--> Z in degrees 1 -> 0.
    const auto k = c.require_integer("factor", -1'000'000, 1'000'000);
    SparseMatrix d(1, 1);
    d.add(0, 0, k);
    out = algebraic_complex({1, 1}, {d});
  } else {
    throw ConfigError(c.path("kind") + ": unknown complex kind '" + kind + "'");
  }
  c.finish();
  return out;
}

std::vector<RingSpec> rings_from(Section& p, const std::string& key, std::vector<std::string> def) {
  std::vector<RingSpec> out;
  for (const auto& name : p.string_list(key, std::move(def))) out.push_back(RingSpec::parse(name));
  if (out.empty()) throw ConfigError(p.path(key) + ": expected at least one ring");
  return out;
}

// ------------------------------------------------------------------- tasks

json task_ball(Context& ctx, Section& top, Section& p) {
  const auto g = group_from(top);
  const int radius = static_cast<int>(p.integer("radius", 3, 0, kMaxBallRadius));
  const auto list_limit = static_cast<std::size_t>(p.integer("list_limit", 1000, 0, 1'000'000));
  p.finish();
  auto describe = [&](const Ball& b) {
    json spheres = json::array();
    json growth = json::array();
    for (int r = 0; r <= b.radius(); ++r) {
      spheres.push_back(b.sphere_size(r));
      growth.push_back(b.count_within(r));
    }
    json j = {{"group", g->id()},
              {"generators", g->generator_names()},
              {"radius", b.radius()},
              {"size", b.size()},
              {"sphere_sizes", spheres},
              {"growth", growth}};
    if (b.size() <= list_limit) {
      json elements = json::array();
      for (std::size_t i = 0; i < b.size(); ++i) {
        const std::string w = g->format_word(b.shortlex_word(i));
        elements.push_back({{"word", w.empty() ? "e" : w}, {"length", b.length(i)}});
      }
      j["elements"] = elements;
    } else {
      j["elements"] = nullptr;
    }
    return j;
  };
  try {
    return describe(ball(g, radius, node_budget(ctx)));
  } catch (const ResourceError&) {
    ctx.partial = describe(ball_within_budget(g, radius, node_budget(ctx)));
    ctx.partial["requested_radius"] = radius;
    throw;
  }
}

json task_quotient(Context& ctx, Section& top, Section& p) {
  const auto g = group_from(top);
  const auto h = subgroup_from(g, top, node_budget(ctx));
  const auto params = quotient_params(p, node_budget(ctx), 6);
  const bool bundle = p.boolean("bundle", false);
  const auto sample_pairs = static_cast<std::size_t>(p.integer("sample_pairs", 2000, 1, 1'000'000));
  const int cert_radius = static_cast<int>(p.integer("certificate_radius", 0, 0, 12));
  p.finish();

  const auto qw = quotient_window(g, h, params);
  json cosets = json::array();
  for (const auto& c : qw.cosets()) {
    const std::string w = g->format(c.representative);
    cosets.push_back({{"representative", w.empty() ? "e" : w}, {"min_length", c.min_length}, {"fiber_size", c.fiber.size()}});
  }
  json edges = json::array();
  json neighbors = json::array();
  for (std::size_t i = 0; i < qw.size(); ++i)
    for (const auto& nb : qw.neighbors(i)) {
      if (nb.index <= i) continue;
      neighbors.push_back({i, nb.index, nb.distance, nb.converged});
      if (nb.distance <= 1) edges.push_back({i, nb.index});
    }
  json result = {{"group", g->id()},
                 {"subgroup", h.describe()},
                 {"oracle", h.oracle->kind()},
                 {"approximate", qw.approximate()},
                 {"radius", qw.radius()},
                 {"coset_count", qw.size()},
                 {"cosets", cosets},
                 {"coset_count_schedule", qw.coset_count_schedule()},
                 {"edges_scale_1", edges},
                 {"neighbors", neighbors},
                 {"all_converged", qw.all_converged()},
                 {"finite_index", to_json(finite_index_check(qw))}};
  if (qw.has_full_matrix()) {
    json dist = json::array();
    json conv = json::array();
    for (std::size_t i = 0; i < qw.size(); ++i) {
      json drow = json::array();
      json crow = json::array();
      for (std::size_t j = 0; j < qw.size(); ++j) {
        drow.push_back(qw.distance(i, j));
        crow.push_back(qw.converged(i, j) ? 1 : 0);
      }
      dist.push_back(drow);
      conv.push_back(crow);
    }
    result["distance_matrix"] = dist;
    result["converged_matrix"] = conv;
  } else {
    result["distance_matrix"] = nullptr;
    result["converged_matrix"] = nullptr;
  }
  if (cert_radius > 0) {
    json certs = json::array();
    for (const auto& c : almost_normality_certificates(g, h, cert_radius)) certs.push_back(to_json(c));
    result["certificates"] = certs;
  }
  if (bundle) {
    const auto b = verify_bundle_axioms(qw, sample_pairs, ctx.seed);
    json violations = json::array();
    for (std::size_t i = 0; i < b.violations.size() && i < 10; ++i) {
      const auto& v = b.violations[i];
      violations.push_back({{"x", v.x}, {"y", v.y}, {"base_distance", v.base_distance}, {"total_distance", v.total_distance}});
    }
    result["bundle"] = {{"K", b.K},
                        {"A", b.A},
                        {"K3", b.K3},
                        {"E", b.E},
                        {"fiber_spread", b.fiber_spread},
                        {"spread_complete", b.spread_complete},
                        {"eta_table", b.eta_table},
                        {"phi_table", b.phi_table},
                        {"distortion", b.distortion},
                        {"distortion_superlinear", b.distortion_superlinear},
                        {"pairs_checked", b.pairs_checked},
                        {"pairs_skipped", b.pairs_skipped},
                        {"violation_count", b.violations.size()},
                        {"violations", violations}};
  }
  return result;
}

json task_ends(Context& ctx, Section& top, Section& p) {
  const auto built = graph_window_from(p.child("window"), ctx, top);
  const auto schedule = p.int_list("schedule", {1, 2, 3, 4, 5, 6}, 1, kMaxWindowRadius);
  const int margin_factor = static_cast<int>(p.integer("margin_factor", 2, 0, 16));
  const bool h0 = p.boolean("h0", false);
  const bool h1 = p.boolean("h1", false);
  const double collar = p.number("collar", 1.0, 0.0, 1000.0);
  const auto h1_scales = p.int_list("h1_scales", {1, 2, 3, 4}, 1, kMaxScale);
  const auto connectivity = p.int_list("connectivity_scales", {1}, 1, kMaxScale);
  p.finish();

  const auto& g = built.graph;
  json result = {{"window", to_json(g)},
                 {"components", g.component_count()},
                 {"ends", to_json(ends_estimate(g, schedule, margin_factor))},
                 {"margin_factor", margin_factor}};
  if (built.quotient) {
    const auto mw = quotient_metric_window(*built.quotient);
    std::vector<double> scales(connectivity.begin(), connectivity.end());
    const auto conn = check_coarse_connectivity(*mw, scales);
    json comps = json::array();
    for (const auto& [s, n] : conn.components) comps.push_back({{"scale", s}, {"components", n}});
    result["connectivity"] = {{"components", comps},
                              {"first_connected", conn.first_connected ? json(*conn.first_connected) : json(nullptr)}};
  }
  if (h0) {
    const auto r = coarse_h0_check(g, collar);
    result["h0"] = {{"bounded", r.bounded},
                    {"rank", r.h0_rank},
                    {"components", r.components},
                    {"multi_component", r.multi_component},
                    {"collar_rank", r.collar_rank ? json(*r.collar_rank) : json(nullptr)}};
  }
  if (h1) {
    const auto r = coarse_h1_rank(g, collar, h1_scales, schedule);
    result["h1"] = {{"scale", r.scale},
                    {"scale_acyclic", r.scale_acyclic},
                    {"rank", r.rank},
                    {"collar", collar},
                    {"consistent_with_ends", r.consistent ? json(*r.consistent) : json(nullptr)}};
  }
  return result;
}

json euler_section(Section e);

json split_report_json(const SplitReport& rep, const std::vector<int>& ends_schedule) {
  json certs = json::array();
  for (const auto& c : rep.certificates) certs.push_back(to_json(c));
  json ends_counts = json::array();
  if (rep.ends)
    for (const auto& en : rep.ends->schedule) ends_counts.push_back(en.count);
  json j = {{"group", rep.group},
            {"subgroup", rep.subgroup},
            {"certificates", certs},
            {"coset_count_schedule", rep.coset_count_schedule},
            {"ends_schedule", ends_counts},
            {"ends_radii", ends_schedule},
            {"verdict", to_string(rep.verdict)},
            {"approximate", rep.approximate}};
  j["finite_index"] = rep.finite_index ? to_json(*rep.finite_index) : json(nullptr);
  j["connectivity_scale"] = rep.connectivity_scale ? json(*rep.connectivity_scale) : json(nullptr);
  j["ends"] = rep.ends ? to_json(*rep.ends) : json(nullptr);
  if (rep.verdict == SplitVerdict::Refused) {
    j["refusal"] = {{"failing_certificate", rep.failing_certificate ? json(*rep.failing_certificate) : json(nullptr)},
                    {"conjugator", rep.failing_certificate ? json(rep.certificates[*rep.failing_certificate].conjugator_word)
                                                           : json(nullptr)},
                    {"precondition", rep.precondition},
                    {"statement", rep.statement}};
  }
  return j;
}

json task_split(Context& ctx, Section& top, Section& p) {
  const auto g = group_from(top);
  const auto h = subgroup_from(g, top, node_budget(ctx));
  SplitParams sp;
  sp.certificate_radius = static_cast<int>(p.integer("certificate_radius", sp.certificate_radius, 1, 12));
  sp.radius = static_cast<int>(p.integer("radius", sp.radius, 2, kMaxQuotientRadius));
  Section qp = p.child("quotient");
  sp.quotient = quotient_params(qp, node_budget(ctx), sp.radius);
  qp.finish();
  sp.connectivity_scales = p.int_list("connectivity_scales", sp.connectivity_scales, 1, kMaxScale);
  sp.ends_schedule = p.int_list("ends_schedule", sp.ends_schedule, 1, kMaxQuotientRadius);
  const bool has_euler = p.has("euler");
  Section e = p.child("euler");
  json euler = has_euler ? euler_section(e) : json(nullptr);
  p.finish();

  const auto rep = splitting_criterion(g, h, sp);
  json j = split_report_json(rep, sp.ends_schedule);
  if (has_euler) j["euler"] = euler;
  return j;
}

json task_homology(Context& ctx, Section& top, Section& p) {
  const auto c = complex_from(p.child("complex"), ctx, top);
  const auto rings = rings_from(p, "rings", {"Z"});
  const bool cohom = p.boolean("cohomology", false);
  const bool has_collar = p.has("collar");
  const double collar = p.number("collar", 0.0, 0.0, 1000.0);
  const bool export_text = p.boolean("export", false);
  p.finish();

  json per_ring = json::object();
  for (const auto& r : rings) {
    json entry = {{"homology", to_json(homology(c, r))}};
    if (cohom || has_collar)
      entry["cohomology_c"] = to_json(cohomology_c(c, r, has_collar ? std::optional<double>(collar) : std::nullopt));
    per_ring[r.name()] = entry;
  }
  json result = {{"ranks", c.ranks()},
                 {"top_degree", c.top_degree()},
                 {"controlled", c.controlled()},
                 {"by_ring", per_ring}};
  if (has_collar) result["collar"] = collar;
  if (c.controlled() && c.window) result["measured_displacement"] = measured_displacement(c);
  if (export_text) result["sparse_text"] = export_sparse_text(c);
  return result;
}

json named_kunneth_cases() {
  // Circle (x) circle is the torus; Z--2-->Z is the Moore complex of Z/2.
  SparseMatrix c4(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    c4.add((i + 1) % 4, i, 1);
    c4.add(i, i, -1);
  }
  const auto circle = algebraic_complex({4, 4}, {c4});
  SparseMatrix two(1, 1);
  two.add(0, 0, 2);
  const auto moore = algebraic_complex({1, 1}, {two});
  json out = json::array();
  auto add = [&](const std::string& name, const ProperChainComplex& a, const ProperChainComplex& b) {
    const auto t = tensor_product(a, b);
    const auto r = kunneth_check(a, b, RingSpec::integers());
    out.push_back({{"name", name}, {"ring", "Z"}, {"homology", to_json(homology(t, RingSpec::integers()))}, {"check", to_json(r)}});
  };
  add("C4 (x) C4", circle, circle);
  add("x2 (x) x2", moore, moore);
  return out;
}

json task_kunneth(Context& ctx, Section& top, Section& p) {
  if (p.has("left") || p.has("right")) {
    const auto a = complex_from(p.child("left"), ctx, top);
    const auto b = complex_from(p.child("right"), ctx, top);
    const auto rings = rings_from(p, "rings", {"Z", "Q", "Z/2", "Z/3"});
    p.finish();
    json per_ring = json::object();
    bool passed = true;
    for (const auto& r : rings) {
      const auto rep = kunneth_check(a, b, r);
      passed = passed && rep.passed();
      per_ring[r.name()] = to_json(rep);
    }
    return {{"mode", "pair"}, {"by_ring", per_ring}, {"passed", passed}};
  }
  const auto random_pairs = static_cast<std::size_t>(p.integer("random_pairs", 20000, 0, 10'000'000));
  const bool named = p.boolean("named_cases", true);
  p.finish();
  json result = {{"mode", "family"}, {"random_pairs", random_pairs}, {"sweep", to_json(kunneth_sweep(ctx.seed, random_pairs))}};
  if (named) result["named_cases"] = named_kunneth_cases();
  return result;
}

json task_uct(Context& ctx, Section& top, Section& p) {
  if (p.has("complex")) {
    const auto c = complex_from(p.child("complex"), ctx, top);
    const auto targets = rings_from(p, "targets", {"Q", "Z/2", "Z/3"});
    p.finish();
    json per_ring = json::object();
    bool passed = true;
    for (const auto& t : targets) {
      if (!t.is_field()) throw ConfigError("params.targets: targets must be fields");
      const auto rep = uct_check(c, t);
      passed = passed && rep.passed();
      per_ring[t.name()] = to_json(rep);
    }
    return {{"mode", "complex"}, {"by_ring", per_ring}, {"passed", passed}};
  }
  p.finish();
  return {{"mode", "family"}, {"sweep", to_json(uct_sweep())}};
}

Rational rational_or_catalog(const json& v, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<long>());
  if (!v.is_string()) throw ConfigError(where + ": expected a rational string or catalog name");
  const std::string s = v.get<std::string>();
  if (!s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-')) return parse_rational(s);
  return catalog_chi(s);
}

Rational rational_field(Section& s, const std::string& key) { return rational_or_catalog(s.raw(key), s.path(key)); }

std::optional<GogShape> shape_from(Section s) {
  if (s.has("amalgam")) {
    Section a = s.child("amalgam");
    AmalgamShape sh;
    sh.p = a.require_integer("p", 1, 1'000'000);
    sh.q = a.require_integer("q", 1, 1'000'000);
    sh.c_index = a.integer("c_index", 1, 1, 1'000'000);
    a.finish();
    if (s.has("hnn")) throw ConfigError(s.path("hnn") + ": give either amalgam or hnn");
    s.finish();
    return sh;
  }
  if (s.has("hnn")) {
    Section h = s.child("hnn");
    HnnShape sh;
    sh.p = h.require_integer("p", 1, 1'000'000);
    sh.c_index = h.integer("c_index", 1, 1, 1'000'000);
    h.finish();
    s.finish();
    return sh;
  }
  s.finish();
  return std::nullopt;
}

json euler_section(Section e) {
  json out = json::object();
  if (e.has("one_relator")) {
    Section o = e.child("one_relator");
    const auto n = o.require_integer("n", 1, 1'000'000);
    const auto m = o.require_integer("m", 1, 1'000'000);
    o.finish();
    const auto r = one_relator_chi(n, m);
    json j = {{"n", n}, {"m", m}, {"chi", to_string(r.chi)}, {"outside_regime", r.outside_regime}, {"chi_zero", sgn(r.chi) == 0}};
    if (sgn(r.chi) == 0)
      j["classification"] = n == 2 && m == 1 ? "chi = 0: two generators, torsion-free relator (m = 1)"
                                             : "chi = 0 outside the torsion-free two-generator case";
    else if (r.outside_regime)
      j["classification"] = "chi > 0: outside the chi <= 0 regime";
    else
      j["classification"] = "chi < 0";
    out["one_relator"] = j;
  }
  if (e.has("amalgam_chi")) {
    Section a = e.child("amalgam_chi");
    const auto A = rational_field(a, "A");
    const auto B = rational_field(a, "B");
    const auto C = rational_field(a, "C");
    a.finish();
    out["amalgam_chi"] = {{"chi", to_string(chi_amalgam(A, B, C))}};
  }
  if (e.has("hnn_chi")) {
    Section h = e.child("hnn_chi");
    const auto A = rational_field(h, "A");
    const auto C = rational_field(h, "C");
    h.finish();
    out["hnn_chi"] = {{"chi", to_string(chi_hnn(A, C))}};
  }
  if (e.has("finite_index")) {
    Section f = e.child("finite_index");
    const auto chi = rational_field(f, "chi");
    const auto index = f.require_integer("index", 1, 1'000'000'000);
    f.finish();
    out["finite_index"] = {{"chi_subgroup", to_string(chi_finite_index(chi, index))}};
  }
  if (e.has("graph")) {
    Section gs = e.child("graph");
    GraphOfGroups gg;
    const json& vs = gs.raw("vertices");
    const json& es = gs.raw("edges");
    if (!vs.is_array() || !es.is_array()) throw ConfigError(gs.path("vertices") + ": vertices and edges must be arrays");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      Section v(vs[i], gs.path("vertices") + "[" + std::to_string(i) + "]");
      gg.vertices.push_back({v.string("label", "v" + std::to_string(i)), rational_field(v, "chi")});
      v.finish();
    }
    const auto nv = static_cast<std::int64_t>(gg.vertices.size());
    for (std::size_t i = 0; i < es.size(); ++i) {
      Section ed(es[i], gs.path("edges") + "[" + std::to_string(i) + "]");
      GraphOfGroups::Edge edge;
      edge.u = static_cast<std::size_t>(ed.require_integer("u", 0, nv - 1));
      edge.v = static_cast<std::size_t>(ed.require_integer("v", 0, nv - 1));
      edge.chi = rational_field(ed, "chi");
      if (ed.has("index_u")) edge.index_u = ed.integer("index_u", 1, 1, 1'000'000);
      if (ed.has("index_v")) edge.index_v = ed.integer("index_v", 1, 1, 1'000'000);
      ed.finish();
      gg.edges.push_back(edge);
    }
    gg.reduced = gs.boolean("reduced", false);
    gs.finish();
    gg.validate();
    out["graph"] = {{"chi", to_string(chi_graph(gg))}, {"vertices", gg.vertices.size()}, {"edges", gg.edges.size()}};
  }
  if (e.has("shape")) {
    Section s = e.child("shape");
    const auto chi_H = rational_field(s, "chi_H");
    const auto shape = shape_from(s);
    if (!shape) throw ConfigError(s.path("amalgam") + ": shape needs an amalgam or hnn section");
    out["shape"] = to_json(gogeuler_check(chi_H, *shape));
    out["shape"]["shape"] = describe(*shape);
  }
  if (e.has("classify")) {
    Section c = e.child("classify");
    const auto chi_G = rational_field(c, "chi_G");
    const auto chi_H = rational_field(c, "chi_H");
    const auto shape = shape_from(c);
    const auto r = eulerchar_report(chi_G, chi_H, shape);
    out["classify"] = {{"case", to_string(r.kind)},
                       {"detail", r.detail},
                       {"ratio_consistent", r.ratio_consistent},
                       {"shape_result", r.shape_result ? to_json(*r.shape_result) : json(nullptr)}};
  }
  if (e.boolean("sweeps", false)) {
    const auto l = euler_sign_sweep();
    const auto o = one_relator_sweep();
    json zl = json::array();
    for (const auto& [n, m] : o.zero_locus) zl.push_back({n, m});
    json fl = json::array();
    for (const auto& [n, m] : o.flagged) fl.push_back({n, m});
    out["sign_sweep"] = {{"cases", l.cases},
                          {"sign_violations", l.sign_violations},
                          {"zero_mismatches", l.zero_mismatches},
                          {"one_edge_mismatches", l.one_edge_mismatches}};
    out["one_relator_sweep"] = {{"zero_locus", zl}, {"flagged", fl}};
  }
  e.finish();
  if (out.empty()) throw ConfigError("params.euler: needs at least one section");
  return out;
}

json task_euler(Context&, Section&, Section& p) {
  json out = euler_section(p.child("euler"));
  p.finish();
  return out;
}

using TaskFn = std::function<json(Context&, Section&, Section&)>;

const std::map<std::string, TaskFn>& registry() {
  static const std::map<std::string, TaskFn> r = {
      {"ball", task_ball},           {"quotient", task_quotient},   {"ends", task_ends},
      {"split-report", task_split},  {"homology", task_homology},   {"kunneth-check", task_kunneth},
      {"uct-check", task_uct},       {"euler", task_euler},
  };
  return r;
}

// ------------------------------------------------------------------ output

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void flatten(const json& j, const std::string& prefix, std::ostringstream& os) {
  if (j.is_object() && !j.empty()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix + "/" + it.key(), os);
  } else if (j.is_array() && !j.empty()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "/" + std::to_string(i), os);
  } else {
    const std::string v = j.is_string() ? j.get<std::string>() : j.dump();
    os << csv_cell(prefix) << ',' << csv_cell(v) << '\n';
  }
}

std::string serialize(const json& report, const std::string& format) {
  if (format == "csv") {
    std::ostringstream os;
    os << "path,value\n";
    flatten(report, "", os);
    return os.str();
  }
  return report.dump(2) + "\n";
}

}  // namespace

std::string version() { return COARSEKIT_VERSION; }

std::vector<std::string> task_names() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : registry()) out.push_back(name);
  return out;
}

TaskOutcome run_task(const std::string& config_text, const TaskOverrides& overrides) {
  TaskOutcome outcome;
  outcome.format = overrides.format.value_or("json");
  Context ctx;
  json report = {{"schema_version", kReportSchemaVersion}, {"tool", "coarsekit"}, {"version", version()}};
  json error = nullptr;
  json result = nullptr;
  auto fail = [&](int code, const std::string& status, json err) {
    outcome.exit_code = code;
    outcome.status = status;
    error = std::move(err);
  };

  try {
    json cfg = config_text.find_first_not_of(" \t\r\n") == std::string::npos
                   ? json::object()
                   : json::parse(config_text, nullptr, true, true);
    if (!cfg.is_object()) throw ConfigError("config: expected a JSON object");
    if (overrides.task) cfg["task"] = *overrides.task;
    if (overrides.seed) cfg["seed"] = *overrides.seed;
    if (overrides.budget) cfg["budget"] = *overrides.budget;
    json output = cfg.contains("output") ? cfg["output"] : json(nullptr);
    cfg.erase("output");
    {
      Section out(output, "output");
      if (out.has("path")) outcome.out_path = out.require_string("path");
      if (!overrides.format) outcome.format = out.string("format", "json");
      else out.string("format", "json");
      out.finish();
    }
    if (outcome.format != "json" && outcome.format != "csv") {
      const std::string bad = outcome.format;
      outcome.format = "json";
      throw ConfigError("output.format: expected json or csv, got '" + bad + "'");
    }
    ctx.config = cfg;
    report["config"] = cfg;
    report["config_hash"] = "fnv1a64:" + fnv1a_hex(cfg.dump());

    Section top(cfg, "");
    ctx.task = top.require_string("task");
    ctx.seed = static_cast<std::uint64_t>(top.integer("seed", 1, 0, std::numeric_limits<std::int64_t>::max()));
    if (top.has("budget")) ctx.budget = static_cast<std::size_t>(top.integer("budget", 0, 1, kMaxBudget));
    report["task"] = ctx.task;
    report["seed"] = ctx.seed;
    report["budget"] = ctx.budget ? json(*ctx.budget) : json(nullptr);
    const auto it = registry().find(ctx.task);
    if (it == registry().end()) throw ConfigError("task: unknown task '" + ctx.task + "'");
    Section params = top.child("params");
    // group and subgroup are read by the tasks that need them.
    Section known(cfg, "");
    for (const char* key : {"task", "seed", "budget", "params", "group", "subgroup"}) known.allow(key);
    known.finish();
    result = it->second(ctx, top, params);
    outcome.exit_code = kExitOk;
    outcome.status = "ok";
    if (ctx.task == "split-report" && result.value("verdict", "") == "refused") {
      fail(kExitContract, "refused",
           {{"kind", "refusal"},
            {"precondition", result["refusal"]["precondition"]},
            {"statement", result["refusal"]["statement"]},
            {"message", "no finite index bound for the certificate at " + result["refusal"]["conjugator"].dump()}});
    }
  } catch (const ConfigError& e) {
    fail(kExitParse, "parse_error", {{"kind", "config"}, {"message", e.what()}});
  } catch (const json::exception& e) {
    fail(kExitParse, "parse_error", {{"kind", "json"}, {"message", e.what()}});
  } catch (const InputError& e) {
    fail(kExitParse, "parse_error", {{"kind", "input"}, {"message", e.what()}});
  } catch (const Refusal& e) {
    fail(kExitContract, "refused",
         {{"kind", "refusal"}, {"precondition", e.precondition()}, {"statement", e.statement()}, {"message", e.what()}});
  } catch (const DegenerateInputError& e) {
    fail(kExitContract, "contract_error", {{"kind", "degenerate_input"}, {"message", e.what()}});
  } catch (const ContractError& e) {
    fail(kExitContract, "contract_error", {{"kind", "contract"}, {"message", e.what()}});
  } catch (const WindowError& e) {
    fail(kExitContract, "contract_error", {{"kind", "window"}, {"message", e.what()}});
  } catch (const std::overflow_error& e) {
    fail(kExitContract, "contract_error", {{"kind", "overflow"}, {"message", e.what()}});
  } catch (const ResourceError& e) {
    fail(kExitBudget, "budget_exceeded", {{"kind", "budget"}, {"message", e.what()}, {"completed", e.completed()}});
  } catch (const std::exception& e) {
    fail(kExitInternal, "internal_error", {{"kind", "internal"}, {"message", e.what()}});
  }

  report["status"] = outcome.status;
  report["partial"] = outcome.exit_code == kExitBudget;
  if (outcome.exit_code == kExitBudget && !ctx.partial.is_null()) result = ctx.partial;
  report["result"] = result;
  report["error"] = error;
  outcome.report = serialize(report, outcome.format);
  return outcome;
}

void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
  const fs::path tmp = dir / ("." + target.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("write to " + tmp.string() + " failed");
    }
  }
  fs::rename(tmp, target);
}

}  // namespace coarsekit
