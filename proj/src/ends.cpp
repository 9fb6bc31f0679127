#include "coarsekit/ends.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <unordered_map>

#include "coarsekit/ball.hpp"
#include "coarsekit/errors.hpp"
#include "coarsekit/homology.hpp"

namespace coarsekit {

// ----------------------------------------------------------- graph windows

std::size_t GraphWindow::edge_count() const {
  std::size_t e = 0;
  for (const auto& a : adjacency) e += a.size();
  return e / 2;
}

bool GraphWindow::bounded() const { return std::none_of(boundary.begin(), boundary.end(), [](char b) { return b; }); }

void GraphWindow::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw ContractError("graph window is empty");
  if (adjacency.size() != n || boundary.size() != n) throw ContractError("graph window arrays differ in size");
  if (!depth.empty() && depth.size() != n) throw ContractError("graph window depth has the wrong size");
  if (base >= n) throw ContractError("graph window base out of range");
  for (std::size_t v = 0; v < n; ++v)
    for (auto u : adjacency[v]) {
      if (u >= n || u == v) throw ContractError("graph window edge out of range or a loop");
      if (!std::binary_search(adjacency[u].begin(), adjacency[u].end(), v))
        throw ContractError("graph window adjacency is not symmetric");
    }
}

std::vector<std::int64_t> GraphWindow::distances_from(std::size_t v) const {
  std::vector<std::int64_t> d(size(), -1);
  std::queue<std::size_t> q;
  d[v] = 0;
  q.push(v);
  while (!q.empty()) {
    auto x = q.front();
    q.pop();
    for (auto y : adjacency[x])
      if (d[y] < 0) {
        d[y] = d[x] + 1;
        q.push(y);
      }
  }
  return d;
}

std::size_t GraphWindow::component_count() const {
  std::vector<char> seen(size(), 0);
  std::size_t count = 0;
  for (std::size_t s = 0; s < size(); ++s) {
    if (seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack = {s};
    seen[s] = 1;
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      for (auto y : adjacency[x])
        if (!seen[y]) seen[y] = 1, stack.push_back(y);
    }
  }
  return count;
}

GraphWindow explicit_window(std::vector<std::string> labels, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                            std::vector<char> boundary, std::size_t base, std::vector<double> depth) {
  GraphWindow g;
  const std::size_t n = labels.size();
  g.labels = std::move(labels);
  g.adjacency.assign(n, {});
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw InputError("edge endpoint out of range");
    if (a == b) continue;
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (auto& a : g.adjacency) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  g.boundary = boundary.empty() ? std::vector<char>(n, 0) : std::move(boundary);
  g.depth = std::move(depth);
  g.base = base;
  g.validate();
  return g;
}

GraphWindow path_window(int R) {
  if (R < 0) throw InputError("window radius must be non-negative");
  std::vector<std::string> labels;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<char> boundary;
  std::vector<double> depth;
  for (int x = -R; x <= R; ++x) {
    labels.push_back(std::to_string(x));
    boundary.push_back(std::abs(x) == R ? 1 : 0);
    depth.push_back(R - std::abs(x));
    if (x > -R) edges.push_back({labels.size() - 2, labels.size() - 1});
  }
  auto g = explicit_window(std::move(labels), edges, std::move(boundary), static_cast<std::size_t>(R), std::move(depth));
  g.source = "path";
  return g;
}

GraphWindow grid_window(int R) {
  if (R < 0) throw InputError("window radius must be non-negative");
  std::vector<std::string> labels;
  std::vector<char> boundary;
  std::vector<double> depth;
  std::map<std::pair<int, int>, std::size_t> index;
  // Points ordered by l1 norm, then lexicographically, so the base is vertex 0.
  std::vector<std::pair<int, int>> pts;
  for (int x = -R; x <= R; ++x)
    for (int y = -R; y <= R; ++y)
      if (std::abs(x) + std::abs(y) <= R) pts.push_back({x, y});
  std::stable_sort(pts.begin(), pts.end(), [](auto a, auto b) {
    return std::abs(a.first) + std::abs(a.second) < std::abs(b.first) + std::abs(b.second);
  });
  for (auto [x, y] : pts) {
    index[{x, y}] = labels.size();
    labels.push_back("(" + std::to_string(x) + "," + std::to_string(y) + ")");
    const int n = std::abs(x) + std::abs(y);
    boundary.push_back(n == R ? 1 : 0);
    depth.push_back(R - n);
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (auto [p, i] : index) {
    for (auto q : {std::pair{p.first + 1, p.second}, std::pair{p.first, p.second + 1}}) {
      auto it = index.find(q);
      if (it != index.end()) edges.push_back({i, it->second});
    }
  }
  auto g = explicit_window(std::move(labels), edges, std::move(boundary), 0, std::move(depth));
  g.source = "grid";
  return g;
}

GraphWindow tree_window(int degree, int R, std::size_t node_budget) {
  if (degree < 1 || R < 0) throw InputError("tree window needs degree >= 1 and R >= 0");
  GraphWindow g;
  g.source = "tree";
  std::vector<int> level = {0};
  g.adjacency.emplace_back();
  for (std::size_t v = 0; v < g.adjacency.size(); ++v) {
    if (level[v] == R) continue;
    const int children = v == 0 ? degree : degree - 1;
    for (int c = 0; c < children; ++c) {
      if (g.adjacency.size() >= node_budget)
        throw ResourceError("tree window exceeds " + std::to_string(node_budget) + " vertices", level[v]);
      const std::size_t u = g.adjacency.size();
      g.adjacency.emplace_back();
      level.push_back(level[v] + 1);
      g.adjacency[v].push_back(u);
      g.adjacency[u].push_back(v);
    }
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  for (std::size_t v = 0; v < g.adjacency.size(); ++v) {
    g.labels.push_back("t" + std::to_string(v));
    g.boundary.push_back(level[v] == R ? 1 : 0);
    g.depth.push_back(R - level[v]);
  }
  return g;
}

GraphWindow cayley_ball_window(const MarkedGroup& group, int R, std::size_t node_budget) {
  const Ball b = ball(group, R, node_budget);
  GraphWindow g;
  g.source = "ball";
  g.adjacency.assign(b.size(), {});
  for (std::size_t i = 0; i < b.size(); ++i) {
    g.labels.push_back(group->format_word(b.shortlex_word(i)));
    g.boundary.push_back(b.length(i) == R ? 1 : 0);
    g.depth.push_back(R - b.length(i));
    for (const auto& l : group->letters()) {
      NormalForm y = b.element(i);
      group->right_multiply(y, l.generator, l.sign);
      if (auto j = b.index_of(y); j && *j != i) g.adjacency[i].push_back(*j);
    }
  }
  for (auto& a : g.adjacency) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return g;
}

GraphWindow quotient_graph_window(const QuotientWindow& qw, int scale) {
  if (scale < 1) throw ContractError("quotient graph scale must be >= 1");
  if (scale > qw.params().neighbor_scale)
    throw ContractError("quotient graph scale exceeds the window's neighbor scale");
  GraphWindow g;
  g.source = "quotient";
  const int R = qw.radius();
  g.adjacency.assign(qw.size(), {});
  for (std::size_t i = 0; i < qw.size(); ++i) {
    const auto& c = qw.cosets()[i];
    g.labels.push_back(qw.group()->format_word(qw.window().shortlex_word(qw.window().index_of(c.representative).value())));
    g.boundary.push_back(c.min_length > R - scale ? 1 : 0);
    g.depth.push_back(R - c.min_length);
    for (const auto& nb : qw.neighbors(i))
      if (nb.distance <= scale) g.adjacency[i].push_back(nb.index);
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  g.base = 0;
  g.validate();
  return g;
}

std::shared_ptr<MetricWindow> graph_metric_window(const GraphWindow& g) {
  auto shared = std::make_shared<GraphWindow>(g);
  auto bfs_within = [shared](std::size_t s, double r) {
    std::vector<std::size_t> out;
    std::unordered_map<std::size_t, std::int64_t> d = {{s, 0}};
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty()) {
      auto x = q.front();
      q.pop();
      if (static_cast<double>(d[x] + 1) > r) continue;
      for (auto y : shared->adjacency[x])
        if (!d.count(y)) {
          d[y] = d[x] + 1;
          out.push_back(y);
          q.push(y);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  auto distance = [shared](std::size_t i, std::size_t j) {
    const auto d = shared->distances_from(i)[j];
    return d < 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(d);
  };
  auto w = std::make_shared<MetricWindow>(g.labels, distance, g.depth);
  w->set_neighbor_fn(bfs_within);
  return w;
}

std::shared_ptr<MetricWindow> quotient_metric_window(const QuotientWindow& qw) {
  std::vector<std::string> labels;
  std::vector<double> depth;
  for (const auto& c : qw.cosets()) {
    labels.push_back(qw.group()->format_word(qw.window().shortlex_word(qw.window().index_of(c.representative).value())));
    depth.push_back(qw.radius() - c.min_length);
  }
  auto shared = std::make_shared<QuotientWindow>(qw);
  auto distance = [shared](std::size_t i, std::size_t j) {
    if (i == j) return 0.0;
    if (shared->has_full_matrix()) return static_cast<double>(shared->distance(i, j));
    for (const auto& nb : shared->neighbors(i))
      if (nb.index == j) return static_cast<double>(nb.distance);
    return std::numeric_limits<double>::infinity();
  };
  auto w = std::make_shared<MetricWindow>(std::move(labels), distance, std::move(depth));
  if (!qw.has_full_matrix()) {
    w->set_neighbor_fn([shared](std::size_t i, double r) {
      std::vector<std::size_t> out;
      for (const auto& nb : shared->neighbors(i))
        if (static_cast<double>(nb.distance) <= r) out.push_back(nb.index);
      std::sort(out.begin(), out.end());
      return out;
    });
  }
  return w;
}

// ------------------------------------------------------------------ ends

std::string to_string(EndsVerdict v) {
  switch (v) {
    case EndsVerdict::Exact: return "exact";
    case EndsVerdict::OneEnd: return "one-end";
    case EndsVerdict::LowerBound: return "lower-bound";
    case EndsVerdict::WindowTooSmall: return "window-too-small";
  }
  return "?";
}

std::string EndsReport::describe() const {
  switch (verdict) {
    case EndsVerdict::Exact: return "e = " + std::to_string(value);
    case EndsVerdict::OneEnd: return "one end";
    case EndsVerdict::LowerBound: return ">= " + std::to_string(value) + " (unstabilized)";
    case EndsVerdict::WindowTooSmall: return "window too small";
  }
  return "?";
}

EndsReport ends_estimate(const GraphWindow& g, const std::vector<int>& r_schedule, int margin_factor) {
  g.validate();
  if (margin_factor < 0) throw ContractError("ends margin factor must be non-negative");
  EndsReport rep;
  const auto dist = g.distances_from(g.base);
  std::int64_t to_boundary = -1;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (g.boundary[v] && dist[v] >= 0 && (to_boundary < 0 || dist[v] < to_boundary)) to_boundary = dist[v];
  rep.boundary_distance = to_boundary;

  if (g.bounded()) {
    for (int r : r_schedule) rep.schedule.push_back({r, 0, true});
    rep.verdict = EndsVerdict::Exact;
    rep.value = 0;
    return rep;
  }

  std::vector<std::size_t> comp(g.size());
  for (int r : r_schedule) {
    if (r < 0) throw ContractError("ends schedule radii must be non-negative");
    const std::size_t none = SIZE_MAX;
    std::fill(comp.begin(), comp.end(), none);
    std::size_t count = 0;
    std::size_t label = 0;
    for (std::size_t s = 0; s < g.size(); ++s) {
      if (comp[s] != none || (dist[s] >= 0 && dist[s] < r)) continue;
      bool touches = false;
      std::vector<std::size_t> stack = {s};
      comp[s] = label;
      while (!stack.empty()) {
        auto x = stack.back();
        stack.pop_back();
        touches = touches || g.boundary[x];
        for (auto y : g.adjacency[x])
          if (comp[y] == none && !(dist[y] >= 0 && dist[y] < r)) comp[y] = label, stack.push_back(y);
      }
      ++label;
      if (touches) ++count;
    }
    const bool reliable = to_boundary >= 0 && to_boundary >= static_cast<std::int64_t>(r) * (1 + margin_factor);
    rep.schedule.push_back({r, count, reliable});
  }

  std::vector<std::size_t> counts;
  for (const auto& e : rep.schedule)
    if (e.reliable) counts.push_back(e.count);
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] < counts[i - 1]) rep.monotone = false;
  if (counts.empty()) {
    rep.verdict = EndsVerdict::WindowTooSmall;
    return rep;
  }
  const std::size_t m = counts.size();
  if (m >= 3 && counts[m - 1] == counts[m - 2] && counts[m - 2] == counts[m - 3]) {
    rep.value = counts.back();
    rep.verdict = rep.value == 1 ? EndsVerdict::OneEnd : EndsVerdict::Exact;
  } else {
    rep.value = *std::max_element(counts.begin(), counts.end());
    rep.verdict = EndsVerdict::LowerBound;
  }
  return rep;
}

ConnectivityReport check_coarse_connectivity(const MetricWindow& window, const std::vector<double>& r_schedule) {
  const std::size_t n = window.size();
  if (n == 0) throw ContractError("connectivity check needs a nonempty window");
  ConnectivityReport rep;
  // Prim's algorithm over the complete distance graph.
  {
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<char> in(n, 0);
    best[0] = 0;
    for (std::size_t step = 0; step < n; ++step) {
      std::size_t v = n;
      for (std::size_t i = 0; i < n; ++i)
        if (!in[i] && (v == n || best[i] < best[v])) v = i;
      in[v] = 1;
      if (step > 0) rep.gap_census.push_back(best[v]);
      for (std::size_t i = 0; i < n; ++i)
        if (!in[i]) best[i] = std::min(best[i], window.distance(v, i));
    }
    std::sort(rep.gap_census.rbegin(), rep.gap_census.rend());
  }
  for (double r : r_schedule) {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = n;
    for (std::size_t i = 0; i < n; ++i)
      for (auto j : window.neighbors_within(i, r)) {
        auto a = find(i), b = find(j);
        if (a != b) parent[a] = b, --components;
      }
    rep.components.push_back({r, components});
    if (components == 1 && !rep.first_connected) rep.first_connected = r;
  }
  return rep;
}

H0Report coarse_h0_check(const GraphWindow& g, double collar_width) {
  g.validate();
  H0Report rep;
  rep.bounded = g.bounded();
  rep.components = g.component_count();
  rep.multi_component = rep.components > 1;
  if (rep.bounded) {
    rep.h0_rank = 1;
    return rep;
  }
  auto w = graph_metric_window(g);
  auto P = rips_complex(w, 1, 1);
  auto H = cohomology_c(P, RingSpec::integers(), collar_width);
  rep.collar_rank = H[0].free_rank;
  rep.h0_rank = 0;
  return rep;
}

H1Report coarse_h1_rank(const GraphWindow& g, double collar_width, const std::vector<int>& scales,
                        const std::vector<int>& ends_schedule) {
  g.validate();
  if (g.component_count() != 1) throw ContractError("coarse H^1 needs a connected window");
  if (scales.empty()) throw ContractError("coarse H^1 needs at least one Rips scale");
  auto w = graph_metric_window(g);
  H1Report rep;
  std::optional<ProperChainComplex> chosen;
  for (int s : scales) {
    auto P = rips_complex(w, s, 2);
    const auto H = homology(P, RingSpec::rationals());
    rep.scale = s;
    chosen = std::move(P);
    if (H.size() < 2 || H[1].free_rank == 0) {
      rep.scale_acyclic = true;
      break;
    }
  }
  const auto Hc = cohomology_c(*chosen, RingSpec::rationals(), collar_width);
  rep.rank = Hc.size() > 1 ? Hc[1].free_rank : 0;
  rep.ends = ends_estimate(g, ends_schedule);
  switch (rep.ends.verdict) {
    case EndsVerdict::Exact:
    case EndsVerdict::OneEnd:
      if (rep.ends.value >= 1) rep.consistent = rep.rank + 1 == rep.ends.value;
      break;
    case EndsVerdict::LowerBound: rep.consistent = rep.rank + 1 >= rep.ends.value; break;
    case EndsVerdict::WindowTooSmall: break;
  }
  return rep;
}

// ------------------------------------------------------ splitting criterion

std::string to_string(SplitVerdict v) {
  switch (v) {
    case SplitVerdict::FiniteIndex: return "finite-index";
    case SplitVerdict::Splits: return "splits";
    case SplitVerdict::OneEnd: return "one-end";
    case SplitVerdict::Inconclusive: return "inconclusive";
    case SplitVerdict::Refused: return "refused";
  }
  return "?";
}

SplitReport splitting_criterion(const MarkedGroup& group, const SubgroupSpec& subgroup, const SplitParams& params) {
  SplitReport rep;
  rep.group = group->id();
  rep.subgroup = subgroup.describe();
  rep.approximate = !subgroup.exact();

  rep.certificates = almost_normality_certificates(group, subgroup, params.certificate_radius);
  for (std::size_t i = 0; i < rep.certificates.size(); ++i)
    if (!rep.certificates[i].finite()) {
      rep.verdict = SplitVerdict::Refused;
      rep.failing_certificate = i;
      rep.precondition = "almost_normal";
      rep.statement =
          "H must be commensurated by every element of G; the orbit of gH under H has no bound up to radius " +
          std::to_string(params.certificate_radius) + " for g = " + rep.certificates[i].conjugator_word;
      return rep;
    }

  QuotientParams qp = params.quotient;
  qp.radius = params.radius;
  const int max_scale = params.connectivity_scales.empty()
                            ? 1
                            : *std::max_element(params.connectivity_scales.begin(), params.connectivity_scales.end());
  qp.neighbor_scale = std::min(std::max(qp.neighbor_scale, 1), max_scale);
  QuotientWindow qw = quotient_window(group, subgroup, qp);
  rep.coset_count_schedule = qw.coset_count_schedule();

  rep.finite_index = finite_index_check(qw);
  if (rep.finite_index->finite) {
    rep.verdict = SplitVerdict::FiniteIndex;
    return rep;
  }

  // Smallest scale at which the quotient window is connected; widen the
  // neighbor search only when the cheaper scales fail.
  for (int s : params.connectivity_scales) {
    if (s > qw.params().neighbor_scale) {
      qp.neighbor_scale = s;
      qw = quotient_window(group, subgroup, qp);
    }
    if (quotient_graph_window(qw, s).component_count() == 1) {
      rep.connectivity_scale = s;
      break;
    }
  }
  if (!rep.connectivity_scale) {
    rep.verdict = SplitVerdict::Inconclusive;
    return rep;
  }
  rep.ends = ends_estimate(quotient_graph_window(qw, *rep.connectivity_scale), params.ends_schedule);
  switch (rep.ends->verdict) {
    case EndsVerdict::Exact:
      rep.verdict = rep.ends->value >= 2 ? SplitVerdict::Splits : SplitVerdict::Inconclusive;
      break;
    case EndsVerdict::OneEnd: rep.verdict = SplitVerdict::OneEnd; break;
    case EndsVerdict::LowerBound:
      rep.verdict = rep.ends->value >= 2 ? SplitVerdict::Splits : SplitVerdict::Inconclusive;
      break;
    case EndsVerdict::WindowTooSmall: rep.verdict = SplitVerdict::Inconclusive; break;
  }
  return rep;
}

}  // namespace coarsekit
