#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coarsekit/complexes.hpp"
#include "coarsekit/coset.hpp"
#include "coarsekit/group.hpp"

namespace coarsekit {

// Finite piece of a locally finite graph around a base vertex. `boundary`
// marks vertices on the window's frontier; `depth` is each vertex's distance
// to that frontier in the ambient graph (used by collar complexes).
struct GraphWindow {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> adjacency;  // symmetric, sorted, no loops
  std::vector<char> boundary;
  std::vector<double> depth;
  std::size_t base = 0;
  std::string source = "explicit";  // ball | quotient | explicit | path | grid | tree

  std::size_t size() const { return labels.size(); }
  std::size_t edge_count() const;
  bool bounded() const;  // empty boundary set
  // Throws ContractError on asymmetric adjacency, bad indices or sizes.
  void validate() const;
  // Graph distances from v; unreachable vertices get -1.
  std::vector<std::int64_t> distances_from(std::size_t v) const;
  std::size_t component_count() const;
};

// Builds a window from an edge list; boundary and depth optional (empty
// boundary means the window is the whole graph).
GraphWindow explicit_window(std::vector<std::string> labels, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                            std::vector<char> boundary = {}, std::size_t base = 0, std::vector<double> depth = {});
// [-R, R] in Z.
GraphWindow path_window(int R);
// Word-metric ball of radius R in Z^2 (an l1 diamond of the grid).
GraphWindow grid_window(int R);
// Ball of radius R in the regular tree of the given degree.
GraphWindow tree_window(int degree, int R, std::size_t node_budget = 4'000'000);
// Cayley graph of Ball(R) for the marked generators.
GraphWindow cayley_ball_window(const MarkedGroup& group, int R, std::size_t node_budget = kDefaultNodeBudget);
// Scale-s graph of a quotient window: cosets joined when their distance is
// at most s. Boundary: cosets whose shortest representative is longer than
// R - s. Throws ContractError when s exceeds the window's neighbor scale.
GraphWindow quotient_graph_window(const QuotientWindow& qw, int scale);

// Graph metric on a window, with neighbor search by truncated BFS.
std::shared_ptr<MetricWindow> graph_metric_window(const GraphWindow& g);
// Quotient distances: the full matrix when available, otherwise recorded
// neighbor distances with all other pairs treated as far apart.
std::shared_ptr<MetricWindow> quotient_metric_window(const QuotientWindow& qw);

// ------------------------------------------------------------------ ends

enum class EndsVerdict { Exact, OneEnd, LowerBound, WindowTooSmall };
std::string to_string(EndsVerdict v);

struct EndsEntry {
  int r = 0;
  std::size_t count = 0;  // components of window minus B_r meeting the boundary
  bool reliable = false;  // frontier at graph distance >= r + margin from the base
};

struct EndsReport {
  std::vector<EndsEntry> schedule;
  EndsVerdict verdict = EndsVerdict::WindowTooSmall;
  std::size_t value = 0;  // e for Exact/OneEnd, k for LowerBound
  bool monotone = true;   // counts nondecreasing over reliable entries
  std::int64_t boundary_distance = -1;
  std::string describe() const;  // "e = 2", "one end", ">= 24 (unstabilized)", "window too small"
};

// B_r = vertices at graph distance < r from the base. An entry is reliable
// when the frontier lies at distance >= r + margin_factor * r. Exact e needs
// equal counts at the last three reliable entries; growth only yields lower
// bounds. Bounded windows report e = 0.
EndsReport ends_estimate(const GraphWindow& g, const std::vector<int>& r_schedule, int margin_factor = 2);

struct ConnectivityReport {
  std::vector<std::pair<double, std::size_t>> components;  // (scale, component count)
  std::optional<double> first_connected;
  // Edge lengths of a minimum spanning tree, largest first: the scales at
  // which the window's pieces merge.
  std::vector<double> gap_census;
};
ConnectivityReport check_coarse_connectivity(const MetricWindow& window, const std::vector<double>& r_schedule);

struct H0Report {
  bool bounded = false;
  std::size_t h0_rank = 0;
  std::size_t components = 0;
  bool multi_component = false;
  std::optional<std::size_t> collar_rank;  // cross-check from cohomology_c
};
H0Report coarse_h0_check(const GraphWindow& g, double collar_width = 1.0);

struct H1Report {
  int scale = 1;                // Rips scale used
  bool scale_acyclic = false;   // absolute H^1 of P_scale vanishes
  std::size_t rank = 0;         // free rank of collar-relative H^1
  EndsReport ends;
  std::optional<bool> consistent;  // rank vs ends - 1, when the ends verdict allows a comparison
};
// Picks the smallest scale s in `scales` whose Rips complex (dim cap 2) has
// vanishing absolute H^1, then reports the rank of the collar-relative H^1.
// Throws ContractError when the window graph is disconnected.
H1Report coarse_h1_rank(const GraphWindow& g, double collar_width = 1.0, const std::vector<int>& scales = {1, 2, 3, 4},
                        const std::vector<int>& ends_schedule = {1, 2, 3, 4, 5, 6});

// ------------------------------------------------------ splitting criterion

enum class SplitVerdict { FiniteIndex, Splits, OneEnd, Inconclusive, Refused };
std::string to_string(SplitVerdict v);

struct SplitParams {
  int certificate_radius = 4;
  QuotientParams quotient{};  // radius defaults to 6; splitting_criterion uses `radius` below
  int radius = 14;
  std::vector<int> connectivity_scales = {1, 2, 3, 4};
  std::vector<int> ends_schedule = {1, 2, 3};
};

struct SplitReport {
  std::string group;
  std::string subgroup;
  std::vector<CommensurationCertificate> certificates;
  std::vector<std::size_t> coset_count_schedule;
  std::optional<FiniteIndexVerdict> finite_index;
  std::optional<int> connectivity_scale;
  std::optional<EndsReport> ends;
  SplitVerdict verdict = SplitVerdict::Inconclusive;
  bool approximate = false;  // subgroup oracle was not exact
  // Refusals: the failing certificate and the hypothesis it breaks.
  std::optional<std::size_t> failing_certificate;
  std::string precondition;
  std::string statement;
};

// Gate on commensuration certificates, then quotient window, finite-index
// check, smallest connected scale and ends of the quotient graph.
SplitReport splitting_criterion(const MarkedGroup& group, const SubgroupSpec& subgroup, const SplitParams& params);

}  // namespace coarsekit
