#include <doctest.h>

#include <map>
#include <set>

#include "coarsekit/catalog.hpp"
#include "coarsekit/ends.hpp"
#include "coarsekit/errors.hpp"

using namespace coarsekit;

namespace {

// Components of {|x|+|y| <= R} minus {|x|+|y| < r} that reach |x|+|y| = R,
// by flood fill on coordinates.
std::size_t grid_complement_oracle(int R, int r) {
  std::set<std::pair<int, int>> seen;
  std::size_t count = 0;
  auto inside = [&](int x, int y) {
    const int n = std::abs(x) + std::abs(y);
    return n <= R && n >= r;
  };
  for (int x = -R; x <= R; ++x)
    for (int y = -R; y <= R; ++y) {
      if (!inside(x, y) || seen.count({x, y})) continue;
      bool reaches = false;
      std::vector<std::pair<int, int>> stack = {{x, y}};
      seen.insert({x, y});
      while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        reaches = reaches || std::abs(a) + std::abs(b) == R;
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
          if (inside(a + dx, b + dy) && seen.insert({a + dx, b + dy}).second) stack.push_back({a + dx, b + dy});
      }
      if (reaches) ++count;
    }
  return count;
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

}  // namespace

TEST_CASE("ends of Z, Z^2 and the trivalent tree") {
  auto z = ends_estimate(path_window(50), range(1, 10));
  CHECK(z.verdict == EndsVerdict::Exact);
  CHECK(z.value == 2);
  for (const auto& e : z.schedule) {
    CHECK(e.count == 2);
    CHECK(e.reliable);
  }
  auto grid = grid_window(30);
  auto z2 = ends_estimate(grid, range(1, 10));
  CHECK(z2.verdict == EndsVerdict::OneEnd);
  for (const auto& e : z2.schedule) CHECK(e.count == grid_complement_oracle(30, e.r));
  auto tree = ends_estimate(tree_window(3, 18), range(1, 6));
  CHECK(tree.verdict == EndsVerdict::LowerBound);
  CHECK(tree.value == 96);
  for (const auto& e : tree.schedule) {
    CHECK(e.reliable);
    CHECK(e.count == 3u << (e.r - 1));
  }
  CHECK(tree.describe() == ">= 96 (unstabilized)");
  // A radius-10 tree window is only reliable up to r = 3.
  auto small = ends_estimate(tree_window(3, 10), range(1, 6));
  CHECK(small.value == 12);
  CHECK_FALSE(small.schedule[3].reliable);
  CHECK(ends_estimate(path_window(5), {2, 3}).verdict == EndsVerdict::WindowTooSmall);
}

TEST_CASE("ends counts are monotone and match the Cayley graph of Z^2") {
  auto G = parse_group("free_abelian(2)");
  auto cay = cayley_ball_window(G, 12);
  auto grid = grid_window(12);
  CHECK(cay.size() == grid.size());
  CHECK(cay.edge_count() == grid.edge_count());
  auto a = ends_estimate(cay, range(0, 4)), b = ends_estimate(grid, range(0, 4));
  for (std::size_t i = 0; i < a.schedule.size(); ++i) CHECK(a.schedule[i].count == b.schedule[i].count);
  for (const auto& w : {path_window(40), grid_window(20), tree_window(3, 12), cay}) {
    auto rep = ends_estimate(w, range(0, 4));
    CHECK(rep.monotone);
  }
  auto bounded = explicit_window({"a", "b"}, {{0, 1}});
  auto e0 = ends_estimate(bounded, {1, 2, 3});
  CHECK(e0.verdict == EndsVerdict::Exact);
  CHECK(e0.value == 0);
}

TEST_CASE("coarse H^0") {
  auto point = explicit_window({"p"}, {});
  CHECK(coarse_h0_check(point).h0_rank == 1);
  auto two = explicit_window({"a", "b", "c"}, {{0, 1}});
  auto h = coarse_h0_check(two);
  CHECK(h.h0_rank == 1);
  CHECK(h.multi_component);
  auto z = coarse_h0_check(path_window(10));
  CHECK_FALSE(z.bounded);
  CHECK(z.h0_rank == 0);
  CHECK(z.collar_rank == std::optional<std::size_t>(0));
}

TEST_CASE("coarse H^1 rank equals ends minus one") {
  auto z = coarse_h1_rank(path_window(50));
  CHECK(z.scale == 1);
  CHECK(z.rank == 1);
  CHECK(z.consistent == std::optional<bool>(true));
  auto z2 = coarse_h1_rank(grid_window(30));
  CHECK(z2.scale == 2);
  CHECK(z2.scale_acyclic);
  CHECK(z2.rank == 0);
  CHECK(z2.consistent == std::optional<bool>(true));
  // Tree of radius 6: the leaves are killed, rank = leaves - 1.
  auto t = coarse_h1_rank(tree_window(3, 6), 1.0, {1, 2}, {1});
  CHECK(t.rank == 3 * 32 - 1);
  CHECK(t.consistent == std::optional<bool>(true));
  CHECK_THROWS_AS(coarse_h1_rank(explicit_window({"a", "b"}, {}, {1, 1})), ContractError);
}

TEST_CASE("coarse connectivity") {
  auto z = check_coarse_connectivity(*integer_window(-5, 5), {1});
  CHECK(z.first_connected == std::optional<double>(1));
  std::vector<std::int64_t> powers;
  for (int k = 0; k <= 10; ++k) powers.push_back(std::int64_t{1} << k);
  auto p = check_coarse_connectivity(*integer_points_window(powers), {1, 2, 4, 8, 16, 32, 64});
  CHECK_FALSE(p.first_connected.has_value());
  std::vector<double> gaps;
  for (int k = 9; k >= 0; --k) gaps.push_back(static_cast<double>(std::int64_t{1} << k));
  CHECK(p.gap_census == gaps);
  for (const auto& [r, comps] : p.components) {
    std::size_t cuts = 0;
    for (double g : gaps) cuts += g > r ? 1 : 0;
    CHECK(comps == cuts + 1);
  }

  auto G = parse_group("baumslag_solitar(1,2)");
  auto H = make_subgroup(G, std::vector<std::string>{"a"});
  QuotientParams qp;
  qp.radius = 7;
  auto qw = quotient_window(G, H, qp);
  auto c = check_coarse_connectivity(*quotient_metric_window(qw), {1, 2});
  CHECK(c.components[0].second == qw.size());  // no pair at distance 1
  CHECK(c.first_connected == std::optional<double>(2));
}

TEST_CASE("splitting criterion on the reference pairs") {
  SplitParams params;
  {
    auto G = parse_group("free_abelian(2)");
    auto r = splitting_criterion(G, make_subgroup(G, std::vector<std::string>{"a"}), params);
    CHECK(r.verdict == SplitVerdict::Splits);
    REQUIRE(r.ends);
    for (const auto& e : r.ends->schedule) CHECK(e.count == 2);
    CHECK(r.ends->verdict == EndsVerdict::Exact);
  }
  {
    auto G = parse_group("baumslag_solitar(1,2)");
    auto H = make_subgroup(G, std::vector<std::string>{"a"});
    auto r = splitting_criterion(G, H, params);
    CHECK(r.verdict == SplitVerdict::Splits);
    REQUIRE(r.ends);
    CHECK(r.ends->schedule[1].r == 2);
    CHECK(r.ends->schedule[1].reliable);
    CHECK(r.ends->schedule[1].count >= 3);
    bool t_index_two = false;
    for (const auto& c : r.certificates)
      if (c.conjugator_word == "t") t_index_two = c.index == std::optional<std::size_t>(2);
    CHECK(t_index_two);
    auto again = splitting_criterion(G, H, params);
    CHECK(again.coset_count_schedule == r.coset_count_schedule);
    CHECK(again.ends->schedule.size() == r.ends->schedule.size());
  }
  {
    auto G = parse_group("free_abelian(1)");
    auto r = splitting_criterion(G, make_subgroup(G, std::vector<std::string>{"a^2"}), params);
    CHECK(r.verdict == SplitVerdict::FiniteIndex);
    CHECK(r.finite_index->index == std::optional<std::size_t>(2));
  }
  {
    auto G = parse_group("free(2)");
    auto r = splitting_criterion(G, make_subgroup(G, std::vector<std::string>{"a"}), params);
    CHECK(r.verdict == SplitVerdict::Refused);
    REQUIRE(r.failing_certificate);
    CHECK(r.certificates[*r.failing_certificate].conjugator_word == "b");
    CHECK(r.precondition == "almost_normal");
  }
}
