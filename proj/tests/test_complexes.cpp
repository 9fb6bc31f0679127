#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "coarsekit/complexes.hpp"
#include "coarsekit/errors.hpp"
#include "complex_fixtures.hpp"

using namespace coarsekit;

namespace {

// Simplex counts of P_r by testing every vertex subset of size <= dim+1.
std::vector<std::size_t> brute_force_f_vector(const MetricWindow& w, double r, int dim_cap) {
  const std::size_t n = w.size();
  std::vector<std::size_t> f(static_cast<std::size_t>(dim_cap) + 1, 0);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const int k = __builtin_popcount(mask);
    if (k > dim_cap + 1) continue;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = i + 1; j < n && ok; ++j)
        if ((mask >> i & 1) && (mask >> j & 1) && w.distance(i, j) > r) ok = false;
    if (ok) ++f[static_cast<std::size_t>(k - 1)];
  }
  while (f.size() > 1 && f.back() == 0) f.pop_back();
  return f;
}

ProperChainComplex interval() {
  return rips_complex(integer_window(0, 1), 1.0, 1);
}

std::shared_ptr<MetricWindow> random_plane_window(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::pair<int, int>> pts;
  std::set<std::pair<int, int>> seen;
  while (pts.size() < n) {
    std::pair<int, int> p{static_cast<int>(rng() % 7), static_cast<int>(rng() % 7)};
    if (seen.insert(p).second) pts.push_back(p);
  }
  std::vector<std::string> labels;
  std::vector<std::vector<double>> d(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(std::to_string(pts[i].first) + ":" + std::to_string(pts[i].second));
    for (std::size_t j = 0; j < n; ++j)
      d[i][j] = std::abs(pts[i].first - pts[j].first) + std::abs(pts[i].second - pts[j].second);
  }
  return matrix_window(labels, d);
}

}  // namespace

TEST_CASE("rips complexes of small windows") {
  auto tri = matrix_window({"x", "y", "z"}, {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  CHECK(rips_complex(tri, 1, 2).ranks() == std::vector<std::size_t>{3, 3, 1});
  CHECK(rips_complex(integer_window(-5, 5), 1, 3).ranks() == std::vector<std::size_t>{11, 10});
  auto w = integer_window(-5, 5);
  auto p2 = rips_complex(w, 2, 2);
  CHECK(p2.ranks() == std::vector<std::size_t>{11, 19, 9});
  CHECK(p2.ranks() == brute_force_f_vector(*w, 2, 2));
  CHECK(boundary_squares_to_zero(p2));
  // Control is the first vertex; boundary signs alternate by position.
  CHECK(p2.modules[2].basis[0] == "[-5,-4,-3]");
  CHECK(p2.modules[2].control[0] == 0);
  const auto& d2 = p2.boundary[2];
  std::vector<std::int64_t> col0;
  for (const auto& [r, v] : d2.column(0)) col0.push_back(v);
  CHECK(col0.size() == 3);
  CHECK(d2.at(std::size_t(std::find(p2.modules[1].basis.begin(), p2.modules[1].basis.end(), "[-4,-3]") -
                          p2.modules[1].basis.begin()),
              0) == 1);
  CHECK(d2.at(std::size_t(std::find(p2.modules[1].basis.begin(), p2.modules[1].basis.end(), "[-5,-3]") -
                          p2.modules[1].basis.begin()),
              0) == -1);
  CHECK_THROWS_AS(rips_complex(w, 1, 0), ContractError);
  CHECK_THROWS_AS(rips_complex(w, 10, 3, 100), ResourceError);
}

TEST_CASE("random rips windows: brute-force census, d∘d = 0, monotone in r, bounded displacement") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    auto w = random_plane_window(rng, 6 + static_cast<std::size_t>(trial % 7));
    std::set<std::string> previous;
    for (double r : {1.0, 2.0, 3.0}) {
      auto c = rips_complex(w, r, 3);
      CHECK(c.ranks() == brute_force_f_vector(*w, r, 3));
      CHECK(boundary_squares_to_zero(c));
      CHECK(measured_displacement(c) <= r);
      CHECK_NOTHROW(validate(c));
      std::set<std::string> cells;
      for (const auto& m : c.modules) cells.insert(m.basis.begin(), m.basis.end());
      CHECK(std::includes(cells.begin(), cells.end(), previous.begin(), previous.end()));
      previous = cells;
    }
  }
}

TEST_CASE("tensor products: ranks, sign rule, d∘d = 0") {
  auto I = interval();
  auto II = tensor_product(I, I);
  CHECK(II.ranks() == std::vector<std::size_t>{4, 4, 1});
  CHECK(boundary_squares_to_zero(II));
  // The square cell e⊗f: d(e⊗f) = de⊗f - e⊗df.
  const auto& sq = II.boundary[2];
  const auto& C = *II.left;
  REQUIRE(II.modules[2].basis[0] == "[0,1]⊗[0,1]");
  auto idx = [&](const std::string& id) {
    const auto& b = II.modules[1].basis;
    return static_cast<std::size_t>(std::find(b.begin(), b.end(), id) - b.begin());
  };
  // de = [1] - [0]
  CHECK(C.boundary[1].at(1, 0) == 1);
  CHECK(C.boundary[1].at(0, 0) == -1);
  CHECK(sq.at(idx("[1]⊗[0,1]"), 0) == 1);
  CHECK(sq.at(idx("[0]⊗[0,1]"), 0) == -1);
  CHECK(sq.at(idx("[0,1]⊗[1]"), 0) == -1);
  CHECK(sq.at(idx("[0,1]⊗[0]"), 0) == 1);

  auto C4 = fixture::cycle_complex(4);
  auto T = tensor_product(C4, C4);
  CHECK(T.ranks() == std::vector<std::size_t>{16, 32, 16});
  CHECK(boundary_squares_to_zero(T));
  CHECK_NOTHROW(validate(T));

  auto tri = rips_complex(matrix_window({"x", "y", "z"}, {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}), 1, 2);
  for (const auto& [a, b] : std::vector<std::pair<ProperChainComplex, ProperChainComplex>>{
           {tri, C4}, {C4, tri}, {tri, tri}, {I, tri}}) {
    auto P = tensor_product(a, b);
    CHECK(boundary_squares_to_zero(P));
    for (int n = 0; n <= P.top_degree(); ++n) {
      std::size_t expect = 0;
      for (int i = 0; i <= n; ++i) expect += a.rank(i) * b.rank(n - i);
      CHECK(P.rank(n) == expect);
    }
  }
}

TEST_CASE("supports on product complexes") {
  auto C4 = fixture::cycle_complex(4);
  auto T = tensor_product(C4, C4);
  auto empty = supports(T, Chain{1, {}});
  CHECK(empty.x.empty());
  CHECK(empty.b.empty());
  CHECK(empty.has_base);
  // Single cell sigma⊗lambda.
  for (std::size_t cell = 0; cell < T.rank(1); ++cell) {
    const auto f = T.factors[1][cell];
    const std::size_t lambda_deg = 1 - f.left_degree;
    auto s = supports(T, Chain{1, {{cell, 3}}});
    CHECK(s.x == std::vector<std::size_t>{C4.modules[lambda_deg].control[f.right_index]});
    CHECK(s.b == std::vector<std::size_t>{C4.modules[f.left_degree].control[f.left_index]});
  }
  // Three-term chain: unions of the factor control points; cancelling terms drop out.
  Chain ch{1, {{0, 1}, {5, -2}, {17, 1}, {9, 4}, {9, -4}}};
  std::set<std::size_t> x, b;
  for (std::size_t cell : {0, 5, 17}) {
    const auto f = T.factors[1][cell];
    x.insert(C4.modules[1 - f.left_degree].control[f.right_index]);
    b.insert(C4.modules[f.left_degree].control[f.left_index]);
  }
  auto s = supports(T, ch);
  CHECK(s.x == std::vector<std::size_t>(x.begin(), x.end()));
  CHECK(s.b == std::vector<std::size_t>(b.begin(), b.end()));
  CHECK(ch.support() == std::vector<std::size_t>{0, 5, 17});
  // Plain controlled complex: supp_X is the image of the support.
  auto P = rips_complex(integer_window(-5, 5), 1, 1);
  auto ps = supports(P, Chain{1, {{3, 1}, {4, -1}}});
  CHECK(ps.x == std::vector<std::size_t>{3, 4});
  CHECK_FALSE(ps.has_base);
  auto A = algebraic_complex({1}, {});
  CHECK_THROWS_AS(supports(A, Chain{0, {{0, 1}}}), ContractError);
}

TEST_CASE("proper map census") {
  SparseMatrix id(5, 5);
  for (std::size_t i = 0; i < 5; ++i) id.add(i, i, 1);
  CHECK(is_proper_map(id).proper);
  CHECK(is_proper_map(id).max_preimage_count == 1);
  SparseMatrix collapse(1, 100);
  for (std::size_t i = 0; i < 100; ++i) collapse.add(0, i, 1);
  CHECK(is_proper_map(collapse).max_preimage_count == 100);
  auto P = rips_complex(integer_window(-5, 5), 1, 1);
  CHECK(is_proper_map(P.boundary[1]).max_preimage_count == 2);
}

TEST_CASE("compact duals") {
  auto C6 = fixture::cycle_complex(6);
  auto D = compact_dual(C6);
  CHECK(D.coboundary[0] == C6.boundary[1].transpose());
  for (std::size_t k = 0; k + 1 < D.coboundary.size(); ++k) CHECK(D.coboundary[k + 1].multiply(D.coboundary[k]).is_zero());
  auto back = dual(D);
  CHECK(back.boundary == C6.boundary);
  auto C4 = fixture::cycle_complex(4);
  auto T = tensor_product(C4, C4);
  CHECK(dual(compact_dual(T)).boundary == T.boundary);
}

TEST_CASE("relative collar complexes") {
  auto P = rips_complex(integer_window(-5, 5), 1, 2);
  auto rel = relative_collar_complex(P, 1);
  // Vertices -4..4 survive; every edge keeps a vertex of depth >= 1.
  CHECK(rel.rank(0) == 9);
  CHECK(rel.rank(1) == 10);
  CHECK(rel.modules[0].basis.front() == "[-4]");
  CHECK(rel.modules[0].basis.back() == "[4]");
  CHECK(boundary_squares_to_zero(rel));

  auto point = rips_complex(matrix_window({"p"}, {{0}}), 1, 2);
  auto same = relative_collar_complex(point, 1);
  CHECK(same.ranks() == point.ranks());

  auto tree = rips_complex(fixture::tree_window(3, 5), 1, 2);
  CHECK(tree.ranks() == std::vector<std::size_t>{94, 93});
  auto inner = relative_collar_complex(tree, 1);
  // Leaves (48 at radius 5) are killed; all edges keep a vertex of radius <= 4.
  CHECK(inner.rank(0) == 46);
  CHECK(inner.rank(1) == 93);
  CHECK_THROWS_AS(relative_collar_complex(P, 5), DegenerateInputError);
  auto A = algebraic_complex({1}, {});
  CHECK_THROWS_AS(relative_collar_complex(A, 1), ContractError);
}

TEST_CASE("validation and text export") {
  SparseMatrix d1 = SparseMatrix::from_dense({{1}, {-1}}, 1);
  auto seg = algebraic_complex({2, 1}, {d1});
  CHECK(export_sparse_text(seg) == "1 2 1 2\n0 0 1\n1 0 -1\n");
  SparseMatrix bad1 = SparseMatrix::from_dense({{1, 1}}, 2);
  SparseMatrix bad2 = SparseMatrix::from_dense({{1}, {0}}, 1);
  CHECK_THROWS_AS(algebraic_complex({1, 2, 1}, {bad1, bad2}), ContractError);
  CHECK_THROWS_AS(algebraic_complex({2, 2}, {d1}), ContractError);
  auto P = rips_complex(integer_window(-3, 3), 2, 2);
  P.displacement_bound = 1;
  CHECK_THROWS_AS(validate(P), ContractError);
  CHECK(RingSpec::parse("Z/3") == RingSpec::mod_p(3));
  CHECK_THROWS_AS(RingSpec::parse("Z/4"), InputError);
}
