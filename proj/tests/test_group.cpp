#include <random>
#include <map>
#include <set>

#include "doctest.h"
#include "group_oracles.hpp"

#include "coarsekit/ball.hpp"
#include "coarsekit/catalog.hpp"
#include "coarsekit/errors.hpp"

using namespace coarsekit;

TEST_CASE("normal forms on the defining examples") {
  auto f2 = parse_group("free(2)");
  CHECK(normal_form(f2, "a a^-1 b").to_string() == "b");
  CHECK(normal_form(f2, "a a⁻¹ b") == normal_form(f2, "b"));
  auto bs = parse_group("baumslag_solitar(1,2)");
  CHECK(normal_form(bs, "t a t^-1") == normal_form(bs, "a a"));
  auto z2 = parse_group("free_abelian(2)");
  CHECK(normal_form(z2, "b a b^-1") == normal_form(z2, "a"));
  CHECK(normal_form(z2, "b a b^-1").to_string() == "a");
}

TEST_CASE("multiply and inverse") {
  auto f2 = parse_group("free(2)");
  CHECK(multiply(normal_form(f2, "a"), normal_form(f2, "a^-1")) == identity(f2));
  auto z2 = parse_group("free_abelian(2)");
  CHECK(multiply(normal_form(z2, "a"), normal_form(z2, "b")).normal_form() == NormalForm{1, 1});
  auto bs = parse_group("baumslag_solitar(1,2)");
  auto t = normal_form(bs, "t"), a = normal_form(bs, "a");
  CHECK(multiply(multiply(t, a), inverse(t)) == normal_form(bs, "a^2"));
  CHECK_THROWS_AS(multiply(a, normal_form(f2, "a")), InputError);
}

TEST_CASE("unknown generator symbols are input errors") {
  auto f2 = parse_group("free(2)");
  CHECK_THROWS_AS(normal_form(f2, "a z"), InputError);
  CHECK_THROWS_AS(parse_group("free(2"), InputError);
  CHECK_THROWS_AS(parse_group("klein_bottle(1)"), InputError);
  CHECK_THROWS_AS(parse_group("baumslag_solitar(0,2)"), InputError);
}

TEST_CASE("group ids round trip through the parser") {
  for (const auto& spec : oracle::catalog_under_test()) CHECK(parse_group(spec)->id() == spec);
  CHECK(parse_group(" direct_product( free(1) , free(1) ) ")->generator_names() ==
        std::vector<std::string>{"a", "a_2"});
}

TEST_CASE("canonicity against independent oracles") {
  std::mt19937_64 rng(20240611);
  for (const auto& spec : oracle::catalog_under_test()) {
    CAPTURE(spec);
    auto g = parse_group(spec);
    int disagreements = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      Word w1 = oracle::random_word(rng, *g, 12);
      Word w2 = (trial % 2 == 0) ? oracle::perturb(rng, *g, w1, 2) : oracle::random_word(rng, *g, 12);
      const bool nf_equal = g->evaluate(w1) == g->evaluate(w2);
      if (nf_equal != oracle::equal(*g, w1, w2)) ++disagreements;
    }
    CHECK(disagreements == 0);
  }
}

TEST_CASE("normal-form words evaluate back to the element") {
  std::mt19937_64 rng(7);
  for (const auto& spec : oracle::catalog_under_test()) {
    CAPTURE(spec);
    auto g = parse_group(spec);
    for (int trial = 0; trial < 200; ++trial) {
      Word w = oracle::random_word(rng, *g, 14);
      NormalForm nf = g->evaluate(w);
      CHECK(g->evaluate(g->to_word(nf)) == nf);
      CHECK(g->evaluate(g->parse_word(g->format(nf))) == nf);
      CHECK(g->multiply(nf, g->inverse(nf)) == g->identity());
    }
  }
}

TEST_CASE("BS(1,2) relation t a^k t^-1 = a^2k") {
  auto bs = parse_group("baumslag_solitar(1,2)");
  for (int k = -8; k <= 8; ++k) {
    Word w{{1, 1}, {0, k}, {1, -1}};
    CHECK(bs->evaluate(w) == bs->evaluate(Word{{0, 2 * k}}));
  }
}

namespace {
std::size_t free_ball_count(int k, int r) {
  std::size_t total = 1, sphere = 2 * static_cast<std::size_t>(k);
  for (int i = 1; i <= r; ++i) {
    total += sphere;
    sphere *= 2 * static_cast<std::size_t>(k) - 1;
  }
  return total;
}
}  // namespace

TEST_CASE("ball sizes") {
  auto f2 = parse_group("free(2)");
  CHECK(ball(f2, 1).size() == 5);
  CHECK(ball(f2, 2).size() == 17);
  for (int r = 0; r <= 6; ++r) CHECK(ball(f2, r).size() == free_ball_count(2, r));
  auto z = parse_group("free_abelian(1)");
  for (int r = 0; r <= 10; ++r) CHECK(ball(z, r).size() == static_cast<std::size_t>(2 * r + 1));
  auto z2 = parse_group("free_abelian(2)");
  for (int r = 0; r <= 8; ++r) CHECK(ball(z2, r).size() == static_cast<std::size_t>(2 * r * r + 2 * r + 1));
  auto tri = parse_group("euclidean_triangle_333");
  Ball bt = ball(tri, 8);
  // layers of an affine Coxeter group grow linearly; every element's length
  // from the ball agrees with the closed-form descent count
  for (std::size_t i = 0; i < bt.size(); ++i) CHECK(*tri->word_length(bt.element(i)) == bt.length(i));
}

TEST_CASE("ball is monotone and bounded by the free count") {
  for (const auto& spec : oracle::catalog_under_test()) {
    CAPTURE(spec);
    auto g = parse_group(spec);
    Ball b = ball(g, 5);
    const int k = static_cast<int>(g->letters().size());
    for (int r = 0; r < 5; ++r) CHECK(b.count_within(r) <= b.count_within(r + 1));
    for (int r = 1; r <= 5; ++r) {
      std::size_t bound = static_cast<std::size_t>(k);
      for (int i = 1; i < r; ++i) bound *= static_cast<std::size_t>(std::max(k - 1, 1));
      CHECK(b.sphere_size(r) <= bound);
    }
    Ball smaller = ball(g, 3);
    for (const auto& x : smaller.elements()) CHECK(b.contains(x));
  }
}

TEST_CASE("shortlex words of ball elements are geodesic and evaluate correctly") {
  auto bs = parse_group("baumslag_solitar(1,2)");
  Ball b = ball(bs, 6);
  for (std::size_t i = 0; i < b.size(); ++i) {
    Word w = b.shortlex_word(i);
    CHECK(bs->evaluate(w) == b.element(i));
    std::int64_t len = 0;
    for (const auto& s : w) len += std::llabs(s.exponent);
    CHECK(len == b.length(i));
  }
}

TEST_CASE("ball budget reports the completed radius") {
  auto f3 = parse_group("free(3)");
  try {
    (void)ball(f3, 10, 1000);
    FAIL("expected ResourceError");
  } catch (const ResourceError& e) {
    CHECK(e.completed() == 4);  // |B_4(F3)| = 1+6+30+150+750 = 937, |B_5| > 1000
  }
}

TEST_CASE("word metric") {
  auto f2 = parse_group("free(2)");
  CHECK(word_metric(identity(f2), normal_form(f2, "a"), 10) == 1);
  auto z2 = parse_group("free_abelian(2)");
  CHECK(word_metric(identity(z2), normal_form(z2, "a^3 b^4"), 10) == 7);
  CHECK(!word_metric(identity(z2), normal_form(z2, "a^30"), 10).has_value());
}

TEST_CASE("BS(1,2) word lengths match a BFS in the affine representation") {
  // x -> 2^k x + b/2^S with S large enough for the radius: a = (0, 1), t = (1, 0).
  constexpr int S = 20;
  using Aff = std::pair<std::int64_t, std::int64_t>;  // (k, numerator over 2^S)
  auto mul = [](Aff f, Aff g) {  // f o g : x -> 2^kf (2^kg x + bg) + bf
    std::int64_t shifted = f.first >= 0 ? (g.second << f.first) : (g.second >> -f.first);
    return Aff{f.first + g.first, shifted + f.second};
  };
  const Aff gens[4] = {{0, 1LL << S}, {0, -(1LL << S)}, {1, 0}, {-1, 0}};
  std::map<Aff, int> dist{{{0, 0}, 0}};
  std::vector<Aff> frontier{{0, 0}};
  for (int r = 1; r <= 8; ++r) {
    std::vector<Aff> next;
    for (auto x : frontier)
      for (auto s : gens) {
        Aff y = mul(x, s);
        if (dist.emplace(y, r).second) next.push_back(y);
      }
    frontier = next;
  }
  auto bs = parse_group("baumslag_solitar(1,2)");
  Ball b = ball(bs, 8);
  CHECK(b.size() == dist.size());
  for (int k = 1; k <= 8; ++k) {
    auto g = normal_form(bs, Word{{0, k}});
    auto expected = dist.at(Aff{0, static_cast<std::int64_t>(k) << S});
    CHECK(word_metric(identity(bs), g, 16) == expected);
  }
  CHECK(word_metric(identity(bs), normal_form(bs, "a^4"), 16) == 4);
}

TEST_CASE("metric axioms on sampled triples in Ball(6)") {
  std::mt19937_64 rng(99);
  for (const std::string spec : {"free(2)", "baumslag_solitar(1,2)", "euclidean_triangle_333",
                                 "free_product(free_abelian(2),free(1))"}) {
    CAPTURE(spec);
    auto g = parse_group(spec);
    Ball b = ball(g, 6);
    std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
    for (int trial = 0; trial < 60; ++trial) {
      GroupElement x(g, b.element(pick(rng))), y(g, b.element(pick(rng))), z(g, b.element(pick(rng)));
      auto dxy = *word_metric(x, y, 12), dyx = *word_metric(y, x, 12);
      auto dyz = *word_metric(y, z, 12), dxz = *word_metric(x, z, 12);
      CHECK(dxy == dyx);
      CHECK(dxz <= dxy + dyz);
      CHECK((dxy == 0) == (x == y));
    }
  }
}
