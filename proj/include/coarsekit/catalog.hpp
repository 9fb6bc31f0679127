#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coarsekit/group.hpp"

namespace coarsekit {

// Free group on k generators. Normal form: freely reduced word, letter
// +(i+1) for generator i and -(i+1) for its inverse.
class FreeGroup final : public Group {
 public:
  explicit FreeGroup(int k);
  std::string id() const override;
  NormalForm identity() const override { return {}; }
  void right_multiply(NormalForm& g, int generator, std::int64_t exponent) const override;
  Word to_word(const NormalForm& g) const override;
  std::optional<std::int64_t> word_length(const NormalForm& g) const override {
    return static_cast<std::int64_t>(g.size());
  }
  int free_rank() const { return k_; }

 private:
  int k_;
};

// Z^n with the standard basis. Normal form: exponent vector.
class FreeAbelianGroup final : public Group {
 public:
  explicit FreeAbelianGroup(int n);
  std::string id() const override;
  NormalForm identity() const override { return NormalForm(static_cast<std::size_t>(n_), 0); }
  void right_multiply(NormalForm& g, int generator, std::int64_t exponent) const override;
  Word to_word(const NormalForm& g) const override;
  std::optional<std::int64_t> word_length(const NormalForm& g) const override;
  int dimension() const { return n_; }

 private:
  int n_;
};

// BS(m,n) = <a, t | t a^m t^-1 = a^n>, m,n >= 1.
//
// Britton normal form a^{r1} t^{e1} a^{r2} t^{e2} ... a^{rk} t^{ek} a^c with
// 0 <= r_i < n when e_i = +1, 0 <= r_i < m when e_i = -1, and no pinch
// t^{e} a^{0} t^{-e} between consecutive letters.
// Encoding: [c, r1, e1, r2, e2, ..., rk, ek].
class BaumslagSolitarGroup final : public Group {
 public:
  BaumslagSolitarGroup(std::int64_t m, std::int64_t n);
  std::string id() const override;
  NormalForm identity() const override { return {0}; }
  void right_multiply(NormalForm& g, int generator, std::int64_t exponent) const override;
  Word to_word(const NormalForm& g) const override;

  std::int64_t m() const { return m_; }
  std::int64_t n() const { return n_; }
  static constexpr int kA = 0;
  static constexpr int kT = 1;

  // Number of stable letters in the normal form.
  static std::size_t t_length(const NormalForm& g) { return (g.size() - 1) / 2; }

 private:
  void multiply_t(NormalForm& g, int sign) const;
  std::int64_t m_;
  std::int64_t n_;
};

// Generator names of the right factor that collide with the left factor get
// a "_2" suffix.
std::vector<std::string> product_generator_names(const Group& left, const Group& right);

// G1 x G2 with the union of the factor generating sets.
// Encoding: [size of left form, left form..., right form...].
class DirectProduct final : public Group {
 public:
  DirectProduct(MarkedGroup left, MarkedGroup right);
  std::string id() const override;
  NormalForm identity() const override;
  void right_multiply(NormalForm& g, int generator, std::int64_t exponent) const override;
  Word to_word(const NormalForm& g) const override;
  std::optional<std::int64_t> word_length(const NormalForm& g) const override;
  bool is_involution(int generator) const override;

  const MarkedGroup& left() const { return left_; }
  const MarkedGroup& right() const { return right_; }
  std::pair<NormalForm, NormalForm> split(const NormalForm& g) const;
  NormalForm join(const NormalForm& left, const NormalForm& right) const;
  // Which factor a generator index belongs to (0 or 1) and its local index.
  std::pair<int, int> locate(int generator) const;

 private:
  MarkedGroup left_;
  MarkedGroup right_;
};

// G1 * G2. Normal form: alternating sequence of nontrivial factor elements.
// Encoding: [count, (factor, size, form...)...].
class FreeProduct final : public Group {
 public:
  FreeProduct(MarkedGroup left, MarkedGroup right);
  std::string id() const override;
  NormalForm identity() const override { return {0}; }
  void right_multiply(NormalForm& g, int generator, std::int64_t exponent) const override;
  Word to_word(const NormalForm& g) const override;
  std::optional<std::int64_t> word_length(const NormalForm& g) const override;
  bool is_involution(int generator) const override;

  struct Piece {
    int factor;
    NormalForm form;
  };
  std::vector<Piece> decode(const NormalForm& g) const;
  NormalForm encode(const std::vector<Piece>& pieces) const;
  const MarkedGroup& factor(int i) const { return i == 0 ? left_ : right_; }
  std::pair<int, int> locate(int generator) const;

 private:
  MarkedGroup left_;
  MarkedGroup right_;
};

// Exact element of Z[w], w a primitive cube root of unity: x + y*w.
struct Eisenstein {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend bool operator==(const Eisenstein&, const Eisenstein&) = default;
};
Eisenstein operator+(Eisenstein a, Eisenstein b);
Eisenstein operator-(Eisenstein a, Eisenstein b);
Eisenstein operator*(Eisenstein a, Eisenstein b);
Eisenstein conj(Eisenstein a);
// z^k for z = 1 + w = exp(i*pi/3).
Eisenstein unit_power(int k);

// The (3,3,3) Euclidean triangle group <a,b,c | a^2,b^2,c^2,(ab)^3,(ac)^3,(bc)^3>
// acting by reflections in the sides of the triangle with vertices 0, 1, 1+w.
// An element is the affine isometry  z -> u * conj^eps(z) + v  with u a sixth
// root of unity. Encoding: [k, eps, v.x, v.y] with u = (1+w)^k.
class TriangleGroup333 final : public Group {
 public:
  TriangleGroup333();
  std::string id() const override { return "euclidean_triangle_333"; }
  NormalForm identity() const override { return {0, 0, 0, 0}; }
  void right_multiply(NormalForm& g, int generator, std::int64_t exponent) const override;
  Word to_word(const NormalForm& g) const override;
  std::optional<std::int64_t> word_length(const NormalForm& g) const override;
  bool is_involution(int) const override { return true; }

  struct Isometry {
    int unit = 0;       // u = (1+w)^unit
    int reflect = 0;    // eps
    Eisenstein shift;   // v
  };
  static Isometry decode(const NormalForm& g);
  static NormalForm encode(const Isometry& f);
  static Isometry compose(const Isometry& f, const Isometry& g);  // f o g
  static Eisenstein apply(const Isometry& f, Eisenstein z);
  static const Isometry& reflection(int generator);

 private:
  // A generator whose wall separates the base chamber from f(base chamber),
  // or -1 for the identity.
  static int descent(const Isometry& f);
};

MarkedGroup make_free(int k);
MarkedGroup make_free_abelian(int n);
MarkedGroup make_baumslag_solitar(std::int64_t m, std::int64_t n);
MarkedGroup make_direct_product(MarkedGroup left, MarkedGroup right);
MarkedGroup make_free_product(MarkedGroup left, MarkedGroup right);
MarkedGroup make_triangle_group();

// Parses catalog ids such as "free(2)", "free_abelian(3)",
// "baumslag_solitar(1,2)", "direct_product(free(1),free_abelian(2))",
// "free_product(free(1),free(1))", "euclidean_triangle_333". Throws InputError.
MarkedGroup parse_group(std::string_view spec);

}  // namespace coarsekit
