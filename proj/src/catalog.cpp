#include "coarsekit/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "coarsekit/errors.hpp"
#include "checked_math.hpp"

namespace coarsekit {

namespace {

std::vector<std::string> letter_names(int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) {
    if (count <= 26)
      out.emplace_back(1, static_cast<char>('a' + i));
    else
      out.push_back("x" + std::to_string(i + 1));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- free group

FreeGroup::FreeGroup(int k) : Group(letter_names(k)), k_(k) {
  if (k < 0) throw InputError("free(k) needs k >= 0");
}

std::string FreeGroup::id() const { return "free(" + std::to_string(k_) + ")"; }

void FreeGroup::right_multiply(NormalForm& g, int generator, std::int64_t exponent) const {
  const std::int64_t letter = exponent > 0 ? generator + 1 : -(generator + 1);
  for (std::int64_t i = 0; i < std::llabs(exponent); ++i) {
    if (!g.empty() && g.back() == -letter)
      g.pop_back();
    else
      g.push_back(letter);
  }
}

Word FreeGroup::to_word(const NormalForm& g) const {
  Word w;
  for (std::int64_t letter : g) {
    int gen = static_cast<int>(std::llabs(letter) - 1);
    std::int64_t e = letter > 0 ? 1 : -1;
    if (!w.empty() && w.back().generator == gen && (w.back().exponent > 0) == (e > 0))
      w.back().exponent += e;
    else
      w.push_back({gen, e});
  }
  return w;
}

// ------------------------------------------------------- free abelian group

FreeAbelianGroup::FreeAbelianGroup(int n) : Group(letter_names(n)), n_(n) {
  if (n < 0) throw InputError("free_abelian(n) needs n >= 0");
}

std::string FreeAbelianGroup::id() const { return "free_abelian(" + std::to_string(n_) + ")"; }

void FreeAbelianGroup::right_multiply(NormalForm& g, int generator, std::int64_t exponent) const {
  auto& slot = g[static_cast<std::size_t>(generator)];
  slot = detail::checked_add(slot, exponent);
}

Word FreeAbelianGroup::to_word(const NormalForm& g) const {
  Word w;
  for (int i = 0; i < n_; ++i)
    if (g[static_cast<std::size_t>(i)] != 0) w.push_back({i, g[static_cast<std::size_t>(i)]});
  return w;
}

std::optional<std::int64_t> FreeAbelianGroup::word_length(const NormalForm& g) const {
  std::int64_t total = 0;
  for (std::int64_t v : g) total = detail::checked_add(total, std::llabs(v));
  return total;
}

// ------------------------------------------------------ Baumslag-Solitar

BaumslagSolitarGroup::BaumslagSolitarGroup(std::int64_t m, std::int64_t n)
    : Group({"a", "t"}), m_(m), n_(n) {
  if (m < 1 || n < 1) throw InputError("baumslag_solitar(m,n) needs m,n >= 1");
}

std::string BaumslagSolitarGroup::id() const {
  return "baumslag_solitar(" + std::to_string(m_) + "," + std::to_string(n_) + ")";
}

void BaumslagSolitarGroup::multiply_t(NormalForm& g, int sign) const {
  // a^c t = a^r t a^{q m}  (c = q n + r)      using a^n t = t a^m
  // a^c t^-1 = a^r t^-1 a^{q n}  (c = q m + r) using a^m t^-1 = t^-1 a^n
  const std::int64_t c = g[0];
  const std::int64_t mod = sign > 0 ? n_ : m_;
  const std::int64_t mult = sign > 0 ? m_ : n_;
  const std::int64_t q = detail::floor_div(c, mod);
  const std::int64_t r = c - q * mod;
  const std::size_t k = t_length(g);
  if (k > 0 && g.back() == -sign && r == 0) {
    // pinch t^{-sign} a^{q*mod} t^{sign}
    const std::int64_t prev_r = g[g.size() - 2];
    g.pop_back();
    g.pop_back();
    g[0] = detail::checked_add(prev_r, detail::checked_mul(q, mult));
  } else {
    g.push_back(r);
    g.push_back(sign);
    g[0] = detail::checked_mul(q, mult);
  }
}

void BaumslagSolitarGroup::right_multiply(NormalForm& g, int generator, std::int64_t exponent) const {
  if (generator == kA) {
    g[0] = detail::checked_add(g[0], exponent);
    return;
  }
  const int sign = exponent > 0 ? 1 : -1;
  for (std::int64_t i = 0; i < std::llabs(exponent); ++i) multiply_t(g, sign);
}

Word BaumslagSolitarGroup::to_word(const NormalForm& g) const {
  Word w;
  for (std::size_t i = 1; i + 1 < g.size(); i += 2) {
    const std::int64_t r = g[i], e = g[i + 1];
    if (r != 0) w.push_back({kA, r});
    if (!w.empty() && w.back().generator == kT && (w.back().exponent > 0) == (e > 0))
      w.back().exponent += e;
    else
      w.push_back({kT, e});
  }
  if (g[0] != 0) w.push_back({kA, g[0]});
  return w;
}

// ------------------------------------------------------------ direct product

std::vector<std::string> product_generator_names(const Group& left, const Group& right) {
  std::vector<std::string> names = left.generator_names();
  for (const auto& name : right.generator_names()) {
    std::string candidate = name;
    while (std::find(names.begin(), names.end(), candidate) != names.end()) candidate += "_2";
    names.push_back(candidate);
  }
  return names;
}

DirectProduct::DirectProduct(MarkedGroup left, MarkedGroup right)
    : Group(product_generator_names(*left, *right)), left_(std::move(left)), right_(std::move(right)) {}

std::string DirectProduct::id() const { return "direct_product(" + left_->id() + "," + right_->id() + ")"; }

NormalForm DirectProduct::identity() const { return join(left_->identity(), right_->identity()); }

std::pair<NormalForm, NormalForm> DirectProduct::split(const NormalForm& g) const {
  const auto nl = static_cast<std::size_t>(g[0]);
  return {NormalForm(g.begin() + 1, g.begin() + 1 + static_cast<std::ptrdiff_t>(nl)),
          NormalForm(g.begin() + 1 + static_cast<std::ptrdiff_t>(nl), g.end())};
}

NormalForm DirectProduct::join(const NormalForm& left, const NormalForm& right) const {
  NormalForm g;
  g.reserve(1 + left.size() + right.size());
  g.push_back(static_cast<std::int64_t>(left.size()));
  g.insert(g.end(), left.begin(), left.end());
  g.insert(g.end(), right.begin(), right.end());
  return g;
}

std::pair<int, int> DirectProduct::locate(int generator) const {
  if (generator < left_->rank()) return {0, generator};
  return {1, generator - left_->rank()};
}

void DirectProduct::right_multiply(NormalForm& g, int generator, std::int64_t exponent) const {
  auto [factor, local] = locate(generator);
  auto [l, r] = split(g);
  if (factor == 0)
    left_->right_multiply(l, local, exponent);
  else
    right_->right_multiply(r, local, exponent);
  g = join(l, r);
}

Word DirectProduct::to_word(const NormalForm& g) const {
  auto [l, r] = split(g);
  Word w = left_->to_word(l);
  for (auto s : right_->to_word(r)) {
    s.generator += left_->rank();
    w.push_back(s);
  }
  return w;
}

std::optional<std::int64_t> DirectProduct::word_length(const NormalForm& g) const {
  auto [l, r] = split(g);
  auto a = left_->word_length(l);
  auto b = right_->word_length(r);
  if (!a || !b) return std::nullopt;
  return *a + *b;
}

bool DirectProduct::is_involution(int generator) const {
  auto [factor, local] = locate(generator);
  return factor == 0 ? left_->is_involution(local) : right_->is_involution(local);
}

// -------------------------------------------------------------- free product

FreeProduct::FreeProduct(MarkedGroup left, MarkedGroup right)
    : Group(product_generator_names(*left, *right)), left_(std::move(left)), right_(std::move(right)) {}

std::string FreeProduct::id() const { return "free_product(" + left_->id() + "," + right_->id() + ")"; }

std::pair<int, int> FreeProduct::locate(int generator) const {
  if (generator < left_->rank()) return {0, generator};
  return {1, generator - left_->rank()};
}

std::vector<FreeProduct::Piece> FreeProduct::decode(const NormalForm& g) const {
  std::vector<Piece> pieces;
  const auto count = static_cast<std::size_t>(g[0]);
  std::size_t pos = 1;
  for (std::size_t i = 0; i < count; ++i) {
    const int factor = static_cast<int>(g[pos]);
    const auto len = static_cast<std::size_t>(g[pos + 1]);
    pieces.push_back({factor, NormalForm(g.begin() + static_cast<std::ptrdiff_t>(pos + 2),
                                         g.begin() + static_cast<std::ptrdiff_t>(pos + 2 + len))});
    pos += 2 + len;
  }
  return pieces;
}

NormalForm FreeProduct::encode(const std::vector<Piece>& pieces) const {
  NormalForm g{static_cast<std::int64_t>(pieces.size())};
  for (const auto& p : pieces) {
    g.push_back(p.factor);
    g.push_back(static_cast<std::int64_t>(p.form.size()));
    g.insert(g.end(), p.form.begin(), p.form.end());
  }
  return g;
}

void FreeProduct::right_multiply(NormalForm& g, int generator, std::int64_t exponent) const {
  auto [factor, local] = locate(generator);
  const Group& F = *this->factor(factor);
  auto pieces = decode(g);
  if (!pieces.empty() && pieces.back().factor == factor) {
    F.right_multiply(pieces.back().form, local, exponent);
    if (F.is_identity(pieces.back().form)) pieces.pop_back();
  } else {
    NormalForm f = F.identity();
    F.right_multiply(f, local, exponent);
    if (!F.is_identity(f)) pieces.push_back({factor, std::move(f)});
  }
  g = encode(pieces);
}

Word FreeProduct::to_word(const NormalForm& g) const {
  Word w;
  for (const auto& p : decode(g)) {
    for (auto s : factor(p.factor)->to_word(p.form)) {
      if (p.factor == 1) s.generator += left_->rank();
      w.push_back(s);
    }
  }
  return w;
}

std::optional<std::int64_t> FreeProduct::word_length(const NormalForm& g) const {
  std::int64_t total = 0;
  for (const auto& p : decode(g)) {
    auto len = factor(p.factor)->word_length(p.form);
    if (!len) return std::nullopt;
    total += *len;
  }
  return total;
}

bool FreeProduct::is_involution(int generator) const {
  auto [factor, local] = locate(generator);
  return this->factor(factor)->is_involution(local);
}

// ----------------------------------------------------------- triangle group

Eisenstein operator+(Eisenstein a, Eisenstein b) {
  return {detail::checked_add(a.x, b.x), detail::checked_add(a.y, b.y)};
}
Eisenstein operator-(Eisenstein a, Eisenstein b) {
  return {detail::checked_sub(a.x, b.x), detail::checked_sub(a.y, b.y)};
}
Eisenstein operator*(Eisenstein a, Eisenstein b) {
  // (x1 + y1 w)(x2 + y2 w) with w^2 = -1 - w
  using detail::checked_mul;
  using detail::checked_sub;
  using detail::checked_add;
  const std::int64_t yy = checked_mul(a.y, b.y);
  return {checked_sub(checked_mul(a.x, b.x), yy),
          checked_sub(checked_add(checked_mul(a.x, b.y), checked_mul(a.y, b.x)), yy)};
}
Eisenstein conj(Eisenstein a) { return {a.x - a.y, -a.y}; }

Eisenstein unit_power(int k) {
  static constexpr std::array<Eisenstein, 6> kUnits{
      Eisenstein{1, 0}, Eisenstein{1, 1}, Eisenstein{0, 1},
      Eisenstein{-1, 0}, Eisenstein{-1, -1}, Eisenstein{0, -1}};
  return kUnits[static_cast<std::size_t>(((k % 6) + 6) % 6)];
}

TriangleGroup333::TriangleGroup333() : Group({"a", "b", "c"}) {}

TriangleGroup333::Isometry TriangleGroup333::decode(const NormalForm& g) {
  return {static_cast<int>(g[0]), static_cast<int>(g[1]), {g[2], g[3]}};
}

NormalForm TriangleGroup333::encode(const Isometry& f) {
  return {f.unit, f.reflect, f.shift.x, f.shift.y};
}

TriangleGroup333::Isometry TriangleGroup333::compose(const Isometry& f, const Isometry& g) {
  // f(g(z)) = u_f conj^{e_f}(u_g conj^{e_g}(z) + v_g) + v_f
  Isometry out;
  out.unit = (((f.unit + (f.reflect ? -g.unit : g.unit)) % 6) + 6) % 6;
  out.reflect = f.reflect ^ g.reflect;
  Eisenstein vg = f.reflect ? conj(g.shift) : g.shift;
  out.shift = unit_power(f.unit) * vg + f.shift;
  return out;
}

Eisenstein TriangleGroup333::apply(const Isometry& f, Eisenstein z) {
  return unit_power(f.unit) * (f.reflect ? conj(z) : z) + f.shift;
}

const TriangleGroup333::Isometry& TriangleGroup333::reflection(int generator) {
  // a: z -> conj z          (side 0 -- 1)
  // b: z -> w conj z        (side 0 -- 1+w)
  // c: z -> w^2 conj z + 2 + w   (side 1 -- 1+w)
  static const std::array<Isometry, 3> kReflections{
      Isometry{0, 1, {0, 0}}, Isometry{2, 1, {0, 0}}, Isometry{4, 1, {2, 1}}};
  return kReflections[static_cast<std::size_t>(generator)];
}

namespace {

// Sign of the orientation of (p, q, r) in Z[w] coordinates; a positive multiple
// of the Euclidean cross product.
int orientation(Eisenstein p, Eisenstein q, Eisenstein r) {
  const Eisenstein u = q - p, v = r - p;
  const std::int64_t cross = detail::checked_sub(detail::checked_mul(u.x, v.y), detail::checked_mul(u.y, v.x));
  return (cross > 0) - (cross < 0);
}

Eisenstein scale3(Eisenstein z) { return {3 * z.x, 3 * z.y}; }

}  // namespace

int TriangleGroup333::descent(const Isometry& f) {
  // Base chamber vertices 0, 1, 1+w; wall s is the side opposite kOpposite[s].
  static constexpr std::array<Eisenstein, 3> kVertices{Eisenstein{0, 0}, Eisenstein{1, 0}, Eisenstein{1, 1}};
  static constexpr std::array<std::array<int, 3>, 3> kWalls{{{0, 1, 2}, {0, 2, 1}, {1, 2, 0}}};
  const Eisenstein centroid3{2, 1};  // 3 * (0 + 1 + (1+w)) / 3
  for (int s = 0; s < 3; ++s) {
    const auto& wall = kWalls[static_cast<std::size_t>(s)];
    const Eisenstein p = scale3(apply(f, kVertices[static_cast<std::size_t>(wall[0])]));
    const Eisenstein q = scale3(apply(f, kVertices[static_cast<std::size_t>(wall[1])]));
    const Eisenstein opp = scale3(apply(f, kVertices[static_cast<std::size_t>(wall[2])]));
    if (orientation(p, q, opp) * orientation(p, q, centroid3) < 0) return s;
  }
  return -1;
}

void TriangleGroup333::right_multiply(NormalForm& g, int generator, std::int64_t exponent) const {
  if (exponent % 2 == 0) return;
  g = encode(compose(decode(g), reflection(generator)));
}

Word TriangleGroup333::to_word(const NormalForm& g) const {
  Isometry f = decode(g);
  std::vector<int> steps;
  for (int s = descent(f); s >= 0; s = descent(f)) {
    f = compose(f, reflection(s));
    steps.push_back(s);
  }
  Word w;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) w.push_back({*it, 1});
  return w;
}

std::optional<std::int64_t> TriangleGroup333::word_length(const NormalForm& g) const {
  Isometry f = decode(g);
  std::int64_t len = 0;
  for (int s = descent(f); s >= 0; s = descent(f)) {
    f = compose(f, reflection(s));
    ++len;
  }
  return len;
}

// ------------------------------------------------------------------ factory

MarkedGroup make_free(int k) { return std::make_shared<FreeGroup>(k); }
MarkedGroup make_free_abelian(int n) { return std::make_shared<FreeAbelianGroup>(n); }
MarkedGroup make_baumslag_solitar(std::int64_t m, std::int64_t n) {
  return std::make_shared<BaumslagSolitarGroup>(m, n);
}
MarkedGroup make_direct_product(MarkedGroup left, MarkedGroup right) {
  return std::make_shared<DirectProduct>(std::move(left), std::move(right));
}
MarkedGroup make_free_product(MarkedGroup left, MarkedGroup right) {
  return std::make_shared<FreeProduct>(std::move(left), std::move(right));
}
MarkedGroup make_triangle_group() { return std::make_shared<TriangleGroup333>(); }

namespace {

class SpecParser {
 public:
  explicit SpecParser(std::string_view text) : text_(text) {}

  MarkedGroup parse() {
    MarkedGroup g = group();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return g;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw InputError("bad group spec '" + std::string(text_) + "': " + why + " at offset " +
                     std::to_string(pos_));
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }
  std::int64_t integer() {
    skip_ws();
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc{}) fail("expected integer");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }
  MarkedGroup group() {
    const std::string name = ident();
    if (name == "euclidean_triangle_333") return make_triangle_group();
    expect('(');
    MarkedGroup out;
    if (name == "free") {
      out = make_free(static_cast<int>(integer()));
    } else if (name == "free_abelian") {
      out = make_free_abelian(static_cast<int>(integer()));
    } else if (name == "baumslag_solitar") {
      std::int64_t m = integer();
      expect(',');
      out = make_baumslag_solitar(m, integer());
    } else if (name == "direct_product" || name == "free_product") {
      MarkedGroup left = group();
      expect(',');
      MarkedGroup right = group();
      out = name == "direct_product" ? make_direct_product(left, right) : make_free_product(left, right);
    } else {
      fail("unknown catalog group '" + name + "'");
    }
    expect(')');
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

MarkedGroup parse_group(std::string_view spec) { return SpecParser(spec).parse(); }

}  // namespace coarsekit
