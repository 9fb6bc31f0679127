#include "coarsekit/group.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <unordered_map>

#include "coarsekit/errors.hpp"

namespace coarsekit {

std::size_t NormalFormHash::operator()(const NormalForm& nf) const noexcept {
  // FNV-1a over the 64-bit words, then a final avalanche.
  std::uint64_t h = 1469598103934665603ULL;
  for (std::int64_t v : nf) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ULL;
    h ^= h >> 29;
  }
  h ^= nf.size();
  h *= 0x9E3779B97F4A7C15ULL;
  return static_cast<std::size_t>(h ^ (h >> 32));
}

std::string canonical_key(const NormalForm& nf) {
  std::string out(nf.size() * 8, '\0');
  for (std::size_t i = 0; i < nf.size(); ++i) {
    auto v = static_cast<std::uint64_t>(nf[i]);
    for (int b = 0; b < 8; ++b) out[i * 8 + b] = static_cast<char>((v >> (8 * b)) & 0xFF);
  }
  return out;
}

NormalForm Group::evaluate(const Word& w) const {
  NormalForm g = identity();
  for (const auto& s : w) {
    if (s.generator < 0 || s.generator >= rank()) throw InputError("generator index out of range");
    if (s.exponent != 0) right_multiply(g, s.generator, s.exponent);
  }
  return g;
}

NormalForm Group::multiply(const NormalForm& a, const NormalForm& b) const {
  NormalForm g = a;
  for (const auto& s : to_word(b)) right_multiply(g, s.generator, s.exponent);
  return g;
}

NormalForm Group::inverse(const NormalForm& g) const {
  Word w = to_word(g);
  NormalForm out = identity();
  for (auto it = w.rbegin(); it != w.rend(); ++it) right_multiply(out, it->generator, -it->exponent);
  return out;
}

std::vector<Letter> Group::letters() const {
  std::vector<Letter> out;
  for (int i = 0; i < rank(); ++i) {
    out.push_back({i, 1});
    if (!is_involution(i)) out.push_back({i, -1});
  }
  return out;
}

int Group::generator_index(std::string_view name) const {
  for (int i = 0; i < rank(); ++i)
    if (names_[static_cast<std::size_t>(i)] == name) return i;
  return -1;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

constexpr std::string_view kSuperscriptInverse = "⁻¹";  // ⁻¹

}  // namespace

Word Group::parse_word(std::string_view text) const {
  Word out;
  for (std::string_view tok : split_ws(text)) {
    if (tok == "e" || tok == "1") continue;
    std::string_view name = tok;
    std::int64_t exponent = 1;
    if (tok.size() > kSuperscriptInverse.size() &&
        tok.substr(tok.size() - kSuperscriptInverse.size()) == kSuperscriptInverse) {
      name = tok.substr(0, tok.size() - kSuperscriptInverse.size());
      exponent = -1;
    } else if (auto caret = tok.find('^'); caret != std::string_view::npos) {
      name = tok.substr(0, caret);
      std::string_view num = tok.substr(caret + 1);
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), exponent);
      if (ec != std::errc{} || ptr != num.data() + num.size())
        throw InputError("bad exponent in token '" + std::string(tok) + "'");
    }
    int gen = generator_index(name);
    if (gen < 0) throw InputError("unknown generator symbol '" + std::string(name) + "' for " + id());
    if (exponent == 0) continue;
    if (!out.empty() && out.back().generator == gen) {
      out.back().exponent += exponent;
      if (out.back().exponent == 0) out.pop_back();
    } else {
      out.push_back({gen, exponent});
    }
  }
  return out;
}

std::string Group::format_word(const Word& w) const {
  if (w.empty()) return "e";
  std::string out;
  for (const auto& s : w) {
    if (!out.empty()) out += ' ';
    out += names_[static_cast<std::size_t>(s.generator)];
    if (s.exponent != 1) out += "^" + std::to_string(s.exponent);
  }
  return out;
}

std::optional<std::int64_t> word_length(const Group& group, const NormalForm& target, int budget) {
  if (auto closed = group.word_length(target)) {
    if (*closed > budget) return std::nullopt;
    return closed;
  }
  // Bidirectional BFS: the first layer at which the two searches meet gives
  // the distance exactly.
  using Map = std::unordered_map<NormalForm, int, NormalFormHash>;
  const auto letters = group.letters();
  Map from_start{{group.identity(), 0}}, from_target{{target, 0}};
  if (from_start.count(target)) return 0;
  std::vector<NormalForm> front_start{group.identity()}, front_target{target};
  int depth_start = 0, depth_target = 0;
  constexpr std::size_t kNodeCap = 4'000'000;
  while (depth_start + depth_target < budget) {
    bool grow_start = front_start.size() <= front_target.size();
    auto& front = grow_start ? front_start : front_target;
    auto& mine = grow_start ? from_start : from_target;
    auto& other = grow_start ? from_target : from_start;
    int& depth = grow_start ? depth_start : depth_target;
    if (front.empty()) return std::nullopt;
    std::vector<NormalForm> next;
    bool met = false;
    for (const auto& x : front) {
      for (const auto& l : letters) {
        NormalForm y = x;
        group.right_multiply(y, l.generator, l.sign);
        if (mine.count(y)) continue;
        if (other.count(y)) met = true;
        mine.emplace(y, depth + 1);
        next.push_back(std::move(y));
      }
    }
    ++depth;
    if (met) return depth_start + depth_target;
    front = std::move(next);
    if (from_start.size() + from_target.size() > kNodeCap)
      throw ResourceError("word length search exceeded node cap", depth_start + depth_target);
  }
  return std::nullopt;
}

std::optional<std::int64_t> GroupElement::word_length(int budget) const {
  if (!length_cache_) {
    auto len = coarsekit::word_length(*owner_, nf_, budget);
    if (!len) return std::nullopt;
    length_cache_ = len;
  }
  if (*length_cache_ > budget) return std::nullopt;
  return length_cache_;
}

GroupElement normal_form(const MarkedGroup& group, std::string_view word) {
  return GroupElement(group, group->evaluate(group->parse_word(word)));
}

GroupElement normal_form(const MarkedGroup& group, const Word& word) {
  return GroupElement(group, group->evaluate(word));
}

GroupElement identity(const MarkedGroup& group) { return GroupElement(group, group->identity()); }

GroupElement multiply(const GroupElement& g, const GroupElement& h) {
  if (g.owner() != h.owner()) throw InputError("multiply: elements belong to different groups");
  return GroupElement(g.owner(), g.owner()->multiply(g.normal_form(), h.normal_form()));
}

GroupElement inverse(const GroupElement& g) {
  return GroupElement(g.owner(), g.owner()->inverse(g.normal_form()));
}

std::optional<std::int64_t> word_metric(const GroupElement& g, const GroupElement& h, int budget) {
  if (g.owner() != h.owner()) throw InputError("word_metric: elements belong to different groups");
  const Group& G = *g.owner();
  NormalForm x = G.multiply(G.inverse(g.normal_form()), h.normal_form());
  return word_length(G, x, budget);
}

}  // namespace coarsekit
