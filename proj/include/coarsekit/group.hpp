#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coarsekit {

// Canonical element encoding. Two words give the same NormalForm iff they
// represent the same group element; the layout is group specific.
using NormalForm = std::vector<std::int64_t>;

struct NormalFormHash {
  std::size_t operator()(const NormalForm& nf) const noexcept;
};

// Byte-string serialization of a normal form (little endian, 8 bytes per
// entry). Used wherever a totally ordered canonical key is needed.
std::string canonical_key(const NormalForm& nf);

// A generator raised to a nonzero power.
struct Syllable {
  int generator = 0;
  std::int64_t exponent = 1;
  friend bool operator==(const Syllable&, const Syllable&) = default;
};
using Word = std::vector<Syllable>;

// One element of the symmetric generating set.
struct Letter {
  int generator = 0;
  int sign = 1;
  friend bool operator==(const Letter&, const Letter&) = default;
};

class Group {
 public:
  virtual ~Group() = default;

  // Catalog identifier, e.g. "baumslag_solitar(1,2)".
  virtual std::string id() const = 0;
  virtual NormalForm identity() const = 0;
  // g <- g * generator^exponent
  virtual void right_multiply(NormalForm& g, int generator, std::int64_t exponent) const = 0;
  // Some word evaluating to g (the normal-form word, not necessarily geodesic).
  virtual Word to_word(const NormalForm& g) const = 0;
  // Exact word length when the group has a closed form for it.
  virtual std::optional<std::int64_t> word_length(const NormalForm&) const {
    return std::nullopt;
  }
  virtual bool is_involution(int /*generator*/) const { return false; }

  const std::vector<std::string>& generator_names() const { return names_; }
  int rank() const { return static_cast<int>(names_.size()); }

  NormalForm evaluate(const Word& w) const;
  NormalForm multiply(const NormalForm& a, const NormalForm& b) const;
  NormalForm inverse(const NormalForm& g) const;
  bool is_identity(const NormalForm& g) const { return g == identity(); }

  // Symmetric generating set in shortlex order: g0, g0^-1, g1, g1^-1, ...
  // (involutions contribute a single letter).
  std::vector<Letter> letters() const;

  // Whitespace separated tokens: NAME, NAME^k, NAME^-1, NAME⁻¹. "e", "1" and
  // the empty string denote the identity. Throws InputError.
  Word parse_word(std::string_view text) const;
  std::string format_word(const Word& w) const;
  std::string format(const NormalForm& g) const { return format_word(to_word(g)); }

  int generator_index(std::string_view name) const;  // -1 when unknown

 protected:
  explicit Group(std::vector<std::string> names) : names_(std::move(names)) {}

 private:
  std::vector<std::string> names_;
};

using MarkedGroup = std::shared_ptr<const Group>;

// An element together with the group it belongs to.
class GroupElement {
 public:
  GroupElement(MarkedGroup owner, NormalForm nf) : owner_(std::move(owner)), nf_(std::move(nf)) {}

  const MarkedGroup& owner() const { return owner_; }
  const NormalForm& normal_form() const { return nf_; }
  std::string key() const { return canonical_key(nf_); }
  std::string to_string() const { return owner_->format(nf_); }

  // Cached word length; computed on demand (closed form or BFS up to `budget`).
  std::optional<std::int64_t> word_length(int budget = 64) const;

  friend bool operator==(const GroupElement& a, const GroupElement& b) {
    return a.owner_ == b.owner_ && a.nf_ == b.nf_;
  }

 private:
  MarkedGroup owner_;
  NormalForm nf_;
  mutable std::optional<std::int64_t> length_cache_;
};

GroupElement normal_form(const MarkedGroup& group, std::string_view word);
GroupElement normal_form(const MarkedGroup& group, const Word& word);
GroupElement identity(const MarkedGroup& group);
// Throws InputError for elements of different groups.
GroupElement multiply(const GroupElement& g, const GroupElement& h);
GroupElement inverse(const GroupElement& g);

// Word-metric distance d(g,h) = |g^-1 h|, or nullopt when it exceeds `budget`.
std::optional<std::int64_t> word_metric(const GroupElement& g, const GroupElement& h, int budget);

// Word length of a normal form: closed form when available, otherwise a BFS
// from the identity that stops at `budget`.
std::optional<std::int64_t> word_length(const Group& group, const NormalForm& g, int budget);

}  // namespace coarsekit
