#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "coarsekit/group.hpp"

namespace coarsekit {

inline constexpr std::size_t kDefaultNodeBudget = 1'000'000;

// Closed word-metric ball N_r(e). Elements are stored in breadth-first order;
// the BFS tree follows the generator order, so the path to the root spells
// the shortlex-least geodesic word of each element.
class Ball;
namespace detail {
Ball build_ball(const MarkedGroup& group, int radius, std::size_t node_budget, bool truncate);
}

class Ball {
 public:
  const MarkedGroup& group() const { return group_; }
  int radius() const { return radius_; }
  std::size_t size() const { return elements_.size(); }

  const std::vector<NormalForm>& elements() const { return elements_; }
  const NormalForm& element(std::size_t i) const { return elements_[i]; }
  int length(std::size_t i) const { return lengths_[i]; }

  std::optional<std::size_t> index_of(const NormalForm& g) const;
  bool contains(const NormalForm& g) const { return index_of(g).has_value(); }
  // Word length if g lies in the ball.
  std::optional<int> length_of(const NormalForm& g) const;

  // Number of elements of length <= r (r <= radius).
  std::size_t count_within(int r) const;
  // Elements of length exactly r.
  std::size_t sphere_size(int r) const;

  // Shortlex-least geodesic word for element i.
  Word shortlex_word(std::size_t i) const;

  friend Ball detail::build_ball(const MarkedGroup& group, int radius, std::size_t node_budget, bool truncate);

 private:
  MarkedGroup group_;
  int radius_ = 0;
  std::vector<NormalForm> elements_;
  std::vector<int> lengths_;
  std::vector<std::int64_t> parent_;
  std::vector<Letter> via_;
  std::vector<std::size_t> layer_end_;  // layer_end_[r] = count_within(r)
  std::unordered_map<NormalForm, std::size_t, NormalFormHash> index_;
};

// Breadth-first enumeration of Ball(radius) around the identity. Throws
// ResourceError carrying the largest completed radius when more than
// `node_budget` elements would be stored.
Ball ball(const MarkedGroup& group, int radius, std::size_t node_budget = kDefaultNodeBudget);

// Largest Ball(r), r <= max_radius, that fits in the node budget.
Ball ball_within_budget(const MarkedGroup& group, int max_radius, std::size_t node_budget = kDefaultNodeBudget);

}  // namespace coarsekit
