#include "coarsekit/ball.hpp"

#include <algorithm>

#include "coarsekit/errors.hpp"

namespace coarsekit {

std::optional<std::size_t> Ball::index_of(const NormalForm& g) const {
  auto it = index_.find(g);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Ball::length_of(const NormalForm& g) const {
  auto i = index_of(g);
  if (!i) return std::nullopt;
  return lengths_[*i];
}

std::size_t Ball::count_within(int r) const {
  if (r < 0) return 0;
  return layer_end_[static_cast<std::size_t>(std::min(r, radius_))];
}

std::size_t Ball::sphere_size(int r) const { return count_within(r) - count_within(r - 1); }

Word Ball::shortlex_word(std::size_t i) const {
  std::vector<Letter> letters;
  for (auto j = static_cast<std::int64_t>(i); parent_[static_cast<std::size_t>(j)] >= 0;
       j = parent_[static_cast<std::size_t>(j)])
    letters.push_back(via_[static_cast<std::size_t>(j)]);
  Word w;
  for (auto it = letters.rbegin(); it != letters.rend(); ++it) {
    if (!w.empty() && w.back().generator == it->generator)
      w.back().exponent += it->sign;
    else
      w.push_back({it->generator, it->sign});
  }
  return w;
}

Ball ball(const MarkedGroup& group, int radius, std::size_t node_budget) {
  return detail::build_ball(group, radius, node_budget, false);
}

Ball ball_within_budget(const MarkedGroup& group, int max_radius, std::size_t node_budget) {
  return detail::build_ball(group, max_radius, node_budget, true);
}

namespace detail {

// Shared BFS. With `truncate` set, an exhausted budget drops the unfinished
// layer and returns the largest complete ball instead of throwing.
Ball build_ball(const MarkedGroup& group, int radius, std::size_t node_budget, bool truncate) {
  if (radius < 0) throw InputError("ball radius must be non-negative");
  Ball b;
  b.group_ = group;
  b.radius_ = radius;
  const auto letters = group->letters();
  b.elements_.push_back(group->identity());
  b.lengths_.push_back(0);
  b.parent_.push_back(-1);
  b.via_.push_back({});
  b.index_.emplace(group->identity(), 0);
  b.layer_end_.push_back(1);
  std::size_t layer_begin = 0;
  for (int r = 1; r <= radius; ++r) {
    const std::size_t layer_stop = b.elements_.size();
    for (std::size_t i = layer_begin; i < layer_stop; ++i) {
      for (const auto& l : letters) {
        NormalForm y = b.elements_[i];
        group->right_multiply(y, l.generator, l.sign);
        if (b.index_.count(y)) continue;
        if (b.elements_.size() >= node_budget) {
          if (truncate) {
            for (std::size_t k = layer_stop; k < b.elements_.size(); ++k) b.index_.erase(b.elements_[k]);
            b.elements_.resize(layer_stop);
            b.lengths_.resize(layer_stop);
            b.parent_.resize(layer_stop);
            b.via_.resize(layer_stop);
            b.radius_ = r - 1;
            return b;
          }
          throw ResourceError("ball enumeration exceeded node budget of " + std::to_string(node_budget) +
                                  " at radius " + std::to_string(r),
                              r - 1);
        }
        b.index_.emplace(y, b.elements_.size());
        b.elements_.push_back(std::move(y));
        b.lengths_.push_back(r);
        b.parent_.push_back(static_cast<std::int64_t>(i));
        b.via_.push_back(l);
      }
    }
    layer_begin = layer_stop;
    b.layer_end_.push_back(b.elements_.size());
  }
  return b;
}

}  // namespace detail

}  // namespace coarsekit
