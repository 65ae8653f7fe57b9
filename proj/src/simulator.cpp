#include "unicorn/simulator.hpp"

#include <algorithm>
#include <stdexcept>

namespace unicorn {

SimulatedUser::SimulatedUser(const KnowledgeGraph& g, int32_t user, int32_t target)
    : user_(user), target_(target), oracle_attrs_(g.attrs_of_item(target)) {
  if (oracle_attrs_.empty()) throw std::invalid_argument("target item has no attributes");
}

bool SimulatedUser::respond_ask(int32_t attr) {
  auto it = std::lower_bound(asked_.begin(), asked_.end(), attr);
  if (it != asked_.end() && *it == attr)
    throw std::logic_error("attribute asked twice in one session: p:" + std::to_string(attr));
  asked_.insert(it, attr);
  return std::binary_search(oracle_attrs_.begin(), oracle_attrs_.end(), attr);
}

SimulatedUser::RecommendResponse SimulatedUser::respond_recommend(
    const std::vector<int32_t>& items) {
  if (items.empty()) throw std::invalid_argument("empty recommendation list");
  for (size_t i = 0; i < items.size(); ++i)
    if (items[i] == target_) return {true, static_cast<int>(i) + 1};
  return {false, 0};
}

SessionStream::SessionStream(std::vector<std::pair<int32_t, int32_t>> pairs, uint64_t seed,
                             bool shuffle)
    : pairs_(std::move(pairs)), rng_(seed), shuffle_(shuffle) {
  if (pairs_.empty()) throw std::invalid_argument("session stream needs at least one pair");
  if (shuffle_) rng_.shuffle(pairs_);
}

std::pair<int32_t, int32_t> SessionStream::next() {
  if (pos_ == pairs_.size()) {
    pos_ = 0;
    if (shuffle_) rng_.shuffle(pairs_);
  }
  return pairs_[pos_++];
}

}  // namespace unicorn
