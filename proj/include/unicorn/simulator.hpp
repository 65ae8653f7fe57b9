#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "unicorn/graph.hpp"
#include "unicorn/rng.hpp"

namespace unicorn {

// Deterministic oracle for one conversation session: answers follow strictly
// from the ground-truth target item. Repeat asks raise, since candidate
// pruning makes them impossible for a correct agent.
class SimulatedUser {
 public:
  SimulatedUser(const KnowledgeGraph& g, int32_t user, int32_t target);

  bool respond_ask(int32_t attr);

  struct RecommendResponse {
    bool accepted = false;
    int position = 0;  // 1-based rank of the target when accepted
  };
  RecommendResponse respond_recommend(const std::vector<int32_t>& items);

  int32_t user() const { return user_; }
  int32_t target() const { return target_; }
  const std::vector<int32_t>& oracle_attrs() const { return oracle_attrs_; }

 private:
  int32_t user_, target_;
  std::vector<int32_t> oracle_attrs_;  // sorted
  std::vector<int32_t> asked_;         // sorted
};

// Endless source of (user, target) session pairs. Training streams reshuffle
// on every full pass; evaluation streams keep the given order.
class SessionStream {
 public:
  SessionStream(std::vector<std::pair<int32_t, int32_t>> pairs, uint64_t seed, bool shuffle);

  std::pair<int32_t, int32_t> next();
  size_t session_count() const { return pairs_.size(); }

 private:
  std::vector<std::pair<int32_t, int32_t>> pairs_;
  Rng rng_;
  size_t pos_ = 0;
  bool shuffle_;
};

}  // namespace unicorn
