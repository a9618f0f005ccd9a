#pragma once

// The five-query, two-channel worked example used by the golden tests.

#include <vector>

#include "fpbs/model.hpp"

namespace fpbs::testing {

inline std::vector<ItemId> items(std::initializer_list<int> ids) {
  std::vector<ItemId> out;
  for (int i : ids) out.emplace_back(i);
  return out;
}

inline std::vector<Query> running_example() {
  return {
      {1, 1, items({2, 5, 7})},
      {2, 2, items({2, 3, 4})},
      {3, 3, items({2, 5, 8})},
      {4, 4, items({1, 3, 4, 5})},
      {5, 5, items({1, 3, 6})},
  };
}

inline constexpr int kRunningExampleChannels = 2;

}  // namespace fpbs::testing
