#pragma once

// Hand-rolled random generators for property tests.

#include <algorithm>
#include <random>
#include <vector>

#include "fpbs/model.hpp"

namespace fpbs::testing {

/// n queries over a catalog of `catalog` items, sizes uniform in [1, qmax],
/// items uniform without replacement.
inline std::vector<Query> random_batch(std::mt19937_64& rng, int catalog, int n, int qmax) {
  std::vector<Query> out;
  std::vector<int> pool(static_cast<std::size_t>(catalog));
  for (int i = 0; i < catalog; ++i) pool[i] = i + 1;
  for (int q = 1; q <= n; ++q) {
    std::shuffle(pool.begin(), pool.end(), rng);
    int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(std::min(qmax, catalog)));
    Query query{q, q - 1, {}};
    for (int i = 0; i < k; ++i) query.items.emplace_back(pool[i]);
    out.push_back(std::move(query));
  }
  return out;
}

inline int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace fpbs::testing
