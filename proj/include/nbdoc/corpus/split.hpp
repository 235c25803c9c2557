#pragma once

#include <cstdint>
#include <vector>

#include "nbdoc/util/rng.hpp"

namespace nbdoc::corpus {

template <class T>
struct Split {
  std::vector<T> train, dev, test;
};

// Seeded shuffle, then 8:1:1 by count: dev and test get floor(n/10) each,
// train keeps the remainder.
template <class T>
Split<T> split_dataset(std::vector<T> items, std::uint64_t seed) {
  util::Rng rng(seed);
  rng.shuffle(items);
  const std::size_t n = items.size();
  const std::size_t n_dev = n / 10;
  const std::size_t n_test = n / 10;
  const std::size_t n_train = n - n_dev - n_test;
  Split<T> s;
  s.train.assign(std::make_move_iterator(items.begin()), std::make_move_iterator(items.begin() + n_train));
  s.dev.assign(std::make_move_iterator(items.begin() + n_train),
               std::make_move_iterator(items.begin() + n_train + n_dev));
  s.test.assign(std::make_move_iterator(items.begin() + n_train + n_dev), std::make_move_iterator(items.end()));
  return s;
}

}  // namespace nbdoc::corpus
