/* Copyright 2026 The InsLoc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Shared fixtures for the unit tests.

#ifndef INSLOC_TESTS_TEST_UTIL_HPP_
#define INSLOC_TESTS_TEST_UTIL_HPP_

#include <functional>
#include <vector>

#include "insloc/oracles.hpp"
#include "insloc/rng.hpp"
#include "insloc/tensor.hpp"

namespace insloc::test {

template <typename T = double>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0,
                        double hi = 1.0) {
  Tensor<T> t(shape);
  for (auto& v : t.values()) v = static_cast<T>(uniform(rng, lo, hi));
  return t;
}

inline std::vector<double> flat(const std::vector<const Tensor<double>*>& ts) {
  std::vector<double> out;
  for (const auto* t : ts) {
    out.insert(out.end(), t->values().begin(), t->values().end());
  }
  return out;
}

// Relative error of analytic gradients against central differences.
inline double fd_error(const std::vector<Tensor<double>*>& wrt,
                       const std::vector<const Tensor<double>*>& analytic,
                       const std::function<double()>& loss, double h = 1e-6) {
  const auto numeric =
      oracle::central_difference(oracle::coordinates(wrt), loss, h);
  return oracle::relative_error(flat(analytic), numeric);
}

}  // namespace insloc::test

#endif  // INSLOC_TESTS_TEST_UTIL_HPP_
