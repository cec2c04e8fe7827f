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

// Oracle battery run by `insloc selfcheck`.

#ifndef INSLOC_SELFCHECK_HPP_
#define INSLOC_SELFCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace insloc {

struct CheckResult {
  std::string name;
  bool pass = false;
  double error = 0.0;      // observed error magnitude
  double tolerance = 0.0;  // pass iff error < tolerance
  std::string detail;      // exception text, if any
};

// Every check, in a fixed order, all in 64-bit arithmetic.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed = 0);

// "PASS  name  error=... tol=..." or "FAIL ...".
std::string format_check(const CheckResult& r);

}  // namespace insloc

#endif  // INSLOC_SELFCHECK_HPP_
