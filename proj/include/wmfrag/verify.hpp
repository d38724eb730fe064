// Copyright 2026 The wmfrag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WMFRAG_VERIFY_HPP
#define WMFRAG_VERIFY_HPP

#include "json.hpp"

#include <string>
#include <vector>

namespace wmfrag {

struct CheckResult {
  std::string name;  // "<module>.<invariant>"
  bool pass = false;
  std::string measured;
  std::string tolerance;
};

struct VerifyOptions {
  bool inject_gradient_fault = false;  // flips the watermark-gradient sign for the run
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool pass() const;
};

/// Cross-module invariant suite with fixed seeds. Failures are report content,
/// never exceptions.
VerifyReport run_verify(const VerifyOptions& opts = {});

std::string format_report(const VerifyReport& report);
nlohmann::json report_json(const VerifyReport& report);

}  // namespace wmfrag

#endif  // WMFRAG_VERIFY_HPP
