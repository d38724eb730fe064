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

#ifndef WMFRAG_COMMON_HPP
#define WMFRAG_COMMON_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace wmfrag {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  out_of_range,
  capability_missing,
  io,
  parse,
};

/// Every recoverable failure in the library is reported with this type. The
/// C API maps `code()` onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

/// State in latent space (x_t, z_0, z_clean).
struct LatentVec {
  Eigen::VectorXd values;

  LatentVec() = default;
  explicit LatentVec(Eigen::VectorXd v) : values(std::move(v)) {}
  Eigen::Index size() const { return values.size(); }
};

/// State in image space (I, I_w, I').
struct ImageVec {
  Eigen::VectorXd values;

  ImageVec() = default;
  explicit ImageVec(Eigen::VectorXd v) : values(std::move(v)) {}
  Eigen::Index size() const { return values.size(); }
};

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    fail(ErrorCode::dimension_mismatch, std::string(what) + ": dimension " + std::to_string(got) +
                                            " does not match expected " + std::to_string(want));
  }
}

}  // namespace wmfrag

#endif  // WMFRAG_COMMON_HPP
