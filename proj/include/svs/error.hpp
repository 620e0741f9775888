// Copyright 2026 svslab authors
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

#ifndef SVS_ERROR_HPP
#define SVS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace svs {

// Error conditions raised by the library. Each maps to exactly one CLI
// exit class (validation / check / io), see exit_class().
enum class Err {
  // io / formats
  BadMagic,
  TruncatedPayload,
  UnsupportedRank,
  IoFailure,
  ManifestError,
  // validation
  EmptySequence,
  DimMismatch,
  IndexOutOfRange,
  NonDividingWindow,
  LengthMismatch,
  ShapeError,
  UnknownSymbol,
  OddFeatureDim,
  BadSliceLength,
  BatchTooSmall,
  EmptyBatch,
  ConfigError,
  UnknownCommand,
  // checks
  ZeroVariance,
  NonFiniteLoss,
  CheckFailure,
};

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

// CLI exit codes: 0 success, 1 validation failure, 2 check failure, 3 I/O error.
inline int exit_class(Err e) {
  switch (e) {
    case Err::BadMagic:
    case Err::TruncatedPayload:
    case Err::UnsupportedRank:
    case Err::IoFailure:
    case Err::ManifestError:
      return 3;
    case Err::ZeroVariance:
    case Err::NonFiniteLoss:
    case Err::CheckFailure:
      return 2;
    default:
      return 1;
  }
}

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

}  // namespace svs

#endif  // SVS_ERROR_HPP
