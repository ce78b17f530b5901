// Copyright 2026 The Hera Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hera {

template <typename T> using Vec2 = Eigen::Matrix<T, 2, 1>;
template <typename T> using Vec3 = Eigen::Matrix<T, 3, 1>;
/// Quaternion stored as (w, x, y, z), the order used by splat PLY files.
template <typename T> using Vec4 = Eigen::Matrix<T, 4, 1>;
template <typename T> using Mat2 = Eigen::Matrix<T, 2, 2>;
template <typename T> using Mat3 = Eigen::Matrix<T, 3, 3>;
template <typename T> using Mat23 = Eigen::Matrix<T, 2, 3>;

enum class ErrorCode {
  BehindCamera,
  InvalidParameter,
  DegenerateFacet,
  ParseError,
  MissingUVs,
  UnsupportedAscii,
  NonOrthonormalRotation,
  DuplicateName,
  SizeMismatch,
  ShapeMismatch,
  MissingForwardState,
  NumericalFailure,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::DegenerateFacet: return "DegenerateFacet";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingUVs: return "MissingUVs";
    case ErrorCode::UnsupportedAscii: return "UnsupportedAscii";
    case ErrorCode::NonOrthonormalRotation: return "NonOrthonormalRotation";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingForwardState: return "MissingForwardState";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

template <typename T> inline T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T> inline T logit(T p) { return std::log(p / (T(1) - p)); }

/// Worker count: explicit value if > 0, else HERA_THREADS, else hardware.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HERA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(worker, begin, end) over contiguous chunks of [0, count).
/// Chunk boundaries depend only on count and the worker count.
template <typename Fn>
void parallel_chunks(std::size_t count, int threads, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(resolve_threads(threads),
                                                static_cast<int>(count)));
  if (workers <= 1 || count < 2) {
    fn(0, std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t step = (count + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    const std::size_t b = std::min(count, step * w);
    const std::size_t e = std::min(count, b + step);
    pool.emplace_back([&fn, w, b, e] { fn(w, b, e); });
  }
  fn(0, std::size_t{0}, std::min(count, step));
  for (auto& t : pool) t.join();
}

inline int effective_workers(std::size_t count, int threads) {
  return std::max(1, std::min<int>(resolve_threads(threads),
                                   static_cast<int>(std::max<std::size_t>(count, 1))));
}

}  // namespace hera
