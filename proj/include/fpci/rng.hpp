// Copyright 2026 The fpci Authors. All Rights Reserved.
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
// =============================================================================

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fpci/vector.hpp"

namespace fpci {

// Philox4x64-10 block function (Salmon et al. 2011), bit-compatible with
// numpy.random.Philox.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key) noexcept;

// Labels that separate the randomness consumed by different parts of a run.
namespace stream_role {
inline constexpr std::uint64_t kMapNoise = 1;
inline constexpr std::uint64_t kCompressionNoise = 2;
inline constexpr std::uint64_t kData = 3;
inline constexpr std::uint64_t kCertificate = 4;
inline constexpr std::uint64_t kLyapunov = 5;
inline constexpr std::uint64_t kVerify = 6;
}  // namespace stream_role

// Counter-based random stream addressed by (root_seed, path). The Philox key
// is a hash of the full address, so a stream's sequence depends only on the
// address, never on how much its parent was consumed. Copying a stream copies
// its position.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t root_seed, std::vector<std::uint64_t> path = {});

  // Child stream at path() ++ label, positioned at the start.
  RngStream derive(std::span<const std::uint64_t> label) const;
  RngStream derive(std::initializer_list<std::uint64_t> label) const {
    return derive(std::span<const std::uint64_t>(label.begin(), label.size()));
  }

  std::uint64_t root_seed() const noexcept { return root_seed_; }
  const std::vector<std::uint64_t>& path() const noexcept { return path_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform on {0, ..., n-1}; n > 0. Lemire's rejection method, unbiased.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  // Box-Muller; the second variate of each pair is cached.
  double standard_normal() noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next_u64(); }

 private:
  std::uint64_t root_seed_;
  std::vector<std::uint64_t> path_;
  std::array<std::uint64_t, 2> key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> buffer_{};
  std::size_t buffer_pos_ = 4;
  std::optional<double> spare_normal_;
};

inline RngStream derive_substream(const RngStream& parent, std::span<const std::uint64_t> label) {
  return parent.derive(label);
}

// `count` i.i.d. N(0, 1) draws consumed from `stream`.
Vector sample_standard_gaussian(RngStream& stream, std::size_t count);

}  // namespace fpci
