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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fpci/compressors.hpp"
#include "fpci/vector.hpp"

namespace fpci {

// Simulated star network: the master broadcasts x^k uncompressed and each
// worker sends one compressed payload back per round.

enum class Direction { kBroadcast, kGather };
std::string to_string(Direction d);

struct TranscriptRecord {
  std::size_t round = 0;
  Direction direction = Direction::kBroadcast;
  std::size_t node = 0;
  std::string payload;  // "iterate" or the compressor description
  std::uint64_t bits = 0;
  bool operator==(const TranscriptRecord&) const = default;
};

class Transcript {
 public:
  // Throws Error if rounds would decrease or bits == 0.
  void append(TranscriptRecord record);

  const std::vector<TranscriptRecord>& records() const noexcept { return records_; }
  std::uint64_t total_bits() const noexcept { return total_bits_; }
  // Sum of the bits of every record with round < k.
  std::uint64_t bits_before_round(std::size_t k) const;
  std::uint64_t uplink_bits() const noexcept { return uplink_bits_; }
  std::uint64_t downlink_bits() const noexcept { return total_bits_ - uplink_bits_; }
  // Rounds whose records are exactly n broadcasts followed by n gathers.
  bool well_formed(std::size_t n) const;

  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;

  bool operator==(const Transcript&) const = default;

 private:
  std::vector<TranscriptRecord> records_;
  std::uint64_t total_bits_ = 0;
  std::uint64_t uplink_bits_ = 0;
};

// n copies of x; records n broadcast entries of 64 d bits for `round`.
std::vector<Vector> broadcast(const Vector& x, std::size_t n, std::size_t round, Transcript& transcript);

// Delivers the n payloads in node order and records message_bits(comp, d)
// per node. Throws Error if fewer than n payloads are present or one is
// missing.
std::vector<Vector> gather(std::vector<std::optional<Vector>> messages, std::size_t n, const CompressorSpec& comp,
                           std::size_t round, Transcript& transcript);

// Cumulative bits spent before the first k with r^k <= target, where
// r_sq[k] is r^k for k = 0..K. nullopt if the target is never reached.
std::optional<std::uint64_t> bits_to_target(std::span<const double> r_sq, const Transcript& transcript,
                                            double target);

}  // namespace fpci
