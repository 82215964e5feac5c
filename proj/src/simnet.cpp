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

#include "fpci/simnet.hpp"

#include <algorithm>
#include <fstream>

#include "fpci/error.hpp"

namespace fpci {

std::string to_string(Direction d) { return d == Direction::kBroadcast ? "broadcast" : "gather"; }

void Transcript::append(TranscriptRecord record) {
  if (record.bits == 0) throw Error("transcript record must carry > 0 bits");
  if (!records_.empty() && record.round < records_.back().round) {
    throw Error("transcript rounds must be nondecreasing");
  }
  total_bits_ += record.bits;
  if (record.direction == Direction::kGather) uplink_bits_ += record.bits;
  records_.push_back(std::move(record));
}

std::uint64_t Transcript::bits_before_round(std::size_t k) const {
  std::uint64_t total = 0;
  for (const auto& r : records_) {
    if (r.round >= k) break;
    total += r.bits;
  }
  return total;
}

bool Transcript::well_formed(std::size_t n) const {
  if (n == 0 || records_.size() % (2 * n) != 0) return false;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    const std::size_t round = i / (2 * n);
    const std::size_t slot = i % (2 * n);
    const Direction want = slot < n ? Direction::kBroadcast : Direction::kGather;
    if (r.round != round || r.direction != want || r.node != slot % n) return false;
  }
  return true;
}

void Transcript::write_csv(std::ostream& out) const {
  out << "round,direction,node,bits\n";
  for (const auto& r : records_) out << r.round << ',' << to_string(r.direction) << ',' << r.node << ',' << r.bits << '\n';
}

void Transcript::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_csv(out);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<Vector> broadcast(const Vector& x, std::size_t n, std::size_t round, Transcript& transcript) {
  const std::uint64_t bits = 64 * static_cast<std::uint64_t>(x.dim());
  for (std::size_t i = 0; i < n; ++i) transcript.append({round, Direction::kBroadcast, i, "iterate", bits});
  return std::vector<Vector>(n, x);
}

std::vector<Vector> gather(std::vector<std::optional<Vector>> messages, std::size_t n, const CompressorSpec& comp,
                           std::size_t round, Transcript& transcript) {
  if (messages.size() < n) {
    throw Error("gather: expected " + std::to_string(n) + " payloads, got " + std::to_string(messages.size()));
  }
  std::vector<Vector> out;
  out.reserve(n);
  const std::string kind = describe(comp);
  for (std::size_t i = 0; i < n; ++i) {
    if (!messages[i]) throw Error("gather: payload from node " + std::to_string(i) + " is missing");
    transcript.append({round, Direction::kGather, i, kind, message_bits(comp, messages[i]->dim())});
    out.push_back(std::move(*messages[i]));
  }
  return out;
}

std::optional<std::uint64_t> bits_to_target(std::span<const double> r_sq, const Transcript& transcript,
                                            double target) {
  if (r_sq.empty()) throw Error("bits_to_target: empty trajectory");
  for (std::size_t k = 0; k < r_sq.size(); ++k) {
    if (r_sq[k] <= target) return transcript.bits_before_round(k);
  }
  return std::nullopt;
}

}  // namespace fpci
