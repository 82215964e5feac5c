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

#include "fpci/vector.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "fpci/error.hpp"

namespace fpci {
namespace {

void require_finite(const std::vector<double>& coords) {
  for (std::size_t j = 0; j < coords.size(); ++j) {
    if (!std::isfinite(coords[j])) {
      throw NonFiniteError("non-finite coordinate " + std::to_string(j) + " (" +
                           std::to_string(coords[j]) + ")");
    }
  }
}

}  // namespace

Vector::Vector(std::initializer_list<double> coords) : coords_(coords) {
  require_finite(coords_);
}

Vector::Vector(std::vector<double> coords) : coords_(std::move(coords)) {
  require_finite(coords_);
}

void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()) + ")");
  }
}

Vector& Vector::operator+=(const Vector& other) {
  require_same_dim(*this, other, "vector add");
  for (std::size_t j = 0; j < coords_.size(); ++j) coords_[j] += other.coords_[j];
  require_finite(coords_);
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_dim(*this, other, "vector subtract");
  for (std::size_t j = 0; j < coords_.size(); ++j) coords_[j] -= other.coords_[j];
  require_finite(coords_);
  return *this;
}

Vector& Vector::operator*=(double scale) {
  for (double& v : coords_) v *= scale;
  require_finite(coords_);
  return *this;
}

Vector& Vector::operator/=(double divisor) {
  for (double& v : coords_) v /= divisor;
  require_finite(coords_);
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(double scale, Vector a) { return a *= scale; }
Vector operator*(Vector a, double scale) { return a *= scale; }
Vector operator/(Vector a, double divisor) { return a /= divisor; }
Vector operator-(Vector a) { return a *= -1.0; }

double dot(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) acc += a[j] * b[j];
  return acc;
}

double squared_norm(const Vector& a) { return dot(a, a); }

double squared_distance(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "squared_distance");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

bool bit_identical(const Vector& a, const Vector& b) noexcept {
  return a.dim() == b.dim() &&
         (a.dim() == 0 || std::memcmp(a.data(), b.data(), a.dim() * sizeof(double)) == 0);
}

}  // namespace fpci
