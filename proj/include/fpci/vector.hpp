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
#include <initializer_list>
#include <span>
#include <vector>

namespace fpci {

// Dense real vector. Every entry is finite: constructors and arithmetic
// throw NonFiniteError otherwise, and binary operations throw
// DimensionError on mismatched sizes.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim) : coords_(dim, 0.0) {}
  Vector(std::initializer_list<double> coords);
  explicit Vector(std::vector<double> coords);

  std::size_t dim() const noexcept { return coords_.size(); }
  bool empty() const noexcept { return coords_.empty(); }
  double operator[](std::size_t j) const { return coords_[j]; }
  std::span<const double> coords() const noexcept { return coords_; }
  const double* data() const noexcept { return coords_.data(); }

  // Exact (IEEE ==) coordinate comparison.
  bool operator==(const Vector& other) const = default;

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double scale);
  Vector& operator/=(double divisor);

 private:
  std::vector<double> coords_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double scale, Vector a);
Vector operator*(Vector a, double scale);
Vector operator/(Vector a, double divisor);
Vector operator-(Vector a);

double dot(const Vector& a, const Vector& b);
double squared_norm(const Vector& a);
// sum_j (a_j - b_j)^2
double squared_distance(const Vector& a, const Vector& b);

// True when both vectors hold the same bit patterns (distinguishes -0.0
// from +0.0, unlike operator==).
bool bit_identical(const Vector& a, const Vector& b) noexcept;

// Throws DimensionError unless a.dim() == b.dim().
void require_same_dim(const Vector& a, const Vector& b, const char* what);

}  // namespace fpci
