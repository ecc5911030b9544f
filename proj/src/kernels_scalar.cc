// kernels_scalar.cc
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
//
// Copyright 2026 The convstruct Authors.

#include "convstruct/kernels.h"

namespace convstruct::kernels::scalar {

double squared_distance(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

std::size_t nearest_row(const double* x, const double* rows, std::size_t k,
                        std::size_t n, double* best) {
  std::size_t arg = 0;
  double min = squared_distance(x, rows, n);
  for (std::size_t j = 1; j < k; ++j) {
    const double d = squared_distance(x, rows + j * n, n);
    if (d < min) {
      min = d;
      arg = j;
    }
  }
  if (best) *best = min;
  return arg;
}

void accumulate(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

}  // namespace convstruct::kernels::scalar
