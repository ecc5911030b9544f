// convstruct/kernels.h
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

#ifndef CONVSTRUCT_KERNELS_H_
#define CONVSTRUCT_KERNELS_H_

#include <cstddef>
#include <span>
#include <string_view>

// Dense vector kernels used by vector quantization. Every kernel has a
// portable scalar reference; wider variants are selected at runtime from
// what the CPU reports, and must agree with the reference up to summation
// order (elementwise kernels agree bit-for-bit).
namespace convstruct::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// True when the variant was compiled in and the running CPU supports it.
bool supported(Isa isa);

struct KernelTable {
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // Row of `rows` (k rows of n values) nearest to x; lowest index on ties.
  std::size_t (*nearest_row)(const double* x, const double* rows,
                             std::size_t k, std::size_t n, double* best);
  // acc[i] += x[i]
  void (*accumulate)(double* acc, const double* x, std::size_t n);
};

const KernelTable& table(Isa isa);

// The variant used by the library. Defaults to the widest supported one;
// the CONVSTRUCT_ISA environment variable ("scalar" or "avx2") overrides.
Isa active_isa();

// Throws DataError if the variant is not supported here.
void set_active_isa(Isa isa);

inline const KernelTable& active() { return table(active_isa()); }

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

namespace scalar {
double squared_distance(const double* a, const double* b, std::size_t n);
std::size_t nearest_row(const double* x, const double* rows, std::size_t k,
                        std::size_t n, double* best);
void accumulate(double* acc, const double* x, std::size_t n);
}  // namespace scalar

#ifdef CONVSTRUCT_HAVE_AVX2
namespace avx2 {
double squared_distance(const double* a, const double* b, std::size_t n);
std::size_t nearest_row(const double* x, const double* rows, std::size_t k,
                        std::size_t n, double* best);
void accumulate(double* acc, const double* x, std::size_t n);
}  // namespace avx2
#endif

}  // namespace convstruct::kernels

#endif  // CONVSTRUCT_KERNELS_H_
