// kernels.cc
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

#include <atomic>
#include <cstdlib>
#include <string>

#include "convstruct/error.h"

namespace convstruct::kernels {

namespace {

constexpr KernelTable kScalarTable{&scalar::squared_distance,
                                   &scalar::nearest_row, &scalar::accumulate};

#ifdef CONVSTRUCT_HAVE_AVX2
constexpr KernelTable kAvx2Table{&avx2::squared_distance, &avx2::nearest_row,
                                 &avx2::accumulate};
#endif

Isa initial_isa() {
  if (const char* env = std::getenv("CONVSTRUCT_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && supported(Isa::kAvx2)) return Isa::kAvx2;
  }
  return supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(CONVSTRUCT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
#ifdef CONVSTRUCT_HAVE_AVX2
  if (isa == Isa::kAvx2) return kAvx2Table;
#endif
  (void)isa;
  return kScalarTable;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!supported(isa))
    throw DataError("kernel variant '" + std::string(isa_name(isa)) +
                    "' is not supported on this machine");
  current().store(isa, std::memory_order_relaxed);
}

}  // namespace convstruct::kernels
