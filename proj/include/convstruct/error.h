// convstruct/error.h
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

#ifndef CONVSTRUCT_ERROR_H_
#define CONVSTRUCT_ERROR_H_

#include <stdexcept>
#include <string>

namespace convstruct {

// Base of every error thrown by the library. The CLI maps the concrete
// subclass onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, corpora, arguments that
// violate a documented precondition).
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: unreachable sequences, degenerate training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace convstruct

#endif  // CONVSTRUCT_ERROR_H_
