// Copyright 2026 The QSRKit Authors. All Rights Reserved.
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

#ifndef QSR_ERRORS_HPP_
#define QSR_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace qsr {

// Base class for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/layer shape violations; the message names the offending axis.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Graph construction / execution problems (cycles, missing nodes, ...).
class GraphError : public Error {
 public:
  using Error::Error;
};

// Quantization pipeline problems (missing stats, accumulator bounds, ...).
class QuantError : public Error {
 public:
  using Error::Error;
};

// Training loop failures (divergence, backward without forward, ...).
class TrainError : public Error {
 public:
  using Error::Error;
};

// File and dataset problems.
class IoError : public Error {
 public:
  using Error::Error;
};

// Bad user input (CLI flags, config files, missing paths). Maps to exit 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsr

#endif  // QSR_ERRORS_HPP_
