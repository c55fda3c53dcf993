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

#ifndef QSR_PARALLEL_HPP_
#define QSR_PARALLEL_HPP_

#include <cstdint>
#include <functional>

namespace qsr {

// Number of worker threads. Defaults to the hardware count, capped by the
// QSR_THREADS environment variable (read once per process).
int thread_budget();

// Runs fn(i) for i in [0, n). Tasks must write disjoint data; each task is
// computed identically regardless of which thread picks it up, so the result
// is bit-identical to sequential execution.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace qsr

#endif  // QSR_PARALLEL_HPP_
