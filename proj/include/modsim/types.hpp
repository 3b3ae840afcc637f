// Copyright 2026 The modsim Authors
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

#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace modsim {

using NodeId = std::int32_t;
using RequestId = std::int32_t;
using VehicleId = std::int32_t;
using BundleId = std::int32_t;

// All times are integer time units; all costs are integer cost units.
using Time = std::int64_t;
using Cost = std::int64_t;

inline constexpr VehicleId kNoVehicle = -1;
inline constexpr Time kNoTime = std::numeric_limits<Time>::min();
inline constexpr Time kUnreachable = std::numeric_limits<Time>::max() / 4;

// Raised for malformed inputs: bad configs, inconsistent graphs, unknown ids.
class ModsimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public ModsimError {
 public:
  ValidationError(std::string field, const std::string& message)
      : ModsimError(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Secondary-cost weights shared by route evaluation and both assignment
// backends.
struct CostWeights {
  Cost dist = 1;
  Cost wait = 1;
  Cost ride = 1;
};

}  // namespace modsim
