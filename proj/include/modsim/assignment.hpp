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
#include <vector>

#include "modsim/types.hpp"

namespace modsim {

// Rectangular min-cost assignment (rows <= cols) by successive shortest
// augmenting paths with dual potentials. Cells that were never set are
// forbidden and never enter arithmetic, so the scalar only has to hold the
// sums of allowed costs.
template <typename Scalar>
class AssignmentProblem {
 public:
  AssignmentProblem(int rows, int cols)
      : rows_(rows), cols_(cols),
        cost_(static_cast<std::size_t>(rows) * cols),
        allowed_(static_cast<std::size_t>(rows) * cols, 0) {
    if (rows > cols) throw ModsimError("assignment: more rows than columns");
  }

  void set_cost(int row, int col, Scalar c) {
    cost_[index(row, col)] = c;
    allowed_[index(row, col)] = 1;
  }

  // Column assigned to each row. Throws when some row has no allowed
  // completion.
  std::vector<int> solve() const {
    const int n = rows_;
    const int m = cols_;
    std::vector<Scalar> u(n + 1, Scalar{0}), v(m + 1, Scalar{0});
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
      p[0] = i;
      int j0 = 0;
      std::vector<Scalar> minv(m + 1, Scalar{0});
      std::vector<char> finite(m + 1, 0), used(m + 1, 0);
      do {
        used[j0] = 1;
        const int i0 = p[j0];
        int j1 = -1;
        Scalar delta{0};
        for (int j = 1; j <= m; ++j) {
          if (used[j]) continue;
          if (allowed_[index(i0 - 1, j - 1)]) {
            const Scalar cur = cost_[index(i0 - 1, j - 1)] - u[i0] - v[j];
            if (!finite[j] || cur < minv[j]) {
              minv[j] = cur;
              finite[j] = 1;
              way[j] = j0;
            }
          }
          if (finite[j] && (j1 < 0 || minv[j] < delta)) {
            delta = minv[j];
            j1 = j;
          }
        }
        if (j1 < 0) throw ModsimError("assignment: no feasible completion");
        for (int j = 0; j <= m; ++j) {
          if (used[j]) {
            u[p[j]] += delta;
            v[j] -= delta;
          } else if (finite[j]) {
            minv[j] -= delta;
          }
        }
        j0 = j1;
      } while (p[j0] != 0);
      do {
        const int j1 = way[j0];
        p[j0] = p[j1];
        j0 = j1;
      } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j) {
      if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
  }

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * cols_ + c;
  }

  int rows_;
  int cols_;
  std::vector<Scalar> cost_;
  std::vector<char> allowed_;
};

// Deterministic 40-bit key derived from ids only; used as the last
// lexicographic objective component so that optima are unique and do not
// depend on which other requests happen to be in the instance.
inline std::uint64_t mix_key(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t tie_break_key(std::uint64_t a, std::uint64_t b) {
  return mix_key(mix_key(a) ^ (b + 0x632be59bd9b4e019ULL)) >> 24;
}

}  // namespace modsim
