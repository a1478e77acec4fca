#pragma once

// Maximum-weight one-to-one assignment (Hungarian algorithm with potentials,
// O(n^3)). Rectangular inputs are padded with zero-weight cells, so leaving a
// row or column unmatched costs nothing.

#include <algorithm>
#include <limits>
#include <vector>

namespace coreval {

struct Assignment {
  double value = 0.0;
  std::vector<int> row_to_col;  // -1 = unmatched
};

inline Assignment max_weight_assignment(const std::vector<std::vector<double>>& w) {
  int n = static_cast<int>(w.size());
  int m = n == 0 ? 0 : static_cast<int>(w[0].size());
  Assignment result;
  result.row_to_col.assign(n, -1);
  if (n == 0 || m == 0) return result;

  int s = std::max(n, m);
  double max_w = 0.0;
  for (const auto& row : w)
    for (double v : row) max_w = std::max(max_w, v);

  auto cost = [&](int i, int j) -> double {
    double v = (i < n && j < m) ? w[i][j] : 0.0;
    return max_w - v;  // minimize
  };

  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(s + 1, 0.0), v(s + 1, 0.0);
  std::vector<int> p(s + 1, 0), way(s + 1, 0);
  for (int i = 1; i <= s; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(s + 1, kInf);
    std::vector<char> used(s + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= s; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= s; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  for (int j = 1; j <= s; ++j) {
    int i = p[j];
    if (i >= 1 && i <= n && j <= m) {
      result.row_to_col[i - 1] = j - 1;
      result.value += w[i - 1][j - 1];
    }
  }
  return result;
}

/// Optimal total weight only.
inline double assignment_value(const std::vector<std::vector<double>>& w) {
  return max_weight_assignment(w).value;
}

}  // namespace coreval
