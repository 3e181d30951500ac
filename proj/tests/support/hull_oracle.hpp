#pragma once

#include <algorithm>
#include <utility>
#include <vector>

namespace msic::testing {

// Upper-left envelope by exhaustive search. A point survives when no other
// point weakly dominates it and it does not lie strictly below a chord between
// two surviving points on either side. Dominated points can be dropped before
// the chord test: replacing a chord end by its dominator only raises the chord.
// Returns distinct (bits, psnr) pairs in ascending bits.
inline std::vector<std::pair<double, double>> brute_force_hull(std::vector<std::pair<double, double>> pts,
                                                               double tolerance = 1e-9) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<std::pair<double, double>> front;
  for (const auto& p : pts) {
    bool dominated = false;
    for (const auto& q : pts) {
      if (q != p && q.first <= p.first && q.second >= p.second) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(p);
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const auto& p = front[i];
    bool below = false;
    for (std::size_t a = 0; a < i && !below; ++a) {
      for (std::size_t b = i + 1; b < front.size() && !below; ++b) {
        const auto& pa = front[a];
        const auto& pb = front[b];
        const double chord = pa.second + (pb.second - pa.second) * (p.first - pa.first) / (pb.first - pa.first);
        below = p.second < chord - tolerance;
      }
    }
    if (!below) out.push_back(p);
  }
  return out;
}

}  // namespace msic::testing
