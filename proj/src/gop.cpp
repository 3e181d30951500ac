#include "msic/gop.hpp"

#include <algorithm>
#include <bit>

#include "msic/errors.hpp"

namespace msic {

namespace {

GopEntry key(int index) { return {index, GopMode::key, -1, -1, kKeyQpOffset, 0}; }

GopEntry bi(int index, int a, int b, int level) { return {index, GopMode::bi, a, b, 0, level}; }

// Builds the hierarchy on virtual picture positions 0..G (G a power of two),
// drops surplus lowest-level pictures alternately from the front and the back,
// then renumbers the surviving positions 0..P-1 in ascending order.
GopSchedule dyadic_schedule(int plane_count) {
  if (plane_count == 1) return {key(0)};
  const int span = static_cast<int>(std::bit_ceil(static_cast<unsigned>(plane_count - 1)));
  const int surplus = span + 1 - plane_count;

  std::vector<bool> dropped(static_cast<std::size_t>(span + 1), false);
  if (surplus > 0) {
    // lowest level holds the odd positions 1, 3, ..., span-1
    int front = 1;
    int back = span - 1;
    for (int i = 0; i < surplus; ++i) {
      if (i % 2 == 0) {
        dropped[static_cast<std::size_t>(front)] = true;
        front += 2;
      } else {
        dropped[static_cast<std::size_t>(back)] = true;
        back -= 2;
      }
    }
  }
  std::vector<int> index_of(static_cast<std::size_t>(span + 1), -1);
  int next = 0;
  for (int pos = 0; pos <= span; ++pos) {
    if (!dropped[static_cast<std::size_t>(pos)]) index_of[static_cast<std::size_t>(pos)] = next++;
  }
  const auto idx = [&](int pos) { return index_of[static_cast<std::size_t>(pos)]; };

  GopSchedule out{key(idx(0)), key(idx(span))};
  int level = 1;
  for (int step = span / 2; step >= 1; step /= 2, ++level) {
    for (int pos = step; pos < span; pos += 2 * step) {
      if (dropped[static_cast<std::size_t>(pos)]) continue;
      out.push_back(bi(idx(pos), idx(pos - step), idx(pos + step), level));
    }
  }
  return out;
}

GopSchedule pairwise_schedule(int plane_count) {
  GopSchedule out{key(0)};
  for (int k = 2; k < plane_count; k += 2) {
    out.push_back(key(k));
    out.push_back(bi(k - 1, k - 2, k, 1));
  }
  if (plane_count > 1 && (plane_count - 1) % 2 == 1) out.push_back(key(plane_count - 1));
  return out;
}

}  // namespace

GopSchedule gop_schedule(int plane_count, GopKind kind) {
  if (plane_count < 1) throw ParamError("GOP schedule needs at least one plane");
  return kind == GopKind::gop30 ? dyadic_schedule(plane_count) : pairwise_schedule(plane_count);
}

std::string validate_schedule(const GopSchedule& schedule, int plane_count) {
  if (static_cast<int>(schedule.size()) != plane_count) return "schedule length differs from plane count";
  std::vector<int> coded_at(static_cast<std::size_t>(plane_count), -1);
  for (std::size_t order = 0; order < schedule.size(); ++order) {
    const auto& e = schedule[order];
    if (e.plane_index < 0 || e.plane_index >= plane_count) return "plane index out of range";
    if (coded_at[static_cast<std::size_t>(e.plane_index)] >= 0) return "plane coded twice";
    if (e.mode == GopMode::key) {
      if (e.qp_offset != kKeyQpOffset) return "key picture without QP offset -3";
    } else {
      if (e.qp_offset != 0) return "bi picture with nonzero QP offset";
      for (int ref : {e.ref_a, e.ref_b}) {
        if (ref < 0 || ref >= plane_count || coded_at[static_cast<std::size_t>(ref)] < 0) {
          return "bi picture references a plane not yet coded";
        }
      }
    }
    coded_at[static_cast<std::size_t>(e.plane_index)] = static_cast<int>(order);
  }
  return {};
}

}  // namespace msic
