#pragma once

#include <string>
#include <vector>

namespace msic {

enum class GopKind {
  // Dyadic random-access hierarchy derived from GOP-32 with the first and last
  // lowest-level pictures dropped, so 31 planes fill it exactly.
  gop30,
  // Key pictures every second plane, each odd plane bi-predicted from its neighbours.
  gop2,
};

enum class GopMode { key, bi };

inline constexpr int kKeyQpOffset = -3;

struct GopEntry {
  int plane_index = 0;
  GopMode mode = GopMode::key;
  int ref_a = -1;  // -1 for key pictures
  int ref_b = -1;
  int qp_offset = 0;
  int level = 0;   // hierarchy depth, 0 for key pictures

  friend bool operator==(const GopEntry&, const GopEntry&) = default;
};

// Entries in coding order.
using GopSchedule = std::vector<GopEntry>;

GopSchedule gop_schedule(int plane_count, GopKind kind);

// Empty string when the schedule satisfies every structural invariant,
// otherwise a description of the first violation.
std::string validate_schedule(const GopSchedule& schedule, int plane_count);

}  // namespace msic
