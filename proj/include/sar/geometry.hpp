#pragma once

#include <vector>

namespace sar {

struct DiscOffset {
  int dx;
  int dy;
  double distance;
};

/// Offsets (row-major) of all cells whose center lies strictly closer than
/// `radius` to the origin cell center.
std::vector<DiscOffset> disc_offsets(double radius);

}  // namespace sar
