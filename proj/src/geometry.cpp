#include "sar/geometry.hpp"

#include <cmath>

namespace sar {

std::vector<DiscOffset> disc_offsets(double radius) {
  std::vector<DiscOffset> out;
  const int r = static_cast<int>(std::ceil(radius));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double d = std::hypot(static_cast<double>(dx), static_cast<double>(dy));
      if (d < radius) out.push_back({dx, dy, d});
    }
  }
  return out;
}

}  // namespace sar
