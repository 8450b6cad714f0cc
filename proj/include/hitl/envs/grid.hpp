#pragma once

#include <compare>

namespace hitl {

/// 1-based grid cell, x to the right and y upward.
struct Cell {
  int x = 1;
  int y = 1;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

}  // namespace hitl
