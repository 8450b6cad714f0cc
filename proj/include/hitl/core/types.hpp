#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hitl {

using StateId = std::int32_t;
using ActionId = std::int32_t;

inline constexpr ActionId kNoAction = -1;

/// Invalid or inconsistent configuration (bad spec, empty action set, unknown name).
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation invoked outside its precondition, e.g. stepping a terminal state.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hitl
