#pragma once

#include <stdexcept>
#include <string>

namespace acerax {

// Input or parameter dimensions do not line up.
struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A stored transition violates its invariants (non-positive density, etc).
struct corrupt_buffer_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct environment_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint or dump file cannot be read back.
struct load_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw shape_error(what);
}

}  // namespace detail
}  // namespace acerax
