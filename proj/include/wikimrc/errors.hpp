#pragma once

#include <stdexcept>
#include <string>

namespace wikimrc {

// Bad or unusable input (malformed file, misaligned span, empty article).
// The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant was violated (NaN loss, illegal target built by the
// library itself). The CLI maps this to exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace wikimrc
