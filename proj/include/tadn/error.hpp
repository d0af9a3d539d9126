#pragma once

#include "tadn/precision.hpp"

#include <stdexcept>
#include <string>

TADN_NAMESPACE_BEGIN

// Bad user input: malformed files, invalid configuration, missing records.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A violated internal contract (shape mismatch, broken invariant).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

TADN_NAMESPACE_END

#define TADN_CHECK(cond, msg)                                                \
  do {                                                                       \
    if (!(cond)) {                                                           \
      throw ::tadn::InvariantError(std::string("check failed: ") + #cond +   \
                                   ": " + (msg));                            \
    }                                                                        \
  } while (false)
