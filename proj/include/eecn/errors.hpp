// include/eecn/errors.hpp

#pragma once

#include <stdexcept>
#include <string>

namespace eecn {

// Bad scenario or parameter input. Messages name the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken engine invariant (event-time regression, dequeue of an empty
// queue, ...). Never caused by user input.
class SimError : public std::logic_error {
 public:
  explicit SimError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace eecn
