#pragma once

#include <stdexcept>
#include <string>

namespace legros {

// Categories map one-to-one onto CLI exit codes.
enum class error_kind {
  argument = 2,
  validation = 3,
  numerical = 4,
  io = 5,
  internal = 70,
};

class error : public std::runtime_error {
 public:
  error(error_kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  error_kind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  error_kind kind_;
};

inline error argument_error(const std::string& what) {
  return error(error_kind::argument, what);
}
inline error validation_error(const std::string& what) {
  return error(error_kind::validation, what);
}
inline error numerical_error(const std::string& what) {
  return error(error_kind::numerical, what);
}
inline error io_error(const std::string& what) {
  return error(error_kind::io, what);
}
inline error internal_error(const std::string& what) {
  return error(error_kind::internal, what);
}

}  // namespace legros
