#pragma once

#include <stdexcept>
#include <string>

namespace flowshift {

// Error kinds map one-to-one onto CLI exit codes.
enum class ErrorKind {
  input = 2,
  insufficient_data = 3,
  internal = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

inline Error input_error(const std::string& what) {
  return Error(ErrorKind::input, what);
}
inline Error insufficient_data(const std::string& what) {
  return Error(ErrorKind::insufficient_data, what);
}
inline Error internal_error(const std::string& what) {
  return Error(ErrorKind::internal, what);
}

}  // namespace flowshift
