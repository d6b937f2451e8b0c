#pragma once

#include <stdexcept>
#include <string>

namespace sgnv {

/// Error with a stable machine-parsable code; the CLI prints
/// "error[<code>]: <message>" on one line and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace sgnv
