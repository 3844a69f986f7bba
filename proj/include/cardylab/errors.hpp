#pragma once

#include <stdexcept>
#include <string>

namespace cardylab {

// Error codes are stable strings; the CLI maps them to exit diagnostics.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

inline Error error(const std::string& code, const std::string& what) {
  return Error(code, what);
}

}  // namespace cardylab
