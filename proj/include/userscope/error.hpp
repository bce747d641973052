#pragma once

#include <stdexcept>
#include <string>

namespace userscope {

/// Error carrying a stable machine-readable code (e.g. "UNKNOWN_USER").
/// The server maps codes onto HTTP statuses; everything else just prints what().
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace userscope
