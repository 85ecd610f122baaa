#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace adg {

// Every failure carries a stable machine-readable code (e.g. "unknown-node",
// "missing-slot") plus the id of the offending node/edge/criterion, if any.
class Error : public std::runtime_error {
 public:
  Error(std::string code, std::string message, std::string subject = {})
      : std::runtime_error(code + ": " + message),
        code_(std::move(code)),
        message_(std::move(message)),
        subject_(std::move(subject)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  std::string code_;
  std::string message_;
  std::string subject_;
};

}  // namespace adg
