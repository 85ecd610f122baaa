#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

namespace adg {

enum class Severity { error, warning };

inline const char* to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

struct Finding {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  std::string subject;  // node id, "edges[i]", criterion id, template key
};

/// Validation output. `ok` is derived: true iff no finding is an error.
class ValidationReport {
 public:
  void add(Severity severity, std::string code, std::string message, std::string subject) {
    findings_.push_back({severity, std::move(code), std::move(message), std::move(subject)});
    std::stable_sort(findings_.begin(), findings_.end(), [](const Finding& a, const Finding& b) {
      if (a.subject != b.subject) return a.subject < b.subject;
      return a.code < b.code;
    });
  }
  void error(std::string code, std::string message, std::string subject) {
    add(Severity::error, std::move(code), std::move(message), std::move(subject));
  }
  void warning(std::string code, std::string message, std::string subject) {
    add(Severity::warning, std::move(code), std::move(message), std::move(subject));
  }
  void merge(const ValidationReport& other) {
    for (const auto& f : other.findings_) add(f.severity, f.code, f.message, f.subject);
  }

  bool ok() const {
    return std::none_of(findings_.begin(), findings_.end(),
                        [](const Finding& f) { return f.severity == Severity::error; });
  }
  const std::vector<Finding>& findings() const noexcept { return findings_; }

  std::size_t count(Severity severity) const {
    return static_cast<std::size_t>(std::count_if(
        findings_.begin(), findings_.end(), [&](const Finding& f) { return f.severity == severity; }));
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json out;
    out["ok"] = ok();
    out["findings"] = nlohmann::ordered_json::array();
    for (const auto& f : findings_) {
      out["findings"].push_back({{"severity", to_string(f.severity)},
                                 {"code", f.code},
                                 {"message", f.message},
                                 {"subject", f.subject}});
    }
    return out;
  }

  /// One line per finding: "error dangling-edge edges[3]: ...".
  std::string to_text() const {
    if (findings_.empty()) return "ok\n";
    std::string out;
    for (const auto& f : findings_) {
      out += std::string(to_string(f.severity)) + " " + f.code + " " + f.subject + ": " + f.message + "\n";
    }
    out += ok() ? "ok\n" : "failed\n";
    return out;
  }

 private:
  std::vector<Finding> findings_;
};

}  // namespace adg
