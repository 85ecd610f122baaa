#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "adg/adg.hpp"

namespace testing_support {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(ADG_FIXTURES_DIR) / name;
}

inline std::string read_fixture(const std::string& name) { return adg::detail::read_file(fixture(name).string()); }

inline adg::Adg en1() { return adg::load_adg(read_fixture("en1.adg.json")); }
inline adg::Adg jp1() { return adg::load_adg(read_fixture("jp1.adg.json")); }
inline adg::TemplateRegistry templates() { return adg::load_registry(read_fixture("templates.json")); }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("adg-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
