#pragma once

#include <filesystem>
#include <string>

namespace touchrecon::test {

// Fresh scratch directory under the system temp path.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("touchrecon_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace touchrecon::test
