#pragma once

#include <string>
#include <vector>

namespace dttc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kNumeric = 4,
};

// Runs one invocation (`args` excludes the program name) and returns the
// process exit code. Diagnostics go to stderr.
int run(const std::vector<std::string>& args);

// Flat `key = value` config file entries, in file order. Keys are long
// option names without the leading dashes.
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& text);

}  // namespace dttc::cli
