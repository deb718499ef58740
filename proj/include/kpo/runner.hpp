#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kpo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct RunOptions {
  std::string subcommand;
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;  // "--a.b=value"
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool quiet = false;
};

/// Known subcommands in the order they are documented.
const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes its output files plus run_log.json into
/// out_dir. Config errors write nothing and return kExitConfig; numerical
/// failures return kExitNumerical.
int run(const RunOptions& opt);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

}  // namespace kpo
