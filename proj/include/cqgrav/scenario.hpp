#ifndef CQGRAV_SCENARIO_HPP
#define CQGRAV_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace cqgrav {

struct RunOptions {
  std::string out_dir = ".";
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
};

/// Execute one scenario file for the given subcommand.
/// Exit codes: 0 success/satisfied, 2 domain verdict (trade-off violated,
/// invalid pair), 1 usage or input error.
int run_scenario_file(const std::string& command, const std::string& path,
                      const RunOptions& options, std::ostream& out, std::ostream& err);

/// SHA-1 hex digest (content hash for run manifests).
std::string sha1_hex(const std::string& data);

}  // namespace cqgrav

#endif
