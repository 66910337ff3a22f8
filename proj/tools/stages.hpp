#pragma once

#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "config.hpp"

namespace qcdiff::cli {

struct RunOptions {
  std::set<std::string> stages; // empty = run every stage
  std::size_t threads = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  bool strict = false;
};

const std::vector<std::string>& stage_names();

// Executes the selected stages and writes the artifact files. Returns the
// process exit code: 0 ok, 3 when a verification check fails, 4 when
// --strict finds a tolerance violation. Config and invariant exceptions
// propagate to the caller.
int run_stages(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);

} // namespace qcdiff::cli
