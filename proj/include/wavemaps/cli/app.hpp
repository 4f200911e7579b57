#pragma once

#include "wavemaps/cli/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace wavemaps::cli {

inline constexpr const char* kToolVersion = "wavemaps 1.0.0";

/// Exit statuses of run().
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitScientific = 1;
inline constexpr int kExitUsage = 2;

const std::vector<std::string>& subcommand_names();

/// Parameters accepted by a subcommand (throws ConfigError for unknown names).
Schema subcommand_schema(const std::string& name);

/// Parse args (without the program name), run the subcommand and write its
/// outputs plus manifest.json into the output directory (--out, else
/// WAVEMAPS_OUT_DIR, else ./wavemaps_out). Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wavemaps::cli
