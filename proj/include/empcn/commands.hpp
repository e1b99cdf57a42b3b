#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace empcn::cli {

inline constexpr const char* kVersion = "empcn 0.1.0";

/// Exit code 1: a check failed or a run diverged.
class RunFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

/// Every key the run config understands, at its default value. Seeds of the
/// model, trainer, simulator and checks are absent and inherit "seed".
nlohmann::json default_run_config();

/// Applies "dotted.key=value". The value is parsed as JSON when possible and
/// kept as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// defaults <- file <- overrides <- seed/out flags, then seed inheritance and
/// validation of every section.
nlohmann::json resolve_config(const nlohmann::json& file_config, const std::vector<std::string>& overrides,
                              std::optional<std::uint64_t> seed, std::optional<std::string> out_dir);

/// Runs one subcommand with a resolved config, writing artifacts under
/// config["output"] and a short summary to `log`. Returns the exit code.
int run_command(const std::string& task, const nlohmann::json& config, std::ostream& log);

}  // namespace empcn::cli
