#ifndef CAHAR_CLI_H_
#define CAHAR_CLI_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cahar/error.h"
#include "cahar/folds.h"
#include "cahar/model.h"
#include "cahar/providers.h"

namespace cahar {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitProvider = 4,
  kExitEvaluation = 5,
};

int exit_code_for(ErrorKind kind);

inline constexpr std::uint64_t kDefaultSeed = 42;

struct CliConfig {
  std::vector<ProviderDescriptor> providers;  // default: one fixture provider
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> out_dir;
  TrainingConfig training;
  PartitionOptions evaluation = replica_protocol(kDefaultSeed);
  std::optional<std::uint64_t> seed;
};

// Strict parse: unknown keys and invalid values raise ConfigError naming the
// key. Relative paths resolve against `base_dir`.
CliConfig parse_cli_config(std::string_view document,
                           const std::filesystem::path& base_dir);
CliConfig load_cli_config(const std::filesystem::path& path);

// Entry point of the `cahar` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace cahar

#endif  // CAHAR_CLI_H_
