#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cbc/config.hpp"

namespace cbc {

struct CliOptions {
    std::string out_dir;  // empty keeps the config's output_dir
    bool dump_traces = false;
    std::optional<std::uint64_t> seed;  // overrides plant.rng_seed
};

// The four run modes. Each writes its artifacts under the output directory
// and returns a process exit code: 0 success, 2 validation failure, 3
// runtime (corrector or plant) failure. Timings go to stdout only; files
// are deterministic for a fixed config and seed.
int cmd_equilibrium(RunConfig config, const CliOptions& options);
int cmd_branch(RunConfig config, const CliOptions& options);
int cmd_surface(RunConfig config, const CliOptions& options);
int cmd_compare(RunConfig config, const CliOptions& options);

}  // namespace cbc
