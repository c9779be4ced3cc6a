#pragma once

#include <iosfwd>

#include "sfclust/config.hpp"

namespace sfclust::commands {

/// Subcommand drivers. Each runs one pipeline stage against a parsed
/// configuration, writes its output files under `out.dir`, prints a short
/// report to `out`, and returns the process exit code: 0 on success, 2 when
/// estimation hit the iteration cap without converging (outputs are still
/// written). Input problems surface as thrown Error subclasses.
int run_ingest(const RunConfig& config, std::ostream& out);
int run_fit(const RunConfig& config, std::ostream& out);
int run_simulate(const RunConfig& config, std::ostream& out);
int run_score(const RunConfig& config, std::ostream& out);

}  // namespace sfclust::commands
