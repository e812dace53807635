#pragma once

#include <iosfwd>

#include "bld/config.hpp"

namespace bld {

/// Dispatches a fully merged configuration to the owning module. Results
/// and metrics go to `out` (or the configured paths); returns the process
/// exit status. Library errors propagate as bld::Error.
int run(const RunConfig& config, std::ostream& out);

}  // namespace bld
