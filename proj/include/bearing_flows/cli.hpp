#pragma once

#include <ostream>

namespace bearing_flows {

/// Entry point of the `bearing-flows` tool:
///
///   simulate <scenario.json> [--dt] [--tmax] [--seed] [--out DIR] [--format csv|json]
///            [--controller consensus|formation] [--topology undirected|directed]
///   analyze  <scenario.json> [--cert nu,spectrum,...] [--seed] [--out DIR]
///   reproduce <counterexample|fig3|fig4|persistence-fig1> [--out DIR]
///   batch <scenario.json|DIR>... [--out DIR]
///
/// Returns the process exit code: 0 converged or passed, 2 time limit, 1 error.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bearing_flows
