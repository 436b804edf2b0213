#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "bearing_flows/report.hpp"

namespace bearing_flows {

/// Names accepted by Reproduce.
const std::vector<std::string>& ReproductionNames();

/// Runs one canned reproduction, prints a summary ending in PASS or FAIL and
/// writes CSV series into options.out_dir. Returns 0 on PASS, 1 otherwise.
///
///   counterexample    spectra of J_dir and -L_B for the four-agent directed target
///   fig3              directed vs undirected consensus on the 7-node scenario
///   fig4              undirected, directed and cycle formation runs
///   persistence-fig1  the stored non-persistent pair and a sampled witness
///
/// Throws Error(kUnknownName).
int Reproduce(const std::string& name, const RunOptions& options, std::ostream& out);

/// Runs scenario files on up to `threads` workers (BEARING_FLOWS_THREADS or
/// the hardware concurrency when 0). Results are reported in input order.
std::vector<RunResult> RunBatch(const std::vector<std::filesystem::path>& files,
                                const RunOptions& options, unsigned threads = 0);

/// Worker cap from BEARING_FLOWS_THREADS, else hardware concurrency, at least 1.
unsigned BatchThreads();

}  // namespace bearing_flows
