#pragma once

#include <filesystem>
#include <string>

#include "emokd/metrics.hpp"
#include "emokd/sweeps.hpp"

namespace emokd {

// Every report lands as three files under the run directory:
//   summary/<name>.summary   structured JSON
//   tables/<name>.table      tab-separated table
//   plots/<name>.plot        SVG image
// config_echo is copied verbatim into each summary.

void emit_sweep_report(const SweepResult& sweep, const std::string& config_echo,
                       const std::filesystem::path& run_dir);

void emit_eval_report(const EvalReport& report, const std::string& config_echo,
                      const std::filesystem::path& run_dir);

void emit_complementarity_report(const ComplementarityPartition& partition,
                                 const std::string& dataset,
                                 const std::string& config_echo,
                                 const std::filesystem::path& run_dir);

}  // namespace emokd
