#pragma once

// resae {stats|train|eval|ablate|gen-toy|grad-check} [--config PATH]
//       [--seed N] [--run-dir D] [key=value ...]
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <ostream>
#include <string>
#include <vector>

#include "resae/run_config.hpp"

namespace resae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// JSON goes to `out`, logs and human-readable tables to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_stats(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_ablate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_gen_toy(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_grad_check(const RunConfig& config, std::ostream& out, std::ostream& err);

// Largest embedding width grad-check accepts.
inline constexpr std::size_t kGradCheckMaxDim = 16;

}  // namespace resae::cli
