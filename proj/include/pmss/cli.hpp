/*
 Copyright 2026 The platoon-mss Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

// Command dispatch for the platoon-mss tool. Each command reads an experiment config,
// writes its artifacts under the output directory and returns a process exit code.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace pmss {

enum ExitCode : int { kExitOk = 0, kExitDomain = 1, kExitUsage = 2, kExitGuard = 3 };

struct CliOptions {
    std::string out;  // overrides output_dir; "out" when neither is set
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<double> tol;  // zero-detection tolerance
    std::optional<int> dump_runs;
    std::optional<unsigned> threads;
    bool require_mss = false;  // analyze exits 1 unless every scenario is MSS
};

int cmd_validate(const std::string& config, const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_analyze(const std::string& config, const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::string& config, const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& config, const CliOptions& opt, std::ostream& out, std::ostream& err);

// Parses argv, dispatches and maps exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pmss
