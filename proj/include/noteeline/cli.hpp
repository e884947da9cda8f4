#pragma once

#include <chrono>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "noteeline/llm_gateway.hpp"

namespace noteeline::cli {

// Hooks for running the CLI in-process (tests, fixture tooling).
struct CliContext {
    llm::EnvLookup env;                             // null: process environment
    std::shared_ptr<llm::ChatTransport> transport;  // null: HTTP transport
    std::function<void(std::chrono::milliseconds)> sleep;
    std::function<WallTime()> clock;
};

// args excludes the program name. Returns the process exit code:
// 0 success, 2 validation error, 3 gateway/model error, 1 anything else.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliContext& ctx = {});

}  // namespace noteeline::cli
