#pragma once
// Chat transport that answers from a JSON script instead of a model. Used to
// (re)generate the bundled demo fixtures in record mode.
//
// Script shape:
//   {"model": "...",
//    "expansions": {"<keypoint>": "<full note>"},   personalized prompts
//    "ablation":   {"<keypoint>": "<full note>"},   prompts with no examples
//    "themes": "<raw response>", "cues": "<raw response>", "summary": "<text>"}

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "noteeline/llm_gateway.hpp"

namespace noteeline::demo {

class ScriptedTransport : public llm::ChatTransport {
public:
    explicit ScriptedTransport(nlohmann::json script);
    static std::shared_ptr<ScriptedTransport> from_file(const std::filesystem::path& path);

    llm::ChatResponse send(const llm::ChatRequest& request) override;

    std::vector<std::string> unanswered() const;

private:
    nlohmann::json script_;
    mutable std::mutex mu_;
    std::vector<std::string> unanswered_;
};

// Runs the demo pipeline in record mode against the script and returns the
// fixture document bytes. Everything happens under a scratch store.
std::string record_demo_fixtures(const std::filesystem::path& demo_dir, const std::filesystem::path& scratch);

// The CLI invocations, in order, that make up the demo pipeline.
std::vector<std::vector<std::string>> demo_pipeline(const std::filesystem::path& demo_dir);

// Fixed wall clock for reproducible fixtures.
WallTime demo_clock();

}  // namespace noteeline::demo
