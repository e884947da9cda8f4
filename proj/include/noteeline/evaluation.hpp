#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "noteeline/model.hpp"
#include "noteeline/stylometry.hpp"

namespace noteeline::stylometry {

struct EvaluationOptions {
    // Reference text for the style comparison. When unset, the notebook's
    // reference_notes are used, then the profile's onboarding full notes.
    std::optional<std::string> handwritten;
    std::size_t n_top = kDefaultTopWords;
    transcript::WindowConfig window;
    std::vector<const ExternalJudge*> judges;
};

struct ChiSquaredSection {
    std::string reference_source;  // "handwritten" | "reference_notes" | "onboarding"
    std::size_t n_top = 0;
    std::optional<ChiSquaredReport> with_onboarding;
    std::optional<ChiSquaredReport> without_onboarding;
    std::optional<double> improvement_pct;
};

struct EvaluationReport {
    std::string notebook_id;
    std::optional<ChiSquaredSection> chi_squared;
    std::optional<ConsistencyReport> consistency;
    std::optional<ProximityReport> proximity;
    SessionStats session;
    std::map<std::string, double> external_judges;  // judge name -> mean score
    std::vector<std::string> notes;                 // why a section is missing
};

// Sections whose preconditions fail are left empty with a note; never throws
// for missing data.
EvaluationReport evaluate(const Notebook& nb, const UserProfile* profile, const EvaluationOptions& opts = {});

nlohmann::json to_json(const EvaluationReport& report);
std::string render_text(const EvaluationReport& report);

}  // namespace noteeline::stylometry
