#include "noteeline/evaluation.hpp"

#include <fmt/format.h>

#include "noteeline/errors.hpp"
#include "noteeline/text.hpp"

namespace noteeline::stylometry {

using json = nlohmann::json;

namespace {

std::string joined_expansions(const Notebook& nb, const std::map<std::string, ExpandedNote>& map) {
    std::vector<std::string> parts;
    for (const auto& m : nb.micronotes) {
        auto it = map.find(m.id);
        if (it != map.end() && it->second.is_ok()) parts.push_back(it->second.text);
    }
    return text::join(parts, "\n");
}

json opt_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json chi_json(const std::optional<ChiSquaredReport>& r) {
    if (!r) return nullptr;
    json terms = json::array();
    for (const auto& t : r->per_word_terms) terms.push_back(json::array({t.word, t.contribution}));
    return json{{"n_top_words", r->n_top_words}, {"distance", r->distance}, {"per_word_terms", terms}};
}

json similarity_json(const SimilarityReport& r) {
    json pairs = json::array();
    for (const auto& p : r.pair_scores) pairs.push_back({{"id_a", p.id_a}, {"id_b", p.id_b}, {"score", p.score}});
    return json{{"pair_scores", pairs}, {"mean", opt_number(r.mean)}, {"skipped", r.skipped}};
}

std::string fmt_opt(const std::optional<double>& v, int precision = 4) {
    return v ? fmt::format("{:.{}f}", *v, precision) : std::string("n/a");
}

}  // namespace

EvaluationReport evaluate(const Notebook& nb, const UserProfile* profile, const EvaluationOptions& opts) {
    EvaluationReport r;
    r.notebook_id = nb.id;
    r.session = session_stats(nb);

    // Style comparison against the user's own writing.
    std::optional<std::string> reference;
    std::string source;
    if (opts.handwritten) {
        reference = opts.handwritten;
        source = "handwritten";
    } else if (nb.reference_notes) {
        reference = nb.reference_notes;
        source = "reference_notes";
    } else if (profile && profile->onboarded()) {
        std::vector<std::string> notes;
        for (const auto& ex : profile->examples) notes.push_back(ex.full_note);
        reference = text::join(notes, "\n");
        source = "onboarding";
    }
    if (!reference || style_profile(*reference).token_count == 0) {
        r.notes.push_back("chi_squared: no reference text");
    } else {
        ChiSquaredSection chi;
        chi.reference_source = source;
        chi.n_top = opts.n_top;
        auto with_text = joined_expansions(nb, nb.expansions);
        auto without_text = joined_expansions(nb, nb.ablation_expansions);
        if (style_profile(with_text).token_count > 0) {
            chi.with_onboarding = chi_squared_distance(with_text, *reference, opts.n_top);
        } else {
            r.notes.push_back("chi_squared: no ok expansions");
        }
        if (style_profile(without_text).token_count > 0) {
            chi.without_onboarding = chi_squared_distance(without_text, *reference, opts.n_top);
        } else {
            r.notes.push_back("chi_squared: no ablation expansions (run expand --no-personalization)");
        }
        if (chi.with_onboarding && chi.without_onboarding) {
            try {
                chi.improvement_pct =
                    relative_improvement(chi.with_onboarding->distance, chi.without_onboarding->distance);
            } catch (const Error& e) {
                r.notes.push_back(std::string("chi_squared: ") + e.what());
            }
        }
        if (chi.with_onboarding || chi.without_onboarding) r.chi_squared = std::move(chi);
    }

    // Embedding consistency, using a TF provider over everything in the notebook.
    std::vector<std::string> corpus;
    for (const auto& m : nb.micronotes) corpus.push_back(m.text);
    for (const auto& [id, e] : nb.expansions) {
        if (e.is_ok()) corpus.push_back(e.text);
    }
    corpus.push_back(transcript::full_text(nb.transcript));
    auto corpus_text = text::join(corpus, "\n");
    if (nb.ok_expansion_count() == 0 || tokenize(corpus_text).empty()) {
        r.notes.push_back("consistency: no ok expansions");
    } else {
        auto provider = tf_embedding_provider(corpus_text);
        r.consistency = consistency_report(nb, *provider, opts.window);
        if (nb.ok_expansion_count() >= 2) {
            r.proximity = temporal_proximity_report(nb, *provider);
        } else {
            r.notes.push_back("proximity: fewer than 2 ok expansions");
        }
    }

    for (const auto* judge : opts.judges) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& m : nb.micronotes) {
            if (const auto* e = nb.ok_expansion(m.id)) {
                sum += judge->score(e->text, m.text);
                ++n;
            }
        }
        if (n > 0) r.external_judges[judge->name()] = sum / static_cast<double>(n);
    }
    return r;
}

json to_json(const EvaluationReport& r) {
    json out;
    out["notebook_id"] = r.notebook_id;
    if (r.chi_squared) {
        const auto& c = *r.chi_squared;
        out["chi_squared"] = {{"reference", c.reference_source},
                              {"n_top", c.n_top},
                              {"with_onboarding", chi_json(c.with_onboarding)},
                              {"without_onboarding", chi_json(c.without_onboarding)},
                              {"relative_improvement_pct", opt_number(c.improvement_pct)}};
    } else {
        out["chi_squared"] = nullptr;
    }
    if (r.consistency) {
        out["consistency"] = {{"provider", r.consistency->provider},
                              {"micronote_vs_expansion", similarity_json(r.consistency->micronote_vs_expansion)},
                              {"transcript_vs_expansion", similarity_json(r.consistency->transcript_vs_expansion)}};
    } else {
        out["consistency"] = nullptr;
    }
    if (r.proximity) {
        json buckets = json::object();
        for (const auto& [name, rep] : r.proximity->buckets) buckets[name] = similarity_json(rep);
        out["proximity"] = {{"provider", r.proximity->provider}, {"buckets", buckets}};
    } else {
        out["proximity"] = nullptr;
    }
    out["session"] = {{"note_count", r.session.note_count},
                      {"avg_note_chars", opt_number(r.session.avg_note_chars)},
                      {"avg_note_seconds", opt_number(r.session.avg_note_seconds)},
                      {"pause_count", r.session.pause_count},
                      {"seek_count", r.session.seek_count}};
    out["external_judges"] = r.external_judges;
    out["notes"] = r.notes;
    return out;
}

std::string render_text(const EvaluationReport& r) {
    std::string out;
    auto line = [&out](const std::string& label, const std::string& value) {
        out += fmt::format("  {:<28}{}\n", label, value);
    };

    out += fmt::format("Evaluation report for notebook {}\n\n", r.notebook_id);

    if (r.chi_squared) {
        const auto& c = *r.chi_squared;
        out += fmt::format("Style match (chi-squared distance, n_top={}, reference={})\n", c.n_top, c.reference_source);
        line("with onboarding", c.with_onboarding ? fmt::format("{:.6f}", c.with_onboarding->distance) : "n/a");
        line("without onboarding",
             c.without_onboarding ? fmt::format("{:.6f}", c.without_onboarding->distance) : "n/a");
        line("relative improvement", c.improvement_pct ? fmt::format("{:+.2f}%", *c.improvement_pct) : "n/a");
    } else {
        out += "Style match (chi-squared distance)\n";
        line("status", "n/a");
    }
    out += "\n";

    if (r.consistency) {
        out += fmt::format("Consistency (cosine similarity, provider={})\n", r.consistency->provider);
        line("micronote vs expansion", fmt::format("{} ({} pairs)", fmt_opt(r.consistency->micronote_vs_expansion.mean),
                                                   r.consistency->micronote_vs_expansion.pair_scores.size()));
        line("transcript vs expansion",
             fmt::format("{} ({} pairs)", fmt_opt(r.consistency->transcript_vs_expansion.mean),
                         r.consistency->transcript_vs_expansion.pair_scores.size()));
    } else {
        out += "Consistency\n";
        line("status", "n/a");
    }
    out += "\n";

    out += "Temporal proximity (consecutive notes)\n";
    for (const char* b : {kBucketUnder10, kBucket10To40, kBucketOver40}) {
        std::string value = "n/a";
        if (r.proximity) {
            if (auto it = r.proximity->buckets.find(b); it != r.proximity->buckets.end()) {
                value = fmt::format("{} ({} pairs)", fmt_opt(it->second.mean), it->second.pair_scores.size());
            }
        }
        line(b, value);
    }
    out += "\n";

    out += "Session\n";
    line("notes", std::to_string(r.session.note_count));
    line("avg note length (chars)", fmt_opt(r.session.avg_note_chars, 2));
    line("avg time per note (s)", fmt_opt(r.session.avg_note_seconds, 2));
    line("pauses", std::to_string(r.session.pause_count));
    line("seeks", std::to_string(r.session.seek_count));

    if (!r.external_judges.empty()) {
        out += "\nExternal judges\n";
        for (const auto& [name, score] : r.external_judges) line(name, fmt::format("{:.4f}", score));
    }
    return out;
}

}  // namespace noteeline::stylometry
