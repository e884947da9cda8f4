#include "noteeline/stylometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "noteeline/errors.hpp"
#include "noteeline/text.hpp"

namespace noteeline::stylometry {

namespace {

// One UTF-8 code point at s[i]; returns its byte length.
std::size_t cp_len(std::string_view s, std::size_t i) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t n = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    return std::min(n, s.size() - i);
}

char32_t decode(std::string_view cp) {
    auto b = [&](std::size_t i) { return static_cast<char32_t>(static_cast<unsigned char>(cp[i])); };
    switch (cp.size()) {
        case 2: return ((b(0) & 0x1F) << 6) | (b(1) & 0x3F);
        case 3: return ((b(0) & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
        case 4: return ((b(0) & 0x07) << 18) | ((b(1) & 0x3F) << 12) | ((b(2) & 0x3F) << 6) | (b(3) & 0x3F);
        default: return b(0);
    }
}

// Non-ASCII code points are letters unless they fall in a punctuation/space block.
bool is_word_cp(std::string_view cp) {
    auto c = static_cast<unsigned char>(cp[0]);
    if (c < 0x80) return std::isalnum(c) != 0;
    char32_t u = decode(cp);
    if (u >= 0x80 && u <= 0xBF) return false;       // Latin-1 punctuation and symbols
    if (u == 0xD7 || u == 0xF7) return false;       // multiplication, division signs
    if (u >= 0x2000 && u <= 0x2BFF) return false;   // general punctuation, arrows, math, symbols
    if (u >= 0x3000 && u <= 0x303F) return false;   // CJK punctuation
    if (u == 0xFEFF) return false;
    return true;
}

bool is_apostrophe(std::string_view cp) { return cp == "'" || cp == "\xE2\x80\x99"; }

std::vector<double> to_double(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

SimilarityReport summarize(std::vector<PairScore> scores, std::size_t skipped) {
    SimilarityReport r;
    r.pair_scores = std::move(scores);
    r.skipped = skipped;
    if (!r.pair_scores.empty()) {
        double sum = 0.0;
        for (const auto& p : r.pair_scores) sum += p.score;
        r.mean = sum / static_cast<double>(r.pair_scores.size());
    }
    return r;
}

// Scores a pair, counting it as skipped when either side embeds to zero.
bool try_score(const EmbeddingProvider& provider, std::string_view a, std::string_view b, double& out) {
    try {
        out = cosine_similarity(provider.embed(a), provider.embed(b));
        return true;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ZeroVector) return false;
        throw;
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    // Split into code points first so apostrophe context can look both ways.
    std::vector<std::string_view> cps;
    for (std::size_t i = 0; i < text.size();) {
        auto n = cp_len(text, i);
        cps.push_back(text.substr(i, n));
        i += n;
    }
    std::vector<std::string> tokens;
    std::string current;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        auto cp = cps[i];
        if (is_word_cp(cp)) {
            if (cp.size() == 1) {
                current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(cp[0]))));
            } else {
                current.append(cp);
            }
            continue;
        }
        bool internal = is_apostrophe(cp) && !current.empty() && i + 1 < cps.size() && is_word_cp(cps[i + 1]);
        if (internal) {
            current.push_back('\'');
            continue;
        }
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::size_t word_length(std::string_view token) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < token.size();) {
        auto len = cp_len(token, i);
        if (is_word_cp(token.substr(i, len))) ++n;
        i += len;
    }
    return n;
}

StyleProfile style_profile(std::string_view text) {
    StyleProfile p;
    for (auto& tok : tokenize(text)) {
        auto len = std::min(word_length(tok), kMaxWordLengthBucket);
        ++p.word_length_hist[len];
        ++p.word_freq[tok];
        ++p.token_count;
    }
    return p;
}

std::array<double, kMaxWordLengthBucket> mendenhall_curve(const StyleProfile& profile) {
    if (profile.token_count == 0) throw Error(ErrorCode::EmptyProfile, "style profile has no tokens");
    std::array<double, kMaxWordLengthBucket> curve{};
    const auto total = static_cast<double>(profile.token_count);
    for (const auto& [len, count] : profile.word_length_hist) {
        if (len >= 1 && len <= kMaxWordLengthBucket) curve[len - 1] = static_cast<double>(count) / total;
    }
    return curve;
}

ChiSquaredReport chi_squared_distance(std::string_view corpus_a, std::string_view corpus_b, std::size_t n_top) {
    auto a = style_profile(corpus_a);
    auto b = style_profile(corpus_b);
    if (a.token_count == 0 || b.token_count == 0) {
        throw Error(ErrorCode::EmptyCorpus, "both corpora need at least one token");
    }

    std::map<std::string, std::size_t> joint = a.word_freq;
    for (const auto& [w, c] : b.word_freq) joint[w] += c;
    std::vector<std::pair<std::string, std::size_t>> ranked(joint.begin(), joint.end());
    // joint is already lexicographic, so a stable sort by count keeps ties in word order.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    ranked.resize(std::min(n_top, ranked.size()));

    const double size_a = static_cast<double>(a.token_count);
    const double size_b = static_cast<double>(b.token_count);
    const double share_a = size_a / (size_a + size_b);
    const double share_b = size_b / (size_a + size_b);

    ChiSquaredReport report;
    report.n_top_words = ranked.size();
    for (const auto& [word, joint_count] : ranked) {
        auto ia = a.word_freq.find(word);
        auto ib = b.word_freq.find(word);
        double obs_a = ia == a.word_freq.end() ? 0.0 : static_cast<double>(ia->second);
        double obs_b = ib == b.word_freq.end() ? 0.0 : static_cast<double>(ib->second);
        double exp_a = static_cast<double>(joint_count) * share_a;
        double exp_b = static_cast<double>(joint_count) * share_b;
        double term = (obs_a - exp_a) * (obs_a - exp_a) / exp_a + (obs_b - exp_b) * (obs_b - exp_b) / exp_b;
        report.per_word_terms.push_back({word, term});
        report.distance += term;
    }
    return report;
}

double relative_improvement(double d_with, double d_without) {
    if (d_without == 0.0) {
        if (d_with == 0.0) return 0.0;
        throw Error(ErrorCode::ValidationFailed, "baseline distance is zero; relative improvement undefined");
    }
    return (d_without - d_with) / d_without * 100.0;
}

StyleMatch style_match_report(std::string_view handwritten, std::string_view generated_with,
                              std::string_view generated_without, std::size_t n_top) {
    StyleMatch m;
    m.with_examples = chi_squared_distance(generated_with, handwritten, n_top);
    m.without_examples = chi_squared_distance(generated_without, handwritten, n_top);
    m.improvement_pct = relative_improvement(m.with_examples.distance, m.without_examples.distance);
    return m;
}

double averaged_improvement(const std::vector<std::pair<double, double>>& rows) {
    if (rows.empty()) throw Error(ErrorCode::ValidationFailed, "no rows to average");
    double with_sum = 0.0;
    double without_sum = 0.0;
    for (const auto& [w, wo] : rows) {
        with_sum += w;
        without_sum += wo;
    }
    auto n = static_cast<double>(rows.size());
    return relative_improvement(with_sum / n, without_sum / n);
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "vector dimensions differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

TfEmbeddingProvider::TfEmbeddingProvider(std::vector<std::string> vocabulary) : vocabulary_(std::move(vocabulary)) {
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) index_.emplace(vocabulary_[i], i);
}

std::vector<double> TfEmbeddingProvider::embed(std::string_view text) const {
    std::vector<std::size_t> counts(vocabulary_.size(), 0);
    for (const auto& tok : tokenize(text)) {
        if (auto it = index_.find(tok); it != index_.end()) ++counts[it->second];
    }
    return to_double(counts);
}

std::string TfEmbeddingProvider::name() const { return "tf:" + std::to_string(vocabulary_.size()); }

std::unique_ptr<TfEmbeddingProvider> tf_embedding_provider(std::string_view corpus) {
    auto tokens = tokenize(corpus);
    if (tokens.empty()) throw Error(ErrorCode::EmptyCorpus, "vocabulary corpus has no tokens");
    std::set<std::string> vocab(tokens.begin(), tokens.end());
    return std::make_unique<TfEmbeddingProvider>(std::vector<std::string>(vocab.begin(), vocab.end()));
}

ConsistencyReport consistency_report(const Notebook& nb, const EmbeddingProvider& provider,
                                     const transcript::WindowConfig& window) {
    if (nb.ok_expansion_count() == 0) throw Error(ErrorCode::NoNotes, "no ok expansions to score");
    ConsistencyReport out;
    out.provider = provider.name();
    std::vector<PairScore> note_scores, window_scores;
    std::size_t note_skipped = 0, window_skipped = 0;
    for (const auto& m : nb.micronotes) {
        const auto* e = nb.ok_expansion(m.id);
        if (!e) continue;
        double s = 0.0;
        if (try_score(provider, m.text, e->text, s)) {
            note_scores.push_back({m.id, m.id, s});
        } else {
            ++note_skipped;
        }
        if (nb.transcript.empty()) continue;
        auto w = transcript::window_around(nb.transcript, m.video_time, window);
        if (try_score(provider, w.text, e->text, s)) {
            window_scores.push_back({"transcript:" + m.id, m.id, s});
        } else {
            ++window_skipped;
        }
    }
    out.micronote_vs_expansion = summarize(std::move(note_scores), note_skipped);
    out.transcript_vs_expansion = summarize(std::move(window_scores), window_skipped);
    return out;
}

ProximityReport temporal_proximity_report(const Notebook& nb, const EmbeddingProvider& provider) {
    std::vector<std::pair<const Micronote*, const ExpandedNote*>> notes;
    for (const auto& m : nb.micronotes) {
        if (const auto* e = nb.ok_expansion(m.id)) notes.emplace_back(&m, e);
    }
    if (notes.size() < 2) throw Error(ErrorCode::NoNotes, "proximity analysis needs at least 2 expanded notes");
    std::stable_sort(notes.begin(), notes.end(),
                     [](const auto& x, const auto& y) { return x.first->video_time < y.first->video_time; });

    std::map<std::string, std::vector<PairScore>> scores;
    std::map<std::string, std::size_t> skipped;
    for (std::size_t i = 1; i < notes.size(); ++i) {
        const auto& [ma, ea] = notes[i - 1];
        const auto& [mb, eb] = notes[i];
        double gap = std::abs(mb->video_time - ma->video_time);
        std::string bucket = gap < 10.0 ? kBucketUnder10 : gap <= 40.0 ? kBucket10To40 : kBucketOver40;
        double s = 0.0;
        if (try_score(provider, ea->text, eb->text, s)) {
            scores[bucket].push_back({ma->id, mb->id, s});
        } else {
            ++skipped[bucket];
        }
    }
    ProximityReport out;
    out.provider = provider.name();
    for (const char* b : {kBucketUnder10, kBucket10To40, kBucketOver40}) {
        auto it = scores.find(b);
        auto sk = skipped.count(b) ? skipped[b] : 0;
        if (it == scores.end() && sk == 0) continue;
        out.buckets[b] = summarize(it == scores.end() ? std::vector<PairScore>{} : std::move(it->second), sk);
    }
    return out;
}

SessionStats session_stats(const Notebook& nb) {
    SessionStats s;
    s.note_count = nb.micronotes.size();
    if (s.note_count > 0) {
        double chars = 0.0, secs = 0.0;
        for (const auto& m : nb.micronotes) {
            chars += static_cast<double>(text::utf8_length(m.text));
            secs += m.writing_seconds();
        }
        s.avg_note_chars = chars / static_cast<double>(s.note_count);
        s.avg_note_seconds = secs / static_cast<double>(s.note_count);
    }
    for (const auto& e : nb.events) {
        if (e.kind == PlaybackKind::pause) ++s.pause_count;
        if (e.kind == PlaybackKind::seek) ++s.seek_count;
    }
    return s;
}

}  // namespace noteeline::stylometry
