#pragma once
// Writing-style and consistency metrics for generated notes.
//
// Tokenization (shared by every metric here): ASCII letters are lowercased;
// text is split on any character that is neither alphanumeric nor an
// apostrophe (' or U+2019, folded to ') between word characters. Non-ASCII code points are
// word characters except Latin-1 symbols, the U+2000..U+2BFF punctuation and
// symbol blocks, CJK punctuation and U+FEFF. Word length counts word code points.

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "noteeline/model.hpp"
#include "noteeline/transcript.hpp"

namespace noteeline::stylometry {

inline constexpr std::size_t kMaxWordLengthBucket = 15;  // lengths >= 15 share the last bucket

std::vector<std::string> tokenize(std::string_view text);
std::size_t word_length(std::string_view token);

struct StyleProfile {
    std::size_t token_count = 0;
    std::map<std::size_t, std::size_t> word_length_hist;  // 1..15
    std::map<std::string, std::size_t> word_freq;
};

StyleProfile style_profile(std::string_view text);

// Entry i is the share of tokens with length i+1. Throws EmptyProfile.
std::array<double, kMaxWordLengthBucket> mendenhall_curve(const StyleProfile& profile);

struct ChiSquaredTerm {
    std::string word;
    double contribution = 0.0;
};

struct ChiSquaredReport {
    std::size_t n_top_words = 0;
    double distance = 0.0;
    std::vector<ChiSquaredTerm> per_word_terms;  // in frequency-rank order
};

inline constexpr std::size_t kDefaultTopWords = 500;

// Kilgarriff-style chi-squared over the n_top most frequent words of the
// joint corpus (ties broken lexicographically). Throws EmptyCorpus.
ChiSquaredReport chi_squared_distance(std::string_view corpus_a, std::string_view corpus_b,
                                      std::size_t n_top = kDefaultTopWords);

// (d_without - d_with) / d_without * 100. Positive means the examples helped.
// Both zero gives 0; d_without == 0 < d_with throws ValidationFailed.
double relative_improvement(double d_with, double d_without);

struct StyleMatch {
    ChiSquaredReport with_examples;
    ChiSquaredReport without_examples;
    double improvement_pct = 0.0;
};

StyleMatch style_match_report(std::string_view handwritten, std::string_view generated_with,
                              std::string_view generated_without, std::size_t n_top = kDefaultTopWords);

// Averaging used for the per-participant table: relative improvement of the
// column means.
double averaged_improvement(const std::vector<std::pair<double, double>>& with_without_rows);

// Throws ZeroVector, DimensionMismatch.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;
};

// Term-frequency vectors over a fixed vocabulary (sorted token list).
class TfEmbeddingProvider : public EmbeddingProvider {
public:
    explicit TfEmbeddingProvider(std::vector<std::string> vocabulary);

    std::vector<double> embed(std::string_view text) const override;
    std::size_t dimension() const override { return vocabulary_.size(); }
    std::string name() const override;
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }

private:
    std::vector<std::string> vocabulary_;
    std::map<std::string, std::size_t> index_;
};

// Vocabulary = distinct tokens of the corpus. Throws EmptyCorpus.
std::unique_ptr<TfEmbeddingProvider> tf_embedding_provider(std::string_view corpus);

// Linguistic-quality or factual-consistency scorers that need external models.
class ExternalJudge {
public:
    virtual ~ExternalJudge() = default;
    virtual std::string name() const = 0;
    virtual double score(std::string_view text, std::string_view reference) const = 0;
};

struct PairScore {
    std::string id_a;
    std::string id_b;
    double score = 0.0;
};

struct SimilarityReport {
    std::vector<PairScore> pair_scores;
    std::optional<double> mean;  // absent when no pair could be scored
    std::size_t skipped = 0;     // pairs with a zero embedding
};

struct ConsistencyReport {
    std::string provider;
    SimilarityReport micronote_vs_expansion;
    SimilarityReport transcript_vs_expansion;
};

// Throws NoNotes when there is no ok expansion.
ConsistencyReport consistency_report(const Notebook& nb, const EmbeddingProvider& provider,
                                     const transcript::WindowConfig& window = {});

inline constexpr const char* kBucketUnder10 = "<10s";
inline constexpr const char* kBucket10To40 = "10-40s";
inline constexpr const char* kBucketOver40 = ">40s";

struct ProximityReport {
    std::string provider;
    std::map<std::string, SimilarityReport> buckets;  // only non-empty buckets present
};

// Consecutive ok-expanded notes (capture order) bucketed by absolute video_time gap:
// < 10 s, 10..40 s, > 40 s. Throws NoNotes below 2 ok expansions.
ProximityReport temporal_proximity_report(const Notebook& nb, const EmbeddingProvider& provider);

struct SessionStats {
    std::size_t note_count = 0;
    std::optional<double> avg_note_chars;
    std::optional<double> avg_note_seconds;
    std::size_t pause_count = 0;
    std::size_t seek_count = 0;
};

SessionStats session_stats(const Notebook& nb);

}  // namespace noteeline::stylometry
