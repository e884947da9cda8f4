#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "noteeline/errors.hpp"
#include "noteeline/fsutil.hpp"
#include "noteeline/transcript.hpp"
#include "support.hpp"

using namespace noteeline;
using namespace noteeline::transcript;

namespace {

std::string fixture(const char* name) {
    return fsutil::read_file(testsupport::source_dir() / "tests" / "fixtures" / name);
}

Transcript make(std::vector<std::pair<double, double>> spans) {
    Transcript t;
    int i = 0;
    for (auto [s, d] : spans) t.segments.push_back({"s" + std::to_string(i++), s, d});
    return t;
}

std::size_t format_error_line(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const FormatError& e) {
        return e.line();
    }
    ADD_FAILURE() << "expected FormatError";
    return 9999;
}

}  // namespace

TEST(ParseVtt, SingleCue) {
    auto t = parse_vtt("WEBVTT\n\n00:00:01.000 --> 00:00:04.000\nhello\n");
    ASSERT_EQ(t.segments.size(), 1u);
    EXPECT_EQ(t.segments[0], (TranscriptSegment{"hello", 1.0, 3.0}));
}

TEST(ParseVtt, StylingTagsStripped) {
    auto t = parse_vtt("WEBVTT\n\n00:00:01.000 --> 00:00:02.000\n<c>styled</c>\n");
    ASSERT_EQ(t.segments.size(), 1u);
    EXPECT_EQ(t.segments[0].text, "styled");
}

TEST(ParseVtt, ThreeCueFixtureMatchesHandExpectation) {
    auto t = parse_vtt(fixture("three_cues.vtt"));
    std::vector<TranscriptSegment> expected{
        {"Recurrent networks read a sequence", 1.0, 3.5},
        {"one token at a time,\nleft to right & back", 4.5, 4.75},
        {"They can be unrolled either way.", 62.0, 3.0},
    };
    EXPECT_EQ(t.segments, expected);
    EXPECT_LT(t.segments[0].start, t.segments[1].start);
    EXPECT_LT(t.segments[1].start, t.segments[2].start);
    EXPECT_EQ(full_text(t),
              "Recurrent networks read a sequence one token at a time,\nleft to right & back They can be unrolled "
              "either way.");
}

TEST(ParseVtt, Errors) {
    EXPECT_EQ(format_error_line([] { parse_vtt("00:00:01.000 --> 00:00:02.000\nx\n"); }), 1u);
    EXPECT_EQ(format_error_line([] { parse_vtt("WEBVTT\n\n00:00:01.000 --> 00:00:0x.000\nx\n"); }), 3u);
    EXPECT_EQ(format_error_line([] { parse_vtt("WEBVTT\n\n00:00:03.000 --> 00:00:02.000\nx\n"); }), 3u);
    EXPECT_EQ(format_error_line([] { parse_vtt("WEBVTT\n\n00:00:03.000 --> 00:00:03.000\nx\n"); }), 3u);
    EXPECT_EQ(format_error_line([] { parse_vtt("WEBVTT\n"); }), 0u);
}

TEST(ParseVtt, BomAndCrlf) {
    auto t = parse_vtt("\xEF\xBB\xBFWEBVTT\r\n\r\n00:00.500 --> 00:01.000\r\nhey\r\n");
    ASSERT_EQ(t.segments.size(), 1u);
    EXPECT_EQ(t.segments[0], (TranscriptSegment{"hey", 0.5, 0.5}));
}

TEST(ParseSrt, CommaSeparator) {
    auto t = parse_srt("1\n00:00:00,500 --> 00:00:02,000\nhi");
    ASSERT_EQ(t.segments.size(), 1u);
    EXPECT_EQ(t.segments[0], (TranscriptSegment{"hi", 0.5, 1.5}));
}

TEST(ParseSrt, EmptyFileIsNoCues) {
    try {
        parse_srt("");
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.reason(), "no cues");
        EXPECT_EQ(e.code(), ErrorCode::FormatError);
    }
}

TEST(ParseSrt, MultiLinePayloadIsNewlineJoined) {
    auto t = parse_srt(fixture("two_lines.srt"));
    std::vector<TranscriptSegment> expected{
        {"hi", 0.5, 1.5},
        {"first line\nsecond line", 2.0, 3.25},
        {"last", 60.0, 1.0},
    };
    EXPECT_EQ(t.segments, expected);
}

TEST(ParseSegmentsJson, MappingAndSorting) {
    auto one = parse_segments_json(R"([{"text":"a","start":0,"duration":2}])");
    ASSERT_EQ(one.segments.size(), 1u);
    EXPECT_EQ(one.segments[0], (TranscriptSegment{"a", 0.0, 2.0}));

    auto t = parse_segments_json(fixture("segments.json"));
    ASSERT_EQ(t.segments.size(), 2u);
    EXPECT_EQ(t.segments[0].text, "first");
    EXPECT_EQ(t.segments[1].text, "second");
}

TEST(ParseSegmentsJson, Errors) {
    EXPECT_THROW(parse_segments_json(R"([{"text":"a","start":0,"duration":0}])"), FormatError);
    EXPECT_THROW(parse_segments_json(R"([{"text":"a","start":-1,"duration":1}])"), FormatError);
    EXPECT_THROW(parse_segments_json(R"([{"text":"a","duration":1}])"), FormatError);
    EXPECT_THROW(parse_segments_json(R"([{"text":"  ","start":0,"duration":1}])"), FormatError);
    EXPECT_THROW(parse_segments_json(R"({"text":"a"})"), FormatError);
    EXPECT_THROW(parse_segments_json("not json"), FormatError);
}

TEST(Serializer, RoundTripsFixtures) {
    for (auto t : {parse_vtt(fixture("three_cues.vtt")), parse_srt(fixture("two_lines.srt")),
                   parse_segments_json(fixture("segments.json"))}) {
        auto back = parse_segments_json(to_segments_json(t));
        EXPECT_EQ(back.segments, t.segments);
    }
}

TEST(FormatName, KnownAndUnknown) {
    EXPECT_EQ(format_from_name("vtt"), CaptionFormat::vtt);
    EXPECT_EQ(format_from_name("srt"), CaptionFormat::srt);
    EXPECT_EQ(format_from_name("json"), CaptionFormat::json);
    EXPECT_THROW(format_from_name("docx"), Error);
}

TEST(Markup, EntitiesDecodedOnce) {
    EXPECT_EQ(strip_caption_markup("<b>a</b> &lt;b&gt; &amp;lt;"), "a <b> &lt;");
}

TEST(FullText, Basics) {
    EXPECT_EQ(full_text(make({{0, 1}, {1, 1}})), "s0 s1");
    EXPECT_EQ(full_text(Transcript{}), "");
}

TEST(Window, ThreeSegmentsAllIntersect) {
    auto t = make({{0, 5}, {5, 5}, {10, 5}});
    auto w = window_around(t, 7, 5, 5);
    EXPECT_EQ(w.first_index, 0u);
    EXPECT_EQ(w.last_index, 2u);
    EXPECT_EQ(w.text, "s0 s1 s2");
    EXPECT_EQ(w.window_start, 2.0);
    EXPECT_EQ(w.window_end, 12.0);
}

TEST(Window, NearestFallbackPastEnd) {
    auto t = make({{0, 5}, {5, 5}, {10, 5}});
    auto w = window_around(t, 100, 5, 5);
    EXPECT_EQ(w.indices, (std::vector<std::size_t>{2}));
    EXPECT_EQ(w.text, "s2");
}

TEST(Window, ZeroWidthAtBoundaryIsHalfOpen) {
    auto t = make({{0, 5}, {5, 5}, {10, 5}});
    auto w = window_around(t, 5.0, 0, 0);
    EXPECT_EQ(w.indices, (std::vector<std::size_t>{1}));
    EXPECT_EQ(w.text, "s1");
}

TEST(Window, PreconditionErrors) {
    EXPECT_THROW(window_around(Transcript{}, 1, 1, 1), Error);
    try {
        window_around(Transcript{}, 1, 1, 1);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyTranscript);
    }
    auto t = make({{0, 5}});
    EXPECT_THROW(window_around(t, 1, -1, 0), Error);
    EXPECT_THROW(window_around(t, 1, 0, -1), Error);
}

TEST(Window, DefaultsAre45Before15After) {
    WindowConfig cfg;
    EXPECT_EQ(cfg.before, 45.0);
    EXPECT_EQ(cfg.after, 15.0);
}

// Oracle: brute-force intersection of half-open segments with the closed window.
TEST(WindowProperty, ExactIntersectionMonotoneAndContiguous) {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> gap(0.0, 6.0), dur(0.1, 12.0), when(-5.0, 150.0), span(0.0, 40.0);
    std::bernoulli_distribution nested(0.3);
    for (int trial = 0; trial < 2000; ++trial) {
        bool allow_overlap = trial % 2 == 1;
        Transcript t;
        double start = 0.0, prev_end = 0.0;
        int n = 1 + trial % 12;
        for (int i = 0; i < n; ++i) {
            start += allow_overlap && nested(rng) ? 0.0 : gap(rng);
            double d = dur(rng);
            if (!allow_overlap) {
                start = std::max(start, prev_end);
            }
            t.segments.push_back({"seg" + std::to_string(i), start, d});
            prev_end = start + d;
        }
        double vt = std::max(0.0, when(rng));
        double before = span(rng), after = span(rng);
        auto w = window_around(t, vt, before, after);

        std::vector<std::size_t> expected;
        for (std::size_t i = 0; i < t.segments.size(); ++i) {
            const auto& s = t.segments[i];
            if (s.start <= vt + after && s.end() > vt - before) expected.push_back(i);
        }
        if (expected.empty()) {
            ASSERT_EQ(w.indices.size(), 1u);
            double best = 1e18;
            for (const auto& s : t.segments) {
                double dist = vt < s.start ? s.start - vt : std::max(0.0, vt - s.end());
                best = std::min(best, dist);
            }
            const auto& chosen = t.segments[w.indices[0]];
            double chosen_dist = vt < chosen.start ? chosen.start - vt : std::max(0.0, vt - chosen.end());
            EXPECT_DOUBLE_EQ(chosen_dist, best);
            continue;
        }
        ASSERT_EQ(w.indices, expected) << "trial " << trial;
        EXPECT_EQ(w.first_index, expected.front());
        EXPECT_EQ(w.last_index, expected.back());
        EXPECT_LE(w.first_index, w.last_index);
        if (!allow_overlap) {
            EXPECT_EQ(w.last_index - w.first_index + 1, w.indices.size()) << "not contiguous, trial " << trial;
        }
        std::vector<std::string> texts;
        for (auto i : expected) texts.push_back(t.segments[i].text);
        std::string joined;
        for (std::size_t i = 0; i < texts.size(); ++i) joined += (i ? " " : "") + texts[i];
        EXPECT_EQ(w.text, joined);

        auto wider = window_around(t, vt, before + span(rng), after + span(rng));
        for (auto i : w.indices) {
            EXPECT_TRUE(std::binary_search(wider.indices.begin(), wider.indices.end(), i)) << "monotonicity";
        }
    }
}
