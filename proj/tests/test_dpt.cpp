#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ptrack/dpt.hpp"
#include "ptrack/errors.hpp"
#include "rule_table.hpp"
#include "synthetic.hpp"

using namespace ptrack;
using namespace ptrack::dpt;
using S = ParticipantState;
using R = Rule;

namespace {

const FrameGeometry kFrame{640, 480, 30.0};

DptConfig config(int n = 30) { return {n, kFrame}; }

const BBox kInterior = ref::centered_box(320, 240, 80, 100);
const BBox kAtEdge{5, 200, 80, 100};

ParticipantStream track_of(const std::vector<std::optional<BBox>>& slots) { return {"p", slots}; }

ParticipantStream random_track(std::mt19937_64& rng, int length) {
    std::uniform_real_distribution<double> pos(-20, 620);
    std::bernoulli_distribution detected(0.6);
    std::bernoulli_distribution jump(0.1);
    ParticipantStream t{"r", std::vector<std::optional<BBox>>(length)};
    BBox box{300, 200, 60, 60};
    for (auto& slot : t.slots) {
        if (jump(rng)) box = {pos(rng), pos(rng) * 0.7, 60, 60};
        if (detected(rng)) slot = box;
    }
    return t;
}

}  // namespace

TEST(DptInitialState, FromFirstFrame) {
    EXPECT_EQ(initial_state(std::nullopt, kFrame), S::Unknown);
    EXPECT_EQ(initial_state(kInterior, kFrame), S::Inside);
    EXPECT_EQ(initial_state(kAtEdge, kFrame), S::InsideOutside);
}

TEST(DptInputs, FullTrack) {
    const auto track = track_of(std::vector<std::optional<BBox>>(50, kInterior));
    for (int t = 0; t < 50; ++t) {
        const auto in = compute_inputs(track, t, config());
        EXPECT_TRUE(in.detected);
        EXPECT_EQ(in.detected_ahead, t < 49) << t;
        EXPECT_TRUE(in.consistent());
    }
}

TEST(DptInputs, SingleBoxHasNothingAhead) {
    std::vector<std::optional<BBox>> slots(40);
    slots[0] = kInterior;
    const auto in = compute_inputs(track_of(slots), 0, config());
    EXPECT_TRUE(in.detected);
    EXPECT_FALSE(in.detected_ahead);
    EXPECT_FALSE(in.previous_distance.has_value());
}

TEST(DptInputs, LookaheadWindowBounds) {
    std::vector<std::optional<BBox>> slots(60);
    slots[0] = kInterior;
    slots[25] = kAtEdge;
    const auto track = track_of(slots);
    EXPECT_TRUE(compute_inputs(track, 0, config()).detected_ahead);
    EXPECT_TRUE(compute_inputs(track, 0, config(25)).detected_ahead);
    EXPECT_FALSE(compute_inputs(track, 0, config(24)).detected_ahead);
    EXPECT_FALSE(compute_inputs(track, 25, config()).detected_ahead);  // window is strictly future

    const auto later = compute_inputs(track, 30, config());
    EXPECT_FALSE(later.detected);
    EXPECT_EQ(later.latest_box, kAtEdge);
    EXPECT_EQ(later.latest_at_edge, true);
    EXPECT_FALSE(later.previous_distance.has_value());
}

TEST(DptInputs, Distances) {
    std::vector<std::optional<BBox>> slots{kInterior, BBox{330, 260, 40, 40}};
    const auto in = compute_inputs(track_of(slots), 1, config());
    EXPECT_DOUBLE_EQ(*in.previous_distance, 0.0);
    EXPECT_DOUBLE_EQ(*in.current_distance, 50.0);  // centroid (350, 280)
    EXPECT_THROW(compute_inputs(track_of(slots), 2, config()), ArgumentError);
}

TEST(DptStep, DocumentedExamples) {
    const auto cfg = config();
    DptInputs gone;
    gone.latest_box = kInterior;
    gone.latest_at_edge = false;
    EXPECT_EQ(step(S::Inside, gone, cfg), (Transition{S::Occluded, R::R10}));

    DptInputs back;
    back.detected = true;
    back.current_distance = 10;
    back.latest_box = kInterior;
    back.latest_at_edge = false;
    EXPECT_EQ(step(S::Occluded, back, cfg), (Transition{S::Inside, R::R11}));

    DptInputs out;
    out.detected = true;
    out.previous_distance = 100;
    out.current_distance = 200;
    out.latest_box = kAtEdge;
    out.latest_at_edge = true;
    EXPECT_EQ(step(S::Inside, out, cfg), (Transition{S::InsideOutside, R::R8}));

    out.previous_distance = 200;
    EXPECT_EQ(step(S::Inside, out, cfg), (Transition{S::Inside, R::R9}));
    out.previous_distance.reset();
    EXPECT_EQ(step(S::Inside, out, cfg), (Transition{S::Inside, R::R9}));

    EXPECT_EQ(step(S::Outside, DptInputs{}, cfg), (Transition{S::Outside, R::R3}));
}

TEST(DptStep, InconsistentInputsRejected) {
    DptInputs in;
    in.detected = true;  // without a distance or box
    EXPECT_THROW(step(S::Inside, in, config()), ArgumentError);
    DptInputs box_without_flag;
    box_without_flag.latest_box = kInterior;
    EXPECT_THROW(step(S::Inside, box_without_flag, config()), ArgumentError);
}

TEST(DptStep, TotalOverInputLattice) {
    const auto table = ref::rule_table();
    const auto lattice = ref::consistent_lattice();
    for (const S state : ref::kAllStates) {
        for (const auto& point : lattice) {
            int fired = 0;
            const ref::RuleRow* hit = nullptr;
            for (const auto& row : table) {
                if (row.from == state && row.applies(point)) {
                    ++fired;
                    hit = &row;
                }
            }
            ASSERT_EQ(fired, 1) << "state " << to_string(state);
            const auto inputs = point.to_inputs();
            ASSERT_TRUE(inputs.consistent());
            EXPECT_EQ(step(state, inputs, config()), (Transition{hit->to, hit->rule}))
                << "state " << to_string(state) << " c=" << point.c << " n=" << point.n;
        }
    }
}

TEST(DptRun, StationaryParticipantStaysInside) {
    const auto tl = run(track_of(std::vector<std::optional<BBox>>(100, kInterior)), config());
    ASSERT_EQ(tl.frame_count(), 100);
    EXPECT_EQ(tl.entries[0], (TimelineEntry{S::Inside, R::Init}));
    for (int t = 1; t < 100; ++t) EXPECT_EQ(tl.entries[t], (TimelineEntry{S::Inside, R::R9}));
}

TEST(DptRun, InteriorOcclusionHandTrace) {
    std::vector<std::optional<BBox>> slots(30);
    for (int t = 0; t < 30; ++t) {
        if (t < 10 || t >= 20) slots[t] = kInterior;
    }
    const auto tl = run(track_of(slots), config());
    std::vector<TimelineEntry> expected;
    expected.push_back({S::Inside, R::Init});
    for (int t = 1; t < 10; ++t) expected.push_back({S::Inside, R::R9});
    expected.push_back({S::Occluded, R::R10});
    for (int t = 11; t < 20; ++t) expected.push_back({S::Occluded, R::R12});
    expected.push_back({S::Inside, R::R11});
    for (int t = 21; t < 30; ++t) expected.push_back({S::Inside, R::R9});
    EXPECT_EQ(tl.entries, expected);
}

TEST(DptRun, ExitThenReentryHandTrace) {
    const auto tl = run(ref::exit_reentry_track(), config());
    std::vector<TimelineEntry> expected;
    expected.push_back({S::Inside, R::Init});
    for (int t = 1; t <= 8; ++t) expected.push_back({S::Inside, R::R9});
    expected.push_back({S::InsideOutside, R::R8});                          // t = 9
    expected.push_back({S::Outside, R::R5});                                // t = 10
    for (int t = 11; t <= 29; ++t) expected.push_back({S::Outside, R::R3});
    expected.push_back({S::InsideOutside, R::R4});                          // t = 30
    for (int t = 31; t <= 69; ++t) expected.push_back({S::InsideOutside, R::R6});
    expected.push_back({S::Inside, R::R7});                                 // t = 70
    for (int t = 71; t < 100; ++t) expected.push_back({S::Inside, R::R9});
    EXPECT_EQ(tl.entries, expected);
}

TEST(DptRun, EdgeEntryThenInteriorOcclusion) {
    // Starts at the edge, missed at frame 1, inside from frame 2, missed 5..9.
    std::vector<std::optional<BBox>> slots(20);
    slots[0] = kAtEdge;
    const BBox inner = ref::centered_box(200, 240, 80, 100);
    for (int t = 2; t < 20; ++t) {
        if (t < 5 || t >= 10) slots[t] = inner;
    }
    const auto tl = run(track_of(slots), config());
    EXPECT_EQ(tl.entries[0].state, S::InsideOutside);
    EXPECT_EQ(tl.entries[1], (TimelineEntry{S::InsideOutside, R::R6}));   // last box at edge
    EXPECT_EQ(tl.entries[2], (TimelineEntry{S::Inside, R::R7}));
    EXPECT_EQ(tl.entries[5], (TimelineEntry{S::Occluded, R::R10}));
    EXPECT_EQ(tl.entries[10], (TimelineEntry{S::Inside, R::R11}));
}

TEST(DptRun, GapHoldFires) {
    // From InsideOutside with an interior last box and no detection now.
    std::vector<std::optional<BBox>> slots(10);
    slots[0] = kAtEdge;
    slots[1] = ref::centered_box(200, 240, 80, 100);
    slots[5] = slots[1];
    const DptInputs in = compute_inputs(track_of(slots), 2, config());
    EXPECT_EQ(step(S::InsideOutside, in, config()), (Transition{S::InsideOutside, R::GapHold}));
}

TEST(DptRun, MatchesFoldOfDirectInputs) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto track = random_track(rng, 200);
        const int n = 1 + trial % 40;
        const auto tl = run(track, config(n));
        S state = initial_state(track.slots[0], kFrame);
        ASSERT_EQ(tl.entries[0], (TimelineEntry{state, R::Init}));
        for (int t = 1; t < track.frame_count(); ++t) {
            const auto tr = step(state, compute_inputs(track, t, config(n)), config(n));
            ASSERT_EQ(tl.entries[t], (TimelineEntry{tr.next, tr.rule})) << "t=" << t;
            state = tr.next;
        }
    }
}

TEST(DptRun, OccludedOnlyBetweenInsideStates) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto tl = run(random_track(rng, 300), config());
        for (int t = 1; t < tl.frame_count(); ++t) {
            const S prev = tl.entries[t - 1].state;
            const S cur = tl.entries[t].state;
            if (cur == S::Occluded && prev != S::Occluded) {
                EXPECT_EQ(prev, S::Inside);
            }
            if (prev == S::Occluded && cur != S::Occluded) {
                EXPECT_EQ(cur, S::Inside);
            }
        }
    }
}

TEST(DptRun, DecisionIgnoresFramesBeyondLookahead) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 10;
        auto track = random_track(rng, 120);
        const auto base = run(track, config(n));
        const int t = 20 + trial;
        auto& slot = track.slots[t + n + 1];
        slot = slot ? std::nullopt : std::optional<BBox>(kInterior);
        const auto mutated = run(track, config(n));
        for (int i = 0; i <= t; ++i) ASSERT_EQ(base.entries[i], mutated.entries[i]) << i;
    }
}

TEST(DptRun, Deterministic) {
    std::mt19937_64 rng(21);
    const auto track = random_track(rng, 500);
    EXPECT_EQ(run(track, config()), run(track, config()));
}

TEST(DptRun, RejectsEmptyTrackAndBadConfig) {
    EXPECT_THROW(run(track_of({}), config()), ArgumentError);
    EXPECT_THROW(run(track_of({kInterior}), config(0)), ArgumentError);
}

TEST(DptPresence, StateMapping) {
    EXPECT_TRUE(presence(S::Inside));
    EXPECT_TRUE(presence(S::InsideOutside));
    EXPECT_TRUE(presence(S::Occluded));
    EXPECT_FALSE(presence(S::Outside));
    EXPECT_FALSE(presence(S::Unknown));
}

TEST(DptPresence, NeverDetectedMatchesAbsentLabels) {
    const auto session = ref::make_session(
        kFrame, 50,
        {{"seen", [](int) { return ref::centered_box(320, 240, 80, 100); }},
         {"never", [](int) { return std::optional<BBox>{}; }}});
    ParticipantStream never{"never", std::vector<std::optional<BBox>>(50)};
    EXPECT_EQ(presence_timeline(run(never, config())), session.truth.presence_timeline("never"));
}

TEST(DptTimelineIo, RoundTrip) {
    const auto tl = run(ref::exit_reentry_track(), config());
    std::ostringstream out;
    write_timeline(out, tl);
    const std::string text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "0 p inside init");
    EXPECT_NE(text.find("\n9 p inside_outside 8\n"), std::string::npos);
    std::istringstream in(text);
    EXPECT_EQ(parse_timeline(in), tl);
}

TEST(DptTimelineIo, HoldToken) {
    std::istringstream in("0 p inside_outside init\n1 p inside_outside hold\n");
    const auto tl = parse_timeline(in);
    EXPECT_EQ(tl.entries[1].rule, R::GapHold);
}

TEST(DptTimelineIo, Malformed) {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_timeline(in);
    };
    EXPECT_THROW(parse("0 p inside 3\n"), ParseError);                      // first must be init
    EXPECT_THROW(parse("0 p inside init\n2 p inside 9\n"), ParseError);     // gap
    EXPECT_THROW(parse("0 p inside init\n1 q inside 9\n"), ParseError);     // label change
    EXPECT_THROW(parse("0 p sideways init\n"), ParseError);
    EXPECT_THROW(parse("0 p inside init\n1 p inside 14\n"), ParseError);
    EXPECT_THROW(parse("0 p inside init\n1 p inside init\n"), ParseError);
    EXPECT_THROW(parse(""), Error);
}

TEST(DptStateNames, RoundTrip) {
    for (const S s : ref::kAllStates) EXPECT_EQ(parse_state(to_string(s)), s);
    EXPECT_FALSE(parse_state("Inside").has_value());
}
