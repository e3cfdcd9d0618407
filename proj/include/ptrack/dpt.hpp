#pragma once

// Dynamic participant tracking: a five-state machine run independently for
// every participant over that participant's detection timeline.

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "ptrack/detection_io.hpp"
#include "ptrack/geometry.hpp"

namespace ptrack::dpt {

enum class ParticipantState { Unknown, Inside, Outside, InsideOutside, Occluded };

/// Which transition produced a state. Values 0..12 are the transition rules;
/// GapHold covers InsideOutside with a future detection, no current
/// detection and the last box away from the edge, where no rule applies and
/// the state is held. Init marks the first frame of a timeline.
enum class Rule : int {
    Init = -1,
    R0 = 0, R1, R2, R3, R4, R5, R6, R7, R8, R9, R10, R11, R12,
    GapHold = 13,
};

inline constexpr int kDefaultLookahead = 30;

struct DptConfig {
    /// Lookahead horizon in frames (the "next n frames" window).
    int lookahead = kDefaultLookahead;
    FrameGeometry frame;

    void validate() const;
};

/// Inputs to one transition at frame t.
struct DptInputs {
    bool detected = false;          // detection in frame t
    bool detected_ahead = false;    // detection in any of frames t+1 .. t+n
    std::optional<double> previous_distance;  // centroid distance at t-1
    std::optional<double> current_distance;   // centroid distance at t
    std::optional<BBox> latest_box;           // most recent box at index <= t
    std::optional<bool> latest_at_edge;

    /// detected implies current_distance and latest_box; latest_box implies
    /// latest_at_edge.
    bool consistent() const noexcept;
};

struct Transition {
    ParticipantState next;
    Rule rule;

    friend bool operator==(const Transition&, const Transition&) = default;
};

struct TimelineEntry {
    ParticipantState state;
    Rule rule;

    friend bool operator==(const TimelineEntry&, const TimelineEntry&) = default;
};

struct StateTimeline {
    ParticipantId participant_id;
    std::vector<TimelineEntry> entries;

    int frame_count() const noexcept { return static_cast<int>(entries.size()); }
    friend bool operator==(const StateTimeline&, const StateTimeline&) = default;
};

ParticipantState initial_state(const std::optional<BBox>& first_detection,
                               const FrameGeometry& frame) noexcept;

DptInputs compute_inputs(const ParticipantStream& track, int t, const DptConfig& config);

/// Applies the transition table. Never fails on consistent inputs; throws
/// ArgumentError on inconsistent ones.
Transition step(ParticipantState state, const DptInputs& inputs, const DptConfig& config);

/// Folds step() over the whole track. Throws ArgumentError for an empty track.
StateTimeline run(const ParticipantStream& track, const DptConfig& config);

/// Inside, InsideOutside and Occluded count as present.
constexpr bool presence(ParticipantState state) noexcept {
    return state == ParticipantState::Inside || state == ParticipantState::InsideOutside ||
           state == ParticipantState::Occluded;
}

std::vector<bool> presence_timeline(const StateTimeline& timeline);

std::string_view to_string(ParticipantState state) noexcept;
std::optional<ParticipantState> parse_state(std::string_view text) noexcept;

/// `<frame_index> <participant_id> <state> <rule>`, one line per frame; the
/// first frame's rule is written as `init` and the gap hold as `hold`.
void write_timeline(std::ostream& out, const StateTimeline& timeline);
StateTimeline parse_timeline(std::istream& in);

}  // namespace ptrack::dpt
