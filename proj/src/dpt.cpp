#include "ptrack/dpt.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "line_reader.hpp"
#include "ptrack/errors.hpp"

namespace ptrack::dpt {

using S = ParticipantState;

void DptConfig::validate() const {
    if (lookahead < 1) {
        throw ArgumentError("lookahead must be at least 1 frame");
    }
    frame.validate();
}

bool DptInputs::consistent() const noexcept {
    if (detected && (!current_distance || !latest_box)) return false;
    if (!detected && current_distance) return false;
    if (latest_box.has_value() != latest_at_edge.has_value()) return false;
    return true;
}

ParticipantState initial_state(const std::optional<BBox>& first_detection,
                               const FrameGeometry& frame) noexcept {
    if (!first_detection) return S::Unknown;
    return is_at_edge(*first_detection, frame) ? S::InsideOutside : S::Inside;
}

DptInputs compute_inputs(const ParticipantStream& track, int t, const DptConfig& config) {
    const int count = track.frame_count();
    if (t < 0 || t >= count) {
        throw ArgumentError("frame " + std::to_string(t) + " outside track of length " +
                            std::to_string(count));
    }
    const auto& slots = track.slots;
    const auto at = [&](int i) -> const std::optional<BBox>& {
        return slots[static_cast<std::size_t>(i)];
    };

    DptInputs in;
    in.detected = at(t).has_value();
    const int last_ahead = std::min(t + config.lookahead, count - 1);
    for (int i = t + 1; i <= last_ahead && !in.detected_ahead; ++i) {
        in.detected_ahead = at(i).has_value();
    }
    if (t > 0 && at(t - 1)) {
        in.previous_distance = centroid_distance(*at(t - 1), config.frame);
    }
    if (in.detected) {
        in.current_distance = centroid_distance(*at(t), config.frame);
    }
    for (int i = t; i >= 0; --i) {
        if (at(i)) {
            in.latest_box = at(i);
            in.latest_at_edge = is_at_edge(*at(i), config.frame);
            break;
        }
    }
    return in;
}

Transition step(ParticipantState state, const DptInputs& in, const DptConfig& /*config*/) {
    if (!in.consistent()) {
        throw ArgumentError("inconsistent transition inputs");
    }
    const bool at_edge = in.latest_at_edge.value_or(false);

    switch (state) {
    case S::Unknown:
        if (!in.detected) return {S::Unknown, Rule::R0};
        return at_edge ? Transition{S::InsideOutside, Rule::R1} : Transition{S::Inside, Rule::R2};

    case S::Outside:
        return in.detected_ahead ? Transition{S::InsideOutside, Rule::R4}
                                 : Transition{S::Outside, Rule::R3};

    case S::InsideOutside:
        if (!in.detected_ahead) return {S::Outside, Rule::R5};
        if (at_edge) return {S::InsideOutside, Rule::R6};
        if (in.detected) return {S::Inside, Rule::R7};
        return {S::InsideOutside, Rule::GapHold};

    case S::Inside: {
        if (!in.detected) return {S::Occluded, Rule::R10};
        // A reappearance with no previous detection is not outward movement.
        const bool moving_out =
            in.previous_distance && *in.previous_distance < *in.current_distance;
        if (at_edge && moving_out) return {S::InsideOutside, Rule::R8};
        return {S::Inside, Rule::R9};
    }

    case S::Occluded:
        return in.detected ? Transition{S::Inside, Rule::R11} : Transition{S::Occluded, Rule::R12};
    }
    throw std::logic_error("unhandled participant state");
}

StateTimeline run(const ParticipantStream& track, const DptConfig& config) {
    if (track.slots.empty()) {
        throw ArgumentError("cannot run tracking on an empty track for '" +
                            track.participant_id + "'");
    }
    config.validate();

    const int count = track.frame_count();
    const auto& slots = track.slots;
    // next_detection[t]: first detected frame after t, or count.
    std::vector<int> next_detection(static_cast<std::size_t>(count), count);
    for (int t = count - 2; t >= 0; --t) {
        const auto i = static_cast<std::size_t>(t);
        next_detection[i] = slots[i + 1] ? t + 1 : next_detection[i + 1];
    }

    StateTimeline timeline;
    timeline.participant_id = track.participant_id;
    timeline.entries.reserve(slots.size());
    timeline.entries.push_back({initial_state(slots.front(), config.frame), Rule::Init});

    std::optional<BBox> latest = slots.front();
    for (int t = 1; t < count; ++t) {
        const auto i = static_cast<std::size_t>(t);
        DptInputs in;
        in.detected = slots[i].has_value();
        in.detected_ahead = next_detection[i] - t <= config.lookahead && next_detection[i] < count;
        if (slots[i - 1]) in.previous_distance = centroid_distance(*slots[i - 1], config.frame);
        if (in.detected) {
            in.current_distance = centroid_distance(*slots[i], config.frame);
            latest = slots[i];
        }
        if (latest) {
            in.latest_box = latest;
            in.latest_at_edge = is_at_edge(*latest, config.frame);
        }
        const auto [next, rule] = step(timeline.entries.back().state, in, config);
        timeline.entries.push_back({next, rule});
    }
    return timeline;
}

std::vector<bool> presence_timeline(const StateTimeline& timeline) {
    std::vector<bool> out;
    out.reserve(timeline.entries.size());
    for (const auto& e : timeline.entries) out.push_back(presence(e.state));
    return out;
}

std::string_view to_string(ParticipantState state) noexcept {
    switch (state) {
    case S::Unknown: return "unknown";
    case S::Inside: return "inside";
    case S::Outside: return "outside";
    case S::InsideOutside: return "inside_outside";
    case S::Occluded: return "occluded";
    }
    return "unknown";
}

std::optional<ParticipantState> parse_state(std::string_view text) noexcept {
    for (const S s : {S::Unknown, S::Inside, S::Outside, S::InsideOutside, S::Occluded}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

namespace {

std::string rule_token(Rule rule) {
    switch (rule) {
    case Rule::Init: return "init";
    case Rule::GapHold: return "hold";
    default: return std::to_string(static_cast<int>(rule));
    }
}

}  // namespace

void write_timeline(std::ostream& out, const StateTimeline& timeline) {
    for (std::size_t t = 0; t < timeline.entries.size(); ++t) {
        const auto& e = timeline.entries[t];
        out << t << ' ' << timeline.participant_id << ' ' << to_string(e.state) << ' '
            << rule_token(e.rule) << '\n';
    }
}

StateTimeline parse_timeline(std::istream& in) {
    detail::LineReader reader(in);
    StateTimeline timeline;
    std::vector<std::string_view> tokens;
    while (reader.next(tokens)) {
        const std::size_t line = reader.line();
        if (tokens.size() != 4) {
            throw ParseError(line, "expected '<frame_index> <participant_id> <state> <rule>'");
        }
        const long long frame = detail::parse_integer(tokens[0], line, "frame index");
        if (frame != static_cast<long long>(timeline.entries.size())) {
            throw ParseError(line, "expected frame " + std::to_string(timeline.entries.size()));
        }
        if (timeline.entries.empty()) {
            timeline.participant_id = std::string(tokens[1]);
        } else if (tokens[1] != timeline.participant_id) {
            throw ParseError(line, "participant changes within one timeline");
        }
        const auto state = parse_state(tokens[2]);
        if (!state) {
            throw ParseError(line, "unknown state '" + std::string(tokens[2]) + "'");
        }
        Rule rule;
        if (tokens[3] == "init") {
            rule = Rule::Init;
        } else if (tokens[3] == "hold") {
            rule = Rule::GapHold;
        } else {
            const long long r = detail::parse_integer(tokens[3], line, "rule");
            if (r < 0 || r > 12) throw ParseError(line, "rule out of range");
            rule = static_cast<Rule>(r);
        }
        if ((rule == Rule::Init) != timeline.entries.empty()) {
            throw ParseError(line, "only the first frame carries the init marker");
        }
        timeline.entries.push_back({*state, rule});
    }
    if (timeline.entries.empty()) throw FormatError("timeline has no entries");
    return timeline;
}

}  // namespace ptrack::dpt
