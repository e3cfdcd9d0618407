#pragma once

// The tracking transition table written out row by row as predicates over the
// input lattice, independent of the switch in dpt.cpp.

#include <functional>
#include <optional>
#include <vector>

#include "ptrack/dpt.hpp"

namespace ptrack::ref {

enum class Previous { Absent, Less, Equal, Greater };

/// One point of the input lattice.
struct LatticePoint {
    bool c = false;                    // detected now
    bool n = false;                    // detected in the lookahead window
    Previous p = Previous::Absent;     // previous distance relative to current
    std::optional<bool> latest_edge;   // latest box at edge; nullopt = no box yet

    dpt::DptInputs to_inputs() const {
        dpt::DptInputs in;
        in.detected = c;
        in.detected_ahead = n;
        if (c) in.current_distance = 100.0;
        switch (p) {
        case Previous::Absent: break;
        case Previous::Less: in.previous_distance = 50.0; break;
        case Previous::Equal: in.previous_distance = 100.0; break;
        case Previous::Greater: in.previous_distance = 150.0; break;
        }
        if (latest_edge) {
            in.latest_box = BBox{10, 10, 20, 20};
            in.latest_at_edge = *latest_edge;
        }
        return in;
    }
};

/// Every lattice point satisfying the input invariants. Without a current
/// detection the previous distance is only absent or present (Less stands in
/// for "present").
inline std::vector<LatticePoint> consistent_lattice() {
    std::vector<LatticePoint> out;
    for (const bool c : {false, true}) {
        for (const bool n : {false, true}) {
            const auto previous = c ? std::vector<Previous>{Previous::Absent, Previous::Less,
                                                            Previous::Equal, Previous::Greater}
                                    : std::vector<Previous>{Previous::Absent, Previous::Less};
            for (const auto p : previous) {
                const auto latest = c ? std::vector<std::optional<bool>>{false, true}
                                      : std::vector<std::optional<bool>>{std::nullopt, false, true};
                for (const auto& l : latest) out.push_back({c, n, p, l});
            }
        }
    }
    return out;
}

struct RuleRow {
    dpt::ParticipantState from;
    std::function<bool(const LatticePoint&)> applies;
    dpt::ParticipantState to;
    dpt::Rule rule;
};

inline std::vector<RuleRow> rule_table() {
    using S = dpt::ParticipantState;
    using R = dpt::Rule;
    // "edge" for a current detection is the current box, which is then the latest box.
    auto edge = [](const LatticePoint& x) { return x.latest_edge.value_or(false); };
    auto moving_out = [](const LatticePoint& x) { return x.p == Previous::Less; };
    return {
        {S::Unknown, [](const auto& x) { return !x.c; }, S::Unknown, R::R0},
        {S::Unknown, [=](const auto& x) { return x.c && edge(x); }, S::InsideOutside, R::R1},
        {S::Unknown, [=](const auto& x) { return x.c && !edge(x); }, S::Inside, R::R2},

        {S::Outside, [](const auto& x) { return !x.n; }, S::Outside, R::R3},
        {S::Outside, [](const auto& x) { return x.n; }, S::InsideOutside, R::R4},

        {S::InsideOutside, [](const auto& x) { return !x.n; }, S::Outside, R::R5},
        {S::InsideOutside, [=](const auto& x) { return x.n && edge(x); }, S::InsideOutside, R::R6},
        {S::InsideOutside, [=](const auto& x) { return x.n && x.c && !edge(x); }, S::Inside, R::R7},
        {S::InsideOutside, [=](const auto& x) { return x.n && !x.c && !edge(x); }, S::InsideOutside,
         R::GapHold},

        {S::Inside, [=](const auto& x) { return x.c && edge(x) && moving_out(x); }, S::InsideOutside,
         R::R8},
        {S::Inside, [=](const auto& x) { return x.c && (!edge(x) || !moving_out(x)); }, S::Inside,
         R::R9},
        {S::Inside, [](const auto& x) { return !x.c; }, S::Occluded, R::R10},

        {S::Occluded, [](const auto& x) { return x.c; }, S::Inside, R::R11},
        {S::Occluded, [](const auto& x) { return !x.c; }, S::Occluded, R::R12},
    };
}

inline constexpr dpt::ParticipantState kAllStates[] = {
    dpt::ParticipantState::Unknown, dpt::ParticipantState::Inside, dpt::ParticipantState::Outside,
    dpt::ParticipantState::InsideOutside, dpt::ParticipantState::Occluded};

}  // namespace ptrack::ref
