#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptrack/geometry.hpp"

namespace ptrack {

using ParticipantId = std::string;

inline constexpr double kDefaultFps = 30.0;

struct DetectionRecord {
    int frame_index = 0;
    std::optional<ParticipantId> participant_id;
    BBox box;
    double confidence = 1.0;

    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// Detections for one recorded video, sorted by frame index.
struct DetectionStream {
    FrameGeometry frame;
    double fps = kDefaultFps;
    int frame_count = 0;
    std::vector<DetectionRecord> records;

    friend bool operator==(const DetectionStream&, const DetectionStream&) = default;
};

/// Presence label for one participant in one frame. A present participant
/// without a box is fully occluded.
struct GroundTruthRecord {
    int frame_index = 0;
    ParticipantId participant_id;
    bool present = false;
    std::optional<BBox> box;

    friend bool operator==(const GroundTruthRecord&, const GroundTruthRecord&) = default;
};

struct GroundTruth {
    FrameGeometry frame;
    double fps = kDefaultFps;
    int frame_count = 0;
    /// Records per participant, each list sorted by frame index.
    std::map<ParticipantId, std::vector<GroundTruthRecord>> participants;

    /// One flag per frame; frames with no record count as absent.
    std::vector<bool> presence_timeline(const ParticipantId& id) const;
    /// All labeled boxes of `frame_index`, ordered by participant label.
    std::vector<BBox> boxes_at(int frame_index) const;
};

/// One slot per frame; a slot holds the participant's box when detected.
struct ParticipantStream {
    ParticipantId participant_id;
    std::vector<std::optional<BBox>> slots;

    int frame_count() const noexcept { return static_cast<int>(slots.size()); }
    friend bool operator==(const ParticipantStream&, const ParticipantStream&) = default;
};

// Line-oriented text format:
//   header:        <frame_width> <frame_height> <fps> <frame_count>
//   detection:     <frame_index> <participant_id|-> <x> <y> <w> <h> <confidence>
//   ground truth:  <frame_index> <participant_id> <present:0|1> <x|-> <y|-> <w|-> <h|->
// Blank lines and lines starting with '#' are ignored. Records must appear in
// non-decreasing frame order.

DetectionStream parse_detections(std::istream& in, double edge_margin = kDefaultEdgeMargin);
GroundTruth parse_ground_truth(std::istream& in, double edge_margin = kDefaultEdgeMargin);

void write_detections(std::ostream& out, const DetectionStream& stream);
void write_ground_truth(std::ostream& out, const GroundTruth& truth);

/// Initial boxes for participants whose detections carry no label.
using SeedBoxes = std::map<ParticipantId, BBox>;

/// Parses `<participant_id> <x> <y> <w> <h>` lines.
SeedBoxes parse_seeds(std::istream& in);

/// Assigns detections to participants. Labeled records go straight to their
/// participant. Unlabeled records are matched greedily, frame by frame, in
/// descending IOU against each track's most recent box (a seed box until the
/// first match); only matches with IOU >= iou_floor are kept and unmatched
/// unlabeled detections are dropped. Ties go to the lexicographically lower
/// label, then to the earlier detection in file order.
///
/// Output is ordered by participant label and covers every label that appears
/// in the stream or in `seeds`.
std::vector<ParticipantStream> link_by_iou(const DetectionStream& stream, double iou_floor,
                                           const SeedBoxes& seeds = {});

/// Formats a double so that parsing it back yields the same value.
std::string format_number(double value);

}  // namespace ptrack
