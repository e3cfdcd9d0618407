#include "ptrack/detection_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>
#include <ostream>
#include <set>
#include <string_view>
#include <tuple>

#include "line_reader.hpp"
#include "ptrack/errors.hpp"

namespace ptrack {
namespace {

constexpr std::string_view kAbsent = "-";

struct Header {
    FrameGeometry frame;
    double fps = kDefaultFps;
    int frame_count = 0;
};

Header read_header(detail::LineReader& reader, double edge_margin) {
    std::vector<std::string_view> tokens;
    if (!reader.next(tokens)) {
        throw FormatError("missing header line '<frame_width> <frame_height> <fps> <frame_count>'");
    }
    if (tokens.size() != 4) {
        throw FormatError("line " + std::to_string(reader.line()) +
                          ": expected header '<frame_width> <frame_height> <fps> <frame_count>'");
    }
    const std::size_t line = reader.line();
    Header h;
    h.frame.width = static_cast<int>(detail::parse_integer(tokens[0], line, "frame width"));
    h.frame.height = static_cast<int>(detail::parse_integer(tokens[1], line, "frame height"));
    h.frame.edge_margin = edge_margin;
    h.fps = detail::parse_real(tokens[2], line, "fps");
    const long long count = detail::parse_integer(tokens[3], line, "frame count");
    if (!h.frame.valid()) {
        throw FormatError("line " + std::to_string(line) + ": invalid frame geometry");
    }
    if (h.fps <= 0.0) {
        throw FormatError("line " + std::to_string(line) + ": fps must be positive");
    }
    if (count < 0 || count > std::numeric_limits<int>::max()) {
        throw FormatError("line " + std::to_string(line) + ": frame count out of range");
    }
    h.frame_count = static_cast<int>(count);
    return h;
}

int read_frame_index(std::string_view token, std::size_t line, int frame_count, int previous) {
    const long long idx = detail::parse_integer(token, line, "frame index");
    if (idx < 0 || idx >= frame_count) {
        throw RangeError(line, "frame index " + std::string(token) + " outside [0, " +
                                   std::to_string(frame_count) + ")");
    }
    if (idx < previous) {
        throw ParseError(line, "frame index " + std::string(token) +
                                   " out of order (previous " + std::to_string(previous) + ")");
    }
    return static_cast<int>(idx);
}

BBox read_box(const std::vector<std::string_view>& tokens, std::size_t first, std::size_t line) {
    const BBox box{detail::parse_real(tokens[first], line, "x"),
                   detail::parse_real(tokens[first + 1], line, "y"),
                   detail::parse_real(tokens[first + 2], line, "w"),
                   detail::parse_real(tokens[first + 3], line, "h")};
    if (!box.valid()) {
        throw ParseError(line, "box width and height must be positive");
    }
    return box;
}

void write_header(std::ostream& out, const FrameGeometry& frame, double fps, int frame_count) {
    out << frame.width << ' ' << frame.height << ' ' << format_number(fps) << ' ' << frame_count
        << '\n';
}

void write_box(std::ostream& out, const BBox& b) {
    out << format_number(b.x) << ' ' << format_number(b.y) << ' ' << format_number(b.w) << ' '
        << format_number(b.h);
}

}  // namespace

std::string format_number(double value) {
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ec == std::errc{} ? end : buf.data());
}

DetectionStream parse_detections(std::istream& in, double edge_margin) {
    detail::LineReader reader(in);
    const Header header = read_header(reader, edge_margin);

    DetectionStream stream;
    stream.frame = header.frame;
    stream.fps = header.fps;
    stream.frame_count = header.frame_count;

    std::vector<std::string_view> tokens;
    int previous = 0;
    while (reader.next(tokens)) {
        const std::size_t line = reader.line();
        if (tokens.size() != 7) {
            throw ParseError(line, "expected 7 fields '<frame_index> <participant_id|-> <x> <y> "
                                   "<w> <h> <confidence>', got " +
                                       std::to_string(tokens.size()));
        }
        DetectionRecord rec;
        rec.frame_index = read_frame_index(tokens[0], line, stream.frame_count, previous);
        previous = rec.frame_index;
        if (tokens[1] != kAbsent) {
            rec.participant_id = std::string(tokens[1]);
        }
        rec.box = read_box(tokens, 2, line);
        rec.confidence = detail::parse_real(tokens[6], line, "confidence");
        if (rec.confidence < 0.0 || rec.confidence > 1.0) {
            throw ParseError(line, "confidence must lie in [0, 1]");
        }
        stream.records.push_back(std::move(rec));
    }
    return stream;
}

GroundTruth parse_ground_truth(std::istream& in, double edge_margin) {
    detail::LineReader reader(in);
    const Header header = read_header(reader, edge_margin);

    GroundTruth truth;
    truth.frame = header.frame;
    truth.fps = header.fps;
    truth.frame_count = header.frame_count;

    std::vector<std::string_view> tokens;
    int previous = 0;
    while (reader.next(tokens)) {
        const std::size_t line = reader.line();
        if (tokens.size() != 7) {
            throw ParseError(line, "expected 7 fields '<frame_index> <participant_id> "
                                   "<present:0|1> <x|-> <y|-> <w|-> <h|->', got " +
                                       std::to_string(tokens.size()));
        }
        GroundTruthRecord rec;
        rec.frame_index = read_frame_index(tokens[0], line, truth.frame_count, previous);
        previous = rec.frame_index;
        if (tokens[1] == kAbsent) {
            throw ParseError(line, "ground truth requires a participant id");
        }
        rec.participant_id = std::string(tokens[1]);
        if (tokens[2] == "1") {
            rec.present = true;
        } else if (tokens[2] != "0") {
            throw ParseError(line, "present flag must be 0 or 1");
        }
        const auto absent_fields = std::count(tokens.begin() + 3, tokens.end(), kAbsent);
        if (absent_fields == 0) {
            if (!rec.present) {
                throw ConsistencyError(line, "participant '" + rec.participant_id +
                                                 "' marked not present but has a box");
            }
            rec.box = read_box(tokens, 3, line);
        } else if (absent_fields != 4) {
            throw ParseError(line, "box fields must be all present or all '-'");
        }

        auto& list = truth.participants[rec.participant_id];
        if (!list.empty() && list.back().frame_index == rec.frame_index) {
            throw ParseError(line, "duplicate record for participant '" + rec.participant_id +
                                       "' in frame " + std::to_string(rec.frame_index));
        }
        list.push_back(std::move(rec));
    }
    return truth;
}

std::vector<bool> GroundTruth::presence_timeline(const ParticipantId& id) const {
    std::vector<bool> timeline(static_cast<std::size_t>(frame_count), false);
    if (const auto it = participants.find(id); it != participants.end()) {
        for (const auto& rec : it->second) {
            timeline[static_cast<std::size_t>(rec.frame_index)] = rec.present;
        }
    }
    return timeline;
}

std::vector<BBox> GroundTruth::boxes_at(int frame_index) const {
    std::vector<BBox> boxes;
    for (const auto& [id, records] : participants) {
        const auto it = std::lower_bound(
            records.begin(), records.end(), frame_index,
            [](const GroundTruthRecord& r, int f) { return r.frame_index < f; });
        if (it != records.end() && it->frame_index == frame_index && it->box) {
            boxes.push_back(*it->box);
        }
    }
    return boxes;
}

void write_detections(std::ostream& out, const DetectionStream& stream) {
    write_header(out, stream.frame, stream.fps, stream.frame_count);
    for (const auto& rec : stream.records) {
        out << rec.frame_index << ' ' << rec.participant_id.value_or(std::string(kAbsent)) << ' ';
        write_box(out, rec.box);
        out << ' ' << format_number(rec.confidence) << '\n';
    }
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
    write_header(out, truth.frame, truth.fps, truth.frame_count);
    std::vector<const GroundTruthRecord*> all;
    for (const auto& [id, records] : truth.participants) {
        for (const auto& rec : records) all.push_back(&rec);
    }
    std::stable_sort(all.begin(), all.end(), [](const auto* a, const auto* b) {
        return a->frame_index < b->frame_index;
    });
    for (const auto* rec : all) {
        out << rec->frame_index << ' ' << rec->participant_id << ' ' << (rec->present ? 1 : 0)
            << ' ';
        if (rec->box) {
            write_box(out, *rec->box);
        } else {
            out << "- - - -";
        }
        out << '\n';
    }
}

SeedBoxes parse_seeds(std::istream& in) {
    detail::LineReader reader(in);
    SeedBoxes seeds;
    std::vector<std::string_view> tokens;
    while (reader.next(tokens)) {
        const std::size_t line = reader.line();
        if (tokens.size() != 5) {
            throw ParseError(line, "expected '<participant_id> <x> <y> <w> <h>'");
        }
        std::string id(tokens[0]);
        if (id == kAbsent) {
            throw ParseError(line, "seed requires a participant id");
        }
        if (!seeds.emplace(id, read_box(tokens, 1, line)).second) {
            throw ParseError(line, "duplicate seed for '" + id + "'");
        }
    }
    return seeds;
}

std::vector<ParticipantStream> link_by_iou(const DetectionStream& stream, double iou_floor,
                                           const SeedBoxes& seeds) {
    if (!(iou_floor > 0.0 && iou_floor < 1.0)) {
        throw ArgumentError("iou floor must lie in (0, 1)");
    }
    if (stream.frame_count < 0) {
        throw ArgumentError("negative frame count");
    }

    std::set<ParticipantId> label_set;
    for (const auto& [id, box] : seeds) label_set.insert(id);
    for (const auto& rec : stream.records) {
        if (rec.frame_index < 0 || rec.frame_index >= stream.frame_count) {
            throw ArgumentError("record frame index outside the stream");
        }
        if (rec.participant_id) label_set.insert(*rec.participant_id);
    }
    if (!std::is_sorted(stream.records.begin(), stream.records.end(),
                        [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; })) {
        throw ArgumentError("detection records are not sorted by frame");
    }

    const std::vector<ParticipantId> labels(label_set.begin(), label_set.end());
    std::vector<ParticipantStream> tracks;
    std::vector<std::optional<BBox>> last_box;
    for (const auto& id : labels) {
        tracks.push_back({id, std::vector<std::optional<BBox>>(
                                  static_cast<std::size_t>(stream.frame_count))});
        const auto seed = seeds.find(id);
        last_box.push_back(seed != seeds.end() ? std::optional<BBox>(seed->second) : std::nullopt);
    }
    auto track_of = [&](const ParticipantId& id) {
        return static_cast<std::size_t>(
            std::lower_bound(labels.begin(), labels.end(), id) - labels.begin());
    };

    struct Candidate {
        double overlap;
        std::size_t track;
        std::size_t detection;
    };
    std::vector<Candidate> candidates;
    std::vector<std::size_t> unlabeled;

    const auto& records = stream.records;
    for (std::size_t begin = 0; begin < records.size();) {
        const int frame = records[begin].frame_index;
        std::size_t end = begin;
        while (end < records.size() && records[end].frame_index == frame) ++end;
        const auto slot = static_cast<std::size_t>(frame);

        unlabeled.clear();
        for (std::size_t i = begin; i < end; ++i) {
            const auto& rec = records[i];
            if (!rec.participant_id) {
                unlabeled.push_back(i);
                continue;
            }
            const std::size_t t = track_of(*rec.participant_id);
            if (tracks[t].slots[slot]) {
                throw AmbiguityError("two detections claim participant '" + *rec.participant_id +
                                     "' in frame " + std::to_string(frame));
            }
            tracks[t].slots[slot] = rec.box;
            last_box[t] = rec.box;
        }

        candidates.clear();
        for (std::size_t t = 0; t < tracks.size(); ++t) {
            if (tracks[t].slots[slot] || !last_box[t]) continue;
            for (const std::size_t d : unlabeled) {
                const double overlap = iou(*last_box[t], records[d].box);
                if (overlap >= iou_floor) candidates.push_back({overlap, t, d});
            }
        }
        std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            return std::tie(b.overlap, a.track, a.detection) <
                   std::tie(a.overlap, b.track, b.detection);
        });
        std::vector<bool> detection_used(end - begin, false);
        for (const auto& c : candidates) {
            if (tracks[c.track].slots[slot] || detection_used[c.detection - begin]) continue;
            tracks[c.track].slots[slot] = records[c.detection].box;
            last_box[c.track] = records[c.detection].box;
            detection_used[c.detection - begin] = true;
        }
        begin = end;
    }
    return tracks;
}

}  // namespace ptrack
