#include "ptrack/participation_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ptrack/errors.hpp"

namespace ptrack::map {
namespace {

using dpt::ParticipantState;

struct CellTally {
    int visible = 0;
    int occluded = 0;
    int absent = 0;
};

std::vector<CellTally> tally(const dpt::StateTimeline& timeline, double frames_per_cell) {
    const int cells = cell_count(timeline.frame_count(), frames_per_cell);
    std::vector<CellTally> out(static_cast<std::size_t>(cells));
    for (int t = 0; t < timeline.frame_count(); ++t) {
        const auto cell = static_cast<std::size_t>(std::floor(t / frames_per_cell));
        auto& c = out[std::min(cell, out.size() - 1)];
        switch (timeline.entries[static_cast<std::size_t>(t)].state) {
        case ParticipantState::Inside:
        case ParticipantState::InsideOutside: ++c.visible; break;
        case ParticipantState::Occluded: ++c.occluded; break;
        case ParticipantState::Outside:
        case ParticipantState::Unknown: ++c.absent; break;
        }
    }
    return out;
}

bool present(const CellTally& c) noexcept { return c.visible + c.occluded >= c.absent; }

void require_same_length(const std::vector<dpt::StateTimeline>& timelines) {
    for (const auto& t : timelines) {
        if (t.frame_count() != timelines.front().frame_count()) {
            throw ArgumentError("timeline of '" + t.participant_id + "' has " +
                                std::to_string(t.frame_count()) + " frames, expected " +
                                std::to_string(timelines.front().frame_count()));
        }
    }
}

void require_cell_size(double frames_per_cell) {
    if (!(frames_per_cell > 0.0) || !std::isfinite(frames_per_cell)) {
        throw ArgumentError("frames per cell must be positive");
    }
}

}  // namespace

void MapSpec::validate() const {
    if (participants.empty()) throw ArgumentError("participation map needs participants");
    if (!(cell_seconds > 0.0) || !(fps > 0.0)) {
        throw ArgumentError("fps and cell duration must be positive");
    }
    if (cell_pixel_width < 1 || band_height < 1) {
        throw ArgumentError("cell width and band height must be positive");
    }
}

int cell_count(int frame_count, double frames_per_cell) {
    require_cell_size(frames_per_cell);
    return static_cast<int>(std::ceil(frame_count / frames_per_cell));
}

std::vector<bool> cell_presence(const dpt::StateTimeline& timeline, double frames_per_cell) {
    std::vector<bool> out;
    for (const auto& c : tally(timeline, frames_per_cell)) out.push_back(present(c));
    return out;
}

std::vector<CellClass> cell_classes(const dpt::StateTimeline& timeline, double frames_per_cell) {
    std::vector<CellClass> out;
    for (const auto& c : tally(timeline, frames_per_cell)) {
        if (!present(c)) {
            out.push_back(CellClass::Absent);
        } else {
            out.push_back(c.visible >= c.occluded ? CellClass::Visible : CellClass::Occluded);
        }
    }
    return out;
}

std::string render_timeline_csv(const std::vector<dpt::StateTimeline>& timelines, double fps,
                                double cell_seconds) {
    const double per_cell = fps * cell_seconds;
    require_cell_size(per_cell);
    require_same_length(timelines);
    const int cells = timelines.empty() ? 0 : cell_count(timelines.front().frame_count(), per_cell);

    std::ostringstream out;
    out << "participant";
    for (int c = 0; c < cells; ++c) out << ",cell_" << c;
    out << '\n';
    for (const auto& t : timelines) {
        out << t.participant_id;
        for (const bool p : cell_presence(t, per_cell)) out << ',' << (p ? 1 : 0);
        out << '\n';
    }
    return out.str();
}

RgbImage render_map_image(const std::vector<dpt::StateTimeline>& timelines, const MapSpec& spec) {
    spec.validate();
    std::vector<const dpt::StateTimeline*> bands;
    for (const auto& id : spec.participants) {
        const auto it = std::find_if(timelines.begin(), timelines.end(),
                                     [&](const auto& t) { return t.participant_id == id; });
        if (it == timelines.end()) throw ArgumentError("no timeline for participant '" + id + "'");
        bands.push_back(&*it);
    }
    require_same_length(timelines);

    const double per_cell = spec.frames_per_cell();
    const int cells = cell_count(bands.front()->frame_count(), per_cell);
    RgbImage image(cells * spec.cell_pixel_width,
                   static_cast<int>(bands.size()) * spec.band_height);
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const auto classes = cell_classes(*bands[b], per_cell);
        for (int c = 0; c < cells; ++c) {
            const Rgb& color = spec.palette.color(classes[static_cast<std::size_t>(c)]);
            for (int y = 0; y < spec.band_height; ++y) {
                for (int x = 0; x < spec.cell_pixel_width; ++x) {
                    image.at(c * spec.cell_pixel_width + x,
                             static_cast<int>(b) * spec.band_height + y) = color;
                }
            }
        }
    }
    return image;
}

}  // namespace ptrack::map
