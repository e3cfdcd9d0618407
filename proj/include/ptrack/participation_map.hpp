#pragma once

#include <string>
#include <vector>

#include "ptrack/detection_io.hpp"
#include "ptrack/dpt.hpp"
#include "ptrack/image.hpp"

namespace ptrack::map {

/// State classes a rendered cell can take.
enum class CellClass { Visible, Occluded, Absent };

struct Palette {
    Rgb visible{46, 139, 87};
    Rgb occluded{152, 210, 170};
    Rgb absent{235, 235, 235};

    const Rgb& color(CellClass c) const noexcept {
        switch (c) {
        case CellClass::Visible: return visible;
        case CellClass::Occluded: return occluded;
        case CellClass::Absent: break;
        }
        return absent;
    }
};

struct MapSpec {
    std::vector<ParticipantId> participants;  // band order, top to bottom
    double fps = kDefaultFps;
    double cell_seconds = 1.0;
    int cell_pixel_width = 4;
    int band_height = 16;
    Palette palette;

    double frames_per_cell() const noexcept { return fps * cell_seconds; }
    void validate() const;
};

/// ceil(frame_count / frames_per_cell).
int cell_count(int frame_count, double frames_per_cell);

/// Majority presence per cell; ties count as present.
std::vector<bool> cell_presence(const dpt::StateTimeline& timeline, double frames_per_cell);

/// Absent unless the cell is present by majority; present cells are Visible
/// when visible frames are at least as many as occluded ones.
std::vector<CellClass> cell_classes(const dpt::StateTimeline& timeline, double frames_per_cell);

/// Header `participant,cell_0,...`, one 0/1 row per timeline in input order.
/// Throws ArgumentError when timeline lengths differ.
std::string render_timeline_csv(const std::vector<dpt::StateTimeline>& timelines,
                                double fps = kDefaultFps, double cell_seconds = 1.0);

/// One horizontal band per participant of `spec`, one column block per cell.
/// Throws ArgumentError for zero participants, a participant without a
/// timeline, or mismatched timeline lengths.
RgbImage render_map_image(const std::vector<dpt::StateTimeline>& timelines, const MapSpec& spec);

}  // namespace ptrack::map
