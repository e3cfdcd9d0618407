#include <gtest/gtest.h>

#include <sstream>

#include "ptrack/errors.hpp"
#include "ptrack/participation_map.hpp"

using namespace ptrack;
using namespace ptrack::map;
using dpt::ParticipantState;
using S = ParticipantState;

namespace {

dpt::StateTimeline timeline(const std::string& id, const std::vector<S>& states) {
    dpt::StateTimeline t{id, {}};
    for (std::size_t i = 0; i < states.size(); ++i) {
        t.entries.push_back({states[i], i == 0 ? dpt::Rule::Init : dpt::Rule::R9});
    }
    return t;
}

std::vector<S> repeat(S s, int n) { return std::vector<S>(static_cast<std::size_t>(n), s); }

std::vector<S> concat(std::vector<S> a, const std::vector<S>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(CellCount, Ceiling) {
    EXPECT_EQ(cell_count(90, 30.0), 3);
    EXPECT_EQ(cell_count(91, 30.0), 4);
    EXPECT_EQ(cell_count(0, 30.0), 0);
    EXPECT_EQ(cell_count(10, 2.5), 4);
    EXPECT_THROW(cell_count(10, 0.0), ArgumentError);
}

TEST(TimelineCsv, PresentThroughout) {
    const auto lines = csv_lines(render_timeline_csv({timeline("a", repeat(S::Inside, 90))}, 30, 1));
    ASSERT_EQ(lines.size(), 2U);
    EXPECT_EQ(lines[0], "participant,cell_0,cell_1,cell_2");
    EXPECT_EQ(lines[1], "a,1,1,1");
}

TEST(TimelineCsv, FirstHalfOnly) {
    const auto t = timeline("a", concat(repeat(S::Occluded, 60), repeat(S::Outside, 60)));
    EXPECT_EQ(csv_lines(render_timeline_csv({t}, 30, 1))[1], "a,1,1,0,0");
}

TEST(TimelineCsv, MajorityWithTiesPresent) {
    // 15 present, 15 absent in the first cell; 14 present, 16 absent in the second.
    const auto t = timeline("a", concat(concat(repeat(S::Inside, 15), repeat(S::Unknown, 15)),
                                        concat(repeat(S::InsideOutside, 14), repeat(S::Outside, 16))));
    EXPECT_EQ(csv_lines(render_timeline_csv({t}, 30, 1))[1], "a,1,0");
}

TEST(TimelineCsv, PartialLastCell) {
    const auto t = timeline("a", concat(repeat(S::Outside, 30), repeat(S::Inside, 5)));
    EXPECT_EQ(csv_lines(render_timeline_csv({t}, 30, 1))[1], "a,0,1");
}

TEST(TimelineCsv, RejectsMismatchedLengths) {
    EXPECT_THROW(render_timeline_csv({timeline("a", repeat(S::Inside, 30)),
                                      timeline("b", repeat(S::Inside, 31))}),
                 ArgumentError);
    EXPECT_THROW(render_timeline_csv({timeline("a", repeat(S::Inside, 30))}, 0, 1), ArgumentError);
}

TEST(CellClasses, VisibleOccludedAbsent) {
    const auto t = timeline("a", concat(concat(repeat(S::Inside, 30), repeat(S::Occluded, 30)),
                                        repeat(S::Outside, 30)));
    EXPECT_EQ(cell_classes(t, 30),
              (std::vector<CellClass>{CellClass::Visible, CellClass::Occluded, CellClass::Absent}));
}

TEST(MapImage, SolidBand) {
    MapSpec spec;
    spec.participants = {"a"};
    const auto img = render_map_image({timeline("a", repeat(S::Inside, 300))}, spec);
    EXPECT_EQ(img.width, 10 * spec.cell_pixel_width);
    EXPECT_EQ(img.height, spec.band_height);
    for (const auto& px : img.pixels) EXPECT_EQ(px, spec.palette.visible);
}

TEST(MapImage, StripesMatchCells) {
    std::vector<S> states;
    for (int c = 0; c < 12; ++c) {
        const auto block = repeat(c % 2 == 0 ? S::Inside : S::Outside, 30);
        states.insert(states.end(), block.begin(), block.end());
    }
    MapSpec spec;
    spec.participants = {"a"};
    const auto img = render_map_image({timeline("a", states)}, spec);
    int runs = 0;
    for (int x = 0; x < img.width; ++x) {
        if (x == 0 || img.at(x, 0) != img.at(x - 1, 0)) ++runs;
    }
    EXPECT_EQ(runs, 12);
}

TEST(MapImage, ComplementaryBands) {
    const auto a = concat(repeat(S::Inside, 60), repeat(S::Outside, 90));
    const auto b = concat(repeat(S::Outside, 60), repeat(S::Inside, 90));
    MapSpec spec;
    spec.participants = {"b", "a"};  // band order follows MapSpec::participants, not the input
    const auto img = render_map_image({timeline("a", a), timeline("b", b)}, spec);
    ASSERT_EQ(img.height, 2 * spec.band_height);
    for (int x = 0; x < img.width; ++x) {
        const auto& top = img.at(x, 0);
        const auto& bottom = img.at(x, spec.band_height);
        EXPECT_NE(top, bottom);
        EXPECT_EQ(top == spec.palette.visible, x >= 2 * spec.cell_pixel_width);
    }
}

TEST(MapImage, Errors) {
    MapSpec spec;
    EXPECT_THROW(render_map_image({timeline("a", repeat(S::Inside, 3))}, spec), ArgumentError);
    spec.participants = {"zz"};
    EXPECT_THROW(render_map_image({timeline("a", repeat(S::Inside, 3))}, spec), ArgumentError);
}
