#pragma once

namespace ptrack {

/// Axis-aligned box in pixel coordinates, origin at the frame's top-left.
/// Boxes may extend past the frame; nothing here clips them.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double right() const noexcept { return x + w; }
    double bottom() const noexcept { return y + h; }
    double center_x() const noexcept { return x + w / 2.0; }
    double center_y() const noexcept { return y + h / 2.0; }
    double area() const noexcept { return w * h; }

    /// w > 0, h > 0 and all coordinates finite.
    bool valid() const noexcept;

    friend bool operator==(const BBox&, const BBox&) = default;
};

inline constexpr double kDefaultEdgeMargin = 30.0;

/// Frame dimensions plus the width of the band treated as "the edge".
struct FrameGeometry {
    int width = 0;
    int height = 0;
    double edge_margin = kDefaultEdgeMargin;

    double center_x() const noexcept { return width / 2.0; }
    double center_y() const noexcept { return height / 2.0; }

    bool valid() const noexcept;
    /// Throws ArgumentError unless valid().
    void validate() const;

    friend bool operator==(const FrameGeometry&, const FrameGeometry&) = default;
};

/// Euclidean distance between the box centroid and the frame center.
double centroid_distance(const BBox& box, const FrameGeometry& frame) noexcept;

/// True iff the box rectangle reaches into the edge band on any side.
bool is_at_edge(const BBox& box, const FrameGeometry& frame) noexcept;

/// Intersection over union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b) noexcept;

}  // namespace ptrack
