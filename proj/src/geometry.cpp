#include "ptrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ptrack/errors.hpp"

namespace ptrack {

bool BBox::valid() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
           w > 0.0 && h > 0.0;
}

bool FrameGeometry::valid() const noexcept {
    return width > 0 && height > 0 && std::isfinite(edge_margin) && edge_margin >= 0.0 &&
           2.0 * edge_margin < static_cast<double>(std::min(width, height));
}

void FrameGeometry::validate() const {
    if (!valid()) {
        throw ArgumentError("invalid frame geometry " + std::to_string(width) + "x" +
                            std::to_string(height) + " with edge margin " +
                            std::to_string(edge_margin));
    }
}

double centroid_distance(const BBox& box, const FrameGeometry& frame) noexcept {
    return std::hypot(frame.center_x() - box.center_x(), frame.center_y() - box.center_y());
}

bool is_at_edge(const BBox& box, const FrameGeometry& frame) noexcept {
    const double m = frame.edge_margin;
    return box.x < m || box.y < m || box.right() > frame.width - m ||
           box.bottom() > frame.height - m;
}

double iou(const BBox& a, const BBox& b) noexcept {
    // (x + w) - x need not round back to w.
    if (a == b) {
        return 1.0;
    }
    const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace ptrack
