#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ptrack/geometry.hpp"

namespace ptrack::eval {

inline constexpr double kDefaultIouThreshold = 0.6;

struct MatchCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    MatchCounts& operator+=(const MatchCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend MatchCounts operator+(MatchCounts a, const MatchCounts& b) noexcept { return a += b; }
    friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct DetectionMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Greedy one-to-one matching in descending IOU order; a pair counts as a true
/// positive when its IOU is at least `iou_threshold`.
MatchCounts match_frame(const std::vector<BBox>& detections, const std::vector<BBox>& truths,
                        double iou_threshold = kDefaultIouThreshold);

/// Throws ArgumentError when all counts are zero.
DetectionMetrics detection_metrics(const MatchCounts& counts);

/// Fraction of frames where the two timelines agree.
double presence_accuracy(const std::vector<bool>& predicted, const std::vector<bool>& truth);

/// One row of a summary: a video, a participant, or any other unit.
struct UnitResult {
    std::string unit;
    MatchCounts counts;
    std::optional<double> accuracy;
};

struct SummaryRow {
    std::string unit;
    MatchCounts counts;
    std::optional<DetectionMetrics> metrics;  // absent when all counts are zero
    std::optional<double> accuracy;
};

struct Summary {
    std::vector<SummaryRow> rows;
    /// Counts summed over units, then turned into metrics.
    SummaryRow total;
    /// Mean of the units' accuracies, when any unit has one.
    std::optional<double> mean_accuracy;
};

/// Throws ArgumentError on empty input.
Summary aggregate(const std::vector<UnitResult>& units);

/// `unit,tp,fp,fn,precision,recall,f1` with one line per unit plus `total`.
void write_summary_csv(std::ostream& out, const Summary& summary);
/// Aligned plain-text table of the same content.
void write_summary_table(std::ostream& out, const Summary& summary);

}  // namespace ptrack::eval
