#include "ptrack/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <tuple>

#include "ptrack/errors.hpp"

namespace ptrack::eval {
namespace {

double ratio(std::int64_t num, std::int64_t den) noexcept {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

SummaryRow make_row(const std::string& unit, const MatchCounts& counts,
                    std::optional<double> accuracy) {
    SummaryRow row{unit, counts, std::nullopt, accuracy};
    if (counts.tp != 0 || counts.fp != 0 || counts.fn != 0) row.metrics = detection_metrics(counts);
    return row;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

MatchCounts match_frame(const std::vector<BBox>& detections, const std::vector<BBox>& truths,
                        double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
        throw ArgumentError("iou threshold must lie in (0, 1]");
    }
    struct Pair {
        double overlap;
        std::size_t det;
        std::size_t truth;
    };
    std::vector<Pair> pairs;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        for (std::size_t t = 0; t < truths.size(); ++t) {
            const double o = iou(detections[d], truths[t]);
            if (o >= iou_threshold) pairs.push_back({o, d, t});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return std::tie(b.overlap, a.det, a.truth) < std::tie(a.overlap, b.det, b.truth);
    });

    std::vector<bool> det_used(detections.size(), false);
    std::vector<bool> truth_used(truths.size(), false);
    MatchCounts counts;
    for (const Pair& p : pairs) {
        if (det_used[p.det] || truth_used[p.truth]) continue;
        det_used[p.det] = truth_used[p.truth] = true;
        ++counts.tp;
    }
    counts.fp = static_cast<std::int64_t>(detections.size()) - counts.tp;
    counts.fn = static_cast<std::int64_t>(truths.size()) - counts.tp;
    return counts;
}

DetectionMetrics detection_metrics(const MatchCounts& c) {
    if (c.tp < 0 || c.fp < 0 || c.fn < 0) throw ArgumentError("negative match counts");
    if (c.tp == 0 && c.fp == 0 && c.fn == 0) {
        throw ArgumentError("metrics are undefined when all counts are zero");
    }
    return {ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn),
            ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)};
}

double presence_accuracy(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
    if (predicted.size() != truth.size()) {
        throw ArgumentError("timeline lengths differ: " + std::to_string(predicted.size()) +
                            " vs " + std::to_string(truth.size()));
    }
    if (truth.empty()) throw ArgumentError("presence accuracy of an empty timeline");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) agree += predicted[i] == truth[i] ? 1 : 0;
    return static_cast<double>(agree) / static_cast<double>(truth.size());
}

Summary aggregate(const std::vector<UnitResult>& units) {
    if (units.empty()) throw ArgumentError("nothing to aggregate");
    Summary s;
    MatchCounts total;
    double accuracy_sum = 0.0;
    std::size_t accuracy_count = 0;
    for (const auto& u : units) {
        s.rows.push_back(make_row(u.unit, u.counts, u.accuracy));
        total += u.counts;
        if (u.accuracy) {
            accuracy_sum += *u.accuracy;
            ++accuracy_count;
        }
    }
    if (accuracy_count > 0) s.mean_accuracy = accuracy_sum / static_cast<double>(accuracy_count);
    s.total = make_row("total", total, s.mean_accuracy);
    return s;
}

void write_summary_csv(std::ostream& out, const Summary& summary) {
    out << "unit,tp,fp,fn,precision,recall,f1\n";
    auto line = [&](const SummaryRow& r) {
        out << r.unit << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn;
        if (r.metrics) {
            out << ',' << fixed(r.metrics->precision, 6) << ',' << fixed(r.metrics->recall, 6)
                << ',' << fixed(r.metrics->f1, 6);
        } else {
            out << ",,,";
        }
        out << '\n';
    };
    for (const auto& r : summary.rows) line(r);
    line(summary.total);
}

void write_summary_table(std::ostream& out, const Summary& summary) {
    std::size_t unit_w = std::string("total").size();
    for (const auto& r : summary.rows) unit_w = std::max(unit_w, r.unit.size());
    const bool with_accuracy = summary.mean_accuracy.has_value();

    auto cell = [&](const std::string& text, std::size_t width, bool left = false) {
        const std::string pad(width > text.size() ? width - text.size() : 0, ' ');
        out << (left ? text + pad : pad + text);
    };
    auto row = [&](const SummaryRow& r) {
        cell(r.unit, unit_w, true);
        cell(std::to_string(r.counts.tp), 13);
        cell(std::to_string(r.counts.fp), 13);
        cell(std::to_string(r.counts.fn), 13);
        cell(r.metrics ? fixed(r.metrics->precision, 4) : "-", 11);
        cell(r.metrics ? fixed(r.metrics->recall, 4) : "-", 9);
        cell(r.metrics ? fixed(r.metrics->f1, 4) : "-", 9);
        if (with_accuracy) cell(r.accuracy ? fixed(100.0 * *r.accuracy, 1) + "%" : "-", 10);
        out << '\n';
    };

    cell("unit", unit_w, true);
    cell("TP", 13);
    cell("FP", 13);
    cell("FN", 13);
    cell("precision", 11);
    cell("recall", 9);
    cell("F1", 9);
    if (with_accuracy) cell("accuracy", 10);
    out << '\n';
    for (const auto& r : summary.rows) row(r);
    row(summary.total);
}

}  // namespace ptrack::eval
