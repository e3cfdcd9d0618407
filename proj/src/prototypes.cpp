#include "ptrack/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "line_reader.hpp"
#include "ptrack/errors.hpp"

namespace ptrack::prototypes {
namespace {

// Uniform integer in [0, n). Avoids std::uniform_int_distribution, whose
// output differs between standard libraries.
std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t range = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return static_cast<std::size_t>(draw % range);
}

std::size_t validate(std::span<const FeatureSample> samples) {
    if (samples.empty()) throw ArgumentError("k-means needs at least one sample");
    const std::size_t d = samples.front().vector.size();
    if (d == 0) throw ArgumentError("feature vectors must not be empty");
    for (const auto& s : samples) {
        if (s.vector.size() != d) {
            throw ArgumentError("sample '" + s.sample_id + "' has dimension " +
                                std::to_string(s.vector.size()) + ", expected " +
                                std::to_string(d));
        }
        for (const double v : s.vector) {
            if (!std::isfinite(v)) {
                throw ArgumentError("sample '" + s.sample_id + "' has a non-finite component");
            }
        }
    }
    return d;
}

std::size_t nearest(std::span<const double> point, const std::vector<std::vector<double>>& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(point, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

double inertia(std::span<const FeatureSample> samples, const Clustering& cl) {
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        total += squared_distance(samples[i].vector,
                                  cl.centroids[static_cast<std::size_t>(cl.assignment[i])]);
    }
    return total;
}

std::vector<double> mean_of(std::span<const FeatureSample> samples, const std::vector<int>& assignment,
                            int cluster, std::size_t d) {
    std::vector<double> sum(d, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (assignment[i] != cluster) continue;
        ++count;
        for (std::size_t j = 0; j < d; ++j) sum[j] += samples[i].vector[j];
    }
    for (double& v : sum) v /= static_cast<double>(count);
    return sum;
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        total += diff * diff;
    }
    return total;
}

std::vector<FeatureSample> sparse_sample(std::span<const FeatureSample> samples, int stride) {
    if (stride < 1) throw ArgumentError("sampling stride must be at least 1");
    std::vector<FeatureSample> kept;
    long long last_window = -1;
    int previous_frame = std::numeric_limits<int>::min();
    for (const auto& s : samples) {
        if (s.frame_index < previous_frame) {
            throw ArgumentError("samples are not ordered by frame index");
        }
        previous_frame = s.frame_index;
        const long long window = s.frame_index / stride - (s.frame_index % stride < 0 ? 1 : 0);
        if (window != last_window) {
            kept.push_back(s);
            last_window = window;
        }
    }
    return kept;
}

Clustering kmeans_cluster(std::span<const FeatureSample> samples, int k, std::uint64_t seed,
                          int max_iters) {
    const std::size_t d = validate(samples);
    if (k < 1) throw ArgumentError("k must be at least 1");
    if (max_iters < 1) throw ArgumentError("max_iters must be at least 1");

    // First occurrence of each distinct vector, in input order.
    std::map<std::vector<double>, std::size_t> first_seen;
    std::vector<std::size_t> distinct;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (first_seen.emplace(samples[i].vector, distinct.size()).second) distinct.push_back(i);
    }

    Clustering cl;
    cl.assignment.resize(samples.size());

    if (distinct.size() <= static_cast<std::size_t>(k)) {
        for (const std::size_t i : distinct) cl.centroids.push_back(samples[i].vector);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            cl.assignment[i] = static_cast<int>(first_seen.at(samples[i].vector));
        }
        cl.inertia.push_back(0.0);
        return cl;
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> pool = distinct;
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
        const std::size_t pick = c + bounded(rng, pool.size() - c);
        std::swap(pool[c], pool[pick]);
        cl.centroids.push_back(samples[pool[c]].vector);
    }

    std::vector<int> previous;
    for (int iter = 1; iter <= max_iters; ++iter) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            cl.assignment[i] = static_cast<int>(nearest(samples[i].vector, cl.centroids));
        }
        if (cl.assignment == previous) break;
        cl.iterations = iter;

        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (const int a : cl.assignment) ++counts[static_cast<std::size_t>(a)];
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                cl.centroids[static_cast<std::size_t>(c)] = mean_of(samples, cl.assignment, c, d);
            }
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            std::size_t far = samples.size();
            double far_d = -1.0;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                const auto owner = static_cast<std::size_t>(cl.assignment[i]);
                if (counts[owner] < 2) continue;
                const double dist = squared_distance(samples[i].vector, cl.centroids[owner]);
                if (dist > far_d) {
                    far_d = dist;
                    far = i;
                }
            }
            const int owner = cl.assignment[far];
            --counts[static_cast<std::size_t>(owner)];
            cl.assignment[far] = c;
            counts[static_cast<std::size_t>(c)] = 1;
            cl.centroids[static_cast<std::size_t>(c)] = samples[far].vector;
            cl.centroids[static_cast<std::size_t>(owner)] = mean_of(samples, cl.assignment, owner, d);
        }
        cl.inertia.push_back(inertia(samples, cl));
        previous = cl.assignment;
    }
    return cl;
}

PrototypeSet select_prototypes(std::span<const FeatureSample> samples, const Clustering& clusters,
                               const ParticipantId& participant_id) {
    if (clusters.assignment.size() != samples.size()) {
        throw ArgumentError("clustering does not belong to these samples");
    }
    PrototypeSet set;
    set.participant_id = participant_id;
    set.k = static_cast<int>(clusters.centroids.size());

    const std::size_t none = samples.size();
    std::vector<std::size_t> best(clusters.centroids.size(), none);
    std::vector<double> best_d(clusters.centroids.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto c = static_cast<std::size_t>(clusters.assignment[i]);
        if (c >= clusters.centroids.size()) throw ArgumentError("cluster index out of range");
        const double d = squared_distance(samples[i].vector, clusters.centroids[c]);
        if (d < best_d[c] ||
            (d == best_d[c] && samples[i].frame_index < samples[best[c]].frame_index)) {
            best_d[c] = d;
            best[c] = i;
        }
    }
    for (const std::size_t i : best) {
        if (i != none) set.prototype_ids.push_back(samples[i].sample_id);
    }
    return set;
}

std::vector<FeatureSample> parse_samples(std::istream& in) {
    detail::LineReader reader(in);
    std::vector<FeatureSample> samples;
    std::vector<std::string_view> tokens;
    while (reader.next(tokens)) {
        const std::size_t line = reader.line();
        if (tokens.size() < 3) {
            throw ParseError(line, "expected '<sample_id> <frame_index> <v1> ... <vd>'");
        }
        FeatureSample s;
        s.sample_id = std::string(tokens[0]);
        const long long frame = detail::parse_integer(tokens[1], line, "frame index");
        if (frame < 0 || frame > std::numeric_limits<int>::max()) {
            throw RangeError(line, "frame index out of range");
        }
        s.frame_index = static_cast<int>(frame);
        for (std::size_t i = 2; i < tokens.size(); ++i) {
            s.vector.push_back(detail::parse_real(tokens[i], line, "component"));
        }
        if (!samples.empty() && s.vector.size() != samples.front().vector.size()) {
            throw ParseError(line, "dimension " + std::to_string(s.vector.size()) +
                                       " differs from " +
                                       std::to_string(samples.front().vector.size()));
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

void write_samples(std::ostream& out, std::span<const FeatureSample> samples) {
    for (const auto& s : samples) {
        out << s.sample_id << ' ' << s.frame_index;
        for (const double v : s.vector) out << ' ' << format_number(v);
        out << '\n';
    }
}

void write_prototypes(std::ostream& out, const PrototypeSet& set) {
    out << set.participant_id << ' ' << set.k;
    for (const auto& id : set.prototype_ids) out << ' ' << id;
    out << "\ntarget_size=" << kAlignedFaceSize << 'x' << kAlignedFaceSize << '\n';
}

}  // namespace ptrack::prototypes
