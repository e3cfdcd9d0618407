#pragma once

// Face prototype selection: sparse temporal sampling, K-means over feature
// vectors, then the real sample nearest to each centroid.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ptrack/detection_io.hpp"

namespace ptrack::prototypes {

inline constexpr int kDefaultStride = 30;
inline constexpr int kDefaultClusters = 64;
inline constexpr int kDefaultMaxIterations = 100;
inline constexpr int kAlignedFaceSize = 112;

struct FeatureSample {
    std::string sample_id;
    int frame_index = 0;
    std::vector<double> vector;

    friend bool operator==(const FeatureSample&, const FeatureSample&) = default;
};

struct Clustering {
    std::vector<int> assignment;                 // per sample
    std::vector<std::vector<double>> centroids;  // per cluster
    int iterations = 0;
    /// Within-cluster sum of squares after each centroid update.
    std::vector<double> inertia;
};

struct PrototypeSet {
    ParticipantId participant_id;
    std::vector<std::string> prototype_ids;
    int k = 0;
};

/// Keeps the first sample in each window [j*stride, (j+1)*stride).
/// Throws ArgumentError if stride < 1 or samples are not ordered by frame.
std::vector<FeatureSample> sparse_sample(std::span<const FeatureSample> samples,
                                         int stride = kDefaultStride);

/// Lloyd's algorithm seeded with k distinct input vectors drawn from a
/// deterministic generator. With fewer than k distinct vectors, each distinct
/// vector becomes its own cluster. Empty clusters are re-seeded with the point
/// farthest from its centroid.
Clustering kmeans_cluster(std::span<const FeatureSample> samples, int k, std::uint64_t seed,
                          int max_iters = kDefaultMaxIterations);

/// For every non-empty cluster, the member nearest its centroid (ties: lower
/// frame index, then input order).
PrototypeSet select_prototypes(std::span<const FeatureSample> samples, const Clustering& clusters,
                               const ParticipantId& participant_id = {});

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// `<sample_id> <frame_index> <v1> ... <vd>` per line.
std::vector<FeatureSample> parse_samples(std::istream& in);
void write_samples(std::ostream& out, std::span<const FeatureSample> samples);

/// `<participant_id> <k> <sample_id ...>` followed by `target_size=112x112`.
void write_prototypes(std::ostream& out, const PrototypeSet& set);

}  // namespace ptrack::prototypes
