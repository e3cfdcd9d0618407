#pragma once

// AM-FM decomposition I(x, y) ~ a(x, y) cos(phi(x, y)) by dominant component
// analysis over a bank of frequency-domain Gabor channels.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ptrack/geometry.hpp"
#include "ptrack/image.hpp"

namespace ptrack::amfm {

inline constexpr int kDefaultOrientations = 9;
inline constexpr int kDefaultScales = 6;
inline constexpr int kDefaultPatchSize = 100;

/// Radial full width at half maximum of every channel, in octaves.
inline constexpr double kRadialBandwidthOctaves = 1.0;

/// Channels whose sampled peak falls below this are unusable at the
/// requested image size.
inline constexpr double kMinSampledPeak = 1e-9;

struct GaborChannel {
    int orientation_index = 0;
    int scale_index = 0;
    double orientation = 0.0;    // radians in [0, pi)
    double radial_center = 0.0;  // radians/pixel
    std::array<double, 2> center{};  // (wx, wy) radians/pixel
    double bandwidth_octaves = kRadialBandwidthOctaves;
    double radial_sigma = 0.0;   // octaves
    double angular_sigma = 0.0;  // radians
    /// Transfer sampled on the DFT grid, row-major, same layout as the image.
    std::vector<double> transfer;
    /// Maximum of `transfer`; DCA divides responses by it.
    double sampled_peak = 0.0;

    /// Continuous transfer at (wx, wy); 1 at `center`, 0 at DC.
    double gain(double wx, double wy) const noexcept;
};

/// Log-polar Gaussian bank: orientations evenly spaced in [0, pi), scales
/// octave-spaced downward from pi/2. Each channel passes one half-plane only,
/// so its response to a real image is analytic.
struct GaborFilterbank {
    int width = 0;
    int height = 0;
    int orientations = 0;
    int scales = 0;
    std::vector<GaborChannel> channels;  // index = scale * orientations + orientation
    /// Set when the layout differs from the 9 x 6 reference bank.
    std::optional<std::string> fidelity_warning;

    std::size_t size() const noexcept { return channels.size(); }
};

/// Throws ConfigError when the image is smaller than 8 pixels on a side or
/// the lowest-frequency channel has no usable support on the DFT grid.
GaborFilterbank build_filterbank(int width, int height, int orientations = kDefaultOrientations,
                                 int scales = kDefaultScales);

/// DCA output. All per-pixel vectors are row-major.
struct AmFmField {
    int width = 0;
    int height = 0;
    std::vector<double> amplitude;
    std::vector<double> phase;          // (-pi, pi]
    std::vector<int> channel_index;
    std::vector<std::array<double, 2>> frequency;  // instantaneous (wx, wy), radians/pixel

    std::size_t size() const noexcept { return amplitude.size(); }
};

/// Per pixel, picks the channel with the largest peak-normalized response
/// magnitude. Phase is the argument of that response and the instantaneous
/// frequency comes from its phase differences to the next pixel on each axis.
/// Amplitude is the response magnitude corrected by the channel's gain at the
/// estimated frequency (times two for the missing half-plane).
AmFmField analyze(const LuminanceImage& image, const GaborFilterbank& bank);

/// Complex responses of one channel. Exposed for inspection and tests.
std::vector<std::array<double, 2>> channel_response(const LuminanceImage& image,
                                                    const GaborChannel& channel);

/// cos(phi) per pixel.
LuminanceImage fm_image(const AmFmField& field);
/// a per pixel.
LuminanceImage am_image(const AmFmField& field);
/// a * cos(phi) per pixel.
LuminanceImage reconstruct(const AmFmField& field);

struct Patch {
    BBox box;
    LuminanceImage pixels;
};

/// patch_size x patch_size crops centered on each box centroid, zero padded
/// outside the image.
std::vector<Patch> extract_fm_patches(const LuminanceImage& fm, const std::vector<BBox>& boxes,
                                      int patch_size = kDefaultPatchSize);

}  // namespace ptrack::amfm
