#include "ptrack/amfm.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "ptrack/errors.hpp"

namespace ptrack::amfm {
namespace {

using std::numbers::pi;
using Complex = std::complex<double>;

// FWHM to standard deviation for a Gaussian.
const double kFwhmToSigma = 1.0 / (2.0 * std::sqrt(2.0 * std::log(2.0)));

// Below this, the gain at the estimated frequency is not trusted for the
// amplitude correction.
constexpr double kGainFloor = 0.1;

double wrap_angle(double a) noexcept {
    a = std::remainder(a, 2.0 * pi);
    return a <= -pi ? a + 2.0 * pi : a;
}

double bin_frequency(int k, int n) noexcept {
    const int signed_k = k < (n + 1) / 2 ? k : k - n;
    return 2.0 * pi * signed_k / n;
}

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftwBuffer make_buffer(std::size_t n) {
    auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (p == nullptr) throw std::bad_alloc();
    return FftwBuffer(p);
}

// The planner is not reentrant; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class Fft2d {
public:
    Fft2d(int width, int height)
        : n_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height)),
          spectrum_(make_buffer(n_)),
          work_(make_buffer(n_)) {
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_2d(height, width, spectrum_.get(), spectrum_.get(), FFTW_FORWARD,
                                    FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_2d(height, width, work_.get(), work_.get(), FFTW_BACKWARD,
                                    FFTW_ESTIMATE);
        if (forward_ == nullptr || inverse_ == nullptr) {
            destroy();
            throw std::runtime_error("fftw planning failed");
        }
    }
    ~Fft2d() { destroy(); }
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    void load(const LuminanceImage& image) {
        for (std::size_t i = 0; i < n_; ++i) {
            spectrum_[i][0] = image.samples[i];
            spectrum_[i][1] = 0.0;
        }
        fftw_execute(forward_);
    }

    // Filters the loaded spectrum; the result is readable through at().
    void filter(const std::vector<double>& transfer) {
        const double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const double g = transfer[i] * scale;
            work_[i][0] = spectrum_[i][0] * g;
            work_[i][1] = spectrum_[i][1] * g;
        }
        fftw_execute(inverse_);
    }

    Complex at(std::size_t i) const noexcept { return {work_[i][0], work_[i][1]}; }

private:
    void destroy() noexcept {
        std::lock_guard lock(planner_mutex());
        if (forward_ != nullptr) fftw_destroy_plan(forward_);
        if (inverse_ != nullptr) fftw_destroy_plan(inverse_);
        forward_ = inverse_ = nullptr;
    }

    std::size_t n_;
    FftwBuffer spectrum_;
    FftwBuffer work_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

void require_match(const LuminanceImage& image, int width, int height) {
    if (image.width != width || image.height != height ||
        image.samples.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ArgumentError("image " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) + " does not match filterbank " +
                            std::to_string(width) + "x" + std::to_string(height));
    }
}

}  // namespace

double GaborChannel::gain(double wx, double wy) const noexcept {
    const double rho = std::hypot(wx, wy);
    if (rho == 0.0) return 0.0;
    const double octaves = std::log2(rho / radial_center);
    const double dtheta = wrap_angle(std::atan2(wy, wx) - orientation);
    return std::exp(-octaves * octaves / (2.0 * radial_sigma * radial_sigma)) *
           std::exp(-dtheta * dtheta / (2.0 * angular_sigma * angular_sigma));
}

GaborFilterbank build_filterbank(int width, int height, int orientations, int scales) {
    if (width < 8 || height < 8) {
        throw ConfigError("filterbank needs at least 8x8 pixels, got " + std::to_string(width) +
                          "x" + std::to_string(height));
    }
    if (orientations < 1 || scales < 1) {
        throw ConfigError("filterbank needs at least one orientation and one scale");
    }

    GaborFilterbank bank;
    bank.width = width;
    bank.height = height;
    bank.orientations = orientations;
    bank.scales = scales;
    if (orientations != kDefaultOrientations || scales != kDefaultScales) {
        bank.fidelity_warning = std::to_string(orientations) + "x" + std::to_string(scales) +
                                " layout differs from the 54-channel reference bank (9x6)";
    }

    std::vector<double> wx(static_cast<std::size_t>(width));
    std::vector<double> wy(static_cast<std::size_t>(height));
    for (int k = 0; k < width; ++k) wx[static_cast<std::size_t>(k)] = bin_frequency(k, width);
    for (int k = 0; k < height; ++k) wy[static_cast<std::size_t>(k)] = bin_frequency(k, height);

    const double angular_sigma = (pi / orientations) * kFwhmToSigma;
    const double radial_sigma = kRadialBandwidthOctaves * kFwhmToSigma;
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);

    for (int s = 0; s < scales; ++s) {
        const double radius = pi / std::ldexp(1.0, s + 1);
        for (int o = 0; o < orientations; ++o) {
            GaborChannel ch;
            ch.orientation_index = o;
            ch.scale_index = s;
            ch.orientation = pi * o / orientations;
            ch.radial_center = radius;
            ch.center = {radius * std::cos(ch.orientation), radius * std::sin(ch.orientation)};
            ch.radial_sigma = radial_sigma;
            ch.angular_sigma = angular_sigma;
            ch.transfer.resize(n);
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) {
                    const double g = ch.gain(wx[static_cast<std::size_t>(x)],
                                             wy[static_cast<std::size_t>(y)]);
                    ch.transfer[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                                static_cast<std::size_t>(x)] = g;
                    ch.sampled_peak = std::max(ch.sampled_peak, g);
                }
            }
            if (ch.sampled_peak < kMinSampledPeak) {
                throw ConfigError("channel at " + std::to_string(radius) +
                                  " rad/pixel has no support on a " + std::to_string(width) + "x" +
                                  std::to_string(height) + " grid; image too small");
            }
            bank.channels.push_back(std::move(ch));
        }
    }
    return bank;
}

std::vector<std::array<double, 2>> channel_response(const LuminanceImage& image,
                                                    const GaborChannel& channel) {
    require_match(image, image.width, image.height);
    if (channel.transfer.size() != image.size()) {
        throw ArgumentError("channel transfer does not match image size");
    }
    Fft2d fft(image.width, image.height);
    fft.load(image);
    fft.filter(channel.transfer);
    std::vector<std::array<double, 2>> out(image.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Complex c = fft.at(i);
        out[i] = {c.real(), c.imag()};
    }
    return out;
}

AmFmField analyze(const LuminanceImage& image, const GaborFilterbank& bank) {
    require_match(image, bank.width, bank.height);
    const int w = bank.width;
    const int h = bank.height;
    const std::size_t n = image.size();

    AmFmField field;
    field.width = w;
    field.height = h;
    field.amplitude.assign(n, 0.0);
    field.phase.assign(n, 0.0);
    field.channel_index.assign(n, 0);
    field.frequency.assign(n, {0.0, 0.0});
    if (bank.channels.empty()) return field;

    std::vector<double> best(n, -1.0);
    std::vector<double> magnitude(n, 0.0);

    Fft2d fft(w, h);
    fft.load(image);
    for (std::size_t c = 0; c < bank.channels.size(); ++c) {
        const GaborChannel& ch = bank.channels[c];
        fft.filter(ch.transfer);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = image.index(x, y);
                const Complex r = fft.at(i);
                const double normalized = std::abs(r) / ch.sampled_peak;
                if (normalized <= best[i]) continue;
                best[i] = normalized;
                magnitude[i] = std::abs(r);
                double phase = std::arg(r);
                if (phase <= -pi) phase = pi;
                field.phase[i] = phase;
                field.channel_index[i] = static_cast<int>(c);
                // Periodic neighbours, matching the circular filtering.
                const Complex right = fft.at(image.index((x + 1) % w, y));
                const Complex below = fft.at(image.index(x, (y + 1) % h));
                field.frequency[i] = {std::arg(right * std::conj(r)),
                                      std::arg(below * std::conj(r))};
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const GaborChannel& ch = bank.channels[static_cast<std::size_t>(field.channel_index[i])];
        const double g = ch.gain(field.frequency[i][0], field.frequency[i][1]);
        field.amplitude[i] = 2.0 * magnitude[i] / std::max(g, kGainFloor);
    }
    return field;
}

LuminanceImage fm_image(const AmFmField& field) {
    LuminanceImage out(field.width, field.height);
    for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] = std::cos(field.phase[i]);
    return out;
}

LuminanceImage am_image(const AmFmField& field) {
    LuminanceImage out(field.width, field.height);
    out.samples = field.amplitude;
    return out;
}

LuminanceImage reconstruct(const AmFmField& field) {
    LuminanceImage out(field.width, field.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.samples[i] = field.amplitude[i] * std::cos(field.phase[i]);
    }
    return out;
}

std::vector<Patch> extract_fm_patches(const LuminanceImage& fm, const std::vector<BBox>& boxes,
                                      int patch_size) {
    if (patch_size < 1) throw ArgumentError("patch size must be positive");
    std::vector<Patch> patches;
    patches.reserve(boxes.size());
    for (const BBox& box : boxes) {
        const int x0 = static_cast<int>(std::floor(box.center_x())) - patch_size / 2;
        const int y0 = static_cast<int>(std::floor(box.center_y())) - patch_size / 2;
        Patch p{box, LuminanceImage(patch_size, patch_size)};
        for (int y = 0; y < patch_size; ++y) {
            const int sy = y0 + y;
            if (sy < 0 || sy >= fm.height) continue;
            for (int x = 0; x < patch_size; ++x) {
                const int sx = x0 + x;
                if (sx < 0 || sx >= fm.width) continue;
                p.pixels.at(x, y) = fm.at(sx, sy);
            }
        }
        patches.push_back(std::move(p));
    }
    return patches;
}

}  // namespace ptrack::amfm
