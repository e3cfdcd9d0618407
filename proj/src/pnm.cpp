#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "ptrack/errors.hpp"
#include "ptrack/image.hpp"

namespace ptrack {
namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in) {
    std::string token;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(static_cast<char>(c));
    }
    return token;
}

int header_int(std::istream& in, const char* what) {
    const std::string token = header_token(in);
    try {
        std::size_t used = 0;
        const int value = std::stoi(token, &used);
        if (used != token.size() || value <= 0) throw std::invalid_argument(what);
        return value;
    } catch (const std::exception&) {
        throw FormatError(std::string("bad netpbm ") + what + " '" + token + "'");
    }
}

void check_size(int width, int height) {
    constexpr long long kMaxPixels = 1LL << 28;
    if (static_cast<long long>(width) * height > kMaxPixels) {
        throw FormatError("image dimensions " + std::to_string(width) + "x" +
                          std::to_string(height) + " are too large");
    }
}

}  // namespace

Graymap read_pgm(std::istream& in) {
    const std::string magic = header_token(in);
    if (magic != "P2" && magic != "P5") {
        throw FormatError("not a graymap (magic '" + magic + "')");
    }
    const int width = header_int(in, "width");
    const int height = header_int(in, "height");
    const int maxval = header_int(in, "maxval");
    if (maxval > 65535) throw FormatError("graymap maxval above 65535");
    check_size(width, height);

    Graymap g{LuminanceImage(width, height), maxval};
    if (magic == "P2") {
        for (auto& s : g.image.samples) {
            const std::string token = header_token(in);
            if (token.empty()) throw FormatError("graymap truncated");
            int value = 0;
            try {
                std::size_t used = 0;
                value = std::stoi(token, &used);
                if (used != token.size()) throw std::invalid_argument("sample");
            } catch (const std::exception&) {
                throw FormatError("bad graymap sample '" + token + "'");
            }
            if (value < 0 || value > maxval) throw FormatError("graymap sample out of range");
            s = value;
        }
    } else {
        const int bytes = maxval < 256 ? 1 : 2;
        for (auto& s : g.image.samples) {
            int value = 0;
            for (int b = 0; b < bytes; ++b) {
                const int c = in.get();
                if (c == EOF) throw FormatError("graymap truncated");
                value = (value << 8) | c;
            }
            if (value > maxval) throw FormatError("graymap sample out of range");
            s = value;
        }
    }
    return g;
}

void write_pgm(std::ostream& out, const LuminanceImage& image, int maxval) {
    out << "P2\n" << image.width << ' ' << image.height << '\n' << maxval << '\n';
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const double v = std::clamp(std::round(image.at(x, y)), 0.0, double(maxval));
            out << static_cast<int>(v) << (x + 1 < image.width ? ' ' : '\n');
        }
    }
}

void write_ppm(std::ostream& out, const RgbImage& image) {
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    for (const Rgb& p : image.pixels) {
        out.write(reinterpret_cast<const char*>(p.data()), 3);
    }
}

RgbImage read_ppm(std::istream& in) {
    if (header_token(in) != "P6") throw FormatError("not a binary pixmap");
    const int width = header_int(in, "width");
    const int height = header_int(in, "height");
    if (header_int(in, "maxval") != 255) throw FormatError("only 8-bit pixmaps are supported");
    check_size(width, height);
    RgbImage image(width, height);
    for (Rgb& p : image.pixels) {
        if (!in.read(reinterpret_cast<char*>(p.data()), 3)) throw FormatError("pixmap truncated");
    }
    return image;
}

}  // namespace ptrack
