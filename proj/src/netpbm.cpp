// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/error.hpp"
#include "isptune/imaging.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace isptune {

namespace fs = std::filesystem;

std::uint16_t quantize16(double v) noexcept {
    const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    return static_cast<std::uint16_t>(std::floor(c * 65535.0 + 0.5));
}

double dequantize16(std::uint16_t s) noexcept { return static_cast<double>(s) / 65535.0; }

namespace {

struct NetpbmHeader {
    char magic = 0; // '5' or '6'
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t payload_offset = 0;
};

std::vector<unsigned char> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& path, const std::string& header, const std::vector<unsigned char>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + path.string());
    }
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) {
        fail(ErrorCode::Io, "write failed for " + path.string());
    }
}

NetpbmHeader parse_header(const std::vector<unsigned char>& bytes) {
    NetpbmHeader h;
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        fail(ErrorCode::MalformedHeader, "not a binary PGM/PPM (expected P5 or P6)");
    }
    h.magic = static_cast<char>(bytes[1]);
    std::size_t pos = 2;

    auto next_int = [&]() -> int {
        // Skip whitespace and '#' comments.
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
            fail(ErrorCode::MalformedHeader, "malformed Netpbm header");
        }
        long value = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > 1'000'000) {
                fail(ErrorCode::MalformedHeader, "Netpbm header value out of range");
            }
            ++pos;
        }
        return static_cast<int>(value);
    };

    h.width = next_int();
    h.height = next_int();
    h.maxval = next_int();
    if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535) {
        fail(ErrorCode::MalformedHeader, "invalid Netpbm dimensions or maxval");
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        fail(ErrorCode::MalformedHeader, "missing whitespace after Netpbm maxval");
    }
    h.payload_offset = pos + 1;
    return h;
}

PlanarImage decode(const std::vector<unsigned char>& bytes, const fs::path& path) {
    const NetpbmHeader h = parse_header(bytes);
    const int channels = h.magic == '5' ? 1 : 3;
    const std::size_t bps = h.maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(h.width) * h.height * channels;
    if (bytes.size() - h.payload_offset < count * bps) {
        fail(ErrorCode::TruncatedPayload, "truncated Netpbm payload in " + path.string());
    }
    PlanarImage img(h.width, h.height, channels, channels == 1 ? ColorDomain::Plane : ColorDomain::LinearRGB);
    const unsigned char* p = bytes.data() + h.payload_offset;
    const double scale = 1.0 / h.maxval;
    for (int y = 0; y < h.height; ++y)
        for (int x = 0; x < h.width; ++x)
            for (int c = 0; c < channels; ++c) {
                unsigned sample = *p++;
                if (bps == 2) sample = (sample << 8) | *p++;
                img.at(c, y, x) = h.maxval == 65535 ? dequantize16(static_cast<std::uint16_t>(sample)) : sample * scale;
            }
    return img;
}

std::vector<unsigned char> encode16(const PlanarImage& img) {
    std::vector<unsigned char> out;
    out.reserve(img.size() * 2);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) {
                const std::uint16_t s = quantize16(img.at(c, y, x));
                out.push_back(static_cast<unsigned char>(s >> 8));
                out.push_back(static_cast<unsigned char>(s & 0xff));
            }
    return out;
}

std::string header_for(char magic, int w, int h, int maxval) {
    return std::string("P") + magic + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
}

} // namespace

PlanarImage read_image(const fs::path& path) { return decode(slurp(path), path); }

PlanarImage read_pgm(const fs::path& path) {
    PlanarImage img = read_image(path);
    if (img.channels() != 1) {
        fail(ErrorCode::MalformedHeader, path.string() + " is not a PGM (P5) file");
    }
    return img;
}

PlanarImage read_ppm(const fs::path& path) {
    PlanarImage img = read_image(path);
    if (img.channels() != 3) {
        fail(ErrorCode::MalformedHeader, path.string() + " is not a PPM (P6) file");
    }
    return img;
}

void write_pgm16(const fs::path& path, const PlanarImage& plane) {
    require(plane.channels() == 1, "write_pgm16 expects a single-channel image");
    spit(path, header_for('5', plane.width(), plane.height(), 65535), encode16(plane));
}

void write_ppm16(const fs::path& path, const PlanarImage& rgb) {
    require(rgb.channels() == 3, "write_ppm16 expects a three-channel image");
    spit(path, header_for('6', rgb.width(), rgb.height(), 65535), encode16(rgb));
}

void write_image(const fs::path& path, const PlanarImage& img) {
    if (img.channels() == 1) {
        write_pgm16(path, img);
    } else {
        write_ppm16(path, img);
    }
}

fs::path mosaic_sidecar_path(const fs::path& path) {
    fs::path p = path;
    p.replace_extension(".json");
    return p;
}

void write_mosaic(const fs::path& path, const BayerMosaic& m) {
    write_pgm16(path, m.as_plane());
    std::ofstream side(mosaic_sidecar_path(path));
    if (!side) {
        fail(ErrorCode::Io, "cannot write sidecar for " + path.string());
    }
    side << nlohmann::json{{"pattern", std::string(to_string(m.pattern()))}}.dump() << "\n";
}

BayerMosaic read_mosaic(const fs::path& path) {
    const PlanarImage plane = read_pgm(path);
    const fs::path side = mosaic_sidecar_path(path);
    std::ifstream in(side);
    if (!in) {
        fail(ErrorCode::Io, "missing CFA sidecar " + side.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::MalformedHeader, "bad CFA sidecar " + side.string() + ": " + e.what());
    }
    if (!j.contains("pattern") || !j["pattern"].is_string()) {
        fail(ErrorCode::MalformedHeader, "CFA sidecar lacks a \"pattern\" string");
    }
    if (plane.width() % 2 != 0 || plane.height() % 2 != 0) {
        fail(ErrorCode::MalformedHeader, "mosaic dimensions must be even");
    }
    return BayerMosaic::from_plane(plane, parse_cfa_pattern(j["pattern"].get<std::string>()));
}

void write_mask(const fs::path& path, const std::vector<bool>& mask, int width, int height) {
    require(mask.size() == static_cast<std::size_t>(width) * height, "mask size does not match dimensions");
    std::vector<unsigned char> payload(mask.size());
    std::ranges::transform(mask, payload.begin(), [](bool b) { return static_cast<unsigned char>(b ? 255 : 0); });
    spit(path, header_for('5', width, height, 255), payload);
}

std::vector<bool> read_mask(const fs::path& path, int* width, int* height) {
    const PlanarImage img = read_pgm(path);
    if (width) *width = img.width();
    if (height) *height = img.height();
    std::vector<bool> mask;
    mask.reserve(img.size());
    for (double v : img.data()) mask.push_back(v >= 0.5);
    return mask;
}

} // namespace isptune
