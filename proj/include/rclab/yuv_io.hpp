#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rclab {

struct VideoSpec {
    int width = 0;
    int height = 0;
    double fps = 0.0;
    int frame_count = 0;

    void validate() const;
};

// One 8-bit luma plane, row-major. Used both at full resolution and for
// the half-resolution pictures the lookahead analyzes.
struct FramePlane {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> samples;

    FramePlane() = default;
    FramePlane(int w, int h, uint8_t fill = 0)
        : width(w), height(h), samples(static_cast<size_t>(w) * h, fill) {}

    uint8_t at(int x, int y) const { return samples[static_cast<size_t>(y) * width + x]; }
    uint8_t& at(int x, int y) { return samples[static_cast<size_t>(y) * width + x]; }
    const uint8_t* ptr(int x, int y) const { return samples.data() + static_cast<size_t>(y) * width + x; }
    const uint8_t* row(int y) const { return samples.data() + static_cast<size_t>(y) * width; }
    double mean() const;
};

// Reads the luma planes of a raw I420 file; chroma is skipped, not kept.
std::vector<FramePlane> read_yuv_sequence(const std::filesystem::path& path, const VideoSpec& spec);

// Writes bare luma planes back to back (the CLI dump facility).
void write_luma_sequence(const std::filesystem::path& path, std::span<const FramePlane> planes);

// 2x2 box average, round half up. Input dimensions must be even.
FramePlane downsample_half(const FramePlane& plane);

} // namespace rclab
