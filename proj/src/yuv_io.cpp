#include "rclab/yuv_io.hpp"

#include <fstream>
#include <numeric>

#include "rclab/errors.hpp"

namespace rclab {

void VideoSpec::validate() const {
    if (width < 16 || height < 16 || width % 2 != 0 || height % 2 != 0)
        throw ConfigError("video dimensions must be even and at least 16x16");
    if (fps <= 0.0)
        throw ConfigError("fps must be positive");
    if (frame_count < 1)
        throw ConfigError("frame_count must be at least 1");
}

double FramePlane::mean() const {
    if (samples.empty())
        return 0.0;
    uint64_t sum = std::accumulate(samples.begin(), samples.end(), uint64_t{0});
    return static_cast<double>(sum) / static_cast<double>(samples.size());
}

std::vector<FramePlane> read_yuv_sequence(const std::filesystem::path& path, const VideoSpec& spec) {
    spec.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open " + path.string());

    const size_t luma_size = static_cast<size_t>(spec.width) * spec.height;
    const size_t chroma_size = luma_size / 2; // U+V at 4:2:0
    const uintmax_t needed = static_cast<uintmax_t>(spec.frame_count) * (luma_size + chroma_size);

    std::error_code ec;
    const uintmax_t actual = std::filesystem::file_size(path, ec);
    if (ec)
        throw InputError("cannot stat " + path.string());
    if (actual < needed)
        throw InputError("file too short: " + path.string() + " has " + std::to_string(actual) +
                         " bytes, needs " + std::to_string(needed));

    std::vector<FramePlane> planes;
    planes.reserve(spec.frame_count);
    for (int f = 0; f < spec.frame_count; ++f) {
        FramePlane plane(spec.width, spec.height);
        in.read(reinterpret_cast<char*>(plane.samples.data()), static_cast<std::streamsize>(luma_size));
        if (!in)
            throw InputError("read failure on luma plane of frame " + std::to_string(f));
        in.seekg(static_cast<std::streamoff>(chroma_size), std::ios::cur);
        if (!in)
            throw InputError("read failure skipping chroma of frame " + std::to_string(f));
        planes.push_back(std::move(plane));
    }
    return planes;
}

void write_luma_sequence(const std::filesystem::path& path, std::span<const FramePlane> planes) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot open " + path.string() + " for writing");
    for (const FramePlane& p : planes) {
        out.write(reinterpret_cast<const char*>(p.samples.data()),
                  static_cast<std::streamsize>(p.samples.size()));
        if (!out)
            throw InputError("write failure on " + path.string());
    }
}

FramePlane downsample_half(const FramePlane& plane) {
    if (plane.width % 2 != 0 || plane.height % 2 != 0)
        throw std::invalid_argument("downsample_half requires even dimensions");
    FramePlane out(plane.width / 2, plane.height / 2);
    for (int y = 0; y < out.height; ++y) {
        const uint8_t* r0 = plane.row(2 * y);
        const uint8_t* r1 = plane.row(2 * y + 1);
        uint8_t* dst = &out.at(0, y);
        for (int x = 0; x < out.width; ++x) {
            const int sum = r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1];
            dst[x] = static_cast<uint8_t>((sum + 2) >> 2);
        }
    }
    return out;
}

} // namespace rclab
