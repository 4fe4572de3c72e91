#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "rclab/errors.hpp"
#include "rclab/yuv_io.hpp"

using namespace rclab;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_bytes(const std::filesystem::path& p, const std::vector<uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("read_yuv_sequence returns luma planes of a constant file") {
    const VideoSpec spec{16, 16, 25.0, 2};
    const size_t frame_bytes = 16 * 16 * 3 / 2;
    const auto path = temp_file("rclab_const.yuv");
    write_bytes(path, std::vector<uint8_t>(2 * frame_bytes, 128));

    const auto planes = read_yuv_sequence(path, spec);
    REQUIRE(planes.size() == 2);
    for (const FramePlane& p : planes) {
        CHECK(p.width == 16);
        CHECK(p.height == 16);
        for (uint8_t s : p.samples)
            CHECK(s == 128);
    }
    std::filesystem::remove(path);
}

TEST_CASE("read_yuv_sequence rejects a truncated file") {
    const VideoSpec spec{16, 16, 25.0, 2};
    const size_t needed = 2 * 16 * 16 * 3 / 2;
    const auto path = temp_file("rclab_short.yuv");
    write_bytes(path, std::vector<uint8_t>(needed - 1, 0));
    CHECK_THROWS_AS(read_yuv_sequence(path, spec), InputError);
    std::filesystem::remove(path);
}

TEST_CASE("read_yuv_sequence reads a ramp frame at the right offsets") {
    const VideoSpec spec{16, 16, 25.0, 1};
    std::vector<uint8_t> bytes(16 * 16 * 3 / 2, 0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            bytes[static_cast<size_t>(y) * 16 + x] = static_cast<uint8_t>((x + y) % 256);
    const auto path = temp_file("rclab_ramp.yuv");
    write_bytes(path, bytes);

    const auto planes = read_yuv_sequence(path, spec);
    REQUIRE(planes.size() == 1);
    CHECK(planes[0].at(3, 5) == 8);
    std::filesystem::remove(path);
}

TEST_CASE("downsample_half averages 2x2 blocks with round half up") {
    FramePlane p(2, 2);
    p.samples = {10, 20, 30, 40};
    const FramePlane d = downsample_half(p);
    REQUIRE(d.width == 1);
    REQUIRE(d.height == 1);
    CHECK(d.samples[0] == 25);

    FramePlane q(2, 2);
    q.samples = {0, 1, 0, 0}; // mean 0.25 rounds down
    CHECK(downsample_half(q).samples[0] == 0);

    FramePlane r(2, 2);
    r.samples = {0, 1, 1, 0}; // mean 0.5 rounds up
    CHECK(downsample_half(r).samples[0] == 1);
}

TEST_CASE("downsample_half keeps constant planes constant") {
    FramePlane p(16, 16, 100);
    const FramePlane d = downsample_half(p);
    CHECK(d.width == 8);
    CHECK(d.height == 8);
    for (uint8_t s : d.samples)
        CHECK(s == 100);
}

TEST_CASE("downsample_half rejects odd dimensions") {
    FramePlane p(3, 4, 0);
    CHECK_THROWS_AS(downsample_half(p), std::invalid_argument);
}

TEST_CASE("downsampling moves the plane mean by less than 0.5") {
    std::mt19937 gen(7);
    std::uniform_int_distribution<int> dist(0, 255);
    for (int trial = 0; trial < 20; ++trial) {
        FramePlane p(32, 24);
        for (uint8_t& s : p.samples)
            s = static_cast<uint8_t>(dist(gen));
        const FramePlane d = downsample_half(p);
        CHECK(std::abs(d.mean() - p.mean()) < 0.5);
    }
}

TEST_CASE("luma write/read round-trip is byte identical") {
    std::mt19937 gen(11);
    std::uniform_int_distribution<int> dist(0, 255);
    const VideoSpec spec{16, 16, 25.0, 3};
    std::vector<uint8_t> bytes(3 * 16 * 16 * 3 / 2);
    for (uint8_t& b : bytes)
        b = static_cast<uint8_t>(dist(gen));
    const auto path = temp_file("rclab_rt_in.yuv");
    write_bytes(path, bytes);

    const auto planes = read_yuv_sequence(path, spec);
    const auto dump = temp_file("rclab_rt_luma.yuv");
    write_luma_sequence(dump, planes);

    std::ifstream in(dump, std::ios::binary);
    std::vector<uint8_t> luma((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(luma.size() == 3u * 16 * 16);
    size_t off = 0;
    for (const FramePlane& p : planes) {
        for (size_t i = 0; i < p.samples.size(); ++i)
            REQUIRE(luma[off + i] == p.samples[i]);
        off += p.samples.size();
    }
    std::filesystem::remove(path);
    std::filesystem::remove(dump);
}
