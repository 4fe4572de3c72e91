#include "rclab/scenario.hpp"

#include <random>

#include "rclab/errors.hpp"

namespace rclab {

void ScenarioVideo::validate() const {
    VideoSpec spec{width, height, fps, frame_count};
    spec.validate();
    if (pattern != "static" && pattern != "panning" && pattern != "scene-change")
        throw ConfigError("unknown video pattern: " + pattern);
    if (smooth < 0 || smooth > 8)
        throw ConfigError("smooth passes must be in [0, 8]");
}

namespace {

FramePlane make_texture(int width, int height, uint64_t seed, int smooth_passes) {
    FramePlane tex(width, height);
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> dist(0, 255);
    for (uint8_t& s : tex.samples)
        s = static_cast<uint8_t>(dist(gen));

    // 3x3 toroidal box blur to give the noise spatial correlation.
    for (int pass = 0; pass < smooth_passes; ++pass) {
        FramePlane out(width, height);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                int sum = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        sum += tex.at((x + dx + width) % width, (y + dy + height) % height);
                out.at(x, y) = static_cast<uint8_t>((sum + 4) / 9);
            }
        }
        tex = std::move(out);
    }
    return tex;
}

FramePlane sample_shifted(const FramePlane& tex, int shift_x, int shift_y) {
    FramePlane out(tex.width, tex.height);
    for (int y = 0; y < tex.height; ++y) {
        const int sy = ((y + shift_y) % tex.height + tex.height) % tex.height;
        for (int x = 0; x < tex.width; ++x) {
            const int sx = ((x + shift_x) % tex.width + tex.width) % tex.width;
            out.at(x, y) = tex.at(sx, sy);
        }
    }
    return out;
}

} // namespace

std::vector<FramePlane> render_scenario_video(const ScenarioVideo& video) {
    video.validate();
    const FramePlane tex_a = make_texture(video.width, video.height, video.texture_seed, video.smooth);
    FramePlane tex_b;
    if (video.pattern == "scene-change")
        tex_b = make_texture(video.width, video.height, video.texture_seed + 1, video.smooth);

    std::vector<FramePlane> frames;
    frames.reserve(video.frame_count);
    for (int i = 0; i < video.frame_count; ++i) {
        if (video.pattern == "panning") {
            frames.push_back(sample_shifted(tex_a, i * video.pan_dx, i * video.pan_dy));
        } else if (video.pattern == "scene-change" && i >= video.change_at) {
            frames.push_back(tex_b);
        } else {
            frames.push_back(tex_a);
        }
    }
    return frames;
}

namespace {

SimFrameModel model_from_json(const nlohmann::json& j, double pixel_count) {
    SimFrameModel m;
    m.complexity = j.value("complexity", m.complexity);
    m.rd_exponent = j.value("rd_exponent", m.rd_exponent);
    m.dependence_gain = j.value("dependence_gain", m.dependence_gain);
    m.noise_sigma = j.value("noise_sigma", m.noise_sigma);
    m.pixel_count = pixel_count;
    m.validate();
    return m;
}

} // namespace

ScenarioSpec load_scenario(const nlohmann::json& j) {
    ScenarioSpec spec;
    try {
        spec.name = j.value("name", std::string("unnamed"));
        if (j.contains("video")) {
            const auto& v = j.at("video");
            spec.video.width = v.value("width", spec.video.width);
            spec.video.height = v.value("height", spec.video.height);
            spec.video.frame_count = v.value("frame_count", spec.video.frame_count);
            spec.video.fps = v.value("fps", spec.video.fps);
            spec.video.pattern = v.value("pattern", spec.video.pattern);
            spec.video.texture_seed = v.value("texture_seed", spec.video.texture_seed);
            spec.video.pan_dx = v.value("pan_dx", spec.video.pan_dx);
            spec.video.pan_dy = v.value("pan_dy", spec.video.pan_dy);
            spec.video.smooth = v.value("smooth", spec.video.smooth);
            spec.video.change_at = v.value("change_at", spec.video.change_at);
        }
        spec.video.validate();

        const double pixels = static_cast<double>(spec.video.width) * spec.video.height;
        if (!j.contains("frames"))
            throw ConfigError("scenario needs a \"frames\" model section");
        const auto& fm = j.at("frames");
        if (fm.is_array()) {
            if (static_cast<int>(fm.size()) != spec.video.frame_count)
                throw ConfigError("per-frame model array must match frame_count");
            for (const auto& one : fm)
                spec.frame_models.push_back(model_from_json(one, pixels));
        } else {
            SimFrameModel base = model_from_json(fm, pixels);
            const double change_factor = fm.value("complexity_change_factor", 1.0);
            for (int i = 0; i < spec.video.frame_count; ++i) {
                SimFrameModel m = base;
                if (spec.video.pattern == "scene-change" && i >= spec.video.change_at)
                    m.complexity *= change_factor;
                m.validate();
                spec.frame_models.push_back(m);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad scenario config: ") + e.what());
    }
    return spec;
}

nlohmann::json scenario_to_json(const ScenarioSpec& spec) {
    nlohmann::json v{
        {"width", spec.video.width},         {"height", spec.video.height},
        {"frame_count", spec.video.frame_count}, {"fps", spec.video.fps},
        {"pattern", spec.video.pattern},     {"texture_seed", spec.video.texture_seed},
        {"pan_dx", spec.video.pan_dx},       {"pan_dy", spec.video.pan_dy},
        {"smooth", spec.video.smooth},       {"change_at", spec.video.change_at}};
    nlohmann::json frames = nlohmann::json::array();
    for (const SimFrameModel& m : spec.frame_models)
        frames.push_back({{"complexity", m.complexity},
                          {"rd_exponent", m.rd_exponent},
                          {"dependence_gain", m.dependence_gain},
                          {"noise_sigma", m.noise_sigma}});
    return nlohmann::json{{"name", spec.name}, {"video", v}, {"frames", frames}};
}

} // namespace rclab
