#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rclab/encoder_sim.hpp"
#include "rclab/yuv_io.hpp"

namespace rclab {

// Procedural test content: a seeded smoothed-noise texture that is held
// still, panned, or swapped for a second texture at change_at.
struct ScenarioVideo {
    int width = 96;
    int height = 96;
    int frame_count = 300;
    double fps = 25.0;
    std::string pattern = "static"; // static | panning | scene-change
    uint64_t texture_seed = 11;
    int pan_dx = 1;
    int pan_dy = 1;
    int smooth = 2;
    int change_at = 150;

    void validate() const;
};

struct ScenarioSpec {
    std::string name;
    ScenarioVideo video;
    std::vector<SimFrameModel> frame_models; // one per display frame
};

ScenarioSpec load_scenario(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

std::vector<FramePlane> render_scenario_video(const ScenarioVideo& video);

} // namespace rclab
