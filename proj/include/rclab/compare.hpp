#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rclab {

// Cross-run comparison over matching rate points. The first directory is the
// baseline for BD-rate.
struct ComparisonTable {
    std::string csv;
    std::string text;
};

ComparisonTable compare_runs(const std::vector<std::filesystem::path>& run_dirs);

} // namespace rclab
