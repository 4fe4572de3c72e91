#include "rclab/compare.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "rclab/encoder_sim.hpp"
#include "rclab/errors.hpp"

namespace rclab {

namespace {

struct RunColumn {
    std::string label;
    std::string scenario;
    std::vector<RatePoint> curve;      // mean (actual rate, psnr) per rate point
    std::vector<double> rate_points;   // target bitrates, sorted
    double mean_be = 0.0;
};

RunColumn load_column(const std::filesystem::path& dir) {
    const std::filesystem::path file = dir / "summary.json";
    std::ifstream in(file);
    if (!in)
        throw InputError("cannot open " + file.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("bad summary in " + file.string() + ": " + e.what());
    }
    if (j.value("mode", "") != "sim")
        throw InputError(file.string() + " is not a sim run");

    RunColumn col;
    col.scenario = j.value("scenario", "");
    col.label = dir.filename().string() + ":" + j.value("scheme", "?");

    // Average seeds per rate point.
    std::map<double, std::vector<std::pair<double, double>>> by_bitrate; // -> (actual, psnr)
    double be_sum = 0.0;
    int be_n = 0;
    for (const auto& r : j.at("runs")) {
        const double bitrate = r.at("bitrate").get<double>();
        by_bitrate[bitrate].push_back(
            {r.at("actual_bitrate").get<double>(), r.at("mean_psnr").get<double>()});
        be_sum += r.at("be_permille").get<double>();
        ++be_n;
    }
    for (const auto& [bitrate, samples] : by_bitrate) {
        double rate = 0.0;
        double psnr = 0.0;
        for (const auto& [a, p] : samples) {
            rate += a;
            psnr += p;
        }
        const double n = static_cast<double>(samples.size());
        col.curve.push_back({rate / n, psnr / n});
        col.rate_points.push_back(bitrate);
    }
    col.mean_be = be_n > 0 ? be_sum / be_n : 0.0;
    return col;
}

std::string fmt(double v, int prec = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

} // namespace

ComparisonTable compare_runs(const std::vector<std::filesystem::path>& run_dirs) {
    if (run_dirs.size() < 2)
        throw std::invalid_argument("compare needs at least 2 run directories");

    std::vector<RunColumn> cols;
    cols.reserve(run_dirs.size());
    for (const auto& dir : run_dirs)
        cols.push_back(load_column(dir));

    for (const RunColumn& col : cols) {
        if (col.scenario != cols[0].scenario)
            throw InputError("mismatched scenarios: " + col.scenario + " vs " + cols[0].scenario);
        if (col.rate_points != cols[0].rate_points)
            throw InputError("mismatched rate-point sets between runs");
        if (col.curve.size() < 4)
            throw InputError("each run needs at least 4 rate points for BD-rate");
    }

    ComparisonTable table;
    std::string csv = "scenario,run,be_permille,bd_rate_vs_" + cols[0].label + "\n";
    std::string text = "scenario: " + cols[0].scenario + "\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-40s %14s %14s\n", "run", "BE(permille)", "BD-rate(%)");
    text += line;
    for (size_t i = 0; i < cols.size(); ++i) {
        const double bd = i == 0 ? 0.0 : bd_rate(cols[0].curve, cols[i].curve);
        csv += cols[0].scenario + "," + cols[i].label + "," + fmt(cols[i].mean_be) + "," +
               fmt(bd) + "\n";
        std::snprintf(line, sizeof(line), "%-40s %14s %14s\n", cols[i].label.c_str(),
                      fmt(cols[i].mean_be).c_str(), fmt(bd).c_str());
        text += line;
    }
    table.csv = csv;
    table.text = text;
    return table;
}

} // namespace rclab
