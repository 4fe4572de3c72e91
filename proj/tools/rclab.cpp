#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rclab/compare.hpp"
#include "rclab/errors.hpp"
#include "rclab/runner.hpp"

namespace {

int do_run(const std::string& config_path, const std::string& mode, const std::string& scheme,
           double bitrate, int64_t seed, const std::string& out_dir, bool dump_cu_stats) {
    std::ifstream in(config_path);
    if (!in)
        throw rclab::ConfigError("cannot open config " + config_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw rclab::ConfigError(std::string("config parse failure: ") + e.what());
    }

    rclab::RunConfig cfg =
        rclab::load_run_config(j, std::filesystem::path(config_path).parent_path());
    if (!mode.empty())
        cfg.mode = mode;
    if (!scheme.empty())
        cfg.scheme = rclab::scheme_from_name(scheme);
    if (bitrate > 0.0)
        cfg.bitrates = {bitrate};
    if (seed >= 0)
        cfg.seeds = {static_cast<uint64_t>(seed)};
    if (!out_dir.empty())
        cfg.output_dir = out_dir;
    if (dump_cu_stats)
        cfg.dump_cu_stats = true;

    const rclab::RunSummary summary = rclab::run(cfg);
    if (cfg.mode == "sim") {
        for (const rclab::SubRunResult& r : summary.runs)
            std::printf("bitrate %.0f seed %llu: actual %.1f b/s, BE %.3f permille, PSNR %.3f dB\n",
                        r.bitrate, static_cast<unsigned long long>(r.seed), r.actual_bitrate,
                        r.be_permille, r.mean_psnr);
    } else {
        std::printf("analyzed %d frames, mean epp %.4f\n", summary.frames, summary.mean_epp);
    }
    std::printf("outputs in %s\n", cfg.output_dir.string().c_str());
    return 0;
}

int do_compare(const std::vector<std::string>& dirs, const std::string& out_csv) {
    std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
    const rclab::ComparisonTable table = rclab::compare_runs(paths);
    std::cout << table.text;
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out)
            throw rclab::InputError("cannot write " + out_csv);
        out << table.csv;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lookahead rate-control engine with a synthetic encoder loop"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode;
    std::string scheme;
    double bitrate = 0.0;
    int64_t seed = -1;
    std::string out_dir;
    bool dump_cu_stats = false;

    CLI::App* run_cmd = app.add_subcommand("run", "execute a configured run");
    run_cmd->add_option("--config", config_path, "run config JSON")->required();
    run_cmd->add_option("--mode", mode, "sim or analyze (overrides config)");
    run_cmd->add_option("--scheme", scheme, "proposed | no-conditional-qp | equal-allocation");
    run_cmd->add_option("--bitrate", bitrate, "single target bitrate override (bits/s)");
    run_cmd->add_option("--seed", seed, "single seed override");
    run_cmd->add_option("--out", out_dir, "output directory (overrides config)");
    run_cmd->add_flag("--dump-cu-stats", dump_cu_stats, "write per-CU analysis CSV");

    std::vector<std::string> dirs;
    std::string out_csv;
    CLI::App* cmp_cmd = app.add_subcommand("compare", "compare finished runs");
    cmp_cmd->add_option("dirs", dirs, "run output directories (first is the BD-rate baseline)")
        ->required()
        ->expected(-2);
    cmp_cmd->add_option("--out", out_csv, "also write the comparison as CSV");

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed())
            return do_run(config_path, mode, scheme, bitrate, seed, out_dir, dump_cu_stats);
        return do_compare(dirs, out_csv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const rclab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const rclab::InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 3;
    } catch (const rclab::InvariantError& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
