#include "rclab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rclab/encoder_sim.hpp"
#include "rclab/errors.hpp"

namespace rclab {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

// One analyzed mini-GOP window: [anchor .. end] in display order.
struct Segment {
    int anchor = 0;
    int end = 0;
    bool anchor_is_i = false;
    GopSchedule schedule;
    std::vector<FrameAnalysis> analyses;
    std::vector<int> winpos_by_encode_pos; // PB encode order -> window position
};

struct SequenceAnalysis {
    std::vector<Segment> segments;
    std::vector<double> epp_by_display;
};

SequenceAnalysis analyze_sequence(const std::vector<FramePlane>& ds_planes,
                                  const RateControlConfig& rc, const PreAnalysisConfig& pre) {
    const int n = static_cast<int>(ds_planes.size());
    SequenceAnalysis seq;
    seq.epp_by_display.resize(n, 0.0);
    for (int j = 0; j < n; ++j) {
        const int avail = n - j;
        if (avail >= 2) {
            std::span<const FramePlane> window(ds_planes.data() + j,
                                               std::min(avail, pre.lookahead_n));
            seq.epp_by_display[j] = compute_epp(window, pre.lookahead_n);
        } // last frame of the sequence keeps epp = 0
    }

    int pos = 0;
    while (pos < n) {
        const bool is_i = pos % rc.keyint == 0;
        const int anchor = is_i ? pos : pos - 1;
        const int next_i = (anchor / rc.keyint + 1) * rc.keyint;
        const int end = std::min({anchor + rc.gop_size, next_i - 1, n - 1});

        Segment seg;
        seg.anchor = anchor;
        seg.end = end;
        seg.anchor_is_i = is_i;
        seg.schedule = build_gop_schedule(anchor, end - anchor, is_i);
        std::span<const FramePlane> window(ds_planes.data() + anchor,
                                           static_cast<size_t>(end - anchor + 1));
        seg.analyses = analyze_lookahead(window, seg.schedule, pre);
        for (size_t k = 0; k < seg.analyses.size(); ++k) {
            if (!seg.schedule.frames[k].pending)
                continue;
            seg.analyses[k] = compute_delta_qp(std::move(seg.analyses[k]), pre);
            seg.analyses[k].epp = seq.epp_by_display[seg.schedule.frames[k].display_index];
        }
        for (int wp : seg.schedule.encode_order)
            if (!(seg.anchor_is_i && wp == 0))
                seg.winpos_by_encode_pos.push_back(wp);
        seq.segments.push_back(std::move(seg));
        pos = end + 1;
    }
    return seq;
}

void dump_cu_stats(std::ofstream& out, const SequenceAnalysis& seq) {
    out << "frame,cu_x,cu_y,intra_cost,inter_cost,propagate_cost,mv_x,mv_y,delta_qp\n";
    for (const Segment& seg : seq.segments) {
        for (size_t k = 0; k < seg.analyses.size(); ++k) {
            if (!seg.schedule.frames[k].pending)
                continue;
            const FrameAnalysis& fa = seg.analyses[k];
            const int display = seg.schedule.frames[k].display_index;
            for (int cy = 0; cy < fa.cu_rows; ++cy) {
                for (int cx = 0; cx < fa.cu_cols; ++cx) {
                    const CuStats& cu = fa.cu(cx, cy);
                    out << display << ',' << cx << ',' << cy << ',' << cu.intra_cost << ','
                        << cu.inter_cost << ',' << fmt(cu.propagate_cost) << ',' << cu.mv.x << ','
                        << cu.mv.y << ',' << fmt(cu.delta_qp) << '\n';
                }
            }
        }
    }
}

GopFrameInfo frame_info(const Segment& seg, int window_pos) {
    const ScheduledFrame& sf = seg.schedule.frames[window_pos];
    const FrameAnalysis& fa = seg.analyses[window_pos];
    GopFrameInfo info;
    info.display_index = sf.display_index;
    info.type = sf.type;
    info.layer = sf.layer;
    info.epp = fa.epp;
    info.avg_abs_delta_qp = fa.avg_abs_delta_qp;
    info.avg_intra_cost = fa.avg_intra_cost;
    info.avg_propagate_cost = fa.avg_propagate_cost;
    return info;
}

const char* kFramesCsvHeader =
    "bitrate,seed,index,type,layer,w,lambda_g,lambda_j,base_qp,final_qp,epp,"
    "avg_abs_delta_qp,target_bits,actual_bits,gop_bits_left,alpha_i,beta_i,alpha_p,beta_p,"
    "alpha_b2,beta_b2,alpha_b3,beta_b3,psnr\n";

class SimSubRun {
public:
    SimSubRun(const RunConfig& cfg, const SequenceAnalysis& seq, double bitrate, uint64_t seed,
              std::ofstream& csv)
        : cfg_(cfg), seq_(seq), bitrate_(bitrate), seed_(seed), csv_(csv) {
        rc_ = cfg.rc;
        rc_.target_bitrate = bitrate;
        rc_.fps = cfg.scenario->video.fps;
        rc_.frame_pixels =
            static_cast<int64_t>(cfg.scenario->video.width) * cfg.scenario->video.height;
        rc_.scheme = cfg.scheme;
        const int n = cfg.scenario->video.frame_count;
        tracker_ = BudgetTracker(rc_, n);
        psnr_by_display_.assign(n, 0.0);
        bonus_psnr_by_display_.assign(n, 0.0);
    }

    SubRunResult execute() {
        for (const Segment& seg : seq_.segments) {
            if (seg.anchor_is_i)
                encode_i(seg);
            if (seg.end > seg.anchor)
                encode_pb_gop(seg);
        }
        const int n = static_cast<int>(psnr_by_display_.size());
        SubRunResult r;
        r.bitrate = bitrate_;
        r.seed = seed_;
        r.target_bitrate = bitrate_;
        r.actual_bitrate = static_cast<double>(total_bits_) * rc_.fps / n;
        r.be_permille = bitrate_error(bitrate_, r.actual_bitrate);
        r.mean_psnr = psnr_sum_ / n;
        r.total_bits = total_bits_;
        r.frames = n;
        return r;
    }

private:
    void encode_i(const Segment& seg) {
        const FrameAnalysis& ia = seg.analyses[0];
        FrameDecision d = decide_i_frame(seg.anchor, ia, seg.analyses, models_, rc_, tracker_);
        GopState igop = make_single_frame_gop(d);
        encode_frame(d, igop, {});
    }

    void encode_pb_gop(const Segment& seg) {
        GopState gop = plan_gop(rc_, tracker_, seg.end - seg.anchor);
        gop.first_gop = first_pb_gop_;
        first_pb_gop_ = false;
        gop.last_gop_qps = prev_gop_qps_;
        for (int wp : seg.winpos_by_encode_pos)
            gop.schedule.push_back(frame_info(seg, wp));

        for (size_t k = 0; k < gop.schedule.size(); ++k) {
            const int wp = seg.winpos_by_encode_pos[k];
            FrameDecision d =
                decide_pb_frame(static_cast<int>(k), gop, seg.analyses[wp], models_, rc_);
            std::vector<double> ref_psnrs;
            for (int ref_wp : seg.schedule.frames[wp].refs)
                ref_psnrs.push_back(bonus_psnr_by_display_[seg.schedule.frames[ref_wp].display_index]);
            encode_frame(d, gop, ref_psnrs);
        }
        prev_gop_qps_ = gop.qps_this_gop;
    }

    void encode_frame(const FrameDecision& d, GopState& gop, const std::vector<double>& ref_psnrs) {
        SimFrameModel model = cfg_.scenario->frame_models[d.frame_index];
        if (cfg_.noise_sigma)
            model.noise_sigma = *cfg_.noise_sigma;

        // The per-CU tree offsets shift the effective quantizer below the
        // frame QP; their mean is -avg_abs_delta_qp since every offset <= 0.
        const double eff_qp = std::clamp(d.final_qp - d.avg_abs_delta_qp, 0.0, 51.0);
        const double bonus = ref_quality_bonus(ref_psnrs);
        const uint64_t frame_seed = seed_ * 1000003ULL + static_cast<uint64_t>(d.frame_index);
        const SimResult res = simulate_encode(model, eff_qp, bonus, frame_seed);

        // On unstable content the offsets chase blocks the future will not
        // reference, so the below-base spend carries no prediction value:
        // dependents see the frame as if coded at its base QP.
        double bonus_psnr = res.psnr;
        if (d.epp >= rc_.epp_threshold) {
            const double base_qp = std::clamp(d.base_qp, 0.0, 51.0);
            bonus_psnr = simulate_encode(model, base_qp, bonus, frame_seed).psnr;
        }

        on_frame_encoded(d, static_cast<double>(res.bits), gop, models_, tracker_, rc_);
        psnr_by_display_[d.frame_index] = res.psnr;
        bonus_psnr_by_display_[d.frame_index] = bonus_psnr;
        psnr_sum_ += res.psnr;
        total_bits_ += res.bits;
        write_row(d, res, gop);
    }

    void write_row(const FrameDecision& d, const SimResult& res, const GopState& gop) {
        csv_ << fmt1(bitrate_) << ',' << seed_ << ',' << d.frame_index << ','
             << frame_type_name(d.frame_type) << ',' << d.layer << ',' << fmt(d.w) << ','
             << fmt(d.lambda_g) << ',' << fmt(d.lambda) << ',' << fmt(d.base_qp) << ','
             << d.final_qp << ',' << fmt(d.epp) << ',' << fmt(d.avg_abs_delta_qp) << ','
             << fmt1(d.target_bits) << ',' << res.bits << ',' << fmt1(gop.gop_bits_left) << ','
             << fmt(models_.i.alpha) << ',' << fmt(models_.i.beta) << ',' << fmt(models_.p.alpha)
             << ',' << fmt(models_.p.beta) << ',' << fmt(models_.b2.alpha) << ','
             << fmt(models_.b2.beta) << ',' << fmt(models_.b3.alpha) << ',' << fmt(models_.b3.beta)
             << ',' << fmt(res.psnr) << '\n';
    }

    const RunConfig& cfg_;
    const SequenceAnalysis& seq_;
    double bitrate_;
    uint64_t seed_;
    std::ofstream& csv_;
    RateControlConfig rc_;
    BudgetTracker tracker_;
    RdModelSet models_;
    std::vector<double> psnr_by_display_;
    std::vector<double> bonus_psnr_by_display_;
    std::vector<double> prev_gop_qps_;
    bool first_pb_gop_ = true;
    double psnr_sum_ = 0.0;
    int64_t total_bits_ = 0;
};

nlohmann::json video_json(int width, int height, double fps, int frame_count) {
    return {{"width", width}, {"height", height}, {"fps", fps}, {"frame_count", frame_count}};
}

RunSummary run_sim(const RunConfig& cfg) {
    const ScenarioSpec& scenario = *cfg.scenario;
    const std::vector<FramePlane> planes = render_scenario_video(scenario.video);
    std::vector<FramePlane> ds;
    ds.reserve(planes.size());
    for (const FramePlane& p : planes)
        ds.push_back(downsample_half(p));

    RateControlConfig probe = cfg.rc;
    probe.target_bitrate = cfg.bitrates.front();
    probe.fps = scenario.video.fps;
    probe.frame_pixels = static_cast<int64_t>(scenario.video.width) * scenario.video.height;
    probe.validate();
    const SequenceAnalysis seq = analyze_sequence(ds, probe, cfg.pre);

    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream csv(cfg.output_dir / "frames.csv");
    csv << kFramesCsvHeader;

    RunSummary summary;
    summary.mode = "sim";
    summary.scenario_name = scenario.name;
    summary.scheme = cfg.scheme;
    summary.frames = scenario.video.frame_count;
    for (double bitrate : cfg.bitrates) {
        for (uint64_t seed : cfg.seeds) {
            SimSubRun sub(cfg, seq, bitrate, seed, csv);
            summary.runs.push_back(sub.execute());
        }
    }
    csv.close();

    if (cfg.dump_cu_stats) {
        std::ofstream cu(cfg.output_dir / "cu_stats.csv");
        dump_cu_stats(cu, seq);
    }

    double be_sum = 0.0;
    double psnr_sum = 0.0;
    nlohmann::json runs = nlohmann::json::array();
    for (const SubRunResult& r : summary.runs) {
        be_sum += r.be_permille;
        psnr_sum += r.mean_psnr;
        runs.push_back({{"bitrate", r.bitrate},
                        {"seed", r.seed},
                        {"target_bitrate", r.target_bitrate},
                        {"actual_bitrate", r.actual_bitrate},
                        {"be_permille", r.be_permille},
                        {"mean_psnr", r.mean_psnr},
                        {"total_bits", r.total_bits},
                        {"frames", r.frames}});
    }
    nlohmann::json j{{"mode", "sim"},
                     {"scenario", scenario.name},
                     {"scheme", scheme_name(cfg.scheme)},
                     {"video", video_json(scenario.video.width, scenario.video.height,
                                          scenario.video.fps, scenario.video.frame_count)},
                     {"runs", runs},
                     {"be_permille_mean", be_sum / static_cast<double>(summary.runs.size())},
                     {"mean_psnr_mean", psnr_sum / static_cast<double>(summary.runs.size())}};
    std::ofstream out(cfg.output_dir / "summary.json");
    out << j.dump(2) << '\n';

    summary.frames_csv = cfg.output_dir / "frames.csv";
    summary.summary_json = cfg.output_dir / "summary.json";
    return summary;
}

RunSummary run_analyze(const RunConfig& cfg) {
    const std::vector<FramePlane> planes = read_yuv_sequence(*cfg.yuv_path, cfg.yuv_spec);
    std::vector<FramePlane> ds;
    ds.reserve(planes.size());
    for (const FramePlane& p : planes)
        ds.push_back(downsample_half(p));

    RateControlConfig probe = cfg.rc;
    probe.target_bitrate = 1.0; // analysis only; rate never used
    probe.fps = cfg.yuv_spec.fps;
    probe.frame_pixels = static_cast<int64_t>(cfg.yuv_spec.width) * cfg.yuv_spec.height;
    const SequenceAnalysis seq = analyze_sequence(ds, probe, cfg.pre);

    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream csv(cfg.output_dir / "frames.csv");
    csv << "index,type,layer,epp,avg_abs_delta_qp,avg_intra_cost,avg_propagate_cost\n";
    double epp_sum = 0.0;
    int rows = 0;
    for (const Segment& seg : seq.segments) {
        for (size_t k = 0; k < seg.analyses.size(); ++k) {
            const ScheduledFrame& sf = seg.schedule.frames[k];
            if (!sf.pending)
                continue;
            const FrameAnalysis& fa = seg.analyses[k];
            csv << sf.display_index << ',' << frame_type_name(sf.type) << ',' << sf.layer << ','
                << fmt(fa.epp) << ',' << fmt(fa.avg_abs_delta_qp) << ',' << fmt(fa.avg_intra_cost)
                << ',' << fmt(fa.avg_propagate_cost) << '\n';
            epp_sum += fa.epp;
            ++rows;
        }
    }
    csv.close();

    if (cfg.dump_cu_stats) {
        std::ofstream cu(cfg.output_dir / "cu_stats.csv");
        dump_cu_stats(cu, seq);
    }
    if (cfg.dump_luma)
        write_luma_sequence(cfg.output_dir / "luma.yuv", planes);

    RunSummary summary;
    summary.mode = "analyze";
    summary.scenario_name = cfg.yuv_path->filename().string();
    summary.frames = rows;
    summary.mean_epp = rows > 0 ? epp_sum / rows : 0.0;

    nlohmann::json j{{"mode", "analyze"},
                     {"input", cfg.yuv_path->string()},
                     {"frames", rows},
                     {"mean_epp", summary.mean_epp},
                     {"video", video_json(cfg.yuv_spec.width, cfg.yuv_spec.height, cfg.yuv_spec.fps,
                                          cfg.yuv_spec.frame_count)}};
    std::ofstream out(cfg.output_dir / "summary.json");
    out << j.dump(2) << '\n';

    summary.frames_csv = cfg.output_dir / "frames.csv";
    summary.summary_json = cfg.output_dir / "summary.json";
    return summary;
}

} // namespace

void RunConfig::validate() const {
    if (mode != "sim" && mode != "analyze")
        throw ConfigError("mode must be sim or analyze");
    if (mode == "sim") {
        if (!scenario)
            throw ConfigError("sim mode needs a scenario");
        if (bitrates.empty())
            throw ConfigError("sim mode needs at least one bitrate");
        if (seeds.empty())
            throw ConfigError("sim mode needs at least one seed");
        for (double b : bitrates)
            if (b <= 0.0)
                throw ConfigError("bitrates must be positive");
        if (noise_sigma && (*noise_sigma < 0.0 || *noise_sigma > 0.3))
            throw ConfigError("noise_sigma override must be in [0, 0.3]");
    } else {
        if (!yuv_path)
            throw ConfigError("analyze mode needs an input file");
        yuv_spec.validate();
    }
    pre.validate();
}

RunConfig load_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    try {
        cfg.mode = j.value("mode", cfg.mode);
        cfg.scheme = scheme_from_name(j.value("scheme", "proposed"));
        if (j.contains("seeds"))
            cfg.seeds = j.at("seeds").get<std::vector<uint64_t>>();
        if (j.contains("bitrates"))
            cfg.bitrates = j.at("bitrates").get<std::vector<double>>();
        if (j.contains("noise_sigma") && !j.at("noise_sigma").is_null())
            cfg.noise_sigma = j.at("noise_sigma").get<double>();
        if (j.contains("output_dir"))
            cfg.output_dir = base_dir / j.at("output_dir").get<std::string>();

        if (j.contains("scenario")) {
            cfg.scenario = load_scenario(j.at("scenario"));
        } else if (j.contains("scenario_path")) {
            const std::filesystem::path p = base_dir / j.at("scenario_path").get<std::string>();
            std::ifstream in(p);
            if (!in)
                throw InputError("cannot open scenario file " + p.string());
            cfg.scenario = load_scenario(nlohmann::json::parse(in));
        }

        if (j.contains("input")) {
            const auto& in = j.at("input");
            cfg.yuv_path = base_dir / in.at("path").get<std::string>();
            cfg.yuv_spec.width = in.at("width").get<int>();
            cfg.yuv_spec.height = in.at("height").get<int>();
            cfg.yuv_spec.fps = in.value("fps", 25.0);
            cfg.yuv_spec.frame_count = in.at("frame_count").get<int>();
        }

        if (j.contains("rc")) {
            const auto& rc = j.at("rc");
            cfg.rc.target_bitrate = rc.value("target_bitrate", cfg.rc.target_bitrate);
            cfg.rc.gop_size = rc.value("gop_size", cfg.rc.gop_size);
            cfg.rc.keyint = rc.value("keyint", cfg.rc.keyint);
            cfg.rc.epp_threshold = rc.value("epp_threshold", cfg.rc.epp_threshold);
            cfg.rc.k_constant = rc.value("k_constant", cfg.rc.k_constant);
            cfg.rc.smoothing_window = rc.value("smoothing_window", cfg.rc.smoothing_window);
            cfg.rc.qp_min = rc.value("qp_min", cfg.rc.qp_min);
            cfg.rc.qp_max = rc.value("qp_max", cfg.rc.qp_max);
        }
        if (j.contains("pre")) {
            const auto& pre = j.at("pre");
            cfg.pre.lookahead_n = pre.value("lookahead", cfg.pre.lookahead_n);
            cfg.pre.search_range = pre.value("search_range", cfg.pre.search_range);
            cfg.pre.cutree_strength = pre.value("cutree_strength", cfg.pre.cutree_strength);
        }
        cfg.dump_cu_stats = j.value("dump_cu_stats", false);
        cfg.dump_luma = j.value("dump_luma", false);

        if (cfg.bitrates.empty() && cfg.rc.target_bitrate > 0.0)
            cfg.bitrates = {cfg.rc.target_bitrate};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad run config: ") + e.what());
    }
    return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j{{"mode", cfg.mode},
                     {"scheme", scheme_name(cfg.scheme)},
                     {"seeds", cfg.seeds},
                     {"bitrates", cfg.bitrates},
                     {"output_dir", cfg.output_dir.string()},
                     {"dump_cu_stats", cfg.dump_cu_stats},
                     {"dump_luma", cfg.dump_luma},
                     {"rc",
                      {{"gop_size", cfg.rc.gop_size},
                       {"keyint", cfg.rc.keyint},
                       {"epp_threshold", cfg.rc.epp_threshold},
                       {"k_constant", cfg.rc.k_constant},
                       {"smoothing_window", cfg.rc.smoothing_window},
                       {"qp_min", cfg.rc.qp_min},
                       {"qp_max", cfg.rc.qp_max}}},
                     {"pre",
                      {{"lookahead", cfg.pre.lookahead_n},
                       {"search_range", cfg.pre.search_range},
                       {"cutree_strength", cfg.pre.cutree_strength}}}};
    if (cfg.noise_sigma)
        j["noise_sigma"] = *cfg.noise_sigma;
    if (cfg.scenario)
        j["scenario"] = scenario_to_json(*cfg.scenario);
    if (cfg.yuv_path)
        j["input"] = {{"path", cfg.yuv_path->string()},
                      {"width", cfg.yuv_spec.width},
                      {"height", cfg.yuv_spec.height},
                      {"fps", cfg.yuv_spec.fps},
                      {"frame_count", cfg.yuv_spec.frame_count}};
    return j;
}

RunSummary run(const RunConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
    {
        std::ofstream echo(cfg.output_dir / "config.echo.json");
        if (!echo)
            throw InputError("output directory not writable: " + cfg.output_dir.string());
        echo << run_config_to_json(cfg).dump(2) << '\n';
    }
    return cfg.mode == "sim" ? run_sim(cfg) : run_analyze(cfg);
}

} // namespace rclab
