#include "rclab/rate_control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rclab/errors.hpp"

namespace rclab {

namespace {

// Intra-SATD lambda model constants for QP_Ibase.
constexpr double kIntraAlpha = 6.7542;
constexpr double kIntraBeta = 1.7860;

// Startup layer weights used for the first GOP of a sequence.
constexpr double kStartupW1 = 0.25;
constexpr double kStartupW2 = 1.0 / 1.2599;
constexpr double kStartupW3 = 1.0;

constexpr double kLambdaBracketLo = 1e-6;
constexpr double kLambdaBracketHi = 1e6;

} // namespace

Scheme scheme_from_name(const std::string& name) {
    if (name == "proposed")
        return Scheme::proposed;
    if (name == "no-conditional-qp")
        return Scheme::no_conditional_qp;
    if (name == "equal-allocation")
        return Scheme::equal_allocation;
    throw ConfigError("unknown scheme: " + name);
}

const char* scheme_name(Scheme s) {
    switch (s) {
    case Scheme::proposed: return "proposed";
    case Scheme::no_conditional_qp: return "no-conditional-qp";
    case Scheme::equal_allocation: return "equal-allocation";
    }
    return "?";
}

void RateControlConfig::validate() const {
    if (target_bitrate <= 0.0)
        throw ConfigError("target_bitrate must be positive");
    if (gop_size < 1)
        throw ConfigError("gop_size must be at least 1");
    if (keyint < 1)
        throw ConfigError("keyint must be at least 1");
    if (epp_threshold <= 0.0)
        throw ConfigError("epp_threshold must be positive");
    if (k_constant <= 0.0)
        throw ConfigError("k_constant must be positive");
    if (smoothing_window < 1)
        throw ConfigError("smoothing_window must be at least 1");
    if (qp_min > qp_max || qp_min < 0 || qp_max > 51)
        throw ConfigError("QP bounds must satisfy 0 <= qp_min <= qp_max <= 51");
    if (fps <= 0.0)
        throw ConfigError("fps must be positive");
    if (frame_pixels <= 0)
        throw ConfigError("frame_pixels must be positive");
}

BudgetTracker::BudgetTracker(const RateControlConfig& cfg, int total_frames)
    : per_frame_ideal_(cfg.target_bitrate / cfg.fps),
      total_frames_(total_frames),
      window_(cfg.smoothing_window) {
    if (total_frames < 1)
        throw std::invalid_argument("sequence needs at least one frame");
}

double BudgetTracker::per_frame_budget() const {
    const int remaining = frames_remaining();
    if (remaining <= 0)
        throw InvariantError("budget requested with no frames remaining");
    const double deficit = spent_ - per_frame_ideal_ * encoded_;
    const int window = std::min(window_, remaining);
    return per_frame_ideal_ - deficit / static_cast<double>(window);
}

void BudgetTracker::on_encoded(double bits) {
    spent_ += bits;
    ++encoded_;
}

RdModel& RdModelSet::context(FrameType type, int layer) {
    if (type == FrameType::I)
        return i;
    if (layer <= 1)
        return p;
    return layer == 2 ? b2 : b3;
}

const RdModel& RdModelSet::context(FrameType type, int layer) const {
    return const_cast<RdModelSet*>(this)->context(type, layer);
}

GopState plan_gop(const RateControlConfig& cfg, const BudgetTracker& tracker, int gop_len) {
    cfg.validate();
    if (gop_len < 1)
        throw std::invalid_argument("gop_len must be at least 1");
    if (tracker.frames_remaining() <= 0)
        throw InvariantError("sequence exhausted: no frames left to budget");
    GopState gop;
    gop.gop_bits_left = static_cast<double>(gop_len) * tracker.per_frame_budget();
    gop.frames_left = gop_len;
    return gop;
}

double layer_weight_from_stats(int layer, double prop_to_intra_ratio, double qp_last,
                               const RateControlConfig& cfg) {
    switch (layer) {
    case 3:
        return 1.0;
    case 2:
        return 1.0 / 1.2599;
    case 1: {
        const double qp = std::max(qp_last, 2.0);
        double k = prop_to_intra_ratio * (qp * qp / cfg.k_constant) * std::log(qp);
        k = std::clamp(k, 0.0, 50.0);
        return 1.0 / (1.0 + k);
    }
    default:
        throw std::invalid_argument("layer_weight expects layer 1, 2 or 3");
    }
}

double layer_weight(int layer, const FrameAnalysis& analysis, double qp_last,
                    const RateControlConfig& cfg) {
    const double ratio =
        analysis.avg_intra_cost > 0.0 ? analysis.avg_propagate_cost / analysis.avg_intra_cost : 0.0;
    return layer_weight_from_stats(layer, ratio, qp_last, cfg);
}

namespace {

double allocation_sum(std::span<const FrameTerm> terms, double lambda_g) {
    double sum = 0.0;
    for (const FrameTerm& t : terms)
        sum += std::pow(t.w * lambda_g / t.alpha, 1.0 / t.beta);
    return sum;
}

} // namespace

LambdaSolve solve_lambda_g(std::span<const FrameTerm> remaining, double budget_bpp) {
    if (remaining.empty())
        throw std::invalid_argument("no frames left to allocate");
    if (budget_bpp <= 0.0)
        throw std::invalid_argument("budget must be positive");
    for (const FrameTerm& t : remaining)
        if (t.beta >= 0.0 || t.w <= 0.0 || t.alpha <= 0.0)
            throw std::invalid_argument("terms need beta < 0, w > 0, alpha > 0");

    // The sum is strictly decreasing in lambda_g, so the low end of the
    // bracket is the largest reachable allocation.
    if (allocation_sum(remaining, kLambdaBracketLo) < budget_bpp)
        return {kLambdaBracketLo, true};
    if (allocation_sum(remaining, kLambdaBracketHi) > budget_bpp)
        return {kLambdaBracketHi, true};

    double ln_lo = std::log(kLambdaBracketLo);
    double ln_hi = std::log(kLambdaBracketHi);
    double mid = std::exp(0.5 * (ln_lo + ln_hi));
    for (int iter = 0; iter < 100; ++iter) {
        mid = std::exp(0.5 * (ln_lo + ln_hi));
        const double sum = allocation_sum(remaining, mid);
        // The residual tolerance alone can leave lambda a few grid steps off
        // for flat objectives, so require a tight bracket as well.
        if (std::abs(sum - budget_bpp) <= 1e-4 * budget_bpp && ln_hi - ln_lo <= 1e-6)
            break;
        if (sum > budget_bpp)
            ln_lo = std::log(mid);
        else
            ln_hi = std::log(mid);
    }
    return {mid, false};
}

double round_half_up(double v) {
    return std::floor(v + 0.5);
}

namespace {

double conditional_increase(const RateControlConfig& cfg, int layer, double epp,
                            double avg_abs_delta_qp) {
    if (cfg.scheme == Scheme::no_conditional_qp)
        return 0.0;
    if (layer == 3) // non-reference frames always keep the base QP
        return 0.0;
    return epp < cfg.epp_threshold ? 0.0 : avg_abs_delta_qp;
}

double weight_for(const GopFrameInfo& info, const GopState& gop, int encode_pos,
                  const RateControlConfig& cfg) {
    if (cfg.scheme == Scheme::equal_allocation)
        return 1.0;
    if (gop.first_gop) {
        switch (info.layer) {
        case 1: return kStartupW1;
        case 2: return kStartupW2;
        default: return kStartupW3;
        }
    }
    double qp_last = 2.0;
    if (!gop.last_gop_qps.empty()) {
        const size_t pos = std::min(static_cast<size_t>(encode_pos), gop.last_gop_qps.size() - 1);
        qp_last = gop.last_gop_qps[pos];
    }
    const double ratio =
        info.avg_intra_cost > 0.0 ? info.avg_propagate_cost / info.avg_intra_cost : 0.0;
    return layer_weight_from_stats(info.layer, ratio, qp_last, cfg);
}

int finalize_qp(const RateControlConfig& cfg, double base_qp, double increase) {
    const int final_qp = static_cast<int>(round_half_up(base_qp + increase));
    return std::clamp(final_qp, cfg.qp_min, cfg.qp_max);
}

std::vector<double> collect_offsets(const FrameAnalysis& analysis) {
    std::vector<double> offsets;
    offsets.reserve(analysis.cus.size());
    for (const CuStats& cu : analysis.cus)
        offsets.push_back(cu.delta_qp);
    return offsets;
}

} // namespace

FrameDecision decide_pb_frame(int encode_pos, GopState& gop, const FrameAnalysis& analysis,
                              const RdModelSet& models, const RateControlConfig& cfg) {
    cfg.validate();
    if (encode_pos < 0 || encode_pos >= static_cast<int>(gop.schedule.size()))
        throw std::invalid_argument("encode position outside GOP schedule");
    const GopFrameInfo& frame = gop.schedule[encode_pos];
    if (frame.encoded)
        throw InvariantError("frame already encoded");

    std::vector<FrameTerm> terms;
    terms.reserve(gop.schedule.size() - encode_pos);
    for (int i = encode_pos; i < static_cast<int>(gop.schedule.size()); ++i) {
        const GopFrameInfo& info = gop.schedule[i];
        if (info.encoded)
            continue;
        const RdModel& model = models.context(info.type, info.layer);
        terms.push_back({weight_for(info, gop, i, cfg), model.alpha, model.beta});
    }
    if (terms.empty())
        throw InvariantError("no remaining frames in GOP");

    const double budget_bits = std::max(gop.gop_bits_left, 1.0);
    const double budget_bpp = budget_bits / static_cast<double>(cfg.frame_pixels);
    const LambdaSolve solve = solve_lambda_g(terms, budget_bpp);
    gop.lambda_g = solve.lambda_g;

    const FrameTerm& own = terms.front();
    const double lambda_raw = own.w * solve.lambda_g;
    const double target_bpp = std::pow(lambda_raw / own.alpha, 1.0 / own.beta);
    const double lambda =
        std::clamp(lambda_raw, lambda_from_qp(cfg.qp_min), lambda_from_qp(cfg.qp_max));
    const double base_qp = qp_from_lambda(lambda);
    const double increase =
        conditional_increase(cfg, frame.layer, frame.epp, frame.avg_abs_delta_qp);

    FrameDecision d;
    d.frame_index = frame.display_index;
    d.frame_type = frame.type;
    d.layer = frame.layer;
    d.encode_pos = encode_pos;
    d.w = own.w;
    d.lambda_g = solve.lambda_g;
    d.lambda = lambda;
    d.base_qp = base_qp;
    d.final_qp = finalize_qp(cfg, base_qp, increase);
    d.target_bits = target_bpp * static_cast<double>(cfg.frame_pixels);
    d.epp = frame.epp;
    d.avg_abs_delta_qp = frame.avg_abs_delta_qp;
    d.cu_qp_offsets = collect_offsets(analysis);

    if (d.final_qp < static_cast<int>(round_half_up(base_qp)))
        throw InvariantError("final QP fell below base QP");
    return d;
}

FrameDecision decide_i_frame(int display_index, const FrameAnalysis& analysis,
                             std::span<const FrameAnalysis> window, const RdModelSet& models,
                             const RateControlConfig& cfg, const BudgetTracker& tracker) {
    cfg.validate();
    (void)models;
    if (analysis.cus.empty())
        throw std::invalid_argument("I frame analysis missing");

    const double frame_satd = analysis.total_intra_cost();
    double window_satd = 0.0;
    for (const FrameAnalysis& fa : window)
        window_satd += fa.total_intra_cost();
    const double window_avg =
        window.empty() ? frame_satd : window_satd / static_cast<double>(window.size());

    const double boost =
        window_avg > 0.0 ? std::clamp(frame_satd / window_avg, 1.0, 8.0) : 1.0;
    const double target_bits = std::max(tracker.per_frame_budget() * boost, 1.0);

    const double pixels = static_cast<double>(cfg.frame_pixels);
    const double satd_bpp = frame_satd / pixels;
    const double target_bpp = target_bits / pixels;
    double lambda = satd_bpp > 0.0 ? kIntraAlpha * std::pow(satd_bpp / target_bpp, kIntraBeta)
                                   : lambda_from_qp(cfg.qp_min);
    lambda = std::clamp(lambda, lambda_from_qp(cfg.qp_min), lambda_from_qp(cfg.qp_max));

    const double base_qp = qp_from_lambda(lambda);
    const double increase = conditional_increase(cfg, 0, analysis.epp, analysis.avg_abs_delta_qp);

    FrameDecision d;
    d.frame_index = display_index;
    d.frame_type = FrameType::I;
    d.layer = 0;
    d.encode_pos = 0;
    d.w = 1.0;
    d.lambda_g = 0.0;
    d.lambda = lambda;
    d.base_qp = base_qp;
    d.final_qp = finalize_qp(cfg, base_qp, increase);
    d.target_bits = target_bits;
    d.epp = analysis.epp;
    d.avg_abs_delta_qp = analysis.avg_abs_delta_qp;
    d.cu_qp_offsets = collect_offsets(analysis);
    return d;
}

GopState make_single_frame_gop(const FrameDecision& i_decision) {
    GopState gop;
    gop.gop_bits_left = i_decision.target_bits;
    gop.frames_left = 1;
    GopFrameInfo info;
    info.display_index = i_decision.frame_index;
    info.type = FrameType::I;
    info.layer = 0;
    info.epp = i_decision.epp;
    info.avg_abs_delta_qp = i_decision.avg_abs_delta_qp;
    gop.schedule.push_back(info);
    return gop;
}

void on_frame_encoded(const FrameDecision& decision, double actual_bits, GopState& gop,
                      RdModelSet& models, BudgetTracker& tracker,
                      const RateControlConfig& cfg) {
    if (actual_bits <= 0.0)
        throw std::invalid_argument("actual bits must be positive");
    if (decision.encode_pos < 0 || decision.encode_pos >= static_cast<int>(gop.schedule.size()))
        throw std::invalid_argument("decision does not belong to this GOP");
    GopFrameInfo& frame = gop.schedule[decision.encode_pos];
    if (frame.encoded)
        throw InvariantError("frame reported twice");

    frame.encoded = true;
    gop.gop_bits_left -= actual_bits;
    gop.frames_left -= 1;
    if (gop.qps_this_gop.size() < gop.schedule.size())
        gop.qps_this_gop.resize(gop.schedule.size(), 0.0);
    gop.qps_this_gop[decision.encode_pos] = decision.final_qp;

    RdModel& model = models.context(decision.frame_type, decision.layer);
    const double bpp = actual_bits / static_cast<double>(cfg.frame_pixels);
    model = update_model(model, bpp, lambda_from_qp(decision.final_qp));

    tracker.on_encoded(actual_bits);
}

} // namespace rclab
