#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rclab/preanalysis.hpp"
#include "rclab/rd_model.hpp"
#include "rclab/schedule.hpp"

namespace rclab {

enum class Scheme { proposed, no_conditional_qp, equal_allocation };

Scheme scheme_from_name(const std::string& name);
const char* scheme_name(Scheme s);

struct RateControlConfig {
    double target_bitrate = 0.0; // bits per second
    int gop_size = 8;            // M
    int keyint = 100;            // I-frame period in display frames
    double epp_threshold = 2.5;  // T
    double k_constant = 4791.5;  // c
    int smoothing_window = 40;   // frames a deficit is amortized over
    int qp_min = 0;
    int qp_max = 51;
    double fps = 25.0;
    int64_t frame_pixels = 0;    // full-resolution pixels per frame
    Scheme scheme = Scheme::proposed;

    void validate() const;
};

// Sequence-level budget: ideal spend minus actual spend is fed back into the
// per-frame budget, amortized over at most `smoothing_window` frames and over
// whatever is left near the end of the sequence. Deficits are carried, never
// dropped.
class BudgetTracker {
public:
    BudgetTracker() = default;
    BudgetTracker(const RateControlConfig& cfg, int total_frames);

    double per_frame_ideal() const { return per_frame_ideal_; }
    double per_frame_budget() const;
    int frames_remaining() const { return total_frames_ - encoded_; }
    double total_spent() const { return spent_; }
    int frames_encoded() const { return encoded_; }
    void on_encoded(double bits);

private:
    double per_frame_ideal_ = 0.0;
    int total_frames_ = 0;
    int window_ = 40;
    double spent_ = 0.0;
    int encoded_ = 0;
};

// Per-context models: {I}, {P layer 1}, {B layer 2}, {B layer 3}.
struct RdModelSet {
    RdModel i;
    RdModel p;
    RdModel b2;
    RdModel b3;

    RdModel& context(FrameType type, int layer);
    const RdModel& context(FrameType type, int layer) const;
};

// What the controller needs to know about one scheduled frame of a GOP.
struct GopFrameInfo {
    int display_index = 0;
    FrameType type = FrameType::B;
    int layer = 3;
    double epp = 0.0;
    double avg_abs_delta_qp = 0.0;
    double avg_intra_cost = 0.0;
    double avg_propagate_cost = 0.0;
    bool encoded = false;
};

struct GopState {
    double gop_bits_left = 0.0;
    int frames_left = 0;
    double lambda_g = 0.0;
    bool first_gop = false;
    std::vector<GopFrameInfo> schedule; // encode order
    std::vector<double> last_gop_qps;   // colocated QPs, by encode position
    std::vector<double> qps_this_gop;   // filled as frames are reported
};

struct FrameDecision {
    int frame_index = 0; // display index
    FrameType frame_type = FrameType::B;
    int layer = 3;
    int encode_pos = 0;  // position in GopState::schedule
    double w = 1.0;
    double lambda_g = 0.0;
    double lambda = 0.0;
    double base_qp = 0.0;
    int final_qp = 0;
    double target_bits = 0.0;
    double epp = 0.0;
    double avg_abs_delta_qp = 0.0;
    std::vector<double> cu_qp_offsets;
};

// One frame term of the GOP allocation equation.
struct FrameTerm {
    double w = 1.0;
    double alpha = 3.2003;
    double beta = -1.367;
};

struct LambdaSolve {
    double lambda_g = 0.0;
    bool saturated = false;
};

// Budgets a mini-GOP of gop_len frames out of the sequence tracker. The
// schedule is filled in by the caller.
GopState plan_gop(const RateControlConfig& cfg, const BudgetTracker& tracker, int gop_len);

// Layer weight of the 4-layer hierarchy: layer 3 -> 1, layer 2 -> 1/1.2599,
// layer 1 -> 1/(1+k) with k from the frame's propagate/intra ratio and the
// colocated QP of the previous GOP.
double layer_weight(int layer, const FrameAnalysis& analysis, double qp_last,
                    const RateControlConfig& cfg);
double layer_weight_from_stats(int layer, double prop_to_intra_ratio, double qp_last,
                               const RateControlConfig& cfg);

// Solves sum_i (w_i * lambda_g / alpha_i)^(1/beta_i) = budget_bpp by
// bisection in the log domain over [1e-6, 1e6].
LambdaSolve solve_lambda_g(std::span<const FrameTerm> remaining, double budget_bpp);

FrameDecision decide_pb_frame(int encode_pos, GopState& gop, const FrameAnalysis& analysis,
                              const RdModelSet& models, const RateControlConfig& cfg);

// I frames are budgeted as a one-frame GOP straight from the tracker; QP
// comes from an intra-SATD lambda model, then the conditional increase.
FrameDecision decide_i_frame(int display_index, const FrameAnalysis& analysis,
                             std::span<const FrameAnalysis> window, const RdModelSet& models,
                             const RateControlConfig& cfg, const BudgetTracker& tracker);

GopState make_single_frame_gop(const FrameDecision& i_decision);

void on_frame_encoded(const FrameDecision& decision, double actual_bits, GopState& gop,
                      RdModelSet& models, BudgetTracker& tracker,
                      const RateControlConfig& cfg);

double round_half_up(double v);

} // namespace rclab
