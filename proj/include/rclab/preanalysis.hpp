#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rclab/schedule.hpp"
#include "rclab/yuv_io.hpp"

namespace rclab {

struct PreAnalysisConfig {
    int lookahead_n = 20;        // frames considered by epp and analysis windows
    int search_range = 16;       // full-pel search radius on the half-res plane
    double cutree_strength = 2.0;
    int cu_size = 8;

    void validate() const;
};

struct MotionVector {
    int x = 0;
    int y = 0;
};

// Reference assignment of one CU: window position, propagation weight and
// the motion vector found against that reference.
struct CuRef {
    int window_pos = 0;
    double weight = 1.0;
    MotionVector mv;
};

struct CuStats {
    int64_t intra_cost = 0;
    int64_t inter_cost = 0;     // clamped to <= intra_cost
    double propagate_cost = 0.0;
    MotionVector mv;            // motion of the cheapest reference
    std::vector<CuRef> refs;
    double delta_qp = 0.0;      // always <= 0
};

struct FrameAnalysis {
    int cu_cols = 0;
    int cu_rows = 0;
    std::vector<CuStats> cus;
    double epp = 0.0;
    double avg_abs_delta_qp = 0.0;
    double avg_intra_cost = 0.0;
    double avg_propagate_cost = 0.0;

    CuStats& cu(int x, int y) { return cus[static_cast<size_t>(y) * cu_cols + x]; }
    const CuStats& cu(int x, int y) const { return cus[static_cast<size_t>(y) * cu_cols + x]; }
    int cu_count() const { return cu_cols * cu_rows; }
    double total_intra_cost() const;
};

// Replicates the last row/column so both dimensions are multiples of the CU
// size; the analysis grid is ceil(w/8) x ceil(h/8) over this plane.
FramePlane pad_to_cu_grid(const FramePlane& plane, int cu_size = 8);

// SATD of the CU against its DC predictor (mean of the row above and the
// column left of the CU; 128 when the CU touches the top-left corner).
int64_t estimate_intra_cost(const FramePlane& plane, int cu_x, int cu_y);

// Exhaustive integer-pel search over [-range, range]^2, candidates clamped
// to the plane. Ties break on smaller |mv.x|+|mv.y|, then mv.y, then mv.x.
std::pair<MotionVector, int64_t> motion_search(const FramePlane& cur, const FramePlane& ref,
                                               int cu_x, int cu_y, int range);

// Per-frame intra/inter costs for the whole window, then propagation in
// reverse encode order. Planes must be the downsampled pictures in window
// display order, all with identical dimensions.
std::vector<FrameAnalysis> analyze_lookahead(std::span<const FramePlane> window,
                                             const GopSchedule& schedule,
                                             const PreAnalysisConfig& cfg);

// One propagation step: distributes every CU of `window_pos` to its
// references. No-op for I frames and non-reference (layer 3) frames.
void propagate_frame(std::vector<FrameAnalysis>& analyses, const GopSchedule& schedule,
                     int window_pos);

// Fills delta_qp per CU plus the frame averages.
FrameAnalysis compute_delta_qp(FrameAnalysis analysis, const PreAnalysisConfig& cfg);

// Mean per-pixel L1 difference over up to n consecutive frames from the
// start of the window.
double compute_epp(std::span<const FramePlane> window, int n);

} // namespace rclab
