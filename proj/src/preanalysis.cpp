#include "rclab/preanalysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "rclab/satd.hpp"

namespace rclab {

void PreAnalysisConfig::validate() const {
    if (lookahead_n < 2)
        throw std::invalid_argument("lookahead_n must be at least 2");
    if (search_range < 1)
        throw std::invalid_argument("search_range must be at least 1");
    if (cutree_strength <= 0.0)
        throw std::invalid_argument("cutree_strength must be positive");
    if (cu_size != 8)
        throw std::invalid_argument("cu_size is fixed at 8");
}

double FrameAnalysis::total_intra_cost() const {
    double sum = 0.0;
    for (const CuStats& cu : cus)
        sum += static_cast<double>(cu.intra_cost);
    return sum;
}

FramePlane pad_to_cu_grid(const FramePlane& plane, int cu_size) {
    const int pw = (plane.width + cu_size - 1) / cu_size * cu_size;
    const int ph = (plane.height + cu_size - 1) / cu_size * cu_size;
    if (pw == plane.width && ph == plane.height)
        return plane;
    FramePlane out(pw, ph);
    for (int y = 0; y < ph; ++y) {
        const int sy = std::min(y, plane.height - 1);
        for (int x = 0; x < pw; ++x)
            out.at(x, y) = plane.at(std::min(x, plane.width - 1), sy);
    }
    return out;
}

namespace {

void check_cu_index(const FramePlane& plane, int cu_x, int cu_y) {
    const int cols = plane.width / 8;
    const int rows = plane.height / 8;
    if (plane.width % 8 != 0 || plane.height % 8 != 0)
        throw std::invalid_argument("plane is not CU aligned; pad_to_cu_grid first");
    if (cu_x < 0 || cu_y < 0 || cu_x >= cols || cu_y >= rows)
        throw std::invalid_argument("CU index out of range");
}

} // namespace

int64_t estimate_intra_cost(const FramePlane& plane, int cu_x, int cu_y) {
    check_cu_index(plane, cu_x, cu_y);
    const int x0 = cu_x * 8;
    const int y0 = cu_y * 8;

    int sum = 0;
    int n = 0;
    if (y0 > 0) {
        for (int x = x0; x < x0 + 8; ++x)
            sum += plane.at(x, y0 - 1);
        n += 8;
    }
    if (x0 > 0) {
        for (int y = y0; y < y0 + 8; ++y)
            sum += plane.at(x0 - 1, y);
        n += 8;
    }
    const uint8_t pred = n > 0 ? static_cast<uint8_t>((sum + n / 2) / n) : 128;
    return satd_8x8_const(plane.ptr(x0, y0), plane.width, pred);
}

std::pair<MotionVector, int64_t> motion_search(const FramePlane& cur, const FramePlane& ref,
                                               int cu_x, int cu_y, int range) {
    check_cu_index(cur, cu_x, cu_y);
    if (range < 1)
        throw std::invalid_argument("search range must be at least 1");
    if (cur.width != ref.width || cur.height != ref.height)
        throw std::invalid_argument("current and reference plane dimensions differ");

    const int x0 = cu_x * 8;
    const int y0 = cu_y * 8;
    const uint8_t* block = cur.ptr(x0, y0);

    MotionVector best_mv;
    int64_t best_cost = -1;
    int best_l1 = 0;
    for (int dy = -range; dy <= range; ++dy) {
        const int ry = y0 + dy;
        if (ry < 0 || ry + 8 > ref.height)
            continue;
        for (int dx = -range; dx <= range; ++dx) {
            const int rx = x0 + dx;
            if (rx < 0 || rx + 8 > ref.width)
                continue;
            const int64_t cost = satd_8x8(block, cur.width, ref.ptr(rx, ry), ref.width);
            const int l1 = std::abs(dx) + std::abs(dy);
            const bool better =
                best_cost < 0 || cost < best_cost ||
                (cost == best_cost &&
                 (l1 < best_l1 || (l1 == best_l1 && (dy < best_mv.y || (dy == best_mv.y && dx < best_mv.x)))));
            if (better) {
                best_cost = cost;
                best_mv = {dx, dy};
                best_l1 = l1;
            }
        }
    }
    return {best_mv, best_cost};
}

namespace {

// Splits `amount` landing at pixel (px, py) of the reference plane across
// the up-to-4 CUs the 8x8 block overlaps, proportionally to overlap area.
void deposit(FrameAnalysis& ref, int plane_w, int plane_h, int px, int py, double amount) {
    px = std::clamp(px, 0, plane_w - 8);
    py = std::clamp(py, 0, plane_h - 8);
    const int cx = px >> 3;
    const int cy = py >> 3;
    const int fx = px & 7;
    const int fy = py & 7;
    const double w00 = static_cast<double>((8 - fx) * (8 - fy)) / 64.0;
    const double w10 = static_cast<double>(fx * (8 - fy)) / 64.0;
    const double w01 = static_cast<double>((8 - fx) * fy) / 64.0;
    const double w11 = static_cast<double>(fx * fy) / 64.0;
    ref.cu(cx, cy).propagate_cost += amount * w00;
    if (fx > 0)
        ref.cu(cx + 1, cy).propagate_cost += amount * w10;
    if (fy > 0)
        ref.cu(cx, cy + 1).propagate_cost += amount * w01;
    if (fx > 0 && fy > 0)
        ref.cu(cx + 1, cy + 1).propagate_cost += amount * w11;
}

} // namespace

void propagate_frame(std::vector<FrameAnalysis>& analyses, const GopSchedule& schedule,
                     int window_pos) {
    const ScheduledFrame& sf = schedule.frames[window_pos];
    if (sf.type == FrameType::I || sf.layer >= 3 || sf.refs.empty())
        return;

    FrameAnalysis& src = analyses[window_pos];
    const int plane_w = src.cu_cols * 8;
    const int plane_h = src.cu_rows * 8;
    for (int cy = 0; cy < src.cu_rows; ++cy) {
        for (int cx = 0; cx < src.cu_cols; ++cx) {
            const CuStats& cu = src.cu(cx, cy);
            if (cu.intra_cost <= 0)
                continue;
            const double fp =
                static_cast<double>(cu.intra_cost - cu.inter_cost) / static_cast<double>(cu.intra_cost);
            if (fp <= 0.0)
                continue;
            const double ac = (static_cast<double>(cu.intra_cost) + cu.propagate_cost) * fp;
            for (const CuRef& r : cu.refs)
                deposit(analyses[r.window_pos], plane_w, plane_h, cx * 8 + r.mv.x, cy * 8 + r.mv.y,
                        ac * r.weight);
        }
    }
}

std::vector<FrameAnalysis> analyze_lookahead(std::span<const FramePlane> window,
                                             const GopSchedule& schedule,
                                             const PreAnalysisConfig& cfg) {
    cfg.validate();
    if (window.empty())
        throw std::invalid_argument("empty lookahead window");
    if (static_cast<int>(window.size()) > cfg.lookahead_n)
        throw std::invalid_argument("window exceeds lookahead_n");
    if (window.size() != schedule.frames.size())
        throw std::invalid_argument("window and schedule sizes differ");
    for (const ScheduledFrame& sf : schedule.frames) {
        if (sf.type != FrameType::I && sf.pending && (sf.refs.empty() || sf.refs.size() > 2))
            throw std::invalid_argument("non-I frame needs 1 or 2 references");
        for (int r : sf.refs)
            if (r < 0 || r >= static_cast<int>(window.size()))
                throw std::invalid_argument("reference outside window");
    }
    for (const FramePlane& p : window)
        if (p.width != window[0].width || p.height != window[0].height)
            throw std::invalid_argument("window planes have mixed dimensions");

    std::vector<FramePlane> padded;
    padded.reserve(window.size());
    for (const FramePlane& p : window)
        padded.push_back(pad_to_cu_grid(p, cfg.cu_size));

    const int cols = padded[0].width / 8;
    const int rows = padded[0].height / 8;

    std::vector<FrameAnalysis> analyses(window.size());
    for (size_t i = 0; i < window.size(); ++i) {
        FrameAnalysis& fa = analyses[i];
        fa.cu_cols = cols;
        fa.cu_rows = rows;
        fa.cus.assign(static_cast<size_t>(cols) * rows, CuStats{});
        const ScheduledFrame& sf = schedule.frames[i];
        const std::vector<int>& refs = sf.pending ? sf.refs : std::vector<int>{};

        for (int cy = 0; cy < rows; ++cy) {
            for (int cx = 0; cx < cols; ++cx) {
                CuStats& cu = fa.cu(cx, cy);
                cu.intra_cost = estimate_intra_cost(padded[i], cx, cy);
                if (refs.empty()) {
                    cu.inter_cost = cu.intra_cost;
                    continue;
                }
                const double weight = 1.0 / static_cast<double>(refs.size());
                int64_t best = -1;
                for (int r : refs) {
                    auto [mv, cost] = motion_search(padded[i], padded[r], cx, cy, cfg.search_range);
                    cu.refs.push_back({r, weight, mv});
                    if (best < 0 || cost < best) {
                        best = cost;
                        cu.mv = mv;
                    }
                }
                cu.inter_cost = std::min(best, cu.intra_cost);
            }
        }
    }

    for (auto it = schedule.encode_order.rbegin(); it != schedule.encode_order.rend(); ++it)
        propagate_frame(analyses, schedule, *it);

    return analyses;
}

FrameAnalysis compute_delta_qp(FrameAnalysis analysis, const PreAnalysisConfig& cfg) {
    cfg.validate();
    double abs_sum = 0.0;
    double intra_sum = 0.0;
    double prop_sum = 0.0;
    for (CuStats& cu : analysis.cus) {
        if (cu.intra_cost > 0) {
            const double ratio =
                (static_cast<double>(cu.intra_cost) + cu.propagate_cost) / static_cast<double>(cu.intra_cost);
            cu.delta_qp = -cfg.cutree_strength * std::log2(ratio);
        } else {
            cu.delta_qp = 0.0;
        }
        abs_sum += std::abs(cu.delta_qp);
        intra_sum += static_cast<double>(cu.intra_cost);
        prop_sum += cu.propagate_cost;
    }
    const double n = analysis.cus.empty() ? 1.0 : static_cast<double>(analysis.cus.size());
    analysis.avg_abs_delta_qp = abs_sum / n;
    analysis.avg_intra_cost = intra_sum / n;
    analysis.avg_propagate_cost = prop_sum / n;
    return analysis;
}

double compute_epp(std::span<const FramePlane> window, int n) {
    if (window.size() < 2)
        throw std::invalid_argument("epp needs at least 2 frames");
    if (n < 2)
        throw std::invalid_argument("epp range must be at least 2");
    const size_t used = std::min(window.size(), static_cast<size_t>(n));
    const double pixels = static_cast<double>(window[0].width) * window[0].height;

    double sum = 0.0;
    for (size_t i = 0; i + 1 < used; ++i) {
        const FramePlane& a = window[i];
        const FramePlane& b = window[i + 1];
        if (a.width != b.width || a.height != b.height)
            throw std::invalid_argument("epp planes have mixed dimensions");
        int64_t l1 = 0;
        for (size_t k = 0; k < a.samples.size(); ++k)
            l1 += std::abs(static_cast<int>(a.samples[k]) - static_cast<int>(b.samples[k]));
        sum += static_cast<double>(l1) / pixels;
    }
    return sum / static_cast<double>(used - 1);
}

} // namespace rclab
