#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <tuple>

#include "rclab/preanalysis.hpp"
#include "rclab/satd.hpp"

using namespace rclab;

namespace {

FramePlane random_plane(int w, int h, uint32_t seed) {
    FramePlane p(w, h);
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> dist(0, 255);
    for (uint8_t& s : p.samples)
        s = static_cast<uint8_t>(dist(gen));
    return p;
}

// Brute-force motion oracle, duplicated tie-break rules.
std::pair<MotionVector, int64_t> motion_oracle(const FramePlane& cur, const FramePlane& ref,
                                               int cu_x, int cu_y, int range) {
    const int x0 = cu_x * 8;
    const int y0 = cu_y * 8;
    MotionVector best{0, 0};
    int64_t best_cost = -1;
    for (int dy = -range; dy <= range; ++dy)
        for (int dx = -range; dx <= range; ++dx) {
            const int rx = x0 + dx;
            const int ry = y0 + dy;
            if (rx < 0 || ry < 0 || rx + 8 > ref.width || ry + 8 > ref.height)
                continue;
            int64_t cost = 0;
            std::array<uint8_t, 64> a;
            std::array<uint8_t, 64> b;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    a[static_cast<size_t>(y) * 8 + x] = cur.at(x0 + x, y0 + y);
                    b[static_cast<size_t>(y) * 8 + x] = ref.at(rx + x, ry + y);
                }
            cost = satd_8x8(a.data(), 8, b.data(), 8);
            auto key = [&](MotionVector mv, int64_t c) {
                return std::make_tuple(c, std::abs(mv.x) + std::abs(mv.y), mv.y, mv.x);
            };
            if (best_cost < 0 || key({dx, dy}, cost) < key(best, best_cost)) {
                best = {dx, dy};
                best_cost = cost;
            }
        }
    return {best, best_cost};
}

GopSchedule single_p_schedule() {
    // window: [ref, P]; only the P propagates.
    return build_gop_schedule(0, 1, false);
}

// Synthetic window setup used by the propagation hand examples: costs are
// injected directly, then the B/P frame propagates one step.
struct PropFixture {
    GopSchedule schedule;
    std::vector<FrameAnalysis> analyses;

    explicit PropFixture(int cols = 4, int rows = 4) {
        schedule = single_p_schedule();
        analyses.resize(2);
        for (FrameAnalysis& fa : analyses) {
            fa.cu_cols = cols;
            fa.cu_rows = rows;
            fa.cus.assign(static_cast<size_t>(cols) * rows, CuStats{});
            // inter == intra everywhere: zero propagated fraction by default
            for (CuStats& cu : fa.cus) {
                cu.intra_cost = 50;
                cu.inter_cost = 50;
            }
        }
        for (CuStats& cu : analyses[1].cus)
            cu.refs = {{0, 1.0, {0, 0}}};
    }
};

} // namespace

TEST_CASE("intra cost of a flat 128 frame is zero everywhere") {
    FramePlane p(32, 32, 128);
    for (int cy = 0; cy < 4; ++cy)
        for (int cx = 0; cx < 4; ++cx)
            CHECK(estimate_intra_cost(p, cx, cy) == 0);
}

TEST_CASE("intra cost of a 200-CU against 100-neighbors is 1600") {
    FramePlane p(32, 32, 100);
    for (int y = 8; y < 16; ++y)
        for (int x = 8; x < 16; ++x)
            p.at(x, y) = 200;
    CHECK(estimate_intra_cost(p, 1, 1) == 1600);
}

TEST_CASE("top-left CU of any flat frame falls back to predictor 128") {
    FramePlane p(16, 16, 128);
    CHECK(estimate_intra_cost(p, 0, 0) == 0);
    FramePlane q(16, 16, 130);
    CHECK(estimate_intra_cost(q, 0, 0) == satd_8x8_const(q.ptr(0, 0), 16, 128));
}

TEST_CASE("intra cost rejects out-of-range CU indices") {
    FramePlane p(16, 16, 0);
    CHECK_THROWS_AS(estimate_intra_cost(p, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_intra_cost(p, 0, -1), std::invalid_argument);
}

TEST_CASE("motion search finds a zero MV on identical frames") {
    const FramePlane p = random_plane(32, 32, 5);
    const auto [mv, cost] = motion_search(p, p, 1, 1, 3);
    CHECK(mv.x == 0);
    CHECK(mv.y == 0);
    CHECK(cost == 0);
}

TEST_CASE("motion search recovers a +2 horizontal shift exactly") {
    // ref holds the same content as cur, moved right by 2 pixels.
    const FramePlane tex = random_plane(48, 48, 6);
    FramePlane cur(32, 32);
    FramePlane ref(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            cur.at(x, y) = tex.at(x + 8, y + 8);
            ref.at(x, y) = tex.at(x + 6, y + 8);
        }
    for (int cy = 1; cy < 3; ++cy)
        for (int cx = 1; cx < 3; ++cx) {
            const auto [mv, cost] = motion_search(cur, ref, cx, cy, 2);
            CHECK(mv.x == 2);
            CHECK(mv.y == 0);
            CHECK(cost == 0);
        }
}

TEST_CASE("motion search equals the exhaustive oracle on noise") {
    const FramePlane cur = random_plane(40, 32, 21);
    const FramePlane ref = random_plane(40, 32, 22);
    for (int range : {1, 3}) {
        for (int cy = 0; cy < 4; ++cy)
            for (int cx = 0; cx < 5; ++cx) {
                const auto got = motion_search(cur, ref, cx, cy, range);
                const auto want = motion_oracle(cur, ref, cx, cy, range);
                CHECK(got.second == want.second);
                CHECK(got.first.x == want.first.x);
                CHECK(got.first.y == want.first.y);
            }
    }
}

TEST_CASE("no propagation when inter equals intra") {
    PropFixture fx;
    propagate_frame(fx.analyses, fx.schedule, 1);
    for (const CuStats& cu : fx.analyses[0].cus)
        CHECK(cu.propagate_cost == 0.0);
}

TEST_CASE("single CU with aligned MV sends AC to one reference CU") {
    PropFixture fx;
    CuStats& src = fx.analyses[1].cu(2, 2);
    src.intra_cost = 100;
    src.inter_cost = 60;
    src.propagate_cost = 0;
    src.refs = {{0, 1.0, {0, 0}}};
    propagate_frame(fx.analyses, fx.schedule, 1);
    // F_p = 0.4, AC = 40, aligned -> single receiver
    CHECK(fx.analyses[0].cu(2, 2).propagate_cost == doctest::Approx(40.0).epsilon(1e-12));
    double total = 0.0;
    for (const CuStats& cu : fx.analyses[0].cus)
        total += cu.propagate_cost;
    CHECK(total == doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("MV offset (4,4) splits AC over four CUs, 10 each") {
    PropFixture fx;
    CuStats& src = fx.analyses[1].cu(1, 1);
    src.intra_cost = 100;
    src.inter_cost = 60;
    src.refs = {{0, 1.0, {4, 4}}};
    propagate_frame(fx.analyses, fx.schedule, 1);
    CHECK(fx.analyses[0].cu(1, 1).propagate_cost == doctest::Approx(10.0));
    CHECK(fx.analyses[0].cu(2, 1).propagate_cost == doctest::Approx(10.0));
    CHECK(fx.analyses[0].cu(1, 2).propagate_cost == doctest::Approx(10.0));
    CHECK(fx.analyses[0].cu(2, 2).propagate_cost == doctest::Approx(10.0));
}

TEST_CASE("two references split AC half/half before area distribution") {
    // anchor, B3, B2, B3, P: the middle B is referenced (layer 2)
    GopSchedule schedule = build_gop_schedule(0, 4, false);
    REQUIRE(schedule.frames[2].layer == 2);
    std::vector<FrameAnalysis> analyses(5);
    for (FrameAnalysis& fa : analyses) {
        fa.cu_cols = 4;
        fa.cu_rows = 4;
        fa.cus.assign(16, CuStats{});
        for (CuStats& cu : fa.cus) {
            cu.intra_cost = 50;
            cu.inter_cost = 50;
        }
    }
    CuStats& src = analyses[2].cu(1, 1); // the layer-2 B frame
    src.intra_cost = 100;
    src.inter_cost = 60;
    src.refs = {{0, 0.5, {0, 0}}, {4, 0.5, {0, 0}}};
    propagate_frame(analyses, schedule, 2);
    CHECK(analyses[0].cu(1, 1).propagate_cost == doctest::Approx(20.0));
    CHECK(analyses[4].cu(1, 1).propagate_cost == doctest::Approx(20.0));
    CHECK(analyses[1].cu(1, 1).propagate_cost == 0.0);
}

TEST_CASE("layer-3 frames and I frames propagate nothing") {
    GopSchedule schedule = build_gop_schedule(0, 2, true); // I, B3, P
    REQUIRE(schedule.frames[1].layer == 3);
    std::vector<FrameAnalysis> analyses(3);
    for (FrameAnalysis& fa : analyses) {
        fa.cu_cols = 2;
        fa.cu_rows = 2;
        fa.cus.assign(4, CuStats{});
        for (CuStats& cu : fa.cus) {
            cu.intra_cost = 100;
            cu.inter_cost = 0; // maximal propagated fraction
            cu.refs = {{0, 1.0, {0, 0}}};
        }
    }
    propagate_frame(analyses, schedule, 1); // layer-3 B
    propagate_frame(analyses, schedule, 0); // the I itself
    for (const FrameAnalysis& fa : analyses)
        for (const CuStats& cu : fa.cus)
            CHECK(cu.propagate_cost == 0.0);
}

TEST_CASE("propagation conserves mass on random windows") {
    std::mt19937 gen(99);
    std::uniform_int_distribution<int> len_dist(1, 8);
    std::uniform_int_distribution<int> size_dist(2, 5);
    std::uniform_int_distribution<int> seed_dist(0, 1 << 30);
    PreAnalysisConfig cfg;
    cfg.search_range = 2;

    for (int trial = 0; trial < 100; ++trial) {
        const int pb_len = len_dist(gen);
        const int cols = size_dist(gen);
        const int rows = size_dist(gen);
        GopSchedule schedule = build_gop_schedule(0, pb_len, trial % 2 == 0);
        std::vector<FramePlane> window;
        for (int i = 0; i <= pb_len; ++i)
            window.push_back(random_plane(cols * 8, rows * 8, static_cast<uint32_t>(seed_dist(gen))));

        std::vector<FrameAnalysis> analyses = analyze_lookahead(window, schedule, cfg);

        // Replay propagation step by step and compare sent vs received mass.
        for (FrameAnalysis& fa : analyses)
            for (CuStats& cu : fa.cus)
                cu.propagate_cost = 0.0;
        for (auto it = schedule.encode_order.rbegin(); it != schedule.encode_order.rend(); ++it) {
            const int pos = *it;
            const ScheduledFrame& sf = schedule.frames[pos];
            double before = 0.0;
            for (const FrameAnalysis& fa : analyses)
                for (const CuStats& cu : fa.cus)
                    before += cu.propagate_cost;

            double sent = 0.0;
            if (sf.type != FrameType::I && sf.layer < 3) {
                for (const CuStats& cu : analyses[pos].cus) {
                    if (cu.intra_cost <= 0)
                        continue;
                    const double fp = static_cast<double>(cu.intra_cost - cu.inter_cost) /
                                      static_cast<double>(cu.intra_cost);
                    if (fp <= 0.0)
                        continue;
                    double weight_sum = 0.0;
                    for (const CuRef& r : cu.refs)
                        weight_sum += r.weight;
                    sent += (static_cast<double>(cu.intra_cost) + cu.propagate_cost) * fp * weight_sum;
                }
            }
            propagate_frame(analyses, schedule, pos);

            double after = 0.0;
            for (const FrameAnalysis& fa : analyses)
                for (const CuStats& cu : fa.cus)
                    after += cu.propagate_cost;
            REQUIRE(std::abs((after - before) - sent) < 1e-9 * std::max(1.0, sent));
        }
    }
}

TEST_CASE("delta QP is zero without propagation and follows the log rule") {
    PreAnalysisConfig cfg;
    cfg.cutree_strength = 2.0;
    FrameAnalysis fa;
    fa.cu_cols = 2;
    fa.cu_rows = 1;
    fa.cus.assign(2, CuStats{});
    fa.cus[0].intra_cost = 100;
    fa.cus[1].intra_cost = 100;

    FrameAnalysis zero = compute_delta_qp(fa, cfg);
    CHECK(zero.cus[0].delta_qp == 0.0);
    CHECK(zero.avg_abs_delta_qp == 0.0);

    fa.cus[1].propagate_cost = 300.0; // ratio 4 -> -2*log2(4) = -4
    FrameAnalysis out = compute_delta_qp(fa, cfg);
    CHECK(out.cus[1].delta_qp == doctest::Approx(-4.0));
    CHECK(out.cus[0].delta_qp == 0.0);
    CHECK(out.avg_abs_delta_qp == doctest::Approx(2.0));
}

TEST_CASE("delta QP is monotone in propagate cost and never positive") {
    PreAnalysisConfig cfg;
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> prop(0.0, 500.0);
    double last = 0.0;
    for (int i = 0; i < 50; ++i) {
        FrameAnalysis fa;
        fa.cu_cols = 1;
        fa.cu_rows = 1;
        fa.cus.assign(1, CuStats{});
        fa.cus[0].intra_cost = 100;
        fa.cus[0].propagate_cost = i * 10.0;
        const FrameAnalysis out = compute_delta_qp(fa, cfg);
        CHECK(out.cus[0].delta_qp <= 0.0);
        if (i > 0)
            CHECK(out.cus[0].delta_qp < last);
        last = out.cus[0].delta_qp;
        (void)prop;
    }
}

TEST_CASE("analyze_lookahead clamps inter cost to intra cost") {
    PreAnalysisConfig cfg;
    cfg.search_range = 2;
    GopSchedule schedule = single_p_schedule();
    std::vector<FramePlane> window = {random_plane(32, 32, 1), random_plane(32, 32, 2)};
    const auto analyses = analyze_lookahead(window, schedule, cfg);
    for (const CuStats& cu : analyses[1].cus)
        CHECK(cu.inter_cost <= cu.intra_cost);
}

TEST_CASE("analyze_lookahead validates schedule and window") {
    PreAnalysisConfig cfg;
    GopSchedule schedule = single_p_schedule();
    std::vector<FramePlane> window = {random_plane(16, 16, 1)};
    CHECK_THROWS_AS(analyze_lookahead(window, schedule, cfg), std::invalid_argument);

    schedule.frames[1].refs = {7}; // outside window
    window.push_back(random_plane(16, 16, 2));
    CHECK_THROWS_AS(analyze_lookahead(window, schedule, cfg), std::invalid_argument);

    CHECK_THROWS_AS(analyze_lookahead(std::span<const FramePlane>{}, GopSchedule{}, cfg),
                    std::invalid_argument);
}

TEST_CASE("epp of identical frames is zero") {
    std::vector<FramePlane> w = {FramePlane(8, 8, 77), FramePlane(8, 8, 77), FramePlane(8, 8, 77)};
    CHECK(compute_epp(w, 20) == 0.0);
}

TEST_CASE("epp of a constant +2 difference is 2") {
    std::vector<FramePlane> w = {FramePlane(8, 8, 100), FramePlane(8, 8, 102)};
    CHECK(compute_epp(w, 20) == doctest::Approx(2.0));
}

TEST_CASE("epp averages pairwise differences over the window") {
    // pairwise mean diffs 1.0 and 3.0 -> epp 2.0
    std::vector<FramePlane> w = {FramePlane(8, 8, 100), FramePlane(8, 8, 101), FramePlane(8, 8, 104)};
    CHECK(compute_epp(w, 3) == doctest::Approx(2.0));
}

TEST_CASE("epp is invariant under reversal of a 2-frame window") {
    const FramePlane a = random_plane(16, 16, 31);
    const FramePlane b = random_plane(16, 16, 32);
    std::vector<FramePlane> fwd = {a, b};
    std::vector<FramePlane> rev = {b, a};
    CHECK(compute_epp(fwd, 2) == doctest::Approx(compute_epp(rev, 2)));
}

TEST_CASE("epp rejects windows of fewer than 2 frames") {
    std::vector<FramePlane> w = {FramePlane(8, 8, 0)};
    CHECK_THROWS_AS(compute_epp(w, 5), std::invalid_argument);
}

TEST_CASE("pad_to_cu_grid replicates edges up to the grid size") {
    FramePlane p(10, 12, 0);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 10; ++x)
            p.at(x, y) = static_cast<uint8_t>(x + 2 * y);
    const FramePlane padded = pad_to_cu_grid(p);
    CHECK(padded.width == 16);
    CHECK(padded.height == 16);
    CHECK(padded.at(15, 15) == p.at(9, 11));
    CHECK(padded.at(3, 14) == p.at(3, 11));
}
