#include "rclab/encoder_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "rclab/rd_model.hpp"

namespace rclab {

void SimFrameModel::validate() const {
    if (complexity <= 0.0)
        throw std::invalid_argument("complexity must be positive");
    if (rd_exponent < 0.5 || rd_exponent > 2.5)
        throw std::invalid_argument("rd_exponent must be in [0.5, 2.5]");
    if (dependence_gain < 0.0 || dependence_gain > 1.0)
        throw std::invalid_argument("dependence_gain must be in [0, 1]");
    if (noise_sigma < 0.0 || noise_sigma > 0.3)
        throw std::invalid_argument("noise_sigma must be in [0, 0.3]");
    if (pixel_count < 1.0)
        throw std::invalid_argument("pixel_count must be at least 1");
}

SimResult simulate_encode(const SimFrameModel& model, double qp, double ref_quality_bonus,
                          uint64_t rng_seed) {
    model.validate();
    if (qp < 0.0 || qp > 51.0)
        throw std::invalid_argument("qp must be in [0, 51]");
    if (ref_quality_bonus < 0.0 || ref_quality_bonus > 1.0)
        throw std::invalid_argument("ref_quality_bonus must be in [0, 1]");

    const double lambda = lambda_from_qp(qp);
    const double k = model.rd_exponent;
    const double c_eff = model.complexity * (1.0 - model.dependence_gain * ref_quality_bonus);

    const double rate = std::pow(c_eff * k / lambda, 1.0 / (k + 1.0));
    double noise = 1.0;
    if (model.noise_sigma > 0.0) {
        std::mt19937_64 gen(rng_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        noise = std::exp(normal(gen) * model.noise_sigma);
    }

    SimResult result;
    result.bits = std::max<int64_t>(1, std::llround(rate * model.pixel_count * noise));
    result.distortion = c_eff * std::pow(rate, -k);
    result.psnr = 10.0 * std::log10(255.0 * 255.0 / result.distortion);
    return result;
}

double ref_quality_bonus(std::span<const double> ref_psnrs) {
    if (ref_psnrs.empty())
        return 0.0;
    double sum = 0.0;
    for (double p : ref_psnrs)
        sum += p;
    const double mean = sum / static_cast<double>(ref_psnrs.size());
    return std::clamp(mean - 30.0, 0.0, 10.0) / 10.0;
}

double bitrate_error(double target, double actual) {
    if (target <= 0.0)
        throw std::invalid_argument("target bitrate must be positive");
    return std::abs(target - actual) / target * 1000.0;
}

namespace {

// Least-squares cubic fit of y over x via the normal equations; x is shifted
// by the caller for conditioning.
std::array<double, 4> fit_cubic(std::span<const RatePoint> curve, double x_shift) {
    std::array<std::array<double, 5>, 4> m{}; // augmented normal matrix
    for (const RatePoint& p : curve) {
        const double x = p.psnr - x_shift;
        const double y = std::log10(p.rate);
        double xi = 1.0;
        std::array<double, 4> basis{};
        for (int i = 0; i < 4; ++i) {
            basis[i] = xi;
            xi *= x;
        }
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c)
                m[r][c] += basis[r] * basis[c];
            m[r][4] += basis[r] * y;
        }
    }

    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col]))
                pivot = r;
        std::swap(m[col], m[pivot]);
        if (std::abs(m[col][col]) < 1e-12)
            throw std::invalid_argument("degenerate curve: cubic fit is singular");
        for (int r = 0; r < 4; ++r) {
            if (r == col)
                continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 5; ++c)
                m[r][c] -= f * m[col][c];
        }
    }
    return {m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]};
}

double integrate_cubic(const std::array<double, 4>& c, double lo, double hi) {
    auto antiderivative = [&](double x) {
        return x * (c[0] + x * (c[1] / 2.0 + x * (c[2] / 3.0 + x * c[3] / 4.0)));
    };
    return antiderivative(hi) - antiderivative(lo);
}

void check_curve(std::span<const RatePoint> curve) {
    if (curve.size() < 4)
        throw std::invalid_argument("BD-rate needs at least 4 points per curve");
    for (size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].rate <= 0.0)
            throw std::invalid_argument("rates must be positive");
        for (size_t j = i + 1; j < curve.size(); ++j)
            if (curve[i].psnr == curve[j].psnr)
                throw std::invalid_argument("curve has duplicate PSNR points");
    }
}

std::pair<double, double> psnr_range(std::span<const RatePoint> curve) {
    double lo = curve[0].psnr;
    double hi = curve[0].psnr;
    for (const RatePoint& p : curve) {
        lo = std::min(lo, p.psnr);
        hi = std::max(hi, p.psnr);
    }
    return {lo, hi};
}

} // namespace

double bd_rate(std::span<const RatePoint> curve_a, std::span<const RatePoint> curve_b) {
    check_curve(curve_a);
    check_curve(curve_b);

    const auto [lo_a, hi_a] = psnr_range(curve_a);
    const auto [lo_b, hi_b] = psnr_range(curve_b);
    const double lo = std::max(lo_a, lo_b);
    const double hi = std::min(hi_a, hi_b);
    if (hi <= lo)
        throw std::invalid_argument("curves have no overlapping PSNR range");

    const double shift = 0.5 * (lo + hi);
    const auto fit_a = fit_cubic(curve_a, shift);
    const auto fit_b = fit_cubic(curve_b, shift);

    const double int_a = integrate_cubic(fit_a, lo - shift, hi - shift);
    const double int_b = integrate_cubic(fit_b, lo - shift, hi - shift);
    const double avg_diff = (int_b - int_a) / (hi - lo);
    return (std::pow(10.0, avg_diff) - 1.0) * 100.0;
}

} // namespace rclab
