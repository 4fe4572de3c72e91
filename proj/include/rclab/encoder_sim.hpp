#pragma once

#include <cstdint>
#include <span>

namespace rclab {

// Hyperbolic ground-truth model of one frame: D = C_eff * R^-K with
// C_eff = complexity * (1 - dependence_gain * ref_quality_bonus). R is in
// bits-per-pixel internally; pixel_count scales the reported bits (1 keeps
// rate and model units identical).
struct SimFrameModel {
    double complexity = 10.0;
    double rd_exponent = 1.2; // K
    double dependence_gain = 0.0;
    double noise_sigma = 0.0;
    double pixel_count = 1.0;

    void validate() const;
};

struct SimResult {
    int64_t bits = 0;
    double distortion = 0.0; // MSE
    double psnr = 0.0;       // dB
};

// Closed-form encode: rate from the first-order condition
// lambda = C_eff * K * R^(-K-1), lognormal noise on bits only.
SimResult simulate_encode(const SimFrameModel& model, double qp, double ref_quality_bonus,
                          uint64_t rng_seed);

// clamp(mean reference PSNR - 30 dB, 0, 10) / 10; 0 with no references.
double ref_quality_bonus(std::span<const double> ref_psnrs);

// |target - actual| / target in permille.
double bitrate_error(double target, double actual);

struct RatePoint {
    double rate = 0.0; // bits per second
    double psnr = 0.0; // dB
};

// Average bitrate difference of curve b against curve a at equal quality,
// from cubic fits of log10(rate) over PSNR. Negative means b is cheaper.
double bd_rate(std::span<const RatePoint> curve_a, std::span<const RatePoint> curve_b);

} // namespace rclab
