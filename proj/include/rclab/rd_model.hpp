#pragma once

namespace rclab {

inline constexpr double kQpLambdaSlope = 4.2005;
inline constexpr double kQpLambdaOffset = 13.7122;

// R-lambda model state, lambda = alpha * bpp^beta. One instance per
// frame-type/layer context.
struct RdModel {
    double alpha = 3.2003;
    double beta = -1.367;
    double lr_alpha = 0.1;
    double lr_beta = 0.05;
};

double lambda_from_rate(const RdModel& model, double bpp);
double qp_from_lambda(double lambda);
double lambda_from_qp(double qp);

// One gradient step of both parameters against the observed (bpp, lambda)
// pair; the pre-update parameters feed both right-hand sides, then the
// results are clamped to alpha in [1e-4, 1e4], beta in [-3, -0.01].
RdModel update_model(RdModel model, double actual_bpp, double actual_lambda);

} // namespace rclab
