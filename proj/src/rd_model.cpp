#include "rclab/rd_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rclab {

double lambda_from_rate(const RdModel& model, double bpp) {
    if (bpp <= 0.0)
        throw std::invalid_argument("bpp must be positive");
    return model.alpha * std::pow(bpp, model.beta);
}

double qp_from_lambda(double lambda) {
    if (lambda <= 0.0)
        throw std::invalid_argument("lambda must be positive");
    return kQpLambdaSlope * std::log(lambda) + kQpLambdaOffset;
}

double lambda_from_qp(double qp) {
    return std::exp((qp - kQpLambdaOffset) / kQpLambdaSlope);
}

RdModel update_model(RdModel model, double actual_bpp, double actual_lambda) {
    if (actual_bpp <= 0.0 || actual_lambda <= 0.0)
        throw std::invalid_argument("model update needs positive bpp and lambda");

    const double residual =
        std::log(actual_lambda) - (std::log(model.alpha) + model.beta * std::log(actual_bpp));
    const double ln_rate = std::clamp(std::log(actual_bpp), -5.0, 5.0);

    model.alpha += model.lr_alpha * residual * model.alpha;
    model.beta += model.lr_beta * residual * ln_rate;

    model.alpha = std::clamp(model.alpha, 1e-4, 1e4);
    model.beta = std::clamp(model.beta, -3.0, -0.01);
    return model;
}

} // namespace rclab
