#pragma once

#include "pathmkv/model.hpp"

#include <string>
#include <vector>

namespace pathmkv {

/// Parameters shared by the built-in models. The generator is
/// A = diag(lambda (k+1)^2), k = 0..d-1.
struct ModelParams {
    double T = 1.0;
    std::size_t M = 100;
    std::size_t d = 1;
    std::size_t dK = 1;
    double lambda = -1.0;  ///< leading eigenvalue of A (1/time)
    double sigma = 0.5;    ///< diffusion level s0 (sqrt(1/time))
    double theta = 1.0;    ///< mean-reversion or mean-field strength (1/time)
};

/// b = 0, sigma = 0, A = 0.
ModelSpec frozen_model(const ModelParams& p);
/// b = 0, sigma = s0 I, A as in ModelParams.
ModelSpec ou_model(const ModelParams& p);
/// b = -theta x_t, sigma = s0 I, A = 0 (mean reversion carried by the drift).
ModelSpec ou_drift_model(const ModelParams& p);
/// b = theta (∫ y_t mu(dy) - x_t), sigma = s0 I.
ModelSpec mean_field_ou_model(const ModelParams& p);
/// Uncontrolled mean-field OU with f = -|x_t|^2, g = -|x_T|^2 - |∫ y_T mu(dy)|^2.
ModelSpec quadratic_model(const ModelParams& p);
/// U = {0, 1}, b = u e_1, sigma = s0 I, f = 0, g = <x_T, e_1>.
ModelSpec controlled_linear_model(const ModelParams& p);
/// U = {-1, 0, 1}, b = theta (mean_t - x_t) + u e_1, f = -u^2 / 2, g = -|x_T - e_1|^2 - |mean_T|^2.
ModelSpec controlled_mean_field_model(const ModelParams& p);

/// Looks up one of the models above by tag:
/// frozen, ou, ou_drift, mean_field_ou, quadratic, controlled_linear, controlled_mean_field.
ModelSpec builtin_model(const std::string& tag, const ModelParams& p);
const std::vector<std::string>& builtin_model_tags();

/// Generator diag(lambda (k+1)^2).
SpectralOperator builtin_generator(const ModelParams& p);

} // namespace pathmkv
