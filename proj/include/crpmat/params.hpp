#pragma once

// Model parameters of the two-parameter Chinese restaurant process.

#include <cmath>
#include <stdexcept>
#include <string>

namespace crpmat {

enum class Variant { alpha_theta, zero_theta };

struct ModelParams {
  double alpha = 0.0;
  double theta = 1.0;
  Variant variant = Variant::zero_theta;
};

// Validates (alpha, theta). alpha in (0,1) requires theta > -alpha;
// alpha == 0 requires theta > 0 (Ewens case).
inline ModelParams make_params(double alpha, double theta) {
  if (!std::isfinite(alpha) || !std::isfinite(theta))
    throw std::invalid_argument("make_params: non-finite parameter");
  if (alpha < 0.0 || alpha >= 1.0)
    throw std::invalid_argument("make_params: alpha must lie in [0,1)");
  if (alpha == 0.0) {
    if (theta <= 0.0)
      throw std::invalid_argument("make_params: alpha = 0 requires theta > 0");
    return ModelParams{0.0, theta, Variant::zero_theta};
  }
  if (theta <= -alpha)
    throw std::invalid_argument("make_params: requires theta > -alpha");
  return ModelParams{alpha, theta, Variant::alpha_theta};
}

inline std::string variant_name(Variant v) {
  return v == Variant::alpha_theta ? "alpha_theta" : "zero_theta";
}

}  // namespace crpmat
