/// @file dynamics.hpp
/// @brief Component motion in time: the quartic motion polynomial anchored at
/// the appearance time, and the Brownian position perturbation used as
/// exploration noise during training.

#pragma once

#include "graphixs/types.hpp"

#include <random>
#include <vector>

namespace graphixs {

/// mu(t) = mu + v*d + a*d^2/2 + j*d^3/6 + s*d^4/24 with d = t - g.
inline Vec3 mean_at_time(const Component& c, double t) {
    const double d = t - c.g;
    return c.mu + d * (c.v + d * (0.5 * c.a + d * ((1.0 / 6.0) * c.j +
                                                   d * (1.0 / 24.0) * c.s)));
}

/// Polynomial weights of the mean w.r.t. (mu, v, a, j, s) at offset d = t - g,
/// plus the derivative of the mean w.r.t. g. Shared by every backward pass
/// that chains a position gradient down to the motion parameters.
struct MeanJacobian {
    double w_mu = 1.0;
    double w_v = 0.0;
    double w_a = 0.0;
    double w_j = 0.0;
    double w_s = 0.0;
    Vec3 d_g = Vec3::Zero(); // dmu(t)/dg
};

inline MeanJacobian mean_jacobian(const Component& c, double t) {
    const double d = t - c.g;
    MeanJacobian jac;
    jac.w_v = d;
    jac.w_a = 0.5 * d * d;
    jac.w_j = d * d * d / 6.0;
    jac.w_s = d * d * d * d / 24.0;
    // d/dg flips sign through d = t - g
    jac.d_g = -(c.v + d * (c.a + d * (0.5 * c.j + d * (1.0 / 6.0) * c.s)));
    return jac;
}

/// Accumulates an upstream position gradient into the motion parameters of
/// `grad_*` using the chain above.
struct MotionGrad {
    Vec3 mu = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 a = Vec3::Zero();
    Vec3 j = Vec3::Zero();
    Vec3 s = Vec3::Zero();
    double g = 0.0;
};

inline void accumulate_mean_grad(const MeanJacobian& jac, const Vec3& d_mean,
                                 MotionGrad& out) {
    out.mu += d_mean;
    out.v += jac.w_v * d_mean;
    out.a += jac.w_a * d_mean;
    out.j += jac.w_j * d_mean;
    out.s += jac.w_s * d_mean;
    out.g += jac.d_g.dot(d_mean);
}

/// Adds an independent N(0, (eps*dt)^2 I) draw to every position. eps = 0 is
/// the identity. Draws are sequenced in input order, so a fixed seed gives
/// identical output.
void brownian_perturb(std::vector<Vec3>& positions, double eps, double dt,
                      std::mt19937_64& rng);

} // namespace graphixs
