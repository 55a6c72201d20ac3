/// @file kernels.hpp
/// @brief Splat primitive evaluation: 3D kernels, temporal opacity, EWA-style
/// projection to screen space, and view-dependent spherical-harmonic color.
///
/// Every function here is pure over immutable inputs. Gradient helpers for
/// the factored covariance and the quaternion map live here too because both
/// the renderer backward and the confidence backward chain through them.

#pragma once

#include "graphixs/types.hpp"

#include <optional>

namespace graphixs {

/// A component projected onto the image plane of one camera at one time.
struct Splat2D {
    Vec2 center = Vec2::Zero();      // pixels
    Mat2 cov2d = Mat2::Identity();   // pixels^2, includes the blur floor
    double depth = 0.0;              // camera-frame z
    Vec3 color = Vec3::Zero();       // view-dependent rgb in [0,1]
    double eff_opacity = 0.0;        // temporal opacity at the render time
    int component_index = -1;

    Mat2 cov2d_inv = Mat2::Identity();
    double cutoff_msq = 0.0; // Mahalanobis^2 beyond which alpha < alpha_cutoff
};

struct RenderConfig {
    double near_plane = 0.01;
    double alpha_cutoff = 1.0 / 255.0;
    Vec3 background = Vec3::Zero();
    int tile_size = 16;
};

// Anti-aliasing floor added to the projected covariance diagonal, pixels^2.
inline constexpr double kBlurFloor = 0.3;
// Scale floor; anything below signals a degenerate component.
inline constexpr double kScaleFloor = 1e-6;

/// Rotation matrix of a quaternion (w,x,y,z); normalizes internally.
Mat3 rotation_from_quat(const Vec4& q);

/// Sigma = R * diag(exp(2*log_scale)) * R^T.
Mat3 covariance_matrix(const Component& c);

/// (x-mu)^T Sigma^{-1} (x-mu) using the factored covariance. Throws when any
/// scale sits below the floor.
double mahalanobis_sq(const Vec3& x, const Vec3& mu, const Vec4& rot,
                      const Vec3& log_scale);

/// Unnormalized kernel response in (0,1], equal to 1 at the mean.
/// Gaussian: exp(-m/2). StudentT in d dims: (1 + m/nu)^{-(nu+d)/2}.
double kernel_response(KernelKind kind, double msq, double nu, int dims);

/// d(response)/d(msq) at fixed nu.
double kernel_response_dmsq(KernelKind kind, double msq, double nu, int dims);

/// d(response)/d(nu) at fixed msq; zero for Gaussian.
double kernel_response_dnu(KernelKind kind, double msq, double nu, int dims);

/// 3D response of a component at point x and time-independent shape. The
/// optional precomputed Mahalanobis^2 skips the quadratic form.
double eval_kernel_3d(KernelKind kind, const Vec3& x, const Component& c,
                      std::optional<double> msq = std::nullopt);

/// o_eff(t) = o * exp(-((t-g)/u)^2 / 2).
double temporal_opacity(const Component& c, double t);

/// 2D response of a projected splat at a pixel.
double eval_splat_2d(const Splat2D& s, const Vec2& pixel, KernelKind kind, double nu);

/// View-dependent color: clamp(0.5 + sum_lm Y_lm(dir) * sh_lm, 0, 1).
Vec3 sh_color(const Component& c, int sh_degree, const Vec3& view_dir);

/// Real SH basis values for degrees 0..3 at a unit direction; fills the
/// first (degree+1)^2 entries.
void sh_basis(const Vec3& dir, int degree, double* out);

/// Gradients of each basis value w.r.t. the direction components.
void sh_basis_grad(const Vec3& dir, int degree, Vec3* out);

/// Projects one component onto a camera at time t. Returns nullopt when the
/// splat is culled: depth <= near plane or eff_opacity < alpha_cutoff.
/// cutoff_msq is the response level-set matching alpha_cutoff, used by the
/// renderer for exact screen-bound culling.
std::optional<Splat2D> project_component(const Component& c, int sh_degree,
                                         KernelKind kind, const CameraModel& cam,
                                         double t, const RenderConfig& cfg);

// ---------------------------------------------------------------------------
// Gradient chains shared by the renderer and objective backward passes
// ---------------------------------------------------------------------------

/// d(rotation)/d(q_hat) for each normalized quaternion component.
void rotation_quat_derivatives(const Vec4& q_hat, Mat3 d_rot[4]);

/// Chains a symmetric dL/dSigma into the factored parameters, accumulating
/// into d_rot (w.r.t. the stored, unnormalized quaternion) and d_log_scale.
void accumulate_covariance_grad(const Component& c, const Mat3& d_sigma,
                                Vec4& d_rot, Vec3& d_log_scale);

/// Chains dL/do_eff into (opacity_logit, g, u) at time t.
void accumulate_temporal_opacity_grad(const Component& c, double t,
                                      double d_eff, double& d_logit,
                                      double& d_g, double& d_u);

} // namespace graphixs
