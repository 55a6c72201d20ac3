#include "graphixs/kernels.hpp"

#include "graphixs/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace graphixs {

namespace {

// Real SH constants, bands 0..3.
constexpr double kSH0 = 0.28209479177387814;
constexpr double kSH1 = 0.4886025119029199;
constexpr double kSH2[5] = {1.0925484305920792, -1.0925484305920792,
                            0.31539156525252005, -1.0925484305920792,
                            0.5462742152960396};
constexpr double kSH3[7] = {-0.5900435899266435, 2.890611442640554,
                            -0.4570457994644658, 0.3731763325901154,
                            -0.4570457994644658, 1.445305721320277,
                            -0.5900435899266435};

} // namespace

Mat3 rotation_from_quat(const Vec4& q) {
    const Vec4 qh = q / q.norm();
    const double w = qh[0], x = qh[1], y = qh[2], z = qh[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Mat3 covariance_matrix(const Component& c) {
    const Mat3 r = rotation_from_quat(c.rot);
    const Vec3 d = (2.0 * c.log_scale).array().exp().matrix();
    return r * d.asDiagonal() * r.transpose();
}

double mahalanobis_sq(const Vec3& x, const Vec3& mu, const Vec4& rot,
                      const Vec3& log_scale) {
    for (int k = 0; k < 3; ++k)
        if (std::exp(log_scale[k]) < kScaleFloor)
            throw std::invalid_argument(
                "mahalanobis_sq: degenerate covariance, scale below floor");
    // (x-mu)^T R D^{-1} R^T (x-mu) with D = diag(exp(2*ls)): rotate the
    // offset into the eigenbasis and scale per axis.
    const Mat3 r = rotation_from_quat(rot);
    const Vec3 local = r.transpose() * (x - mu);
    double m = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double s = std::exp(log_scale[k]);
        const double e = local[k] / s;
        m += e * e;
    }
    return m;
}

double kernel_response(KernelKind kind, double msq, double nu, int dims) {
    if (kind == KernelKind::Gaussian) return std::exp(-0.5 * msq);
    return std::pow(1.0 + msq / nu, -0.5 * (nu + dims));
}

double kernel_response_dmsq(KernelKind kind, double msq, double nu, int dims) {
    if (kind == KernelKind::Gaussian) return -0.5 * std::exp(-0.5 * msq);
    return -0.5 * (nu + dims) / nu * std::pow(1.0 + msq / nu, -0.5 * (nu + dims) - 1.0);
}

double kernel_response_dnu(KernelKind kind, double msq, double nu, int dims) {
    if (kind == KernelKind::Gaussian) return 0.0;
    const double base = 1.0 + msq / nu;
    const double resp = std::pow(base, -0.5 * (nu + dims));
    // d/dnu of -((nu+d)/2) * log(1 + m/nu)
    const double dlog = -0.5 * std::log(base) + 0.5 * (nu + dims) * msq / (nu * (nu + msq));
    return resp * dlog;
}

double eval_kernel_3d(KernelKind kind, const Vec3& x, const Component& c,
                      std::optional<double> msq) {
    const double m = msq ? *msq : mahalanobis_sq(x, c.mu, c.rot, c.log_scale);
    return kernel_response(kind, m, c.nu, 3);
}

double temporal_opacity(const Component& c, double t) {
    const double z = (t - c.g) / c.u;
    return c.opacity() * std::exp(-0.5 * z * z);
}

double eval_splat_2d(const Splat2D& s, const Vec2& pixel, KernelKind kind, double nu) {
    const Vec2 d = pixel - s.center;
    const double msq = d.dot(s.cov2d_inv * d);
    return kernel_response(kind, msq, nu, 2);
}

void sh_basis(const Vec3& dir, int degree, double* out) {
    const double x = dir[0], y = dir[1], z = dir[2];
    out[0] = kSH0;
    if (degree < 1) return;
    out[1] = -kSH1 * y;
    out[2] = kSH1 * z;
    out[3] = -kSH1 * x;
    if (degree < 2) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    out[4] = kSH2[0] * x * y;
    out[5] = kSH2[1] * y * z;
    out[6] = kSH2[2] * (2.0 * zz - xx - yy);
    out[7] = kSH2[3] * x * z;
    out[8] = kSH2[4] * (xx - yy);
    if (degree < 3) return;
    out[9] = kSH3[0] * y * (3.0 * xx - yy);
    out[10] = kSH3[1] * x * y * z;
    out[11] = kSH3[2] * y * (4.0 * zz - xx - yy);
    out[12] = kSH3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = kSH3[4] * x * (4.0 * zz - xx - yy);
    out[14] = kSH3[5] * z * (xx - yy);
    out[15] = kSH3[6] * x * (xx - 3.0 * yy);
}

void sh_basis_grad(const Vec3& dir, int degree, Vec3* out) {
    const double x = dir[0], y = dir[1], z = dir[2];
    out[0] = Vec3::Zero();
    if (degree < 1) return;
    out[1] = Vec3(0.0, -kSH1, 0.0);
    out[2] = Vec3(0.0, 0.0, kSH1);
    out[3] = Vec3(-kSH1, 0.0, 0.0);
    if (degree < 2) return;
    out[4] = kSH2[0] * Vec3(y, x, 0.0);
    out[5] = kSH2[1] * Vec3(0.0, z, y);
    out[6] = kSH2[2] * Vec3(-2.0 * x, -2.0 * y, 4.0 * z);
    out[7] = kSH2[3] * Vec3(z, 0.0, x);
    out[8] = kSH2[4] * Vec3(2.0 * x, -2.0 * y, 0.0);
    if (degree < 3) return;
    out[9] = kSH3[0] * Vec3(6.0 * x * y, 3.0 * x * x - 3.0 * y * y, 0.0);
    out[10] = kSH3[1] * Vec3(y * z, x * z, x * y);
    out[11] = kSH3[2] * Vec3(-2.0 * x * y, 4.0 * z * z - x * x - 3.0 * y * y, 8.0 * y * z);
    out[12] = kSH3[3] * Vec3(-6.0 * x * z, -6.0 * y * z, 6.0 * z * z - 3.0 * x * x - 3.0 * y * y);
    out[13] = kSH3[4] * Vec3(4.0 * z * z - 3.0 * x * x - y * y, -2.0 * x * y, 8.0 * x * z);
    out[14] = kSH3[5] * Vec3(2.0 * x * z, -2.0 * y * z, x * x - y * y);
    out[15] = kSH3[6] * Vec3(3.0 * x * x - 3.0 * y * y, -6.0 * x * y, 0.0);
}

Vec3 sh_color(const Component& c, int sh_degree, const Vec3& view_dir) {
    const int n = (sh_degree + 1) * (sh_degree + 1);
    double basis[16];
    sh_basis(view_dir, sh_degree, basis);
    Vec3 rgb = Vec3::Constant(0.5);
    for (int i = 0; i < n && i < static_cast<int>(c.sh.size()); ++i)
        rgb += basis[i] * c.sh[i];
    return rgb.cwiseMax(0.0).cwiseMin(1.0);
}

std::optional<Splat2D> project_component(const Component& c, int sh_degree,
                                         KernelKind kind, const CameraModel& cam,
                                         double t, const RenderConfig& cfg) {
    const Vec3 mu_w = mean_at_time(c, t);
    const Vec3 p_cam = cam.rotation * mu_w + cam.translation;
    if (p_cam.z() <= cfg.near_plane) return std::nullopt;

    const double eff = temporal_opacity(c, t);
    if (eff < cfg.alpha_cutoff) return std::nullopt;

    Splat2D s;
    s.component_index = -1;
    s.depth = p_cam.z();
    s.center = Vec2(cam.fx * p_cam.x() / p_cam.z() + cam.cx,
                    cam.fy * p_cam.y() / p_cam.z() + cam.cy);
    s.eff_opacity = eff;

    // EWA-style linearized projection of the 3D covariance.
    const double z = p_cam.z();
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx / z, 0.0, -cam.fx * p_cam.x() / (z * z),
           0.0, cam.fy / z, -cam.fy * p_cam.y() / (z * z);
    const Eigen::Matrix<double, 2, 3> tmat = jac * cam.rotation;
    s.cov2d = tmat * covariance_matrix(c) * tmat.transpose();
    s.cov2d(0, 0) += kBlurFloor;
    s.cov2d(1, 1) += kBlurFloor;
    s.cov2d_inv = s.cov2d.inverse();

    // Level-set at which eff_opacity * response drops below alpha_cutoff;
    // the tiny inflation keeps the derived screen bounds conservative.
    const double ratio = eff / cfg.alpha_cutoff; // >= 1 here
    double mcut;
    if (kind == KernelKind::Gaussian) {
        mcut = 2.0 * std::log(ratio);
    } else {
        mcut = c.nu * (std::pow(ratio, 2.0 / (c.nu + 2.0)) - 1.0);
    }
    s.cutoff_msq = mcut * (1.0 + 1e-12) + 1e-12;

    const Vec3 cam_center = cam.center();
    Vec3 dir = mu_w - cam_center;
    const double dist = dir.norm();
    dir = dist > 0.0 ? Vec3(dir / dist) : Vec3(0.0, 0.0, 1.0);
    s.color = sh_color(c, sh_degree, dir);

    return s;
}

// ---------------------------------------------------------------------------
// Gradient chains
// ---------------------------------------------------------------------------

void rotation_quat_derivatives(const Vec4& q_hat, Mat3 d_rot[4]) {
    const double w = q_hat[0], x = q_hat[1], y = q_hat[2], z = q_hat[3];
    d_rot[0] << 0, -2 * z, 2 * y,
                2 * z, 0, -2 * x,
                -2 * y, 2 * x, 0;
    d_rot[1] << 0, 2 * y, 2 * z,
                2 * y, -4 * x, -2 * w,
                2 * z, 2 * w, -4 * x;
    d_rot[2] << -4 * y, 2 * x, 2 * w,
                2 * x, 0, 2 * z,
                -2 * w, 2 * z, -4 * y;
    d_rot[3] << -4 * z, -2 * w, 2 * x,
                2 * w, -4 * z, 2 * y,
                2 * x, 2 * y, 0;
}

void accumulate_covariance_grad(const Component& c, const Mat3& d_sigma,
                                Vec4& d_rot, Vec3& d_log_scale) {
    const Mat3 g = 0.5 * (d_sigma + d_sigma.transpose());

    const double qn = c.rot.norm();
    const Vec4 qh = c.rot / qn;
    const Mat3 r = rotation_from_quat(c.rot);
    const Vec3 d2 = (2.0 * c.log_scale).array().exp().matrix();

    // log scales: dSigma/dls_k = 2*exp(2 ls_k) * (R e_k)(R e_k)^T
    const Mat3 rtgr = r.transpose() * g * r;
    for (int k = 0; k < 3; ++k)
        d_log_scale[k] += 2.0 * d2[k] * rtgr(k, k);

    // quaternion: dSigma = dR D R^T + R D dR^T; G symmetric collapses both
    // terms into 2 <G, dR D R^T>.
    Mat3 dr[4];
    rotation_quat_derivatives(qh, dr);
    const Mat3 drt = d2.asDiagonal() * r.transpose();
    Vec4 d_qh;
    for (int i = 0; i < 4; ++i)
        d_qh[i] = 2.0 * (g.cwiseProduct(dr[i] * drt)).sum();

    // chain through normalization q_hat = q / |q|
    const double dot = d_qh.dot(qh);
    d_rot += (d_qh - dot * qh) / qn;
}

void accumulate_temporal_opacity_grad(const Component& c, double t,
                                      double d_eff, double& d_logit,
                                      double& d_g, double& d_u) {
    const double o = c.opacity();
    const double zdiff = (t - c.g) / c.u;
    const double bell = std::exp(-0.5 * zdiff * zdiff);
    const double eff = o * bell;
    d_logit += d_eff * (1.0 - o) * eff;
    d_g += d_eff * eff * (t - c.g) / (c.u * c.u);
    d_u += d_eff * eff * (t - c.g) * (t - c.g) / (c.u * c.u * c.u);
}

} // namespace graphixs
