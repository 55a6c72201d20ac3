#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graphixs/dynamics.hpp"
#include "graphixs/kernels.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace graphixs;

TEST_CASE("mahalanobis_sq with identity and diagonal covariances") {
    Component c;
    c.log_scale = Vec3::Zero(); // identity covariance
    CHECK(mahalanobis_sq(Vec3(1, 2, 2), Vec3::Zero(), c.rot, c.log_scale) ==
          doctest::Approx(9.0).epsilon(1e-12));

    c.log_scale = Vec3(std::log(2.0), 0.0, 0.0); // Sigma = diag(4,1,1)
    CHECK(mahalanobis_sq(Vec3(2, 0, 0), Vec3::Zero(), c.rot, c.log_scale) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mahalanobis_sq matches the dense-inverse oracle") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const Component c = oracles::random_component(rng);
        const Vec3 x = c.mu + Vec3(oracles::random_component(rng).mu);
        const double fast = mahalanobis_sq(x, c.mu, c.rot, c.log_scale);
        const double slow = oracles::mahalanobis_oracle(x, c.mu, c);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
    }
}

TEST_CASE("mahalanobis_sq rejects degenerate covariances") {
    Component c;
    c.log_scale[1] = std::log(1e-7);
    CHECK_THROWS(mahalanobis_sq(Vec3::Ones(), Vec3::Zero(), c.rot, c.log_scale));
}

TEST_CASE("eval_kernel_3d peaks at one and matches the stated forms") {
    Component c;
    CHECK(eval_kernel_3d(KernelKind::Gaussian, c.mu, c) == doctest::Approx(1.0));
    CHECK(eval_kernel_3d(KernelKind::StudentT, c.mu, c) == doctest::Approx(1.0));

    CHECK(kernel_response(KernelKind::Gaussian, 2.0, 1e6, 3) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(kernel_response(KernelKind::StudentT, 4.0, 4.0, 3) ==
          doctest::Approx(std::pow(2.0, -3.5)).epsilon(1e-12));
}

TEST_CASE("student-t approaches the gaussian as nu grows") {
    for (int dims : {2, 3}) {
        double worst = 0.0;
        for (double m = 0.0; m <= 25.0; m += 0.05) {
            const double g = kernel_response(KernelKind::Gaussian, m, 1e6, dims);
            const double t = kernel_response(KernelKind::StudentT, m, 1e6, dims);
            worst = std::max(worst, std::abs(g - t));
        }
        CHECK(worst <= 1e-3);
    }
}

TEST_CASE("eval_kernel_3d is invariant under joint rotation") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Component c = oracles::random_component(rng);
        const Vec3 x = c.mu + 0.3 * Vec3(n(rng), n(rng), n(rng));
        const double before = eval_kernel_3d(KernelKind::Gaussian, x, c);

        // rotate offset and covariance factor together
        Vec4 qr(n(rng), n(rng), n(rng), n(rng));
        qr /= qr.norm();
        const Mat3 rot = rotation_from_quat(qr);
        Component rotated = c;
        rotated.mu = rot * c.mu;
        // compose quaternions: q_total = qr * c.rot
        const double w1 = qr[0], x1 = qr[1], y1 = qr[2], z1 = qr[3];
        const double w2 = c.rot[0], x2 = c.rot[1], y2 = c.rot[2], z2 = c.rot[3];
        rotated.rot = Vec4(w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                           w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                           w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                           w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2);
        const double after = eval_kernel_3d(KernelKind::Gaussian, rot * x, rotated);
        CHECK(after == doctest::Approx(before).epsilon(1e-10));
    }
}

TEST_CASE("temporal_opacity follows the squared-offset bell") {
    Component c;
    c.opacity_logit = logit(0.7);
    c.g = 0.4;
    c.u = 0.25;
    CHECK(temporal_opacity(c, c.g) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(temporal_opacity(c, c.g + c.u) ==
          doctest::Approx(0.7 * std::exp(-0.5)).epsilon(1e-12));
    c.u = 1e9;
    CHECK(temporal_opacity(c, 123.0) == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("project_component hits the principal point on axis") {
    CameraModel cam;
    cam.fx = cam.fy = 100.0;
    cam.cx = cam.cy = 32.0;
    cam.width = cam.height = 64;

    Component c;
    c.mu = Vec3(0, 0, 5);
    c.opacity_logit = logit(0.9);
    c.u = 10.0;

    RenderConfig cfg;
    const auto s = project_component(c, 0, KernelKind::Gaussian, cam, 0.0, cfg);
    REQUIRE(s.has_value());
    CHECK(s->center.x() == doctest::Approx(32.0).epsilon(1e-12));
    CHECK(s->center.y() == doctest::Approx(32.0).epsilon(1e-12));
    CHECK(s->depth == doctest::Approx(5.0));

    // Sigma = (0.5)^2 I projects to about (f sigma / z)^2 = 100 px^2
    Component wide = c;
    wide.log_scale = Vec3::Constant(std::log(0.5));
    const auto s2 = project_component(wide, 0, KernelKind::Gaussian, cam, 0.0, cfg);
    REQUIRE(s2.has_value());
    CHECK(s2->cov2d(0, 0) - kBlurFloor == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(s2->cov2d(1, 1) - kBlurFloor == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("project_component culls behind the camera and below the cutoff") {
    CameraModel cam = oracles::lookat_camera(0, Vec3(0, 0, 3), 64);
    RenderConfig cfg;

    Component behind;
    behind.mu = Vec3(0, 0, 10); // beyond the camera, looking at origin from z=3
    CHECK(!project_component(behind, 0, KernelKind::Gaussian, cam, 0.0, cfg).has_value());

    Component faint;
    faint.opacity_logit = logit(0.001);
    CHECK(!project_component(faint, 0, KernelKind::Gaussian, cam, 0.0, cfg).has_value());
}

TEST_CASE("projected covariance matches a finite-difference jacobian oracle") {
    std::mt19937_64 rng(23);
    RenderConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const CameraModel cam = oracles::random_camera(rng, 0, 64);
        Component c = oracles::random_component(rng, false);
        c.opacity_logit = 2.0;
        c.u = 50.0;

        const auto s = project_component(c, 0, KernelKind::Gaussian, cam, 0.0, cfg);
        if (!s) continue;

        // numerical Jacobian of the projection map at mu
        const double h = 1e-6;
        Eigen::Matrix<double, 2, 3> jac_fd;
        for (int k = 0; k < 3; ++k) {
            Vec3 hi = c.mu, lo = c.mu;
            hi[k] += h;
            lo[k] -= h;
            auto proj = [&](const Vec3& p) {
                const Vec3 pc = cam.rotation * p + cam.translation;
                return Vec2(cam.fx * pc.x() / pc.z() + cam.cx,
                            cam.fy * pc.y() / pc.z() + cam.cy);
            };
            jac_fd.col(k) = (proj(hi) - proj(lo)) / (2.0 * h);
        }
        const Mat2 expected =
            jac_fd * oracles::covariance_oracle(c) * jac_fd.transpose() +
            kBlurFloor * Mat2::Identity();
        for (int r = 0; r < 2; ++r)
            for (int cidx = 0; cidx < 2; ++cidx)
                CHECK(s->cov2d(r, cidx) ==
                      doctest::Approx(expected(r, cidx)).epsilon(1e-5));
    }
}

TEST_CASE("eval_splat_2d peaks at the center and matches a dense 2x2 inverse") {
    Splat2D s;
    s.center = Vec2(10, 10);
    s.cov2d = Mat2::Identity();
    s.cov2d_inv = Mat2::Identity();
    CHECK(eval_splat_2d(s, s.center, KernelKind::Gaussian, 1e6) == doctest::Approx(1.0));
    CHECK(eval_splat_2d(s, Vec2(11, 11), KernelKind::Gaussian, 1e6) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = u(rng), b = u(rng), corr = 0.8 * (u(rng) - 1.1);
        Mat2 cov;
        cov << a, corr * std::sqrt(a * b), corr * std::sqrt(a * b), b;
        Splat2D r;
        r.center = Vec2(n(rng), n(rng));
        r.cov2d = cov;
        r.cov2d_inv = cov.inverse();
        const Vec2 pix = r.center + Vec2(n(rng), n(rng));

        const Vec2 d = pix - r.center;
        const double msq = d.dot(cov.fullPivLu().inverse() * d);
        CHECK(eval_splat_2d(r, pix, KernelKind::Gaussian, 1e6) ==
              doctest::Approx(std::exp(-0.5 * msq)).epsilon(1e-12));
    }
}

TEST_CASE("lowering the alpha cutoff never culls a splat a higher cutoff kept") {
    std::mt19937_64 rng(61);
    RenderConfig strict, loose;
    strict.alpha_cutoff = 1.0 / 64.0;
    loose.alpha_cutoff = 1.0 / 255.0;
    int kept_strict = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Component c = oracles::random_component(rng);
        const CameraModel cam = oracles::random_camera(rng, 0, 32);
        const bool strict_keeps =
            project_component(c, 1, KernelKind::Gaussian, cam, 0.2, strict).has_value();
        const bool loose_keeps =
            project_component(c, 1, KernelKind::Gaussian, cam, 0.2, loose).has_value();
        if (strict_keeps) {
            CHECK(loose_keeps);
            ++kept_strict;
        }
    }
    CHECK(kept_strict > 0);
}

TEST_CASE("sh_color constant band and degree-1 parity") {
    Component c;
    c.sh.assign(4, Vec3::Zero());
    CHECK(sh_color(c, 0, Vec3(0, 0, 1)) == Vec3(0.5, 0.5, 0.5));

    // degree-1-only coefficients: negating the direction reflects the color
    // about the constant 0.5 before clamping
    c.sh[1] = Vec3(0.1, 0.0, 0.0);
    c.sh[2] = Vec3(0.0, 0.2, -0.1);
    c.sh[3] = Vec3(0.05, -0.05, 0.0);
    std::mt19937_64 rng(41);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vec3 dir(n(rng), n(rng), n(rng));
        dir.normalize();
        const Vec3 plus = sh_color(c, 1, dir);
        const Vec3 minus = sh_color(c, 1, -dir);
        for (int ch = 0; ch < 3; ++ch)
            CHECK(plus[ch] - 0.5 == doctest::Approx(0.5 - minus[ch]).epsilon(1e-10));
    }
}

TEST_CASE("sh_basis matches the tabulated polynomial oracle") {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vec3 dir(n(rng), n(rng), n(rng));
        dir.normalize();
        for (int degree = 0; degree <= 3; ++degree) {
            double basis[16];
            sh_basis(dir, degree, basis);
            const auto expected = oracles::sh_table_oracle(dir, degree);
            for (std::size_t i = 0; i < expected.size(); ++i)
                CHECK(basis[i] == doctest::Approx(expected[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("sh_basis_grad matches finite differences") {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> n(0.0, 1.0);
    const double h = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
        Vec3 dir(n(rng), n(rng), n(rng));
        dir.normalize();
        Vec3 grads[16];
        sh_basis_grad(dir, 3, grads);
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 hi = dir, lo = dir;
            hi[axis] += h;
            lo[axis] -= h;
            double bhi[16], blo[16];
            sh_basis(hi, 3, bhi);
            sh_basis(lo, 3, blo);
            for (int i = 0; i < 16; ++i)
                CHECK(grads[i][axis] ==
                      doctest::Approx((bhi[i] - blo[i]) / (2 * h)).epsilon(1e-5));
        }
    }
}

TEST_CASE("covariance gradient chain matches finite differences") {
    std::mt19937_64 rng(53);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        Component c = oracles::random_component(rng);
        Mat3 w;
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 3; ++k) w(r, k) = n(rng);
        const Mat3 wsym = 0.5 * (w + w.transpose());
        auto f = [&](const Component& comp) {
            return (wsym.cwiseProduct(covariance_matrix(comp))).sum();
        };

        Vec4 d_rot = Vec4::Zero();
        Vec3 d_ls = Vec3::Zero();
        accumulate_covariance_grad(c, wsym, d_rot, d_ls);

        const double h = 1e-6;
        for (int k = 0; k < 4; ++k) {
            Component hi = c, lo = c;
            hi.rot[k] += h;
            lo.rot[k] -= h;
            const double fd = (f(hi) - f(lo)) / (2 * h);
            CHECK(d_rot[k] == doctest::Approx(fd).epsilon(1e-5));
        }
        for (int k = 0; k < 3; ++k) {
            Component hi = c, lo = c;
            hi.log_scale[k] += h;
            lo.log_scale[k] -= h;
            const double fd = (f(hi) - f(lo)) / (2 * h);
            CHECK(d_ls[k] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}
