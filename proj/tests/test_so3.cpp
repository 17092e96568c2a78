#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rotrec/rng.hpp"
#include "rotrec/so3.hpp"

using namespace rotrec;
using namespace rotrec::so3;

namespace {
const Vec3 e1{1, 0, 0}, e2{0, 1, 0}, e3{0, 0, 1};

bool fails_with(const char* code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}
}  // namespace

TEST_CASE("rodrigues basic turns") {
    CHECK(((rodrigues(e3, kPi / 2) * e1) - e2).norm() < 1e-12);
    CHECK((rodrigues(e2, 0.0).matrix() - Mat3::Identity()).norm() < 1e-12);
    CHECK(((rodrigues(e1, kPi) * e2) + e2).norm() < 1e-12);
    CHECK(fails_with("invalid-argument", [] { rodrigues(Vec3{1, 1, 0}, 0.3); }));
}

TEST_CASE("rodrigues satisfies rotation invariants") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto r = rodrigues(rng.unit_vector(), rng.uniform(-7, 7));
        CHECK(r.orthogonality_defect() < 1e-12);
        CHECK(std::abs(r.matrix().determinant() - 1.0) < 1e-12);
    }
}

TEST_CASE("cylindrical examples and canonicalization") {
    auto c = to_cylindrical(Vec3{1, 0, 2});
    CHECK(c.rho == doctest::Approx(1).epsilon(1e-14));
    CHECK(c.phi == doctest::Approx(0).epsilon(1e-14));
    CHECK(c.zeta == doctest::Approx(2).epsilon(1e-14));

    c = to_cylindrical(Vec3{-1, 0, 2});
    CHECK(c.rho == doctest::Approx(-1));
    CHECK(c.phi == doctest::Approx(0));

    c = to_cylindrical(Vec3{0, -3, 1});
    CHECK(c.rho == doctest::Approx(-3));
    CHECK(c.phi == doctest::Approx(kPi / 2));
    CHECK(c.zeta == doctest::Approx(1));

    c = to_cylindrical(Vec3{0, 0, 5});
    CHECK(c.rho == 0);
    CHECK(c.phi == 0);
}

TEST_CASE("cylindrical round trip on 1e4 random vectors") {
    Rng rng(11);
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 v{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        const auto c = to_cylindrical(v);
        REQUIRE(c.phi >= 0);
        REQUIRE(c.phi < kPi);
        worst = std::max(worst, (from_cylindrical(c) - v).norm());
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("angular velocity examples") {
    CHECK((angular_velocity(Rotation::identity(), skew(e3)) - e3).norm() < 1e-14);

    // constant-rate spin about e3
    const double t = 0.7;
    const auto r = rodrigues(e3, t);
    const Mat3 rdot = r.matrix() * skew(e3);
    CHECK((angular_velocity(r, rdot) - e3).norm() < 1e-12);

    // derivative of the Rodrigues formula by a high-order difference oracle
    auto curve = [&](double tt) { return rodrigues(e1, 2 * tt).matrix(); };
    const Mat3 rdot_fd = oracles::matrix_curve_derivative(curve, 0.31, 1e-3);
    const Vec3 w = angular_velocity(rodrigues(e1, 2 * 0.31), rdot_fd);
    CHECK((w - Vec3{2, 0, 0}).norm() < 1e-9);

    CHECK(fails_with("inconsistent-derivative", [] {
        angular_velocity(Rotation::identity(), Mat3::Identity());
    }));
}

TEST_CASE("motion kinematics closed-form and self-convergence") {
    auto om_const = [](double) { return Vec3{0, 0, 1}; };
    auto zero = [](double) { return Vec3::Zero(); };
    const auto grid = uniform_grid(0, kPi / 2, 200);
    const auto traj = motion_kinematics(om_const, zero, grid);
    CHECK((traj.R.back() - rodrigues(e3, kPi / 2).matrix()).norm() < 1e-8);

    const auto still = motion_kinematics(zero, zero, grid);
    for (const auto& r : still.R) CHECK((r - Mat3::Identity()).norm() < 1e-13);

    // self-convergence oracle at 10x finer steps
    auto om = [](double t) { return Vec3{std::sin(t), std::cos(t), 1.0}; };
    auto omd = [](double t) { return Vec3{std::cos(t), -std::sin(t), 0.0}; };
    const auto coarse = motion_kinematics(om, omd, uniform_grid(0, 1, 200));
    const auto fine = motion_kinematics(om, omd, uniform_grid(0, 1, 2000));
    CHECK((coarse.R.back() - fine.R.back()).norm() < 1e-7);
}

TEST_CASE("trajectory derivative identities") {
    auto om = [](double t) { return Vec3{std::sin(t), std::cos(2 * t), 1.0 + 0.1 * t}; };
    auto omd = [](double t) { return Vec3{std::cos(t), -2 * std::sin(2 * t), 0.1}; };
    const auto traj = motion_kinematics(om, omd, uniform_grid(0, 1, 100));
    for (std::size_t i = 0; i < traj.size(); i += 13) {
        CHECK((traj.Rdot[i] - traj.R[i] * skew(traj.omega[i])).norm() < 1e-10);
        const Mat3 expected =
            traj.R[i] * (skew(traj.omega[i]) * skew(traj.omega[i]) + skew(traj.omega_dot[i]));
        CHECK((traj.Rddot[i] - expected).norm() < 1e-10);
    }
}

TEST_CASE("orthogonality holds over 1000+ integration steps") {
    auto om = [](double t) { return Vec3{std::sin(3 * t), 0.5 * std::cos(t), 1.0}; };
    auto omd = [](double t) { return Vec3{3 * std::cos(3 * t), -0.5 * std::sin(t), 0.0}; };
    const auto traj = motion_kinematics(om, omd, uniform_grid(0, 2, 1500));
    double worst = 0;
    for (const auto& r : traj.R)
        worst = std::max(worst, (r.transpose() * r - Mat3::Identity()).norm());
    CHECK(worst < 1e-10);
}

TEST_CASE("vee/hat round trip") {
    Rng rng(5);
    double worst = 0;
    for (int i = 0; i < 300; ++i) {
        const auto r = rodrigues(rng.unit_vector(), rng.uniform(0, 6.3));
        const Vec3 w{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        worst = std::max(worst, (angular_velocity(r, r.matrix() * skew(w)) - w).norm());
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("sigma conjugation") {
    CHECK((sigma_conjugate(Rotation::identity()).matrix() - Mat3::Identity()).norm() == 0);
    CHECK((sigma_velocity(Vec3{1, 2, 3}) - Vec3{-1, -2, 3}).norm() == 0);

    // angular velocity of the conjugated motion is -Sigma omega
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const auto r = rodrigues(rng.unit_vector(), rng.uniform(0, 6));
        const Vec3 w{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const Mat3 rdot = r.matrix() * skew(w);
        Mat3 sig = Mat3::Identity();
        sig(2, 2) = -1;
        const Vec3 w_conj =
            angular_velocity(Rotation::project(sig * r.matrix() * sig), sig * rdot * sig);
        CHECK((w_conj - sigma_velocity(w)).norm() < 1e-12);
    }

    for (int i = 0; i < 20; ++i) {
        const auto r = rodrigues(rng.unit_vector(), rng.uniform(0, 6));
        CHECK((sigma_conjugate(sigma_conjugate(r)).matrix() - r.matrix()).norm() < 1e-14);
    }
}

TEST_CASE("nondegeneracy certificate") {
    // degenerate family: rotation about a fixed axis orthogonal to e3
    ScalarC2 alpha{[](double t) { return 0.8 * t; }, [](double) { return 0.8; },
                   [](double) { return 0.0; }};
    ScalarC2 beta{[](double t) { return 1.5 * t; }, [](double) { return 1.5; },
                  [](double) { return 0.0; }};
    AxisCompositeMotion deg(e1, alpha, beta, 0, 1);
    const auto traj = deg.sample(uniform_grid(0, 1, 20));
    for (std::size_t i = 0; i < traj.size(); i += 5) {
        const auto cert = nondegeneracy_certificate(traj, i);
        CHECK(std::abs(cert.det) < 1e-12);
        CHECK(std::abs(cert.cyl) < 1e-12);
    }

    // omega = (1,0,1), omega' = 0: det = rho^2 (zeta + phi') = 1
    auto om = [](double) { return Vec3{1, 0, 1}; };
    auto omd = [](double) { return Vec3::Zero(); };
    const auto t2 = motion_kinematics(om, omd, uniform_grid(0, 1, 50));
    const auto cert = nondegeneracy_certificate(t2, 25);
    CHECK(cert.det == doctest::Approx(1.0).epsilon(1e-9));

    // rho = 0 motions are degenerate
    auto om3 = [](double) { return Vec3{0, 0, 2.0}; };
    const auto t3 = motion_kinematics(om3, omd, uniform_grid(0, 1, 20));
    CHECK(std::abs(nondegeneracy_certificate(t3, 10).det) < 1e-14);

    MotionTrajectory empty;
    empty.times = {0.0};
    empty.R = {Mat3::Identity()};
    CHECK_THROWS_AS((void)nondegeneracy_certificate(empty, 0), Error);
}

TEST_CASE("nondegeneracy identity on random analytic motions") {
    Rng rng(13);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 a{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const Vec3 b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double f = rng.uniform(0.5, 3.0);
        auto om = [=](double t) { return Vec3(a + std::sin(f * t) * b); };
        auto omd = [=](double t) { return Vec3(f * std::cos(f * t) * b); };
        const auto traj = motion_kinematics(om, omd, uniform_grid(0, 0.9, 40));
        for (std::size_t i = 0; i < traj.size(); i += 13) {
            const auto cert = nondegeneracy_certificate(traj, i);
            const double scale =
                1.0 + std::pow(traj.omega[i].norm(), 3) + traj.omega_dot[i].norm();
            worst = std::max(worst, std::abs(cert.det - cert.cyl) / scale);
        }
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("analytic omega motion evaluates consistently off the cache grid") {
    auto om = [](double t) { return Vec3{std::sin(t), std::cos(t), 1.0}; };
    auto omd = [](double t) { return Vec3{std::cos(t), -std::sin(t), 0.0}; };
    AnalyticOmegaMotion motion(om, omd, 0, 1, 500);
    const auto ref = motion_kinematics(om, omd, uniform_grid(0, 1, 5000));
    for (double t : {0.1234, 0.5001, 0.99}) {
        const std::size_t idx = static_cast<std::size_t>(std::round(t * 4999));
        CHECK((motion.R(ref.times[idx]).matrix() - ref.R[idx]).norm() < 1e-9);
        (void)t;
    }
}

TEST_CASE("axis composite motion derivatives match difference oracles") {
    ScalarC2 alpha{[](double t) { return 0.8 * t + 0.05 * t * t; },
                   [](double t) { return 0.8 + 0.1 * t; }, [](double) { return 0.1; }};
    ScalarC2 beta{[](double t) { return 1.5 * t + 0.2 * std::sin(t); },
                  [](double t) { return 1.5 + 0.2 * std::cos(t); },
                  [](double t) { return -0.2 * std::sin(t); }};
    AxisCompositeMotion m(e1, alpha, beta, 0, 1);
    auto curve = [&](double t) { return m.R(t).matrix(); };
    for (double t : {0.2, 0.55, 0.8}) {
        const Mat3 rd_fd = oracles::matrix_curve_derivative(curve, t, 1e-4);
        CHECK((m.Rdot(t) - rd_fd).norm() < 1e-9);
        auto dcurve = [&](double tt) { return m.Rdot(tt); };
        const Mat3 rdd_fd = oracles::matrix_curve_derivative(dcurve, t, 1e-4);
        CHECK((m.Rddot(t) - rdd_fd).norm() < 1e-9);
        const Vec3 w = angular_velocity(m.R(t), m.Rdot(t));
        CHECK((w - m.omega(t)).norm() < 1e-10);
        const Vec3 wd_fd = (m.omega(t + 1e-4) - m.omega(t - 1e-4)) / 2e-4;
        CHECK((m.omega_dot(t) - wd_fd).norm() < 1e-7);
    }
}

TEST_CASE("step-too-large guard") {
    auto om = [](double) { return Vec3{0, 0, 120.0}; };
    auto zero = [](double) { return Vec3::Zero(); };
    CHECK(fails_with("step-too-large",
                     [&] { motion_kinematics(om, zero, uniform_grid(0, 1, 3)); }));
}
