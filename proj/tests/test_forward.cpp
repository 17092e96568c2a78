#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rotrec/experiment.hpp"
#include "rotrec/forward.hpp"
#include "rotrec/rng.hpp"
#include "rotrec/verify.hpp"

using namespace rotrec;
using namespace rotrec::forward;

namespace {

bool fails_with(const char* code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

std::shared_ptr<phantom::Phantom> demo_phantom(std::uint64_t seed, double sigma = 0.05) {
    const auto pts =
        pointset::generate_asymmetric_pointset(8, seed, pointset::ball_placement(0.55));
    return std::make_shared<phantom::Phantom>(
        phantom::phantom_from_pointset(pts, {phantom::BlobProfile::Kind::Gaussian, sigma}, 1.0));
}

std::shared_ptr<so3::MotionModel> demo_motion() {
    experiment::MotionSpec spec;
    spec.omega[0].poly = {0.6};
    spec.omega[0].trig = {{0.2, 2.1, 0.3}};
    spec.omega[1].poly = {0.3};
    spec.omega[1].trig = {{0.15, 1.7, kPi / 2}};
    spec.omega[2].poly = {1.0};
    spec.omega[2].trig = {{0.25, 1.3, 1.0}};
    spec.t_end = 1.0;
    spec.n_steps = 50;
    return experiment::build_motion(spec);
}

ModelConfig dt_config() {
    ModelConfig cfg;
    cfg.model = pointset::Model::DT;
    cfg.k0 = 20.0;
    cfg.samples = default_samples(cfg.model, cfg.k0, 14);
    return cfg;
}

ModelConfig pb_config() {
    ModelConfig cfg;
    cfg.model = pointset::Model::PB;
    cfg.samples = default_samples(cfg.model, 12.0, 14);
    return cfg;
}

}  // namespace

TEST_CASE("radial object: measurement independent of time") {
    pointset::PointSet single{Vec3::Zero()};
    auto ph = std::make_shared<phantom::Phantom>(
        phantom::Phantom(single, {1.0}, {phantom::BlobProfile::Kind::Gaussian, 0.1}, 1.0));
    auto motion = demo_motion();
    const auto cfg = dt_config();
    const Vec2 k{3.0, -4.0};
    const cplx v0 = measure(*ph, motion->R(0.0), cfg, k);
    for (double t : {0.25, 0.5, 0.99})
        CHECK(std::abs(measure(*ph, motion->R(t), cfg, k) - v0) < 1e-13);
}

TEST_CASE("PB data cannot see the sigma conjugation") {
    auto ph = demo_phantom(31);
    auto motion = demo_motion();
    const auto cfg = pb_config();
    Mat3 sig = Mat3::Identity();
    sig(2, 2) = -1;

    // phantom points reflected by sigma realize f o Sigma (radial blobs)
    pointset::PointSet refl;
    for (const auto& p : ph->points()) refl.push_back(sig * p);
    phantom::Phantom ph_sigma(refl, ph->weights(), ph->profile(), ph->support_radius());

    Rng rng(5);
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
        const double t = rng.uniform(0, 1);
        const Vec2 k{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        const auto R = motion->R(t);
        const auto Rc = so3::Rotation::project(sig * R.matrix() * sig);
        worst = std::max(worst,
                         std::abs(measure(*ph, R, cfg, k) - measure(ph_sigma, Rc, cfg, k)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("Fourier slice theorem against line-integral quadrature") {
    auto ph = demo_phantom(33, 0.06);
    auto motion = demo_motion();
    const auto cfg = pb_config();
    const auto R = motion->R(0.37);
    double worst = 0;
    for (const Vec2& k : {Vec2{2.0, 1.0}, Vec2{-4.0, 3.0}}) {
        const cplx direct = measure(*ph, R, cfg, k);
        const cplx oracle =
            oracles::fourier_slice_quadrature(*ph, R.matrix(), k, 64);
        worst = std::max(worst, std::abs(direct - oracle) / std::abs(direct));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("DT out-of-band frequencies are rejected") {
    auto ph = demo_phantom(31);
    const auto cfg = dt_config();
    CHECK(fails_with("out-of-band", [&] {
        measure(*ph, so3::Rotation::identity(), cfg, Vec2{25.0, 0.0});
    }));
}

TEST_CASE("static motion has vanishing time-derivative jets") {
    auto ph = demo_phantom(35);
    auto zero = [](double) { return Vec3::Zero(); };
    auto motion = std::make_shared<so3::AnalyticOmegaMotion>(zero, zero, 0.0, 1.0, 10);
    const auto cfg = pb_config();
    const auto jet = analytic_jet(*ph, *motion, cfg, 0.5, Vec2{3.0, 1.0}, JetAll);
    CHECK(std::abs(jet.dt) == 0.0);
    CHECK(jet.dt_grad_k.norm() == 0.0);
    CHECK(jet.dtt_grad_k.norm() == 0.0);
    CHECK(jet.dt_hess_k.norm() == 0.0);
}

TEST_CASE("PB slice gradient equals the pushed-through spectral gradient") {
    auto ph = demo_phantom(37);
    auto motion = demo_motion();
    const auto cfg = pb_config();
    const double t = 0.4;
    const Vec2 k{2.5, -1.0};
    const auto jet = analytic_jet(*ph, *motion, cfg, t, k, JetGradK);
    const Mat3 R = motion->R(t).matrix();
    const auto sd = ph->eval(R * lift2(k), 1);
    for (int j = 0; j < 2; ++j) {
        cplx expected = 0;
        const Vec3 col = R * lift2(j == 0 ? Vec2{1, 0} : Vec2{0, 1});
        for (int i = 0; i < 3; ++i) expected += sd.grad(i) * col(i);
        CHECK(std::abs(jet.grad_k(j) - expected) < 1e-14);
    }
}

TEST_CASE("analytic jets agree with finite-difference jets") {
    auto ph = demo_phantom(39);
    auto motion = demo_motion();
    for (auto base : {dt_config(), pb_config()}) {
        base.fd_dt = 1e-4;
        base.fd_dk = 1e-3;
        const auto grid = so3::uniform_grid(0, 1, 20);
        AnalyticJetProvider aj(ph, motion, base, grid);
        FdJetProvider fj(ph, motion, base, grid);
        Rng rng(7);
        double worst = 0;
        for (int trial = 0; trial < 5; ++trial) {
            const auto ti = static_cast<std::size_t>(rng.uniform() * grid.size());
            const Vec2 k{rng.uniform(-8, 8), rng.uniform(-8, 8)};
            const auto a = aj.jet(ti, k, JetAll);
            const auto f = fj.jet(ti, k, JetAll);
            const double s = std::max({std::abs(a.value), a.grad_k.norm(), std::abs(a.dt),
                                       a.hess_k.norm(), a.dt_grad_k.norm(),
                                       a.dtt_grad_k.norm()});
            auto cmp = [&](cplx x, cplx y) {
                worst = std::max(worst, std::abs(x - y) / s);
            };
            cmp(a.value, f.value);
            cmp(a.dt, f.dt);
            for (int i = 0; i < 2; ++i) {
                cmp(a.grad_k(i), f.grad_k(i));
                cmp(a.dt_grad_k(i), f.dt_grad_k(i));
                cmp(a.dtt_grad_k(i), f.dtt_grad_k(i));
                for (int j = 0; j < 2; ++j) {
                    cmp(a.hess_k(i, j), f.hess_k(i, j));
                    cmp(a.dt_hess_k(i, j), f.dt_hess_k(i, j));
                    for (int l = 0; l < 2; ++l) cmp(a.third(i, j, l), f.third(i, j, l));
                }
            }
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("hermitian symmetry of PB data") {
    auto ph = demo_phantom(41);
    auto motion = demo_motion();
    const auto cfg = pb_config();
    Rng rng(3);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const auto R = motion->R(rng.uniform(0, 1));
        const Vec2 k{rng.uniform(-9, 9), rng.uniform(-9, 9)};
        worst = std::max(worst, std::abs(measure(*ph, R, cfg, k) -
                                         std::conj(measure(*ph, R, cfg, -k))));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("DT origin sample is static") {
    auto ph = demo_phantom(43);
    auto motion = demo_motion();
    const auto cfg = dt_config();
    const cplx f0 = ph->eval(Vec3::Zero(), 0).value;
    const auto grid = so3::uniform_grid(0, 1, 10);
    AnalyticJetProvider jets(ph, motion, cfg, grid);
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
        const auto j = jets.jet(ti, Vec2::Zero(), JetValue | JetDt);
        CHECK(std::abs(j.value - f0) < 1e-14);
        CHECK(std::abs(j.dt) < 1e-14);
    }
}

TEST_CASE("common line identity") {
    auto ph = demo_phantom(45);
    auto motion = demo_motion();
    const auto grid = so3::uniform_grid(0, 1, 30);
    const auto traj = motion->sample(grid);
    const auto lambdas = default_samples(pointset::Model::PB, 9.0, 9);
    Rng rng(11);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = static_cast<std::size_t>(rng.uniform() * grid.size());
        auto t = static_cast<std::size_t>(rng.uniform() * grid.size());
        if (t == s) t = (t + 7) % grid.size();
        worst = std::max(worst, verify_common_line(*ph, traj, s, t, lambdas));
    }
    CHECK(worst < 1e-12);

    CHECK(fails_with("degenerate-pair",
                     [&] { verify_common_line(*ph, traj, 3, 3, lambdas); }));

    // interpolated variant stays within the interpolation budget
    double max_m = 0;
    for (double lam : lambdas)
        max_m = std::max(max_m, std::abs(measure(*ph, so3::Rotation::project(traj.R[4]),
                                                 pb_config(), Vec2{lam, 0})));
    const double dev =
        verify_common_line_interpolated(*ph, traj, 4, 19, lambdas, 128, 12.0);
    CHECK(dev < 1e-4 * std::max(max_m, ph->eval(Vec3::Zero(), 0).value.real()));
}

TEST_CASE("measurement synthesis and noise") {
    auto ph = demo_phantom(47);
    auto motion = demo_motion();
    auto cfg = dt_config();
    cfg.phi_lines = 16;
    const auto grid = so3::uniform_grid(0, 1, 8);
    const auto ms = synthesize(*ph, *motion, cfg, grid);

    const auto same = add_noise(ms, 0.0, 123);
    for (std::size_t i = 0; i < ms.values.size(); ++i) CHECK(same.values[i] == ms.values[i]);

    const auto a = add_noise(ms, 0.01, 5);
    const auto b = add_noise(ms, 0.01, 5);
    for (std::size_t i = 0; i < ms.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
    REQUIRE(a.noise.has_value());
    CHECK(a.noise->level == 0.01);

    // empirical noise rms over a larger set
    auto big_cfg = cfg;
    big_cfg.phi_lines = 64;
    const auto big = synthesize(*ph, *motion, big_cfg, so3::uniform_grid(0, 1, 130));
    REQUIRE(big.values.size() >= 100000);
    const auto noisy = add_noise(big, 0.01, 9);
    double acc = 0;
    for (std::size_t i = 0; i < big.values.size(); ++i)
        acc += std::norm(noisy.values[i] - big.values[i]);
    const double noise_rms = std::sqrt(acc / static_cast<double>(big.values.size()));
    const double ratio = noise_rms / big.rms();
    CHECK(ratio > 0.009);
    CHECK(ratio < 0.011);

    CHECK(fails_with("invalid-argument", [&] { add_noise(ms, -0.5, 1); }));
}

TEST_CASE("forward verify suite catches an injected h sign flip") {
    verify::Options clean;
    auto results = verify::verify_forward(clean);
    bool found = false;
    for (const auto& r : results)
        if (r.name == "forward.dt-common-circle-truth-residual") {
            found = true;
            CHECK(r.passed);
        }
    CHECK(found);

    verify::Options faulty;
    faulty.fault_h_sign = true;
    results = verify::verify_forward(faulty);
    for (const auto& r : results)
        if (r.name == "forward.dt-common-circle-truth-residual") CHECK_FALSE(r.passed);
}
