// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rotrec/experiment.hpp"
#include "rotrec/forward.hpp"
#include "rotrec/recovery.hpp"
#include "rotrec/rng.hpp"

using namespace rotrec;

namespace {

int g_failures = 0;

void report(int num, const std::string& name, bool passed, double value, double bound,
            double seconds) {
    std::printf("[%s] criterion %2d: %-38s value=%.3e bound=%.3e (%.1fs)\n",
                passed ? "PASS" : "FAIL", num, name.c_str(), value, bound, seconds);
    std::fflush(stdout);
    if (!passed) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::shared_ptr<phantom::Phantom> make_phantom(std::uint64_t seed, double sigma = 0.05) {
    const auto pts =
        pointset::generate_asymmetric_pointset(8, seed, pointset::ball_placement(0.55));
    return std::make_shared<phantom::Phantom>(
        phantom::phantom_from_pointset(pts, {phantom::BlobProfile::Kind::Gaussian, sigma}, 1.0));
}

std::shared_ptr<so3::MotionModel> smooth_motion() {
    experiment::MotionSpec spec;
    spec.omega[0].poly = {0.6};
    spec.omega[0].trig = {{0.2, 2.1, 0.3}};
    spec.omega[1].poly = {0.3};
    spec.omega[1].trig = {{0.15, 1.7, kPi / 2}};
    spec.omega[2].poly = {1.0};
    spec.omega[2].trig = {{0.25, 1.3, 1.0}};
    spec.t_end = 1.0;
    spec.n_steps = 200;
    return experiment::build_motion(spec);
}

forward::ModelConfig dt_config() {
    forward::ModelConfig cfg;
    cfg.model = pointset::Model::DT;
    cfg.k0 = 20.0;
    cfg.samples = forward::default_samples(cfg.model, cfg.k0, 14);
    return cfg;
}

forward::ModelConfig pb_config() {
    forward::ModelConfig cfg;
    cfg.model = pointset::Model::PB;
    cfg.samples = forward::default_samples(cfg.model, 12.0, 14);
    return cfg;
}

}  // namespace

// 1. DT end-to-end, analytic and finite-difference jets
void criterion_1() {
    Timer timer;
    auto ph = make_phantom(101);
    auto motion = smooth_motion();
    const auto grid = so3::uniform_grid(0, 1, 200);
    const auto traj = motion->sample(grid);
    recover::SolverConfig scfg;
    scfg.phi_grid = 64;

    forward::AnalyticJetProvider analytic(ph, motion, dt_config(), grid);
    const auto res_a = recover::recover_trajectory(analytic, scfg, &traj);
    double worst_a = res_a.clean ? 0.0 : 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst_a = std::max(worst_a, (res_a.steps[i].omega_hat - traj.omega[i]).norm());

    auto fd_cfg = dt_config();
    fd_cfg.backend = forward::ModelConfig::Backend::FiniteDifference;
    fd_cfg.fd_dt = 1e-3;
    fd_cfg.fd_dk = 1e-3;
    forward::FdJetProvider fd(ph, motion, fd_cfg, grid);
    recover::SolverConfig scfg_fd = scfg;
    scfg_fd.residual_tol = 1e-4;
    const auto res_f = recover::recover_trajectory(fd, scfg_fd, &traj);
    double worst_f = res_f.clean ? 0.0 : 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst_f = std::max(worst_f, (res_f.steps[i].omega_hat - traj.omega[i]).norm());

    const double seconds = timer.seconds();
    report(1, "dt-end-to-end (analytic)", worst_a <= 1e-6 && seconds <= 60, worst_a, 1e-6,
           seconds);
    report(1, "dt-end-to-end (fd, dt=1e-3)", worst_f <= 1e-3 && seconds <= 60, worst_f, 1e-3,
           seconds);
}

// 2. PB end-to-end up to the sigma equivalence class
void criterion_2() {
    Timer timer;
    auto ph = make_phantom(102);
    auto motion = smooth_motion();
    const auto grid = so3::uniform_grid(0, 1, 200);
    const auto traj = motion->sample(grid);
    forward::AnalyticJetProvider jets(ph, motion, pb_config(), grid);
    recover::SolverConfig scfg;
    scfg.phi_grid = 72;
    const auto res = recover::recover_trajectory(jets, scfg, &traj);
    const double dist = res.clean ? res.equivalence_distance : 1.0;
    const double seconds = timer.seconds();
    report(2, "pb-end-to-end (equivalence)", dist <= 1e-4 && seconds <= 120, dist, 1e-4,
           seconds);
}

// 3. coefficient identity: measurement-space vs object-space formulas
void criterion_3() {
    Timer timer;
    auto ph = make_phantom(103);
    auto motion = smooth_motion();
    const auto grid = so3::uniform_grid(0, 1, 100);
    const auto traj = motion->sample(grid);
    forward::AnalyticJetProvider jets(ph, motion, pb_config(), grid);
    recover::SolverConfig scfg;

    recover::FirstOrderSeries series;
    series.parity.assign(grid.size(), 1);
    series.flags.assign(grid.size(), recover::Ambiguity::Unique);
    series.phi.resize(grid.size());
    series.zeta.resize(grid.size());
    series.phi_dot.resize(grid.size());
    series.zeta_dot.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto cyl = so3::to_cylindrical(traj.omega[i]);
        series.phi[i] = cyl.phi;
        series.zeta[i] = cyl.zeta;
        series.phi_dot[i] = so3::azimuth_rate(traj.omega[i], traj.omega_dot[i]);
        series.zeta_dot[i] = traj.omega_dot[i].z();
    }

    Rng rng(1003);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto ti = static_cast<std::size_t>(rng.uniform() * grid.size());
        const double lam = rng.uniform(0.5, 11.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        forward::ModelConfig one = pb_config();
        one.samples = {lam};
        forward::AnalyticJetProvider j1(ph, motion, one, grid);
        const auto rows = recover::pb_coefficients(j1, ti, series, scfg);

        const auto cyl = so3::to_cylindrical(traj.omega[ti]);
        const double rho = cyl.rho;
        const double rhod = so3::radius_rate(traj.omega[ti], traj.omega_dot[ti], rho);
        const Mat3& R = traj.R[ti];
        const Vec3 te1 = R * lift2(cyl.azimuth());
        const Vec3 te2 = R * lift2(cyl.azimuth_perp());
        const Vec3 te3 = R * Vec3{0, 0, 1};
        const auto sd = ph->eval(lam * te1, 1);
        auto dot = [&](const Vec3& v) {
            cplx acc = 0;
            for (int i = 0; i < 3; ++i) acc += sd.grad(i) * v(i);
            return acc;
        };
        const cplx a0_obj = 2.0 * rhod * lam * dot(te3) - 2.0 * rho * rho * lam * dot(te2);
        const cplx a02_obj = 2.0 * lam * dot(te2);
        const cplx a1_obj = -2.0 * rho * lam * dot(te3);
        const double scale =
            std::max({std::abs(a0_obj), std::abs(a02_obj), std::abs(a1_obj), 1e-300});
        worst = std::max(worst, std::abs(rows[0].a0 - a0_obj) / scale);
        worst = std::max(worst, std::abs(rows[0].a02 - a02_obj) / scale);
        worst = std::max(worst, std::abs(rows[0].a1 - a1_obj) / scale);
    }
    report(3, "coefficient-identity", worst <= 1e-8, worst, 1e-8, timer.seconds());
}

// 4. nondegeneracy identity over 10^3 random analytic motions
void criterion_4() {
    Timer timer;
    Rng rng(104);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Vec3 a{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
        const Vec3 b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const Vec3 c{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double f1 = rng.uniform(0.5, 3.0), f2 = rng.uniform(0.5, 3.0);
        auto om = [=](double t) {
            return Vec3(a + std::sin(f1 * t) * b + std::cos(f2 * t) * c);
        };
        auto omd = [=](double t) {
            return Vec3(f1 * std::cos(f1 * t) * b - f2 * std::sin(f2 * t) * c);
        };
        const auto traj = so3::motion_kinematics(om, omd, so3::uniform_grid(0, 0.5, 30));
        for (std::size_t i = 0; i < traj.size(); i += 9) {
            const auto cert = so3::nondegeneracy_certificate(traj, i);
            const double scale =
                1.0 + std::pow(traj.omega[i].norm(), 3) + traj.omega_dot[i].norm();
            worst = std::max(worst, std::abs(cert.det - cert.cyl) / scale);
        }
    }
    report(4, "nondegeneracy-identity", worst <= 1e-9, worst, 1e-9, timer.seconds());
}

// 5. truth residual of both infinitesimal equations
void criterion_5() {
    Timer timer;
    auto ph = make_phantom(105);
    auto motion = smooth_motion();
    const auto grid = so3::uniform_grid(0, 1, 200);
    const auto traj = motion->sample(grid);
    forward::AnalyticJetProvider dt_jets(ph, motion, dt_config(), grid);
    forward::AnalyticJetProvider pb_jets(ph, motion, pb_config(), grid);
    double worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        worst = std::max(worst, recover::dt_equation_residual(dt_jets, i, traj.omega[i]));
        worst = std::max(worst, recover::pb_equation_residual(pb_jets, i, traj.omega[i]));
    }
    report(5, "truth-residual", worst <= 1e-10, worst, 1e-10, timer.seconds());
}

// 6. ambiguity detection: mirror symmetry, rho-zero, degenerate motion
void criterion_6() {
    Timer timer;
    bool ok = true;
    double value = 0;

    {  // (a) mirror-symmetric phantom at the aligned time step
        experiment::MotionSpec spec;
        spec.omega[0].poly = {0.8};
        spec.omega[0].trig = {{0.1, 1.9, 0.0}};
        spec.omega[1].poly = {0.0};
        spec.omega[2].poly = {1.2};
        spec.t_end = 1.0;
        auto motion = experiment::build_motion(spec);
        pointset::PointSet base{Vec3{0.3, 0.2, 0.1}, Vec3{-0.25, 0.15, -0.2},
                                Vec3{0.1, -0.3, 0.25}, Vec3{-0.15, -0.1, -0.18}};
        auto mirrored = std::make_shared<phantom::Phantom>(phantom::mirror_symmetrize(
            phantom::phantom_from_pointset(base, {phantom::BlobProfile::Kind::Gaussian, 0.04},
                                           1.0),
            Vec3{0, 1, 0}));
        const auto grid = so3::uniform_grid(0, 1, 10);
        forward::AnalyticJetProvider jets(mirrored, motion, dt_config(), grid);
        recover::SolverConfig scfg;
        scfg.phi_grid = 64;
        const auto est = recover::dt_recover_step(jets, 0, scfg);
        ok = ok && est.ambiguity == recover::Ambiguity::PlanarFamily;
        double family_worst = 0;
        for (double rho : {-1.0, -0.3, 0.4, 1.3})
            for (double zeta : {-0.8, 0.0, 0.9, 2.0})
                family_worst = std::max(
                    family_worst, recover::dt_equation_residual(jets, 0, Vec3{rho, 0, zeta}));
        ok = ok && family_worst <= 1e-10;
        value = std::max(value, family_worst);
    }
    {  // (b) omega = (0, 0, zeta): rho-zero family with accurate zeta
        auto ph = make_phantom(106);
        experiment::MotionSpec spec;
        spec.omega[0].poly = {0.0};
        spec.omega[1].poly = {0.0};
        spec.omega[2].poly = {2.0};
        spec.omega[2].trig = {{0.3, 1.1, 0.4}};
        spec.t_end = 1.0;
        auto motion = experiment::build_motion(spec);
        const auto grid = so3::uniform_grid(0, 1, 10);
        forward::AnalyticJetProvider jets(ph, motion, pb_config(), grid);
        recover::SolverConfig scfg;
        const auto est = recover::pb_first_order_step(jets, 5, scfg);
        ok = ok && est.ambiguity == recover::Ambiguity::RhoZeroFamily;
        const double zerr = std::abs(est.zeta - motion->omega(grid[5]).z());
        ok = ok && zerr <= 1e-6;
        value = std::max(value, zerr);
    }
    {  // (c) degenerate motion family: condition overflow in the third order
        auto ph = make_phantom(107);
        experiment::MotionSpec spec;
        spec.kind = experiment::MotionSpec::Kind::AxisComposite;
        spec.axis = Vec3{1, 0, 0};
        spec.alpha.poly = {0.0, 0.8, 0.05};
        spec.beta.poly = {0.0, 1.5};
        spec.t_end = 1.0;
        auto motion = experiment::build_motion(spec);
        const auto grid = so3::uniform_grid(0, 1, 16);
        forward::AnalyticJetProvider jets(ph, motion, pb_config(), grid);
        recover::SolverConfig scfg;
        scfg.phi_grid = 64;
        auto series = recover::pb_first_order_series(jets, scfg);
        recover::differentiate_series(series, grid, scfg);
        const auto res = recover::pb_third_order_step(
            recover::pb_coefficients(jets, 8, series, scfg), scfg);
        ok = ok && res.degenerate;
    }
    report(6, "ambiguity-detection", ok, value, 1e-6, timer.seconds());
}

// 7. point-set machinery
void criterion_7() {
    Timer timer;
    bool ok = true;
    double worst_moment = 0;
    Rng rng(107);
    for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
        const auto pts =
            pointset::generate_asymmetric_pointset(8, seed, pointset::ball_placement(0.55));
        ok = ok && pointset::dt_pointset_certificate(pts);
        ok = ok && pointset::pb_pointset_certificate(pts);
        for (int i = 0; i < 1000; ++i) {
            const Vec3 xi = rng.unit_vector();
            ok = ok && pointset::pointset_direction_witness(pts, xi, pointset::Model::DT)
                           .has_value();
            ok = ok && pointset::pointset_direction_witness(pts, xi, pointset::Model::PB)
                           .has_value();
        }
        const auto w = pointset::balance_weights(pts);
        Vec3 m = Vec3::Zero();
        double scale = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            m += w[i] * pts[i];
            scale = std::max(scale, pts[i].norm());
            ok = ok && w[i] != 0.0;
        }
        worst_moment = std::max(worst_moment, m.norm() / scale);
    }
    ok = ok && worst_moment <= 1e-12;
    report(7, "point-set-machinery", ok, worst_moment, 1e-12, timer.seconds());
}

// 8. data symmetry: sigma conjugation and the common-line identity
void criterion_8() {
    Timer timer;
    auto ph = make_phantom(108);
    auto motion = smooth_motion();
    const auto cfg = pb_config();
    Mat3 sig = Mat3::Identity();
    sig(2, 2) = -1;
    pointset::PointSet refl;
    for (const auto& p : ph->points()) refl.push_back(sig * p);
    phantom::Phantom ph_sigma(refl, ph->weights(), ph->profile(), ph->support_radius());

    Rng rng(108);
    double worst = 0;
    for (int i = 0; i < 300; ++i) {
        const double t = rng.uniform(0, 1);
        const Vec2 k{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        const auto R = motion->R(t);
        const auto Rc = so3::Rotation::project(sig * R.matrix() * sig);
        worst = std::max(worst, std::abs(forward::measure(*ph, R, cfg, k) -
                                         forward::measure(ph_sigma, Rc, cfg, k)));
    }

    const auto grid = so3::uniform_grid(0, 1, 60);
    const auto traj = motion->sample(grid);
    const auto lambdas = forward::default_samples(pointset::Model::PB, 9.0, 9);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = static_cast<std::size_t>(rng.uniform() * grid.size());
        auto t = static_cast<std::size_t>(rng.uniform() * grid.size());
        if (t == s) t = (t + 11) % grid.size();
        worst = std::max(worst, forward::verify_common_line(*ph, traj, s, t, lambdas));
    }
    report(8, "data-symmetry", worst <= 1e-12, worst, 1e-12, timer.seconds());
}

// 9. Fourier slice oracle on a 64^3 rasterization
void criterion_9() {
    Timer timer;
    auto ph = make_phantom(109, 0.06);
    auto motion = smooth_motion();
    const auto cfg = pb_config();
    double worst = 0;
    for (const auto& [t, k] : std::vector<std::pair<double, Vec2>>{
             {0.21, {2.0, 1.0}}, {0.63, {-3.5, 2.5}}, {0.9, {1.0, -4.0}}}) {
        const auto R = motion->R(t);
        const cplx direct = forward::measure(*ph, R, cfg, k);
        const cplx oracle = oracles::fourier_slice_quadrature(*ph, R.matrix(), k, 64);
        worst = std::max(worst, std::abs(direct - oracle) / std::abs(direct));
    }
    report(9, "fourier-slice-oracle", worst <= 1e-6, worst, 1e-6, timer.seconds());
}

// 10. noise smoke test: error monotone in the noise level
void criterion_10() {
    Timer timer;
    bool monotone = true;
    auto motion = smooth_motion();
    auto cfg = dt_config();
    cfg.backend = forward::ModelConfig::Backend::FiniteDifference;
    cfg.fd_dt = 1e-3;
    cfg.fd_dk = 1e-3;
    const auto grid = so3::uniform_grid(0, 1, 12);
    recover::SolverConfig scfg;
    scfg.phi_grid = 48;
    scfg.refine_iters = 40;
    scfg.residual_tol = 1e-4;
    double final_err = 0;
    for (std::uint64_t seed : {201ull, 202ull, 203ull}) {
        auto ph = make_phantom(seed);
        const double rms = forward::synthesize(*ph, *motion, cfg, grid).rms();
        double prev = -1;
        for (double level : {0.0, 1e-4, 1e-3, 1e-2}) {
            std::optional<forward::FdJetProvider::NoiseField> nf;
            if (level > 0)
                nf = forward::FdJetProvider::NoiseField{level, seed ^ 0xabcdull, rms};
            forward::FdJetProvider jets(ph, motion, cfg, grid, nf);
            double max_err = 0;
            for (std::size_t ti = 0; ti < grid.size(); ti += 2) {
                const auto est = recover::dt_recover_step(jets, ti, scfg);
                max_err =
                    std::max(max_err, (est.omega_hat - motion->omega(grid[ti])).norm());
            }
            if (max_err + 1e-12 < prev) monotone = false;
            prev = max_err;
            final_err = std::max(final_err, max_err);
        }
    }
    report(10, "noise-monotone-smoke", monotone, final_err, 0, timer.seconds());
}

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (g_failures > 0) {
        std::printf("%d criterion check(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
