#include "rotrec/verify.hpp"

#include <cmath>

#include "rotrec/experiment.hpp"
#include "rotrec/forward.hpp"
#include "rotrec/phantom.hpp"
#include "rotrec/recovery.hpp"
#include "rotrec/rng.hpp"
#include "rotrec/so3.hpp"

namespace rotrec::verify {

namespace {

using so3::Rotation;

void push(std::vector<CheckResult>& out, const std::string& name, double value, double bound) {
    out.push_back({name, value <= bound, value, bound, ""});
}

// smooth random omega/omega' profiles from a seeded generator
struct RandomMotion {
    std::array<experiment::ProfileSpec, 3> p;
    Vec3 omega(double t) const { return {p[0].eval(t), p[1].eval(t), p[2].eval(t)}; }
    Vec3 omega_dot(double t) const { return {p[0].d1(t), p[1].d1(t), p[2].d1(t)}; }
};

RandomMotion random_motion(Rng& rng) {
    RandomMotion m;
    for (auto& prof : m.p) {
        prof.poly = {rng.uniform(-1, 1), rng.uniform(-0.5, 0.5)};
        prof.trig.push_back({rng.uniform(0.1, 0.5), rng.uniform(0.5, 3.0), rng.uniform(0, 6.0)});
    }
    return m;
}

phantom::Phantom demo_phantom(std::uint64_t seed, double sigma = 0.05) {
    auto pts = pointset::generate_asymmetric_pointset(8, seed, pointset::ball_placement(0.55));
    return phantom::phantom_from_pointset(
        pts, {phantom::BlobProfile::Kind::Gaussian, sigma}, 1.0);
}

experiment::MotionSpec demo_motion_spec() {
    experiment::MotionSpec spec;
    spec.kind = experiment::MotionSpec::Kind::AnalyticOmega;
    spec.omega[0].poly = {0.6};
    spec.omega[0].trig = {{0.2, 2.1, 0.3}};
    spec.omega[1].poly = {0.3};
    spec.omega[1].trig = {{0.15, 1.7, kPi / 2}};
    spec.omega[2].poly = {1.0};
    spec.omega[2].trig = {{0.25, 1.3, 1.0}};
    spec.t_start = 0;
    spec.t_end = 1;
    spec.n_steps = 40;
    return spec;
}

}  // namespace

std::vector<CheckResult> verify_kinematics(const Options& opt) {
    std::vector<CheckResult> out;
    Rng rng(opt.seed);

    {  // orthogonality preserved over a long integration
        const auto m = random_motion(rng);
        const auto grid = so3::uniform_grid(0, 2.0, 1200);
        const auto traj = so3::motion_kinematics([&](double t) { return m.omega(t); },
                                                 [&](double t) { return m.omega_dot(t); }, grid);
        double worst = 0;
        for (const auto& r : traj.R)
            worst = std::max(worst, (r.transpose() * r - Mat3::Identity()).norm());
        push(out, "kinematics.orthogonality-after-integration", worst, 1e-10);
    }
    {  // vee/hat round trip
        double worst = 0;
        for (int i = 0; i < 200; ++i) {
            const Vec3 axis = rng.unit_vector();
            const auto r = so3::rodrigues(axis, rng.uniform(0, 6.28));
            const Vec3 w{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
            const Vec3 got = so3::angular_velocity(r, r.matrix() * skew(w));
            worst = std::max(worst, (got - w).norm());
        }
        push(out, "kinematics.vee-hat-round-trip", worst, 1e-12);
    }
    {  // nondegeneracy identity det = rho^2 (zeta + phi')
        double worst = 0;
        for (int i = 0; i < 300; ++i) {
            const auto m = random_motion(rng);
            const auto grid = so3::uniform_grid(0, 0.8, 33);
            const auto traj = so3::motion_kinematics(
                [&](double t) { return m.omega(t); }, [&](double t) { return m.omega_dot(t); },
                grid);
            for (std::size_t ti = 0; ti < grid.size(); ++ti) {
                const auto cert = so3::nondegeneracy_certificate(traj, ti);
                const double scale =
                    1.0 + std::pow(traj.omega[ti].norm(), 3) + traj.omega_dot[ti].norm();
                worst = std::max(worst, std::abs(cert.det - cert.cyl) / scale);
            }
        }
        push(out, "kinematics.nondegeneracy-identity", worst, 1e-9);
    }
    {  // cylindrical round trip
        double worst = 0;
        for (int i = 0; i < 10000; ++i) {
            const Vec3 v{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
            const auto c = so3::to_cylindrical(v);
            worst = std::max(worst, (so3::from_cylindrical(c) - v).norm());
            if (c.phi < 0 || c.phi >= kPi) worst = 1;
        }
        push(out, "kinematics.cylindrical-round-trip", worst, 1e-12);
    }
    {  // sigma involution
        double worst = 0;
        for (int i = 0; i < 100; ++i) {
            const auto r = so3::rodrigues(rng.unit_vector(), rng.uniform(0, 6.28));
            const auto rr = so3::sigma_conjugate(so3::sigma_conjugate(r));
            worst = std::max(worst, (rr.matrix() - r.matrix()).norm());
        }
        push(out, "kinematics.sigma-involution", worst, 1e-12);
    }
    return out;
}

std::vector<CheckResult> verify_phantoms(const Options& opt) {
    std::vector<CheckResult> out;
    Rng rng(opt.seed + 1);
    const auto ph = demo_phantom(opt.seed + 1);

    {  // certificate soundness via the witness oracle
        bool dt_ok = pointset::dt_pointset_certificate(ph.points());
        bool pb_ok = pointset::pb_pointset_certificate(ph.points());
        std::size_t misses = 0;
        for (int i = 0; i < 1000; ++i) {
            const Vec3 xi = rng.unit_vector();
            if (!pointset::pointset_direction_witness(ph.points(), xi, pointset::Model::DT))
                ++misses;
            if (!pointset::pointset_direction_witness(ph.points(), xi, pointset::Model::PB))
                ++misses;
        }
        push(out, "phantoms.certificate-soundness",
             (dt_ok && pb_ok) ? static_cast<double>(misses) : 1.0, 0.0);
    }
    {  // moment invariant, spectral version: grad of f-hat at 0 vanishes
        const auto sd = ph.eval(Vec3::Zero(), 1);
        double wsum = 0;
        for (double w : ph.weights()) wsum += std::abs(w);
        push(out, "phantoms.vanishing-first-moment-spectral", sd.grad.norm(), 1e-12 * wsum);
    }
    {  // spectral self-consistency: hess and third vs differences of grad/hess
        double worst = 0;
        const double h = 1e-3;
        for (int trial = 0; trial < 25; ++trial) {
            const Vec3 kap = 8.0 * rng.unit_vector() * rng.uniform(0.2, 1.0);
            const auto sd = ph.eval(kap, 3);
            double ref = 0, err = 0;
            for (int i = 0; i < 3; ++i) {
                Vec3 e = Vec3::Zero();
                e(i) = 1;
                const auto p = ph.eval(kap + h * e, 2);
                const auto m = ph.eval(kap - h * e, 2);
                const Vec3c dg = (p.grad - m.grad) / (2 * h);
                const Mat3c dh = (p.hess - m.hess) / (2 * h);
                for (int j = 0; j < 3; ++j) {
                    ref = std::max(ref, std::abs(sd.hess(i, j)));
                    err = std::max(err, std::abs(dg(j) - sd.hess(i, j)));
                    for (int l = 0; l < 3; ++l) {
                        ref = std::max(ref, std::abs(sd.d3(i, j, l)));
                        err = std::max(err, std::abs(dh(j, l) - sd.d3(i, j, l)));
                    }
                }
            }
            worst = std::max(worst, err / std::max(ref, 1e-300));
        }
        push(out, "phantoms.spectral-self-consistency", worst, 1e-5);
    }
    {  // reality: f-hat(-k) = conj f-hat(k)
        double worst = 0;
        for (int i = 0; i < 200; ++i) {
            const Vec3 kap = 10.0 * rng.unit_vector() * rng.uniform(0, 1);
            const cplx a = ph.eval(kap, 0).value;
            const cplx b = ph.eval(-kap, 0).value;
            worst = std::max(worst, std::abs(a - std::conj(b)));
        }
        push(out, "phantoms.reality-symmetry", worst, 1e-12);
    }
    {  // perturbing a symmetric object with a phantom destroys the symmetry
        pointset::PointSet single{Vec3{0, 0, 0}};
        phantom::Phantom smooth(single, {1.0}, {phantom::BlobProfile::Kind::Gaussian, 0.12},
                                1.0);
        struct Sum : phantom::SpectralProvider {
            const phantom::SpectralProvider *a, *b;
            phantom::SpectralDerivatives eval(const Vec3& k, int order) const override {
                auto x = a->eval(k, order);
                const auto y = b->eval(k, order);
                x.value += y.value;
                x.grad += y.grad;
                x.hess += y.hess;
                for (int i = 0; i < 3; ++i)
                    x.third[static_cast<std::size_t>(i)] += y.third[static_cast<std::size_t>(i)];
                return x;
            }
        } sum;
        sum.a = &smooth;
        sum.b = &ph;
        // the centered radial part alone is symmetric in every frame
        const auto margin_smooth =
            phantom::symmetry_margin(smooth, {pointset::Model::PB, 0, 10.0}, 64, 33);
        const auto margin_sum =
            phantom::symmetry_margin(sum, {pointset::Model::PB, 0, 10.0}, 256, 65);
        push(out, "phantoms.radial-object-symmetric", margin_smooth.first, 1e-12);
        out.push_back({"phantoms.perturbation-breaks-symmetry", margin_sum.first > 1e-10,
                       margin_sum.first, 1e-10, "lower bound"});
    }
    return out;
}

std::vector<CheckResult> verify_forward(const Options& opt) {
    std::vector<CheckResult> out;
    Rng rng(opt.seed + 2);
    auto ph = std::make_shared<phantom::Phantom>(demo_phantom(opt.seed + 2));
    auto spec = demo_motion_spec();
    auto motion = experiment::build_motion(spec);
    const auto grid = so3::uniform_grid(0, 1, 40);
    const auto traj = motion->sample(grid);

    forward::ModelConfig pb;
    pb.model = pointset::Model::PB;
    pb.samples = forward::default_samples(pointset::Model::PB, 12.0, 14);
    forward::ModelConfig dt;
    dt.model = pointset::Model::DT;
    dt.k0 = 20.0;
    dt.samples = forward::default_samples(pointset::Model::DT, 20.0, 14);

    {  // hermitian symmetry of PB data for a real phantom
        double worst = 0;
        for (int i = 0; i < 100; ++i) {
            const auto R = so3::Rotation::project(traj.R[static_cast<std::size_t>(i) % grid.size()]);
            const Vec2 k{rng.uniform(-8, 8), rng.uniform(-8, 8)};
            const cplx a = forward::measure(*ph, R, pb, k);
            const cplx b = forward::measure(*ph, R, pb, -k);
            worst = std::max(worst, std::abs(a - std::conj(b)));
        }
        push(out, "forward.pb-hermitian-symmetry", worst, 1e-12);
    }
    {  // DT origin pins f-hat(0) and a vanishing time derivative
        const cplx f0 = ph->eval(Vec3::Zero(), 0).value;
        double worst = 0;
        forward::AnalyticJetProvider jets(ph, motion, dt, grid);
        for (std::size_t ti = 0; ti < grid.size(); ti += 7) {
            const auto j = jets.jet(ti, Vec2::Zero(), forward::JetValue | forward::JetDt);
            worst = std::max({worst, std::abs(j.value - f0), std::abs(j.dt)});
        }
        push(out, "forward.dt-origin-invariant", worst, 1e-12);
    }
    {  // analytic vs finite-difference jets
        forward::ModelConfig dtf = dt;
        dtf.fd_dt = 1e-4;
        dtf.fd_dk = 1e-3;
        forward::AnalyticJetProvider aj(ph, motion, dtf, grid);
        forward::FdJetProvider fj(ph, motion, dtf, grid);
        double worst = 0;
        for (int trial = 0; trial < 6; ++trial) {
            const std::size_t ti = static_cast<std::size_t>(rng.uniform() * grid.size());
            const Vec2 k{rng.uniform(-10, 10), rng.uniform(-10, 10)};
            const auto a = aj.jet(ti, k, forward::JetAll);
            const auto f = fj.jet(ti, k, forward::JetAll);
            auto rel = [&](cplx x, cplx y, double scale) {
                return std::abs(x - y) / std::max(scale, 1e-300);
            };
            const double s = std::max(
                {std::abs(a.value), a.grad_k.norm(), std::abs(a.dt), a.dt_grad_k.norm(),
                 a.hess_k.norm(), a.dtt_grad_k.norm(), a.dt_hess_k.norm()});
            worst = std::max(worst, rel(a.value, f.value, s));
            worst = std::max(worst, rel(a.dt, f.dt, s));
            for (int i = 0; i < 2; ++i) {
                worst = std::max(worst, rel(a.grad_k(i), f.grad_k(i), s));
                worst = std::max(worst, rel(a.dt_grad_k(i), f.dt_grad_k(i), s));
                worst = std::max(worst, rel(a.dtt_grad_k(i), f.dtt_grad_k(i), s));
                for (int j = 0; j < 2; ++j) {
                    worst = std::max(worst, rel(a.hess_k(i, j), f.hess_k(i, j), s));
                    worst = std::max(worst, rel(a.dt_hess_k(i, j), f.dt_hess_k(i, j), s));
                    for (int l = 0; l < 2; ++l)
                        worst = std::max(worst, rel(a.third(i, j, l), f.third(i, j, l), s));
                }
            }
        }
        push(out, "forward.jet-backend-consistency", worst, 1e-5);
    }
    {  // common-line identity under exact re-measurement
        double worst = 0;
        const auto lambdas = forward::default_samples(pointset::Model::PB, 10.0, 9);
        for (int trial = 0; trial < 25; ++trial) {
            const auto s = static_cast<std::size_t>(rng.uniform() * grid.size());
            auto t = static_cast<std::size_t>(rng.uniform() * grid.size());
            if (t == s) t = (t + 5) % grid.size();
            worst = std::max(worst, forward::verify_common_line(*ph, traj, s, t, lambdas));
        }
        push(out, "forward.common-line-identity", worst, 1e-12);
    }
    {  // DT common-circle truth residual from re-measured (data-side) jets;
       // this is the check the h-sign fault must trip
        const double flip = opt.fault_h_sign ? -1.0 : 1.0;
        auto sampler = [&, flip](double t, const Vec2& k) {
            const double n = k.norm();
            if (n >= dt.k0) fail("out-of-band", "outside B_k0");
            const Vec3 kap{k.x(), k.y(), flip * forward::dt_height(dt.k0, n)};
            return ph->eval(motion->R(t).matrix() * kap, 0).value;
        };
        double worst = 0;
        for (std::size_t ti = 4; ti < grid.size(); ti += 16) {
            const auto cyl = so3::to_cylindrical(traj.omega[ti]);
            const Vec2 dir = cyl.azimuth();
            const Vec2 dperp = cyl.azimuth_perp();
            for (double mu : dt.samples) {
                const auto j = forward::fd_jet(sampler, grid[ti], mu * dir, 1e-5, 1e-4,
                                               forward::JetFirstOrder);
                const cplx g = j.grad_k(0) * dperp.x() + j.grad_k(1) * dperp.y();
                const cplx rhs = (mu * cyl.zeta - forward::dt_height(dt.k0, mu) * cyl.rho) * g;
                worst = std::max(worst, std::abs(j.dt - rhs));
            }
        }
        push(out, "forward.dt-common-circle-truth-residual", worst, 1e-6);
    }
    return out;
}

std::vector<CheckResult> verify_recovery(const Options& opt) {
    std::vector<CheckResult> out;
    Rng rng(opt.seed + 3);
    auto ph = std::make_shared<phantom::Phantom>(demo_phantom(opt.seed + 3));
    auto spec = demo_motion_spec();
    auto motion = experiment::build_motion(spec);
    const auto grid = so3::uniform_grid(0, 1, 60);
    const auto traj = motion->sample(grid);

    forward::ModelConfig dt;
    dt.model = pointset::Model::DT;
    dt.k0 = 20.0;
    dt.samples = forward::default_samples(pointset::Model::DT, 20.0, 14);
    forward::ModelConfig pb;
    pb.model = pointset::Model::PB;
    pb.samples = forward::default_samples(pointset::Model::PB, 12.0, 14);

    forward::AnalyticJetProvider dt_jets(ph, motion, dt, grid);
    forward::AnalyticJetProvider pb_jets(ph, motion, pb, grid);
    recover::SolverConfig scfg;
    scfg.phi_grid = 64;

    {  // truth residuals of both infinitesimal equations
        double worst = 0;
        for (std::size_t ti = 0; ti < grid.size(); ti += 6) {
            worst = std::max(worst, recover::dt_equation_residual(dt_jets, ti, traj.omega[ti]));
            worst = std::max(worst, recover::pb_equation_residual(pb_jets, ti, traj.omega[ti]));
        }
        push(out, "recovery.truth-residual", worst, 1e-10);
    }
    {  // argmin uniqueness: single basin and a healthy ambiguity ratio
        const auto est = recover::dt_recover_step(dt_jets, grid.size() / 2, scfg);
        const bool unique = est.ambiguity == recover::Ambiguity::Unique;
        const double err = (est.omega_hat - traj.omega[grid.size() / 2]).norm();
        out.push_back({"recovery.dt-step-unique-and-accurate", unique && err < 1e-6, err, 1e-6,
                       recover::to_string(est.ambiguity)});
    }
    {  // third-order consistency against the constructed truth
        auto series = recover::pb_first_order_series(pb_jets, scfg);
        // exact rates keep this a solver-only check
        series.phi_dot.resize(grid.size());
        series.zeta_dot.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            series.phi_dot[i] = so3::azimuth_rate(traj.omega[i], traj.omega_dot[i]);
            series.zeta_dot[i] = traj.omega_dot[i].z();
        }
        double worst = 0;
        for (std::size_t ti = 0; ti < grid.size(); ti += 10) {
            const auto rows = recover::pb_coefficients(pb_jets, ti, series, scfg);
            const auto res = recover::pb_third_order_step(rows, scfg);
            const auto cyl = so3::to_cylindrical(traj.omega[ti]);
            const double rho_rate =
                so3::radius_rate(traj.omega[ti], traj.omega_dot[ti], cyl.rho);
            worst = std::max(worst, std::abs(res.X1 - cyl.rho * cyl.rho));
            worst = std::max(worst, std::abs(res.X2 - rho_rate / cyl.rho));
        }
        push(out, "recovery.third-order-consistency", worst, 1e-6);
    }
    {  // sigma covariance: conjugated data gives the same recovery
        Mat3 sig = Mat3::Identity();
        sig(2, 2) = -1;
        struct SigmaPhantom : phantom::SpectralProvider {
            const phantom::SpectralProvider* base;
            Mat3 sig;
            phantom::SpectralDerivatives eval(const Vec3& k, int order) const override {
                auto sd = base->eval(sig * k, order);
                phantom::SpectralDerivatives out;
                out.value = sd.value;
                for (int i = 0; i < 3; ++i) {
                    out.grad(i) = 0;
                    for (int a = 0; a < 3; ++a) out.grad(i) += sig(a, i) * sd.grad(a);
                }
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        out.hess(i, j) = 0;
                        for (int a = 0; a < 3; ++a)
                            for (int b = 0; b < 3; ++b)
                                out.hess(i, j) += sig(a, i) * sig(b, j) * sd.hess(a, b);
                    }
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        for (int l = 0; l < 3; ++l) {
                            cplx acc = 0;
                            for (int a = 0; a < 3; ++a)
                                for (int b = 0; b < 3; ++b)
                                    for (int c = 0; c < 3; ++c)
                                        acc += sig(a, i) * sig(b, j) * sig(c, l) *
                                               sd.d3(a, b, c);
                            out.third[static_cast<std::size_t>(i)](j, l) = acc;
                        }
                return out;
            }
        };
        auto sig_ph = std::make_shared<SigmaPhantom>();
        sig_ph->base = ph.get();
        sig_ph->sig = sig;
        struct SigmaMotion : so3::MotionModel {
            std::shared_ptr<const so3::MotionModel> base;
            Mat3 sig;
            so3::Rotation R(double t) const override {
                return so3::Rotation::project(sig * base->R(t).matrix() * sig);
            }
            Mat3 Rdot(double t) const override { return sig * base->Rdot(t) * sig; }
            Mat3 Rddot(double t) const override { return sig * base->Rddot(t) * sig; }
            Vec3 omega(double t) const override { return so3::sigma_velocity(base->omega(t)); }
            Vec3 omega_dot(double t) const override {
                return so3::sigma_velocity(base->omega_dot(t));
            }
            double t_start() const override { return base->t_start(); }
            double t_end() const override { return base->t_end(); }
        };
        auto sig_motion = std::make_shared<SigmaMotion>();
        sig_motion->base = motion;
        sig_motion->sig = sig;

        forward::AnalyticJetProvider jets_sig(sig_ph, sig_motion, pb, grid);
        auto r1 = recover::recover_trajectory(pb_jets, scfg, &traj);
        auto r2 = recover::recover_trajectory(jets_sig, scfg, nullptr);
        double worst = 0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            worst = std::max(worst,
                             (r1.trajectory.R[i] - r2.trajectory.R[i]).norm());
        push(out, "recovery.sigma-covariance", worst, 1e-8);
    }
    {  // noise degradation is monotone (loose smoke)
        forward::ModelConfig dtf = dt;
        dtf.backend = forward::ModelConfig::Backend::FiniteDifference;
        dtf.fd_dt = 1e-3;
        dtf.fd_dk = 1e-3;
        const auto short_grid = so3::uniform_grid(0, 1, 12);
        const double rms = forward::synthesize(*ph, *motion, dtf, short_grid).rms();
        recover::SolverConfig fast = scfg;
        fast.phi_grid = 48;
        fast.refine_iters = 40;
        fast.residual_tol = 1e-4;
        double prev = -1;
        bool monotone = true;
        double last = 0;
        for (double level : {0.0, 1e-4, 1e-3, 1e-2}) {
            std::optional<forward::FdJetProvider::NoiseField> nf;
            if (level > 0) nf = forward::FdJetProvider::NoiseField{level, opt.seed + 9, rms};
            forward::FdJetProvider jets(ph, motion, dtf, short_grid, nf);
            double max_err = 0;
            for (std::size_t ti = 0; ti < short_grid.size(); ti += 3) {
                const auto est = recover::dt_recover_step(jets, ti, fast);
                max_err = std::max(
                    max_err,
                    (est.omega_hat - motion->omega(short_grid[ti])).norm());
            }
            if (max_err + 1e-12 < prev) monotone = false;
            prev = max_err;
            last = max_err;
        }
        out.push_back({"recovery.noise-monotone-smoke", monotone, last, 0, "max error at 1e-2"});
    }
    return out;
}

std::vector<CheckResult> verify_all(const Options& opt) {
    std::vector<CheckResult> out;
    for (auto* fn : {verify_kinematics, verify_phantoms, verify_forward, verify_recovery}) {
        auto part = fn(opt);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

}  // namespace rotrec::verify
