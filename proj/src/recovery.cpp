#include "rotrec/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace rotrec::recover {

using forward::JetFirstOrder;
using forward::JetPart;
using forward::MeasurementJet;

void SolverConfig::validate() const {
    if (phi_grid < 8) fail("invalid-argument", "phi grid needs at least 8 candidates");
    if (residual_tol <= 0 || ambiguity_ratio <= 1 || condition_max <= 0)
        fail("invalid-argument", "solver tolerances must be positive (ratio > 1)");
}

std::string to_string(Ambiguity a) {
    switch (a) {
        case Ambiguity::Unique: return "unique";
        case Ambiguity::PlanarFamily: return "planar-family";
        case Ambiguity::RhoZeroFamily: return "rho-zero-family";
        case Ambiguity::Degenerate: return "degenerate";
    }
    return "?";
}

namespace {

struct LineData {
    // first-order jet components along the radial line mu -> mu * phi
    std::vector<cplx> dt;    // time derivative
    std::vector<cplx> g;     // <grad_k, phi_perp>
    double scale = 0;        // max |entry| among system entries
};

LineData line_data(const JetProvider& jets, std::size_t t_index, double phi,
                   bool dt_mode, double k0) {
    const auto& mus = jets.config().samples;
    const Vec2 dir{std::cos(phi), std::sin(phi)};
    const Vec2 dperp = perp(dir);
    LineData out;
    out.dt.resize(mus.size());
    out.g.resize(mus.size());
    for (std::size_t i = 0; i < mus.size(); ++i) {
        const auto j = jets.jet(t_index, mus[i] * dir, JetFirstOrder);
        out.dt[i] = j.dt;
        out.g[i] = j.grad_k(0) * dperp.x() + j.grad_k(1) * dperp.y();
        const double coeff =
            dt_mode ? std::max(std::abs(mus[i]), std::abs(forward::dt_height(k0, mus[i])))
                    : std::abs(mus[i]);
        out.scale = std::max({out.scale, std::abs(out.dt[i]), coeff * std::abs(out.g[i])});
    }
    return out;
}

struct LsFit {
    Eigen::VectorXd x;
    double residual;  // absolute rms over stacked rows
};

LsFit solve_stacked(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b) {
    const auto rows = static_cast<Eigen::Index>(2 * A.rows());
    Eigen::MatrixXd M(rows, A.cols());
    Eigen::VectorXd rhs(rows);
    M << A.real(), A.imag();
    rhs << b.real(), b.imag();
    LsFit fit;
    fit.x = M.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
    fit.residual = (M * fit.x - rhs).norm() / std::sqrt(static_cast<double>(rows));
    return fit;
}

// DT step system at a fixed azimuth: unknowns (zeta, rho)
struct DtFit {
    double zeta = 0, rho = 0, residual = 0, scale = 0;
};

DtFit dt_fit_at(const JetProvider& jets, std::size_t t_index, double phi) {
    const auto& cfg = jets.config();
    const auto ld = line_data(jets, t_index, phi, true, cfg.k0);
    const auto n = static_cast<Eigen::Index>(cfg.samples.size());
    Eigen::MatrixXcd A(n, 2);
    Eigen::VectorXcd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = cfg.samples[static_cast<std::size_t>(i)];
        const cplx g = ld.g[static_cast<std::size_t>(i)];
        A(i, 0) = mu * g;
        A(i, 1) = -forward::dt_height(cfg.k0, mu) * g;
        b(i) = ld.dt[static_cast<std::size_t>(i)];
    }
    const auto fit = solve_stacked(A, b);
    return {fit.x(0), fit.x(1), fit.residual, ld.scale};
}

struct PbFit {
    double zeta = 0, residual = 0, scale = 0;
};

PbFit pb_fit_at(const JetProvider& jets, std::size_t t_index, double phi) {
    const auto& cfg = jets.config();
    const auto ld = line_data(jets, t_index, phi, false, 0);
    const auto n = static_cast<Eigen::Index>(cfg.samples.size());
    Eigen::MatrixXcd A(n, 1);
    Eigen::VectorXcd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, 0) = cfg.samples[static_cast<std::size_t>(i)] * ld.g[static_cast<std::size_t>(i)];
        b(i) = ld.dt[static_cast<std::size_t>(i)];
    }
    const auto fit = solve_stacked(A, b);
    return {fit.x(0), fit.residual, ld.scale};
}

// golden-section minimization of a smooth scalar function
template <typename F>
double golden_min(F f, double a, double b, std::size_t iters) {
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (std::size_t i = 0; i < iters; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    return f1 < f2 ? x1 : x2;
}

double wrap_to_half_pi(double x) {
    while (x > kPi / 2) x -= kPi;
    while (x <= -kPi / 2) x += kPi;
    return x;
}

double canonical_phi(double phi, double* sign = nullptr) {
    double s = 1;
    while (phi < 0) {
        phi += kPi;
        s = -s;
    }
    while (phi >= kPi) {
        phi -= kPi;
        s = -s;
    }
    if (sign) *sign = s;
    return phi;
}

template <typename F>
void parallel_over(std::size_t n, std::size_t threads, F body) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t used = std::min<std::size_t>(threads, n);
    for (std::size_t w = 0; w < used; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += used) body(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

StepEstimate dt_recover_step(const JetProvider& jets, std::size_t t_index,
                             const SolverConfig& cfg) {
    cfg.validate();
    const std::size_t n_phi = cfg.phi_grid;
    std::vector<DtFit> fits(n_phi);
    double global_scale = 0;
    for (std::size_t c = 0; c < n_phi; ++c) {
        const double phi = kPi * static_cast<double>(c) / static_cast<double>(n_phi);
        fits[c] = dt_fit_at(jets, t_index, phi);
        global_scale = std::max(global_scale, fits[c].scale);
    }
    StepEstimate est;
    est.data_scale = global_scale;
    if (global_scale <= 0) {
        est.ambiguity = Ambiguity::Degenerate;
        return est;
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < n_phi; ++c)
        if (fits[c].residual < fits[best].residual) best = c;

    // second-best basin: best candidate at least two grid slots away (cyclic)
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_phi; ++c) {
        const std::size_t d = (c + n_phi - best) % n_phi;
        if (d <= 1 || d >= n_phi - 1) continue;
        second = std::min(second, fits[c].residual);
    }

    const double dphi = kPi / static_cast<double>(n_phi);
    const double phi0 = dphi * static_cast<double>(best);
    const double phi_hat = golden_min(
        [&](double p) { return dt_fit_at(jets, t_index, p).residual; }, phi0 - dphi,
        phi0 + dphi, cfg.refine_iters);
    auto fit = dt_fit_at(jets, t_index, phi_hat);

    double sgn = 1;
    est.phi = canonical_phi(phi_hat, &sgn);
    est.zeta = fit.zeta;
    est.rho = sgn * fit.rho;
    est.residual = fit.residual;
    est.omega_hat = so3::from_cylindrical({est.rho, est.phi, est.zeta});

    // planar family: the whole line's data vanishes, so any (zeta, rho) fits
    if (fit.scale <= cfg.residual_tol * global_scale) {
        est.ambiguity = Ambiguity::PlanarFamily;
        return est;
    }
    const double rel_second = second / std::max(fit.residual, 1e-300);
    if (fit.residual <= cfg.residual_tol * global_scale &&
        rel_second < cfg.ambiguity_ratio)
        est.ambiguity = Ambiguity::Degenerate;  // multiple basins fit the data
    else if (fit.residual > 1e-1 * global_scale)
        fail("no-solution", "no azimuth candidate fits the common-circle equation");
    else
        est.ambiguity = Ambiguity::Unique;
    return est;
}

double dt_equation_residual(const JetProvider& jets, std::size_t t_index, const Vec3& u) {
    const auto& cfg = jets.config();
    const auto cyl = so3::to_cylindrical(u);
    const Vec2 dir = cyl.azimuth();
    const Vec2 dperp = cyl.azimuth_perp();
    double worst = 0;
    for (double mu : cfg.samples) {
        const auto j = jets.jet(t_index, mu * dir, JetFirstOrder);
        const cplx g = j.grad_k(0) * dperp.x() + j.grad_k(1) * dperp.y();
        const cplx rhs = (mu * cyl.zeta - forward::dt_height(cfg.k0, mu) * cyl.rho) * g;
        worst = std::max(worst, std::abs(j.dt - rhs));
    }
    return worst;
}

double pb_equation_residual(const JetProvider& jets, std::size_t t_index, const Vec3& u) {
    const auto& cfg = jets.config();
    const auto cyl = so3::to_cylindrical(u);
    const Vec2 dir = cyl.azimuth();
    const Vec2 dperp = cyl.azimuth_perp();
    double worst = 0;
    for (double lam : cfg.samples) {
        const auto j = jets.jet(t_index, lam * dir, JetFirstOrder);
        const cplx g = j.grad_k(0) * dperp.x() + j.grad_k(1) * dperp.y();
        worst = std::max(worst, std::abs(j.dt - cyl.zeta * lam * g));
    }
    return worst;
}

FirstOrderStep pb_first_order_step(const JetProvider& jets, std::size_t t_index,
                                   const SolverConfig& cfg) {
    cfg.validate();
    const std::size_t n_phi = cfg.phi_grid;
    std::vector<PbFit> fits(n_phi);
    double global_scale = 0;
    for (std::size_t c = 0; c < n_phi; ++c) {
        const double phi = kPi * static_cast<double>(c) / static_cast<double>(n_phi);
        fits[c] = pb_fit_at(jets, t_index, phi);
        global_scale = std::max(global_scale, fits[c].scale);
    }
    FirstOrderStep est;
    est.data_scale = global_scale;
    if (global_scale <= 0) {
        est.ambiguity = Ambiguity::Degenerate;
        return est;
    }

    // rho-zero family: every azimuth fits with a common zeta
    bool all_fit = true;
    double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
    for (const auto& f : fits) {
        if (f.residual > cfg.residual_tol * global_scale) {
            all_fit = false;
            break;
        }
        zmin = std::min(zmin, f.zeta);
        zmax = std::max(zmax, f.zeta);
    }
    if (all_fit && zmax - zmin <= 1e3 * cfg.residual_tol * std::max(1.0, std::abs(zmax))) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < n_phi; ++c)
            if (fits[c].residual < fits[best].residual) best = c;
        est.ambiguity = Ambiguity::RhoZeroFamily;
        est.zeta = fits[best].zeta;
        est.phi = kPi * static_cast<double>(best) / static_cast<double>(n_phi);
        est.residual = fits[best].residual;
        return est;
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < n_phi; ++c)
        if (fits[c].residual < fits[best].residual) best = c;
    const double dphi = kPi / static_cast<double>(n_phi);
    const double phi0 = dphi * static_cast<double>(best);
    const double phi_hat = golden_min(
        [&](double p) { return pb_fit_at(jets, t_index, p).residual; }, phi0 - dphi,
        phi0 + dphi, cfg.refine_iters);
    const auto fit = pb_fit_at(jets, t_index, phi_hat);
    if (fit.residual > 1e-1 * global_scale)
        fail("no-solution", "no azimuth candidate fits the common-line equation");
    est.phi = canonical_phi(phi_hat);
    est.zeta = fit.zeta;
    est.residual = fit.residual;
    est.ambiguity = Ambiguity::Unique;
    return est;
}

FirstOrderSeries pb_first_order_series(const JetProvider& jets, const SolverConfig& cfg) {
    const std::size_t n = jets.times().size();
    FirstOrderSeries s;
    s.phi.resize(n);
    s.parity.assign(n, 1);
    s.zeta.resize(n);
    s.flags.resize(n);
    std::vector<FirstOrderStep> steps(n);
    parallel_over(n, cfg.threads,
                  [&](std::size_t i) { steps[i] = pb_first_order_step(jets, i, cfg); });
    for (std::size_t i = 0; i < n; ++i) {
        s.zeta[i] = steps[i].zeta;
        s.flags[i] = steps[i].ambiguity;
        if (i == 0) {
            s.phi[0] = steps[0].phi;
            continue;
        }
        // continue phi modulo pi; each pi-shift flips the rho sign parity
        const double delta_raw = steps[i].phi - std::fmod(s.phi[i - 1], kPi);
        const double delta = wrap_to_half_pi(delta_raw);
        s.phi[i] = s.phi[i - 1] + delta;
        const double shift = std::round((steps[i].phi - std::fmod(s.phi[i], kPi)) / kPi);
        s.parity[i] = (static_cast<long long>(std::llround(shift)) % 2 == 0)
                          ? s.parity[i - 1]
                          : -s.parity[i - 1];
    }
    return s;
}

void differentiate_series(FirstOrderSeries& s, const std::vector<double>& times,
                          const SolverConfig& cfg) {
    const std::size_t n = times.size();
    if (s.phi.size() != n) fail("invalid-argument", "series/grid size mismatch");
    s.phi_dot.assign(n, 0.0);
    s.zeta_dot.assign(n, 0.0);
    auto d_central = [&](const std::vector<double>& y, std::size_t i) {
        return (y[i + 1] - y[i - 1]) / (times[i + 1] - times[i - 1]);
    };
    auto d_onesided = [&](const std::vector<double>& y, std::size_t i, bool fwd) {
        // second-order three-point stencil on a uniform-ish grid
        if (fwd) {
            const double h = times[i + 1] - times[i];
            return (-3 * y[i] + 4 * y[i + 1] - y[i + 2]) / (2 * h);
        }
        const double h = times[i] - times[i - 1];
        return (3 * y[i] - 4 * y[i - 1] + y[i - 2]) / (2 * h);
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && i + 1 < n) {
            s.phi_dot[i] = d_central(s.phi, i);
            s.zeta_dot[i] = d_central(s.zeta, i);
        } else if (cfg.one_sided_boundary && n >= 3) {
            const bool fwd = (i == 0);
            s.phi_dot[i] = d_onesided(s.phi, i, fwd);
            s.zeta_dot[i] = d_onesided(s.zeta, i, fwd);
        } else {
            fail("insufficient-stencil", "no one-sided stencil enabled at the grid boundary");
        }
    }
}

std::vector<CoefficientRow> pb_coefficients(const JetProvider& jets, std::size_t t_index,
                                            const FirstOrderSeries& series,
                                            const SolverConfig& cfg) {
    if (series.phi_dot.empty() || series.zeta_dot.empty()) {
        if (!cfg.one_sided_boundary)
            fail("insufficient-stencil", "first-order series has no rate estimates");
        fail("invalid-argument", "differentiate the first-order series first");
    }
    const double phi = series.phi.at(t_index);
    const double zeta = series.zeta.at(t_index);
    const double phid = series.phi_dot.at(t_index);
    const double zetad = series.zeta_dot.at(t_index);
    const Vec2 f{std::cos(phi), std::sin(phi)};
    const Vec2 fp = perp(f);

    const unsigned mask = JetPart::JetGradK | JetPart::JetHessK | JetPart::JetThirdK |
                          JetPart::JetDtGradK | JetPart::JetDtHessK | JetPart::JetDttGradK;
    std::vector<CoefficientRow> rows;
    rows.reserve(jets.config().samples.size());
    for (double lam : jets.config().samples) {
        const auto j = jets.jet(t_index, lam * f, mask);
        auto t1 = [&](const Vec2& v) { return j.grad_k(0) * v.x() + j.grad_k(1) * v.y(); };
        auto t2 = [&](const Vec2& u, const Vec2& v) {
            cplx acc = 0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) acc += j.hess_k(a, b) * u(a) * v(b);
            return acc;
        };
        auto t3 = [&](const Vec2& u, const Vec2& v, const Vec2& w) {
            cplx acc = 0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c) acc += j.third(a, b, c) * u(a) * v(b) * w(c);
            return acc;
        };
        auto dt2 = [&](const Vec2& u, const Vec2& v) {
            cplx acc = 0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) acc += j.dt_hess_k(a, b) * u(a) * v(b);
            return acc;
        };
        auto dt1 = [&](const Vec2& v) {
            return j.dt_grad_k(0) * v.x() + j.dt_grad_k(1) * v.y();
        };
        auto dtt1 = [&](const Vec2& v) {
            return j.dtt_grad_k(0) * v.x() + j.dtt_grad_k(1) * v.y();
        };

        CoefficientRow row;
        const double l3 = lam * lam * lam, l2 = lam * lam;
        row.a0 = zeta * (zeta - phid) * l3 * t3(fp, fp, fp) +
                 2.0 * l2 * (zeta * phid * t2(fp, f) - zetad * t2(fp, fp)) +
                 2.0 * lam * (zeta * zeta * t1(fp) + zetad * t1(f)) -
                 (3.0 * zeta - phid) * l2 * dt2(fp, fp) + 2.0 * lam * dtt1(fp);
        row.a02 = 2.0 * lam * t1(fp);
        row.a1 = 2.0 * (zeta * l2 * t2(fp, fp) - zeta * lam * t1(f) - lam * dt1(fp));
        row.prefactor = zeta + phid;
        rows.push_back(row);
    }
    return rows;
}

ThirdOrderResult pb_third_order_step(const std::vector<CoefficientRow>& rows,
                                     const SolverConfig& cfg) {
    if (rows.size() < 2) fail("insufficient-data", "need coefficient rows at >= 2 lambdas");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXcd A(n, 2);
    Eigen::VectorXcd b(n);
    double data_scale = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        A(i, 0) = r.prefactor * r.a02;
        A(i, 1) = r.prefactor * r.a1;
        b(i) = -r.prefactor * r.a0;
        data_scale = std::max({data_scale, std::abs(r.a02), std::abs(r.a1), std::abs(r.a0)});
    }
    Eigen::MatrixXd M(2 * n, 2);
    Eigen::VectorXd rhs(2 * n);
    M << A.real(), A.imag();
    rhs << b.real(), b.imag();
    const auto svd = M.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV);
    ThirdOrderResult out;
    const double sigma2 = svd.singularValues()(1);
    out.condition =
        data_scale * std::sqrt(static_cast<double>(2 * n)) / std::max(sigma2, 1e-300);
    out.degenerate = !(out.condition <= cfg.condition_max);
    const Eigen::Vector2d x = svd.solve(rhs);
    out.X1 = x(0);
    out.X2 = x(1);
    out.residual = (M * x - rhs).norm() / std::sqrt(static_cast<double>(2 * n));
    if (!out.degenerate && out.X1 < -1e-6)
        fail("model-violation", "recovered rho^2 is negative beyond tolerance");
    return out;
}

std::vector<double> rho_sign_continuation(const std::vector<double>& X1,
                                          const std::vector<double>& X2,
                                          const std::vector<double>& times,
                                          const SolverConfig& cfg) {
    (void)cfg;
    if (X1.size() != X2.size() || X1.size() != times.size() || X1.empty())
        fail("invalid-argument", "series size mismatch");
    std::vector<double> rho(X1.size());
    double peak = 0;
    for (std::size_t i = 0; i < X1.size(); ++i) {
        if (!(X1[i] > 0)) fail("degenerate-data", "rho^2 not positive on the grid");
        rho[i] = std::sqrt(X1[i]);  // branch convention: rho(t0) > 0
        peak = std::max(peak, rho[i]);
    }
    for (std::size_t i = 0; i + 1 < rho.size(); ++i)
        if (std::abs(rho[i + 1] - rho[i]) > 0.5 * (rho[i] + rho[i + 1]))
            fail("continuity-violation", "rho would need a sign flip between steps");
    return rho;
}

std::vector<Mat3> integrate_omega_series(const std::vector<double>& times,
                                         const std::vector<Vec3>& omega) {
    const std::size_t n = times.size();
    if (omega.size() != n || n < 2) fail("invalid-argument", "series size mismatch");
    auto om_at = [&](std::size_t i) -> Vec3 { return omega[i]; };
    auto om_mid = [&](std::size_t i) -> Vec3 {
        // 4-point half-sample interpolation with quadratic end extrapolation
        const Vec3 ym1 = i >= 1 ? om_at(i - 1) : 3 * om_at(0) - 3 * om_at(1) + om_at(2);
        const Vec3 y2 = i + 2 < n ? om_at(i + 2)
                                  : 3 * om_at(n - 1) - 3 * om_at(n - 2) + om_at(n - 3);
        return (-ym1 + 9 * om_at(i) + 9 * om_at(i + 1) - y2) / 16.0;
    };
    std::vector<Mat3> R(n);
    R[0] = Mat3::Identity();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = times[i + 1] - times[i];
        const Vec3 w0 = om_at(i), wm = om_mid(i), w1 = om_at(i + 1);
        const Mat3 k1 = R[i] * skew(w0);
        const Mat3 k2 = (R[i] + (h / 2) * k1) * skew(wm);
        const Mat3 k3 = (R[i] + (h / 2) * k2) * skew(wm);
        const Mat3 k4 = (R[i] + h * k3) * skew(w1);
        R[i + 1] = so3::Rotation::project(R[i] + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)).matrix();
    }
    return R;
}

double trajectory_distance(const so3::MotionTrajectory& a, const so3::MotionTrajectory& b) {
    if (a.R.size() != b.R.size()) fail("invalid-argument", "trajectory size mismatch");
    double worst = 0;
    for (std::size_t i = 0; i < a.R.size(); ++i)
        worst = std::max(worst, (a.R[i] - b.R[i]).norm());
    return worst;
}

namespace {

so3::MotionTrajectory sigma_of(const so3::MotionTrajectory& t) {
    Mat3 sig = Mat3::Identity();
    sig(2, 2) = -1;
    so3::MotionTrajectory out = t;
    for (auto& m : out.R) m = sig * m * sig;
    for (auto& m : out.Rdot) m = sig * m * sig;
    for (auto& m : out.Rddot) m = sig * m * sig;
    for (auto& w : out.omega) w = so3::sigma_velocity(w);
    for (auto& w : out.omega_dot) w = so3::sigma_velocity(w);
    return out;
}

}  // namespace

RecoveryResult recover_trajectory(const JetProvider& jets, const SolverConfig& cfg,
                                  const so3::MotionTrajectory* truth) {
    cfg.validate();
    const auto& times = jets.times();
    const std::size_t n = times.size();
    RecoveryResult res;
    res.trajectory.times = times;
    res.steps.resize(n);

    if (jets.config().model == Model::DT) {
        parallel_over(n, cfg.threads, [&](std::size_t i) {
            res.steps[i] = dt_recover_step(jets, i, cfg);
        });
    } else {
        auto series = pb_first_order_series(jets, cfg);
        differentiate_series(series, times, cfg);
        std::vector<ThirdOrderResult> third(n);
        parallel_over(n, cfg.threads, [&](std::size_t i) {
            third[i] = pb_third_order_step(pb_coefficients(jets, i, series, cfg), cfg);
        });
        bool usable = true;
        for (std::size_t i = 0; i < n; ++i) {
            auto& st = res.steps[i];
            st.phi = canonical_phi(series.phi[i]);
            st.zeta = series.zeta[i];
            st.condition = third[i].condition;
            st.residual = third[i].residual;
            st.ambiguity = series.flags[i];
            if (third[i].degenerate) st.ambiguity = Ambiguity::Degenerate;
            if (st.ambiguity != Ambiguity::Unique) usable = false;
        }
        if (usable) {
            std::vector<double> X1(n), X2(n);
            for (std::size_t i = 0; i < n; ++i) {
                X1[i] = third[i].X1;
                X2[i] = third[i].X2;
            }
            const auto rho = rho_sign_continuation(X1, X2, times, cfg);
            for (std::size_t i = 0; i < n; ++i) {
                auto& st = res.steps[i];
                const double rho_cont = rho[i];
                st.rho = rho_cont;  // along the continued azimuth angle
                st.omega_hat = Vec3{rho_cont * std::cos(series.phi[i]),
                                    rho_cont * std::sin(series.phi[i]), series.zeta[i]};
            }
        }
    }

    for (const auto& st : res.steps)
        if (st.ambiguity != Ambiguity::Unique) res.clean = false;

    if (res.clean) {
        std::vector<Vec3> omega(n);
        for (std::size_t i = 0; i < n; ++i) omega[i] = res.steps[i].omega_hat;
        res.trajectory.omega = omega;
        res.trajectory.R = integrate_omega_series(times, omega);
    } else {
        res.trajectory.R.assign(n, Mat3::Identity());
    }

    if (truth && res.clean) {
        so3::MotionTrajectory plain;
        plain.times = times;
        plain.R = truth->R;
        const auto flipped = sigma_of(plain);
        const double d_direct = trajectory_distance(res.trajectory, plain);
        const double d_sigma = trajectory_distance(res.trajectory, flipped);
        if (d_direct <= d_sigma) {
            res.branch = Branch::Direct;
            res.equivalence_distance = d_direct;
        } else {
            res.branch = Branch::Sigma;
            res.equivalence_distance = d_sigma;
        }
    }
    return res;
}

}  // namespace rotrec::recover
