#include "rotrec/forward.hpp"

#include <algorithm>
#include <cmath>

#include "rotrec/rng.hpp"

namespace rotrec::forward {

void ModelConfig::validate() const {
    if (model == Model::DT) {
        if (!(k0 > 0)) fail("invalid-argument", "DT config needs k0 > 0");
        for (double mu : samples)
            if (std::abs(mu) > 0.9 * k0)
                fail("invalid-argument", "DT samples must satisfy |mu| <= 0.9 k0");
    }
    if (samples.empty()) fail("invalid-argument", "config needs radial samples");
    if (backend == Backend::FiniteDifference && (fd_dt <= 0 || fd_dk <= 0))
        fail("invalid-argument", "finite-difference steps must be positive");
    if (phi_lines < 8) fail("invalid-argument", "need at least 8 azimuth lines");
}

std::vector<double> default_samples(Model model, double k0, std::size_t n) {
    // symmetric grid without 0 (the origin carries no directional signal)
    const double top = model == Model::DT ? 0.88 * k0 : k0;
    std::vector<double> s;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = -top + 2.0 * top * static_cast<double>(i) / static_cast<double>(n - 1);
        if (std::abs(x) > 1e-12 * top) s.push_back(x);
    }
    return s;
}

Vec3 lift_frequency(const ModelConfig& cfg, const Vec2& k) {
    if (cfg.model == Model::PB) return lift2(k);
    const double n = k.norm();
    if (n >= cfg.k0) fail("out-of-band", "DT frequency outside B_{k0}");
    return {k.x(), k.y(), dt_height(cfg.k0, n)};
}

cplx measure(const phantom::SpectralProvider& f, const so3::Rotation& R,
             const ModelConfig& cfg, const Vec2& k) {
    return f.eval(R.matrix() * lift_frequency(cfg, k), 0).value;
}

namespace {

// Derivatives of the lift L(k) = (k, h(||k||)) (third component only; the
// in-plane components are linear). For PB all of these vanish.
struct LiftDerivs {
    Vec3 L;
    Eigen::Matrix<double, 3, 2> DL;  // columns: dL/dk_j
    double D2[2][2];                 // second derivs of L3
    double D3[2][2][2];              // third derivs of L3
};

LiftDerivs lift_derivs(const ModelConfig& cfg, const Vec2& k) {
    LiftDerivs out{};
    out.L = lift_frequency(cfg, k);
    out.DL.setZero();
    out.DL(0, 0) = 1;
    out.DL(1, 1) = 1;
    for (auto& row : out.D2)
        for (auto& x : row) x = 0;
    for (auto& pl : out.D3)
        for (auto& row : pl)
            for (auto& x : row) x = 0;
    if (cfg.model == Model::PB) return out;

    const double a2 = cfg.k0 * cfg.k0 - k.squaredNorm();
    const double a = 1.0 / std::sqrt(a2);  // (k0^2-||k||^2)^{-1/2}
    const double a3 = a * a * a;
    const double a5 = a3 * a * a;
    out.DL(2, 0) = -k.x() * a;
    out.DL(2, 1) = -k.y() * a;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.D2[i][j] = -(i == j ? a : 0.0) - k(i) * k(j) * a3;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l) {
                double v = -3.0 * k(i) * k(j) * k(l) * a5;
                if (i == j) v -= k(l) * a3;
                if (i == l) v -= k(j) * a3;
                if (j == l) v -= k(i) * a3;
                out.D3[i][j][l] = v;
            }
    return out;
}

}  // namespace

MeasurementJet analytic_jet(const phantom::SpectralProvider& f, const so3::MotionModel& motion,
                            const ModelConfig& cfg, double t, const Vec2& k, unsigned mask) {
    const auto ld = lift_derivs(cfg, k);
    const Mat3 R = motion.R(t).matrix();
    const Mat3 Rd = motion.Rdot(t);
    const Mat3 Rdd = motion.Rddot(t);

    int order = 1;
    if (mask & (JetHessK | JetDtGradK)) order = 2;
    if (mask & (JetThirdK | JetDtHessK | JetDttGradK)) order = 3;
    const auto fd = f.eval(R * ld.L, order);

    auto c1 = [&](const Vec3& a) -> cplx {
        cplx acc = 0;
        for (int i = 0; i < 3; ++i) acc += fd.grad(i) * a(i);
        return acc;
    };
    auto c2 = [&](const Vec3& a, const Vec3& b) -> cplx {
        cplx acc = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) acc += fd.hess(i, j) * a(i) * b(j);
        return acc;
    };
    auto c3 = [&](const Vec3& a, const Vec3& b, const Vec3& c) -> cplx {
        cplx acc = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int l = 0; l < 3; ++l) acc += fd.d3(i, j, l) * a(i) * b(j) * c(l);
        return acc;
    };

    // tangent/curvature vectors of the lifted line pushed through R
    const Vec3 RdL = Rd * ld.L;
    const Vec3 RddL = Rdd * ld.L;
    std::array<Vec3, 2> RDL, RdDL, RddDL;
    for (int j = 0; j < 2; ++j) {
        const Vec3 col = ld.DL.col(j);
        RDL[static_cast<std::size_t>(j)] = R * col;
        RdDL[static_cast<std::size_t>(j)] = Rd * col;
        RddDL[static_cast<std::size_t>(j)] = Rdd * col;
    }
    auto D2vec = [&](int i, int j) { return Vec3{0, 0, ld.D2[i][j]}; };
    auto D3vec = [&](int i, int j, int l) { return Vec3{0, 0, ld.D3[i][j][l]}; };

    MeasurementJet out;
    if (mask & JetValue) out.value = fd.value;
    if (mask & JetDt) out.dt = c1(RdL);
    if (mask & JetGradK)
        for (int j = 0; j < 2; ++j) out.grad_k(j) = c1(RDL[static_cast<std::size_t>(j)]);
    if (mask & JetHessK)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                out.hess_k(i, j) =
                    c2(RDL[static_cast<std::size_t>(i)], RDL[static_cast<std::size_t>(j)]) +
                    c1(R * D2vec(i, j));
    if (mask & JetThirdK)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int l = 0; l < 2; ++l)
                    out.third_k[static_cast<std::size_t>(i)](j, l) =
                        c3(RDL[static_cast<std::size_t>(i)], RDL[static_cast<std::size_t>(j)],
                           RDL[static_cast<std::size_t>(l)]) +
                        c2(R * D2vec(i, j), RDL[static_cast<std::size_t>(l)]) +
                        c2(R * D2vec(i, l), RDL[static_cast<std::size_t>(j)]) +
                        c2(R * D2vec(j, l), RDL[static_cast<std::size_t>(i)]) +
                        c1(R * D3vec(i, j, l));
    if (mask & JetDtGradK)
        for (int j = 0; j < 2; ++j)
            out.dt_grad_k(j) =
                c2(RdL, RDL[static_cast<std::size_t>(j)]) + c1(RdDL[static_cast<std::size_t>(j)]);
    if (mask & JetDtHessK)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                out.dt_hess_k(i, j) =
                    c3(RdL, RDL[static_cast<std::size_t>(i)], RDL[static_cast<std::size_t>(j)]) +
                    c2(RdDL[static_cast<std::size_t>(i)], RDL[static_cast<std::size_t>(j)]) +
                    c2(RDL[static_cast<std::size_t>(i)], RdDL[static_cast<std::size_t>(j)]) +
                    c2(RdL, R * D2vec(i, j)) + c1(Rd * D2vec(i, j));
    if (mask & JetDttGradK)
        for (int j = 0; j < 2; ++j)
            out.dtt_grad_k(j) = c3(RdL, RdL, RDL[static_cast<std::size_t>(j)]) +
                                c2(RddL, RDL[static_cast<std::size_t>(j)]) +
                                2.0 * c2(RdL, RdDL[static_cast<std::size_t>(j)]) +
                                c1(RddDL[static_cast<std::size_t>(j)]);
    return out;
}

namespace {

struct Stencil {
    // offsets (in units of the step) and weights; weight scale applied later
    std::vector<std::pair<int, double>> taps;
    int order;  // derivative order (for the h^order division)
};

const Stencil& stencil_d0() {
    static const Stencil s{{{0, 1.0}}, 0};
    return s;
}
const Stencil& stencil_d1_o2() {
    static const Stencil s{{{-1, -0.5}, {1, 0.5}}, 1};
    return s;
}
const Stencil& stencil_d2_o2() {
    static const Stencil s{{{-1, 1.0}, {0, -2.0}, {1, 1.0}}, 2};
    return s;
}
const Stencil& stencil_d1_o4() {
    static const Stencil s{{{-2, 1.0 / 12}, {-1, -8.0 / 12}, {1, 8.0 / 12}, {2, -1.0 / 12}}, 1};
    return s;
}
const Stencil& stencil_d2_o4() {
    static const Stencil s{
        {{-2, -1.0 / 12}, {-1, 16.0 / 12}, {0, -30.0 / 12}, {1, 16.0 / 12}, {2, -1.0 / 12}}, 2};
    return s;
}
const Stencil& stencil_d3_o4() {
    static const Stencil s{{{-3, 1.0 / 8},
                            {-2, -1.0},
                            {-1, 13.0 / 8},
                            {1, -13.0 / 8},
                            {2, 1.0},
                            {3, -1.0 / 8}},
                           3};
    return s;
}

// product stencil over (t, k1, k2) axes
cplx apply_stencil(const SampleFn& sample, double t, const Vec2& k, double dt, double dk,
                   const Stencil& st, const Stencil& s1, const Stencil& s2) {
    cplx acc = 0;
    for (const auto& [ot, wt] : st.taps)
        for (const auto& [o1, w1] : s1.taps)
            for (const auto& [o2, w2] : s2.taps)
                acc += wt * w1 * w2 *
                       sample(t + ot * dt, Vec2{k.x() + o1 * dk, k.y() + o2 * dk});
    const double scale = std::pow(dt, st.order) * std::pow(dk, s1.order + s2.order);
    return acc / scale;
}

}  // namespace

MeasurementJet fd_jet(const SampleFn& sample, double t, const Vec2& k, double dt, double dk,
                      unsigned mask) {
    MeasurementJet out;
    const auto& d0 = stencil_d0();
    if (mask & JetValue) out.value = apply_stencil(sample, t, k, dt, dk, d0, d0, d0);
    if (mask & JetDt) out.dt = apply_stencil(sample, t, k, dt, dk, stencil_d1_o2(), d0, d0);
    auto axis = [&](int j, const Stencil& s) {
        return j == 0 ? std::make_pair(std::cref(s), std::cref(d0))
                      : std::make_pair(std::cref(d0), std::cref(s));
    };
    if (mask & JetGradK)
        for (int j = 0; j < 2; ++j) {
            auto [s1, s2] = axis(j, stencil_d1_o4());
            out.grad_k(j) = apply_stencil(sample, t, k, dt, dk, d0, s1, s2);
        }
    if (mask & JetHessK) {
        out.hess_k(0, 0) = apply_stencil(sample, t, k, dt, dk, d0, stencil_d2_o4(), d0);
        out.hess_k(1, 1) = apply_stencil(sample, t, k, dt, dk, d0, d0, stencil_d2_o4());
        out.hess_k(0, 1) = out.hess_k(1, 0) =
            apply_stencil(sample, t, k, dt, dk, d0, stencil_d1_o4(), stencil_d1_o4());
    }
    if (mask & JetThirdK) {
        const auto& d1 = stencil_d1_o4();
        const auto& d2 = stencil_d2_o4();
        const auto& d3 = stencil_d3_o4();
        const cplx t300 = apply_stencil(sample, t, k, dt, dk, d0, d3, d0);
        const cplx t030 = apply_stencil(sample, t, k, dt, dk, d0, d0, d3);
        const cplx t210 = apply_stencil(sample, t, k, dt, dk, d0, d2, d1);
        const cplx t120 = apply_stencil(sample, t, k, dt, dk, d0, d1, d2);
        auto set3 = [&](int i, int j, int l, cplx v) {
            out.third_k[static_cast<std::size_t>(i)](j, l) = v;
        };
        set3(0, 0, 0, t300);
        set3(1, 1, 1, t030);
        set3(0, 0, 1, t210);
        set3(0, 1, 0, t210);
        set3(1, 0, 0, t210);
        set3(0, 1, 1, t120);
        set3(1, 0, 1, t120);
        set3(1, 1, 0, t120);
    }
    if (mask & JetDtGradK)
        for (int j = 0; j < 2; ++j) {
            auto [s1, s2] = axis(j, stencil_d1_o4());
            out.dt_grad_k(j) = apply_stencil(sample, t, k, dt, dk, stencil_d1_o2(), s1, s2);
        }
    if (mask & JetDtHessK) {
        out.dt_hess_k(0, 0) =
            apply_stencil(sample, t, k, dt, dk, stencil_d1_o2(), stencil_d2_o4(), d0);
        out.dt_hess_k(1, 1) =
            apply_stencil(sample, t, k, dt, dk, stencil_d1_o2(), d0, stencil_d2_o4());
        out.dt_hess_k(0, 1) = out.dt_hess_k(1, 0) = apply_stencil(
            sample, t, k, dt, dk, stencil_d1_o2(), stencil_d1_o4(), stencil_d1_o4());
    }
    if (mask & JetDttGradK)
        for (int j = 0; j < 2; ++j) {
            auto [s1, s2] = axis(j, stencil_d1_o4());
            out.dtt_grad_k(j) = apply_stencil(sample, t, k, dt, dk, stencil_d2_o2(), s1, s2);
        }
    return out;
}

AnalyticJetProvider::AnalyticJetProvider(std::shared_ptr<const phantom::SpectralProvider> f,
                                         std::shared_ptr<const so3::MotionModel> motion,
                                         ModelConfig cfg, std::vector<double> times)
    : f_(std::move(f)), motion_(std::move(motion)), cfg_(std::move(cfg)),
      times_(std::move(times)) {
    cfg_.validate();
}

MeasurementJet AnalyticJetProvider::jet(std::size_t t_index, const Vec2& k,
                                        unsigned mask) const {
    return analytic_jet(*f_, *motion_, cfg_, times_.at(t_index), k, mask);
}

FdJetProvider::FdJetProvider(std::shared_ptr<const phantom::SpectralProvider> f,
                             std::shared_ptr<const so3::MotionModel> motion, ModelConfig cfg,
                             std::vector<double> times, std::optional<NoiseField> noise)
    : f_(std::move(f)), motion_(std::move(motion)), cfg_(std::move(cfg)),
      times_(std::move(times)), noise_(std::move(noise)) {
    cfg_.validate();
}

cplx FdJetProvider::sample(double t, const Vec2& k) const {
    cplx v = measure(*f_, motion_->R(t), cfg_, k);
    if (noise_ && noise_->level > 0) {
        const cplx g = keyed_complex_normal(noise_->seed, bits_of(t),
                                            bits_of(k.x()), bits_of(k.y()));
        v += noise_->level * noise_->rms_ref * g / std::sqrt(2.0);
    }
    return v;
}

MeasurementJet FdJetProvider::jet(std::size_t t_index, const Vec2& k, unsigned mask) const {
    const double t = times_.at(t_index);
    return fd_jet([this](double tt, const Vec2& kk) { return sample(tt, kk); }, t, k,
                  cfg_.fd_dt, cfg_.fd_dk, mask);
}

double MeasurementSet::rms() const {
    if (values.empty()) return 0;
    double acc = 0;
    for (const cplx& v : values) acc += std::norm(v);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

MeasurementSet synthesize(const phantom::SpectralProvider& f, const so3::MotionModel& motion,
                          const ModelConfig& cfg, const std::vector<double>& grid) {
    cfg.validate();
    MeasurementSet ms;
    ms.cfg = cfg;
    ms.times = grid;
    ms.phi_grid.resize(cfg.phi_lines);
    for (std::size_t c = 0; c < cfg.phi_lines; ++c)
        ms.phi_grid[c] = kPi * static_cast<double>(c) / static_cast<double>(cfg.phi_lines);
    ms.values.resize(grid.size() * ms.lines() * ms.samples_per_line());
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
        const so3::Rotation R = motion.R(grid[ti]);
        for (std::size_t c = 0; c < ms.lines(); ++c) {
            const Vec2 phi{std::cos(ms.phi_grid[c]), std::sin(ms.phi_grid[c])};
            for (std::size_t s = 0; s < ms.samples_per_line(); ++s)
                ms.at(ti, c, s) = measure(f, R, cfg, cfg.samples[s] * phi);
        }
    }
    return ms;
}

MeasurementSet add_noise(const MeasurementSet& ms, double level, std::uint64_t seed) {
    if (level < 0) fail("invalid-argument", "noise level must be nonnegative");
    MeasurementSet out = ms;
    if (level == 0) return out;
    const double sigma = level * ms.rms();
    const std::size_t per_t = ms.lines() * ms.samples_per_line();
    for (std::size_t ti = 0; ti < ms.times.size(); ++ti)
        for (std::size_t s = 0; s < per_t; ++s) {
            const cplx g = keyed_complex_normal(seed, ti, s);
            out.values[ti * per_t + s] += sigma * g / std::sqrt(2.0);
        }
    out.noise = NoiseRecord{level, seed, ms.rms()};
    return out;
}

namespace {

// in-plane directions of the common line seen from each slice
std::pair<Vec2, Vec2> common_line_dirs(const Mat3& Rs, const Mat3& Rt) {
    const Vec3 e3{0, 0, 1};
    const Vec3 a = e3.cross(Rt.transpose() * (Rs * e3));
    if (a.norm() < 1e-12) fail("degenerate-pair", "slice normals are parallel");
    const Vec3 b = e3.cross(Rs.transpose() * (Rt * e3));
    return {Vec2{a.x(), a.y()}, Vec2{-b.x(), -b.y()}};
}

}  // namespace

double verify_common_line(const phantom::SpectralProvider& f, const so3::MotionTrajectory& traj,
                          std::size_t s_index, std::size_t t_index,
                          const std::vector<double>& lambdas) {
    if (s_index == t_index) fail("degenerate-pair", "need two distinct time steps");
    ModelConfig pb;
    pb.model = Model::PB;
    pb.samples = {1.0};
    const Mat3& Rt = traj.R.at(t_index);
    const Mat3& Rs = traj.R.at(s_index);
    const auto [dir_t, dir_s] = common_line_dirs(Rs, Rt);
    double worst = 0;
    for (double lam : lambdas) {
        const cplx left = measure(f, so3::Rotation::project(Rt), pb, lam * dir_t);
        const cplx right = measure(f, so3::Rotation::project(Rs), pb, lam * dir_s);
        worst = std::max(worst, std::abs(left - right));
    }
    return worst;
}

namespace {

// Catmull-Rom kernel
double cr_w(double s) {
    s = std::abs(s);
    if (s < 1) return 1.5 * s * s * s - 2.5 * s * s + 1;
    if (s < 2) return -0.5 * s * s * s + 2.5 * s * s - 4 * s + 2;
    return 0;
}

class Grid2c {
public:
    Grid2c(std::size_t n, double kmax) : n_(n), kmax_(kmax), v_(n * n) {}
    cplx& at(std::size_t i, std::size_t j) { return v_[i * n_ + j]; }
    cplx at(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
    double coord(std::size_t i) const {
        return -kmax_ + 2 * kmax_ * static_cast<double>(i) / static_cast<double>(n_ - 1);
    }
    cplx interp(const Vec2& k) const {
        const double h = 2 * kmax_ / static_cast<double>(n_ - 1);
        const double x = (k.x() + kmax_) / h;
        const double y = (k.y() + kmax_) / h;
        const auto ix = static_cast<std::ptrdiff_t>(std::floor(x));
        const auto iy = static_cast<std::ptrdiff_t>(std::floor(y));
        if (ix < 1 || iy < 1 || ix + 2 >= static_cast<std::ptrdiff_t>(n_) ||
            iy + 2 >= static_cast<std::ptrdiff_t>(n_))
            fail("out-of-grid", "interpolation stencil leaves the sampled grid");
        cplx acc = 0;
        for (int a = -1; a <= 2; ++a)
            for (int b = -1; b <= 2; ++b)
                acc += cr_w(x - static_cast<double>(ix + a)) *
                       cr_w(y - static_cast<double>(iy + b)) *
                       at(static_cast<std::size_t>(ix + a), static_cast<std::size_t>(iy + b));
        return acc;
    }

private:
    std::size_t n_;
    double kmax_;
    std::vector<cplx> v_;
};

}  // namespace

double verify_common_line_interpolated(const phantom::SpectralProvider& f,
                                       const so3::MotionTrajectory& traj, std::size_t s_index,
                                       std::size_t t_index, const std::vector<double>& lambdas,
                                       std::size_t grid_n, double k_max) {
    if (s_index == t_index) fail("degenerate-pair", "need two distinct time steps");
    ModelConfig pb;
    pb.model = Model::PB;
    pb.samples = {1.0};
    const Mat3& Rt = traj.R.at(t_index);
    const Mat3& Rs = traj.R.at(s_index);
    auto snapshot = [&](const Mat3& R) {
        Grid2c g(grid_n, k_max);
        for (std::size_t i = 0; i < grid_n; ++i)
            for (std::size_t j = 0; j < grid_n; ++j)
                g.at(i, j) = measure(f, so3::Rotation::project(R), pb,
                                     Vec2{g.coord(i), g.coord(j)});
        return g;
    };
    const Grid2c gt = snapshot(Rt);
    const Grid2c gs = snapshot(Rs);
    auto [dir_t, dir_s] = common_line_dirs(Rs, Rt);
    dir_t.normalize();
    dir_s.normalize();
    double worst = 0;
    for (double lam : lambdas)
        worst = std::max(worst, std::abs(gt.interp(lam * dir_t) - gs.interp(lam * dir_s)));
    return worst;
}

}  // namespace rotrec::forward
