#include "rotrec/so3.hpp"

#include <cmath>

namespace rotrec::so3 {

namespace {

double orthogonality_defect_of(const Mat3& m) {
    return (m.transpose() * m - Mat3::Identity()).norm();
}

Mat3 polar_factor(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
        Mat3 flip = Mat3::Identity();
        flip(2, 2) = -1;
        r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return r;
}

}  // namespace

Rotation::Rotation(const Mat3& m) : m_(m) {
    if (orthogonality_defect_of(m) > 1e-12 * 10 || std::abs(m.determinant() - 1.0) > 1e-11) {
        // allow a little slack over the 1e-12 contract for accumulated products
        if (orthogonality_defect_of(m) > 1e-10 || std::abs(m.determinant() - 1.0) > 1e-10)
            fail("not-a-rotation", "matrix is not special orthogonal");
    }
}

Rotation Rotation::project(const Mat3& m) {
    return Rotation(polar_factor(m), unchecked_tag{});
}

Rotation Rotation::transposed() const {
    return Rotation(Mat3(m_.transpose()), unchecked_tag{});
}

double Rotation::orthogonality_defect() const {
    return orthogonality_defect_of(m_);
}

CylVector to_cylindrical(const Vec3& v) {
    CylVector c;
    c.zeta = v.z();
    const double r = std::hypot(v.x(), v.y());
    if (r == 0.0) return c;  // canonical phi = 0 at rho = 0
    const double a = std::atan2(v.y(), v.x());
    if (a < 0) {
        c.phi = a + kPi;
        c.rho = -r;
    } else if (a >= kPi) {  // atan2 returns +pi for (x<0, y=+0)
        c.phi = 0.0;
        c.rho = -r;
    } else {
        c.phi = a;
        c.rho = r;
    }
    return c;
}

Vec3 from_cylindrical(const CylVector& c) {
    return {c.rho * std::cos(c.phi), c.rho * std::sin(c.phi), c.zeta};
}

Rotation rodrigues(const Vec3& axis, double angle) {
    if (std::abs(axis.norm() - 1.0) > 1e-12)
        fail("invalid-argument", "rodrigues axis must be a unit vector");
    const Mat3 k = skew(axis);
    Mat3 m = Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
    return Rotation::project(m);
}

Vec3 angular_velocity(const Rotation& r, const Mat3& rdot) {
    const Mat3 a = r.matrix().transpose() * rdot;
    const double sym = (a + a.transpose()).cwiseAbs().maxCoeff();
    if (sym > 1e-8)
        fail("inconsistent-derivative", "R^T Rdot is not antisymmetric within 1e-8");
    return vee(0.5 * (a - a.transpose()));
}

Rotation sigma_conjugate(const Rotation& r) {
    Mat3 sigma = Mat3::Identity();
    sigma(2, 2) = -1;
    return Rotation::project(sigma * r.matrix() * sigma);
}

Vec3 sigma_velocity(const Vec3& w) { return {-w.x(), -w.y(), w.z()}; }

namespace {

Mat3 rk4_step(const Mat3& r, double t, double h, const OmegaFn& omega) {
    auto f = [&](double tt, const Mat3& rr) -> Mat3 { return rr * skew(omega(tt)); };
    const Mat3 k1 = f(t, r);
    const Mat3 k2 = f(t + h / 2, r + (h / 2) * k1);
    const Mat3 k3 = f(t + h / 2, r + (h / 2) * k2);
    const Mat3 k4 = f(t + h, r + h * k3);
    return r + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace

MotionTrajectory motion_kinematics(const OmegaFn& omega, const OmegaFn& omega_dot,
                                   const std::vector<double>& grid) {
    if (grid.size() < 2) fail("invalid-argument", "time grid needs at least 2 points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) fail("invalid-argument", "time grid must be strictly increasing");

    MotionTrajectory traj;
    traj.times = grid;
    traj.R.reserve(grid.size());
    Mat3 r = Mat3::Identity();
    traj.R.push_back(r);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double h = grid[i + 1] - grid[i];
        Mat3 raw = rk4_step(r, grid[i], h, omega);
        if ((raw.transpose() * raw - Mat3::Identity()).norm() > 1e-6)
            fail("step-too-large", "orthogonality drift exceeded 1e-6 before projection");
        r = Rotation::project(raw).matrix();
        traj.R.push_back(r);
    }
    traj.Rdot.resize(grid.size());
    traj.Rddot.resize(grid.size());
    traj.omega.resize(grid.size());
    traj.omega_dot.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 w = omega(grid[i]);
        const Vec3 wd = omega_dot(grid[i]);
        traj.omega[i] = w;
        traj.omega_dot[i] = wd;
        traj.Rdot[i] = traj.R[i] * skew(w);
        traj.Rddot[i] = traj.R[i] * (skew(w) * skew(w) + skew(wd));
    }
    return traj;
}

NondegeneracyCertificate nondegeneracy_certificate(const MotionTrajectory& traj,
                                                   std::size_t t_index) {
    if (t_index >= traj.size() || traj.Rdot.size() != traj.size() ||
        traj.Rddot.size() != traj.size())
        fail("insufficient-data", "trajectory lacks derivatives at the requested index");

    const Vec3 e3{0, 0, 1};
    Mat3 cols;
    cols.col(0) = traj.R[t_index] * e3;
    cols.col(1) = traj.Rdot[t_index] * e3;
    cols.col(2) = traj.Rddot[t_index] * e3;

    NondegeneracyCertificate cert;
    cert.det = cols.determinant();
    if (traj.omega.size() == traj.size() && traj.omega_dot.size() == traj.size()) {
        const Vec3 w = traj.omega[t_index];
        const Vec3 wd = traj.omega_dot[t_index];
        const double rho2 = w.x() * w.x() + w.y() * w.y();
        // rho^2 (zeta + phi') = rho^2 zeta + (w1 w2' - w2 w1')
        cert.cyl = rho2 * w.z() + (w.x() * wd.y() - w.y() * wd.x());
    } else {
        cert.cyl = cert.det;
    }
    return cert;
}

MotionTrajectory MotionModel::sample(const std::vector<double>& grid) const {
    MotionTrajectory traj;
    traj.times = grid;
    traj.R.reserve(grid.size());
    for (double t : grid) {
        traj.R.push_back(R(t).matrix());
        traj.Rdot.push_back(Rdot(t));
        traj.Rddot.push_back(Rddot(t));
        traj.omega.push_back(omega(t));
        traj.omega_dot.push_back(omega_dot(t));
    }
    return traj;
}

AnalyticOmegaMotion::AnalyticOmegaMotion(OmegaFn omega, OmegaFn omega_dot, double t0,
                                         double t1, std::size_t cache_steps)
    : om_(std::move(omega)), omd_(std::move(omega_dot)), t0_(t0), t1_(t1) {
    if (!(t1 > t0)) fail("invalid-argument", "t_end must exceed t_start");
    if (cache_steps < 2) cache_steps = 2;
    h_ = (t1 - t0) / static_cast<double>(cache_steps);
    cache_.reserve(cache_steps + 1);
    Mat3 r = Mat3::Identity();
    cache_.push_back(r);
    for (std::size_t i = 0; i < cache_steps; ++i) {
        r = Rotation::project(rk4_step(r, t0 + i * h_, h_, om_)).matrix();
        cache_.push_back(r);
    }
}

Rotation AnalyticOmegaMotion::R(double t) const {
    if (t < t0_ - 1e-9 || t > t1_ + 1e-3)
        fail("invalid-argument", "time outside motion span");
    double s = (t - t0_) / h_;
    auto i = static_cast<std::ptrdiff_t>(std::floor(s));
    if (i < 0) i = 0;
    if (i >= static_cast<std::ptrdiff_t>(cache_.size() - 1))
        i = static_cast<std::ptrdiff_t>(cache_.size() - 1);
    const double tn = t0_ + i * h_;
    Mat3 r = cache_[static_cast<std::size_t>(i)];
    const double dt = t - tn;
    if (std::abs(dt) > 1e-15) r = rk4_step(r, tn, dt, om_);
    return Rotation::project(r);
}

Mat3 AnalyticOmegaMotion::Rdot(double t) const { return R(t).matrix() * skew(om_(t)); }

Mat3 AnalyticOmegaMotion::Rddot(double t) const {
    const Mat3 w = skew(om_(t));
    return R(t).matrix() * (w * w + skew(omd_(t)));
}

AxisCompositeMotion::AxisCompositeMotion(const Vec3& axis, ScalarC2 alpha, ScalarC2 beta,
                                         double t0, double t1)
    : v_(axis), a_(std::move(alpha)), b_(std::move(beta)), t0_(t0), t1_(t1) {
    if (std::abs(axis.norm() - 1.0) > 1e-12)
        fail("invalid-argument", "composite motion axis must be a unit vector");
}

Rotation AxisCompositeMotion::R(double t) const {
    const Mat3 A = rodrigues(v_, a_.f(t)).matrix();
    const Mat3 B = rodrigues(Vec3{0, 0, 1}, b_.f(t)).matrix();
    return Rotation::project(A * B);
}

Mat3 AxisCompositeMotion::Rdot(double t) const {
    const Mat3 A = rodrigues(v_, a_.f(t)).matrix();
    const Mat3 B = rodrigues(Vec3{0, 0, 1}, b_.f(t)).matrix();
    const Mat3 kv = skew(v_);
    const Mat3 k3 = skew(Vec3{0, 0, 1});
    return a_.d1(t) * A * kv * B + b_.d1(t) * A * B * k3;
}

Mat3 AxisCompositeMotion::Rddot(double t) const {
    const Mat3 A = rodrigues(v_, a_.f(t)).matrix();
    const Mat3 B = rodrigues(Vec3{0, 0, 1}, b_.f(t)).matrix();
    const Mat3 kv = skew(v_);
    const Mat3 k3 = skew(Vec3{0, 0, 1});
    const double ad = a_.d1(t), add = a_.d2(t), bd = b_.d1(t), bdd = b_.d2(t);
    return add * A * kv * B + ad * ad * A * kv * kv * B + 2 * ad * bd * A * kv * B * k3 +
           bdd * A * B * k3 + bd * bd * A * B * k3 * k3;
}

Vec3 AxisCompositeMotion::omega(double t) const {
    const Mat3 Bt = rodrigues(Vec3{0, 0, 1}, b_.f(t)).matrix().transpose();
    return a_.d1(t) * Bt * v_ + Vec3{0, 0, b_.d1(t)};
}

Vec3 AxisCompositeMotion::omega_dot(double t) const {
    const Mat3 Bt = rodrigues(Vec3{0, 0, 1}, b_.f(t)).matrix().transpose();
    const Mat3 k3 = skew(Vec3{0, 0, 1});
    return a_.d2(t) * Bt * v_ - a_.d1(t) * b_.d1(t) * k3 * (Bt * v_) + Vec3{0, 0, b_.d2(t)};
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t n_steps) {
    if (n_steps < 2) fail("invalid-argument", "grid needs at least 2 points");
    std::vector<double> g(n_steps);
    for (std::size_t i = 0; i < n_steps; ++i)
        g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n_steps - 1);
    return g;
}

}  // namespace rotrec::so3
