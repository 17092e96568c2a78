#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rotrec/common.hpp"

namespace rotrec::so3 {

// Orientation of the object at one instant. Wraps a 3x3 special-orthogonal
// matrix; construction validates R^T R = I and det R = 1 to 1e-12.
class Rotation {
public:
    Rotation() : m_(Mat3::Identity()) {}
    explicit Rotation(const Mat3& m);

    static Rotation identity() { return Rotation(); }
    // Nearest rotation in Frobenius norm (polar factor).
    static Rotation project(const Mat3& m);

    const Mat3& matrix() const { return m_; }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    Rotation transposed() const;

    double orthogonality_defect() const;

private:
    struct unchecked_tag {};
    Rotation(const Mat3& m, unchecked_tag) : m_(m) {}
    Mat3 m_;
};

// Angular velocity (or any 3-vector) in the signed-radius cylindrical
// convention: x = (rho cos(phi), rho sin(phi), zeta) with phi in [0,pi).
struct CylVector {
    double rho = 0;
    double phi = 0;
    double zeta = 0;

    Vec2 azimuth() const { return {std::cos(phi), std::sin(phi)}; }
    Vec2 azimuth_perp() const { return {-std::sin(phi), std::cos(phi)}; }
};

CylVector to_cylindrical(const Vec3& v);
Vec3 from_cylindrical(const CylVector& c);

// R_w(alpha): rotation about the unit axis w by angle alpha.
Rotation rodrigues(const Vec3& axis, double angle);

// The unique w with (R^T Rdot) y = w x y. Requires R^T Rdot antisymmetric
// to 1e-8 (max-abs of the symmetric part), else inconsistent-derivative.
Vec3 angular_velocity(const Rotation& r, const Mat3& rdot);

// Sigma = diag(1,1,-1) conjugation and the induced velocity map -Sigma w.
Rotation sigma_conjugate(const Rotation& r);
Vec3 sigma_velocity(const Vec3& w);

// Sampled motion with first and second derivatives and the generating
// angular velocity where known.
struct MotionTrajectory {
    std::vector<double> times;
    std::vector<Mat3> R;
    std::vector<Mat3> Rdot;
    std::vector<Mat3> Rddot;
    std::vector<Vec3> omega;
    std::vector<Vec3> omega_dot;

    std::size_t size() const { return times.size(); }
};

using OmegaFn = std::function<Vec3(double)>;

// Integrates R' = R [omega]_x with classical RK4 and per-step polar
// re-projection, starting from R(grid[0]) = I; Rdot/Rddot are filled
// analytically from omega and omega_dot. Raises step-too-large if the raw
// RK4 update drifts from orthogonality by more than 1e-6 before projection.
MotionTrajectory motion_kinematics(const OmegaFn& omega, const OmegaFn& omega_dot,
                                   const std::vector<double>& grid);

struct NondegeneracyCertificate {
    double det = 0;  // det(R e3, R' e3, R'' e3)
    double cyl = 0;  // rho^2 (zeta + phi'), from omega / omega' directly
};

NondegeneracyCertificate nondegeneracy_certificate(const MotionTrajectory& traj,
                                                   std::size_t t_index);

// phi' of the azimuth angle of (w1,w2) as a wrap-free expression; zero when
// the planar part vanishes.
inline double azimuth_rate(const Vec3& w, const Vec3& wdot) {
    const double r2 = w.x() * w.x() + w.y() * w.y();
    if (r2 == 0.0) return 0.0;
    return (w.x() * wdot.y() - w.y() * wdot.x()) / r2;
}

// d/dt of the signed radius, valid for either sign convention.
inline double radius_rate(const Vec3& w, const Vec3& wdot, double rho) {
    if (rho == 0.0) return std::sqrt(wdot.x() * wdot.x() + wdot.y() * wdot.y());
    return (w.x() * wdot.x() + w.y() * wdot.y()) / rho;
}

// Continuous-time motion usable at arbitrary t within its span: exact for
// closed-form families, cached-RK4 for integrated ones.
class MotionModel {
public:
    virtual ~MotionModel() = default;
    virtual Rotation R(double t) const = 0;
    virtual Mat3 Rdot(double t) const = 0;
    virtual Mat3 Rddot(double t) const = 0;
    virtual Vec3 omega(double t) const = 0;
    virtual Vec3 omega_dot(double t) const = 0;
    virtual double t_start() const = 0;
    virtual double t_end() const = 0;

    MotionTrajectory sample(const std::vector<double>& grid) const;
};

// Motion defined by closed-form omega(t), omega'(t); R(t) comes from a fine
// cached RK4 integration plus one local step to off-node times.
class AnalyticOmegaMotion : public MotionModel {
public:
    AnalyticOmegaMotion(OmegaFn omega, OmegaFn omega_dot, double t0, double t1,
                        std::size_t cache_steps = 2000);

    Rotation R(double t) const override;
    Mat3 Rdot(double t) const override;
    Mat3 Rddot(double t) const override;
    Vec3 omega(double t) const override { return om_(t); }
    Vec3 omega_dot(double t) const override { return omd_(t); }
    double t_start() const override { return t0_; }
    double t_end() const override { return t1_; }

private:
    OmegaFn om_, omd_;
    double t0_, t1_, h_;
    std::vector<Mat3> cache_;
};

// R(t) = R_v(alpha(t)) R_e3(beta(t)) with closed-form derivatives. With
// v orthogonal to e3 this is the degenerate family (det(Re3,R'e3,R''e3)=0).
struct ScalarC2 {
    std::function<double(double)> f, d1, d2;
};

class AxisCompositeMotion : public MotionModel {
public:
    AxisCompositeMotion(const Vec3& axis, ScalarC2 alpha, ScalarC2 beta,
                        double t0, double t1);

    Rotation R(double t) const override;
    Mat3 Rdot(double t) const override;
    Mat3 Rddot(double t) const override;
    Vec3 omega(double t) const override;
    Vec3 omega_dot(double t) const override;
    double t_start() const override { return t0_; }
    double t_end() const override { return t1_; }

private:
    Vec3 v_;
    ScalarC2 a_, b_;
    double t0_, t1_;
};

std::vector<double> uniform_grid(double t0, double t1, std::size_t n_steps);

}  // namespace rotrec::so3
