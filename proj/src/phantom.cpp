#include "rotrec/phantom.hpp"

#include <algorithm>
#include <cmath>

namespace rotrec::phantom {

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)

// q(s) = (sin s - s cos s)/s^3 and scaled derivative combinations that stay
// finite at s = 0. Series branch below s = 0.35, closed forms above.
struct BallRadial {
    double q, qp, qpp, qppp;      // q, q', q'', q'''
    double qp_over_s;             // q'/s
    double cc_over_s;             // (q'' - q'/s)/s
};

BallRadial ball_radial(double s) {
    BallRadial out{};
    if (s < 1e-8) {
        out.q = 1.0 / 3.0;
        out.qp = 0.0;
        out.qp_over_s = -1.0 / 15.0;
        out.qpp = -1.0 / 15.0;
        out.cc_over_s = 0.0;
        out.qppp = 0.0;
        return out;
    }
    if (s < 0.35) {
        // a_n = (-1)^{n+1} 2n/(2n+1)!, q = sum a_n s^{2n-2}
        double a = 2.0 / 6.0;  // n = 1
        double q = 0, qp_s = 0, qpp = 0, qppp_s = 0, cc = 0;
        double s2 = s * s;
        double pw = 1.0;  // s^{2n-2}
        for (int n = 1; n <= 12; ++n) {
            const double m = 2.0 * n - 2.0;
            q += a * pw;
            if (n >= 2) {
                qp_s += a * m * pw / s2;               // q'/s: a m s^{2n-4}
                qpp += a * m * (m - 1.0) * pw / s2;    // a m (2n-3) s^{2n-4}
                cc += a * m * (m - 2.0) * pw / (s2 * s);  // (q''-q'/s)/s
                qppp_s += a * m * (m - 1.0) * (m - 2.0) * pw / (s2 * s);
            }
            // advance a_n -> a_{n+1}: ratio -(2n+2)/((2n)(2n+2)(2n+3)) ... compute directly
            a = a * (-1.0) * (2.0 * n + 2.0) / (2.0 * n) / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
            pw *= s2;
        }
        out.q = q;
        out.qp_over_s = qp_s;
        out.qp = qp_s * s;
        out.qpp = qpp;
        out.cc_over_s = cc;
        out.qppp = qppp_s;
        return out;
    }
    const double sn = std::sin(s), cs = std::cos(s);
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
    out.q = (sn - s * cs) / s3;
    out.qp = sn / s2 - 3.0 * out.q / s;
    out.qpp = (cs / s2 - 2.0 * sn / s3) - 3.0 * out.qp / s + 3.0 * out.q / s2;
    out.qppp = (-sn / s2 - 4.0 * cs / s3 + 6.0 * sn / s4) - 3.0 * out.qpp / s +
               6.0 * out.qp / s2 - 6.0 * out.q / s3;
    out.qp_over_s = out.qp / s;
    out.cc_over_s = (out.qpp - out.qp_over_s) / s;
    return out;
}

// radial profile g(||kappa||) of the blob transform with the combinations
// needed for tensor assembly: B = g'/r and C = (g'' - B)/r stay finite.
struct Radial4 {
    double g0, g1, g2, g3;
    double B, C;
};

Radial4 blob_radial(const BlobProfile& pr, double r) {
    Radial4 out{};
    if (pr.kind == BlobProfile::Kind::BallIndicator) {
        const double eps = pr.radius_or_sigma;
        const double C0 = kSqrt2OverPi * eps * eps * eps;
        const auto b = ball_radial(eps * r);
        out.g0 = C0 * b.q;
        out.g1 = C0 * eps * b.qp;
        out.g2 = C0 * eps * eps * b.qpp;
        out.g3 = C0 * eps * eps * eps * b.qppp;
        out.B = C0 * eps * eps * b.qp_over_s;
        out.C = C0 * eps * eps * eps * b.cc_over_s;
        return out;
    }
    // gaussian: handled directly in kappa space by the caller
    fail("invalid-argument", "blob_radial is only used for the ball profile");
}

struct Tensors {
    cplx v{};
    Vec3c g = Vec3c::Zero();
    Mat3c h = Mat3c::Zero();
    std::array<Mat3c, 3> t = {Mat3c::Zero(), Mat3c::Zero(), Mat3c::Zero()};
};

}  // namespace

cplx blob_transform(const BlobProfile& profile, double kappa_norm) {
    if (profile.kind == BlobProfile::Kind::BallIndicator)
        return blob_radial(profile, kappa_norm).g0;
    const double s = profile.radius_or_sigma;
    return s * s * s * std::exp(-s * s * kappa_norm * kappa_norm / 2.0);
}

Phantom::Phantom(pointset::PointSet points, std::vector<double> weights, BlobProfile profile,
                 double support_radius)
    : points_(std::move(points)), weights_(std::move(weights)), profile_(profile),
      r_s_(support_radius) {
    if (points_.empty() || points_.size() != weights_.size())
        fail("invalid-argument", "points and weights must be nonempty and equal length");
    if (profile_.radius_or_sigma <= 0)
        fail("invalid-argument", "blob radius/sigma must be positive");
    double max_norm = 0;
    for (const auto& p : points_) max_norm = std::max(max_norm, p.norm());
    for (std::size_t i = 0; i < points_.size(); ++i)
        for (std::size_t j = i + 1; j < points_.size(); ++j)
            if ((points_[i] - points_[j]).norm() < 1e-12 * std::max(1.0, max_norm))
                fail("invalid-argument", "phantom points must be pairwise distinct");
    for (double w : weights_)
        if (w == 0.0) fail("invalid-argument", "phantom weights must be nonzero");
    const double blob_r = profile_.support_radius();
    for (const auto& p : points_)
        if (p.norm() + blob_r >= r_s_)
            fail("support-violation", "blob support escapes the object ball");
    Vec3 moment = Vec3::Zero();
    double wsum = 0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        moment += weights_[i] * points_[i];
        wsum = std::max(wsum, std::abs(weights_[i]));
    }
    if (moment.norm() > 1e-12 * std::max(1.0, wsum * max_norm))
        fail("invalid-argument", "first moments do not vanish");
}

Phantom phantom_from_pointset(const pointset::PointSet& points, BlobProfile profile,
                              double support_radius) {
    return Phantom(points, pointset::balance_weights(points), profile, support_radius);
}

SpectralDerivatives Phantom::eval(const Vec3& kappa, int order) const {
    // f-hat = g(||kappa||) * S(kappa), S = sum_j w_j exp(-i<p_j, kappa>)
    Tensors G, S;
    const double r = kappa.norm();

    if (profile_.kind == BlobProfile::Kind::Gaussian) {
        const double s2 = profile_.radius_or_sigma * profile_.radius_or_sigma;
        const double g0 = profile_.radius_or_sigma * s2 * std::exp(-s2 * r * r / 2.0);
        G.v = g0;
        if (order >= 1) G.g = (-s2 * g0) * kappa.cast<cplx>();
        if (order >= 2)
            G.h = (g0 * (s2 * s2 * (kappa * kappa.transpose()).array() -
                         s2 * Mat3::Identity().array()))
                      .matrix()
                      .cast<cplx>();
        if (order >= 3) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    for (int k = 0; k < 3; ++k) {
                        double val = 0;
                        if (j == k) val += kappa(i);
                        if (i == k) val += kappa(j);
                        if (i == j) val += kappa(k);
                        G.t[static_cast<std::size_t>(i)](j, k) =
                            g0 * (s2 * s2 * val - s2 * s2 * s2 * kappa(i) * kappa(j) * kappa(k));
                    }
        }
    } else {
        const auto rad = blob_radial(profile_, r);
        G.v = rad.g0;
        if (r > 1e-300) {
            const Vec3 u = kappa / r;
            if (order >= 1) G.g = (rad.g1 * u).cast<cplx>();
            if (order >= 2)
                G.h = ((rad.g2 - rad.B) * (u * u.transpose()) + rad.B * Mat3::Identity())
                          .cast<cplx>();
            if (order >= 3) {
                const double c3 = rad.g3 - 3.0 * rad.C;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        for (int k = 0; k < 3; ++k) {
                            double val = c3 * u(i) * u(j) * u(k);
                            if (j == k) val += rad.C * u(i);
                            if (i == k) val += rad.C * u(j);
                            if (i == j) val += rad.C * u(k);
                            G.t[static_cast<std::size_t>(i)](j, k) = val;
                        }
            }
        } else {
            // kappa = 0 exactly: grad and third vanish, hessian = B * I
            if (order >= 2) G.h = (rad.B * Mat3::Identity()).cast<cplx>();
        }
    }

    const cplx mi(0, -1);
    for (std::size_t n = 0; n < points_.size(); ++n) {
        const Vec3& p = points_[n];
        const cplx e = weights_[n] * std::exp(mi * p.dot(kappa));
        S.v += e;
        if (order >= 1) S.g += (mi * e) * p.cast<cplx>();
        if (order >= 2) S.h += (-e) * (p * p.transpose()).cast<cplx>();
        if (order >= 3) {
            const cplx c = cplx(0, 1) * e;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    for (int k = 0; k < 3; ++k)
                        S.t[static_cast<std::size_t>(i)](j, k) += c * p(i) * p(j) * p(k);
        }
    }

    SpectralDerivatives out;
    out.value = G.v * S.v;
    if (order >= 1) out.grad = G.g * S.v + G.v * S.g;
    if (order >= 2)
        out.hess = G.h * S.v + G.g * S.g.transpose() + S.g * G.g.transpose() + G.v * S.h;
    if (order >= 3) {
        for (int i = 0; i < 3; ++i) {
            auto& ti = out.third[static_cast<std::size_t>(i)];
            ti = G.t[static_cast<std::size_t>(i)] * S.v + G.v * S.t[static_cast<std::size_t>(i)];
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k)
                    ti(j, k) += G.h(i, j) * S.g(k) + G.h(i, k) * S.g(j) + G.h(j, k) * S.g(i) +
                                S.h(i, j) * G.g(k) + S.h(i, k) * G.g(j) + S.h(j, k) * G.g(i);
        }
    }
    return out;
}

SpectralDerivatives spectral_eval(const Phantom& ph, const Vec3& kappa, int order) {
    if (order < 0 || order > 3) fail("invalid-argument", "spectral order must be 0..3");
    return ph.eval(kappa, order);
}

double Phantom::value_spatial(const Vec3& x) const {
    double acc = 0;
    if (profile_.kind == BlobProfile::Kind::BallIndicator) {
        const double eps = profile_.radius_or_sigma;
        for (std::size_t i = 0; i < points_.size(); ++i)
            if ((x - points_[i]).norm() < eps) acc += weights_[i];
        return acc;
    }
    const double sig = profile_.radius_or_sigma;
    const double cut2 = 36.0 * sig * sig;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const double d2 = (x - points_[i]).squaredNorm();
        if (d2 < cut2) acc += weights_[i] * std::exp(-d2 / (2.0 * sig * sig));
    }
    return acc;
}

double symmetry_residual(const SpectralProvider& f, const Frame& frame,
                         const SymmetrySpec& spec, std::size_t samples) {
    if (std::abs(frame.xi.norm() - 1.0) > 1e-10 || std::abs(frame.eta.norm() - 1.0) > 1e-10 ||
        std::abs(frame.xi.dot(frame.eta)) > 1e-10)
        fail("invalid-argument", "frame must be orthonormal");
    if (samples < 2) fail("invalid-argument", "need at least 2 samples");

    double worst = 0;
    if (spec.model == pointset::Model::DT) {
        if (!(spec.k0 > 0) || !frame.nu)
            fail("invalid-argument", "DT symmetry residual needs k0 > 0 and nu");
        const Vec3 nu = *frame.nu;
        for (std::size_t i = 0; i < samples; ++i) {
            const double mu = -0.9 * spec.k0 +
                              1.8 * spec.k0 * static_cast<double>(i) /
                                  static_cast<double>(samples - 1);
            const double h = std::sqrt(spec.k0 * spec.k0 - mu * mu) - spec.k0;
            const Vec3 kap = mu * frame.xi + h * frame.eta;
            const Vec3 dir = kap.cross(nu);
            const auto sd = f.eval(kap, 1);
            worst = std::max(worst, std::abs(sd.grad.dot(dir.cast<cplx>())));
        }
        return worst;
    }
    for (std::size_t i = 0; i < samples; ++i) {
        const double lam = -spec.lambda_max +
                           2.0 * spec.lambda_max * static_cast<double>(i) /
                               static_cast<double>(samples - 1);
        const auto sd = f.eval(lam * frame.xi, 1);
        worst = std::max(worst, std::abs(sd.grad.dot(frame.eta.cast<cplx>())));
    }
    return worst;
}

std::pair<double, Frame> symmetry_margin(const SpectralProvider& f, const SymmetrySpec& spec,
                                         std::size_t frames, std::size_t samples) {
    const auto dirs = pointset::fibonacci_sphere(frames);
    double best = std::numeric_limits<double>::infinity();
    Frame arg;
    for (const auto& xi : dirs) {
        // an orthonormal eta; swept over a small in-plane rotation set
        Vec3 any = std::abs(xi.z()) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
        const Vec3 b1 = xi.cross(any).normalized();
        const Vec3 b2 = xi.cross(b1);
        for (int rot = 0; rot < 4; ++rot) {
            const double a = kPi * rot / 8.0;
            Frame fr;
            fr.xi = xi;
            fr.eta = std::cos(a) * b1 + std::sin(a) * b2;
            if (spec.model == pointset::Model::DT) fr.nu = fr.xi.cross(fr.eta);
            const double r = symmetry_residual(f, fr, spec, samples);
            if (r < best) {
                best = r;
                arg = fr;
            }
        }
    }
    return {best, arg};
}

Phantom mirror_symmetrize(const Phantom& ph, const Vec3& normal) {
    if (std::abs(normal.norm() - 1.0) > 1e-10)
        fail("invalid-argument", "mirror normal must be a unit vector");
    pointset::PointSet pts;
    std::vector<double> w;
    double scale = 0;
    for (const auto& p : ph.points()) scale = std::max(scale, p.norm());
    for (std::size_t i = 0; i < ph.points().size(); ++i) {
        const Vec3& p = ph.points()[i];
        const Vec3 q = p - 2.0 * p.dot(normal) * normal;
        if (q.norm() + ph.profile().support_radius() >= ph.support_radius())
            fail("support-violation", "reflected blob escapes the object ball");
        pts.push_back(p);
        if ((q - p).norm() < 1e-12 * std::max(1.0, scale)) {
            w.push_back(2.0 * ph.weights()[i]);  // point on the mirror plane
        } else {
            w.push_back(ph.weights()[i]);
            pts.push_back(q);
            w.push_back(ph.weights()[i]);
        }
    }
    return Phantom(std::move(pts), std::move(w), ph.profile(), ph.support_radius());
}

Vec3 slice_center(const Phantom& ph, const Vec3& w, std::size_t n_grid) {
    if (w.norm() == 0) fail("invalid-argument", "slice direction must be nonzero");
    const Vec3 n = w.normalized();
    Vec3 any = std::abs(n.z()) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    const Vec3 u = n.cross(any).normalized();
    const Vec3 v = n.cross(u);
    const double d = w.norm();
    if (d >= ph.support_radius()) return Vec3::Zero();
    const double L = std::sqrt(ph.support_radius() * ph.support_radius() - d * d) * 1.001;
    const double hstep = 2.0 * L / static_cast<double>(n_grid - 1);
    Vec3 acc = Vec3::Zero();
    for (std::size_t i = 0; i < n_grid; ++i)
        for (std::size_t j = 0; j < n_grid; ++j) {
            const double s = -L + hstep * static_cast<double>(i);
            const double t = -L + hstep * static_cast<double>(j);
            const Vec3 x = w + s * u + t * v;
            const double fv = ph.value_spatial(x);
            if (fv != 0.0) acc += fv * x;
        }
    return acc * hstep * hstep;
}

}  // namespace rotrec::phantom
