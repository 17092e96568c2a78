#include "rotrec/voxel.hpp"

#include <algorithm>
#include <cmath>

namespace rotrec::voxel {

Vec3 VoxelGrid::moment() const {
    Vec3 acc = Vec3::Zero();
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                const double v = at(i, j, k);
                if (v != 0.0) acc += v * coord(i, j, k);
            }
    return acc * spacing * spacing * spacing;
}

double VoxelGrid::max_abs() const {
    double m = 0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
}

VoxelGrid rasterize(const phantom::Phantom& ph, std::size_t n) {
    VoxelGrid g;
    g.n = n;
    const double r = ph.support_radius();
    g.spacing = 2.0 * r / static_cast<double>(n);
    g.origin = Vec3{-r, -r, -r} + 0.5 * g.spacing * Vec3{1, 1, 1};
    g.data.assign(n * n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                g.at(i, j, k) = ph.value_spatial(g.coord(i, j, k));
    return g;
}

namespace {

// fixed radial bump on the inner half ball: (1 - (2r/r_s)^2)^2
double bump(double rr, double support_radius) {
    const double s = 2.0 * rr / support_radius;
    if (s >= 1.0) return 0.0;
    const double u = 1.0 - s * s;
    return u * u;
}

}  // namespace

VoxelGrid moment_project(const VoxelGrid& g, double support_radius) {
    // boundary check: data must vanish on the outer shell
    const double shell = 0.98 * support_radius;
    const double tol = 1e-12 * std::max(1.0, g.max_abs());
    for (std::size_t k = 0; k < g.n; ++k)
        for (std::size_t j = 0; j < g.n; ++j)
            for (std::size_t i = 0; i < g.n; ++i)
                if (std::abs(g.at(i, j, k)) > tol && g.coord(i, j, k).norm() >= shell)
                    fail("support-violation", "grid support touches the object boundary");

    const Vec3 m = g.moment();
    VoxelGrid out = g;
    const double h3 = g.spacing * g.spacing * g.spacing;
    // discrete moment matrix of the corrector terms x_j phi; solving with it
    // exactly cancels the discrete moments even on off-center grids
    Mat3 corr = Mat3::Zero();
    for (std::size_t k = 0; k < g.n; ++k)
        for (std::size_t j = 0; j < g.n; ++j)
            for (std::size_t i = 0; i < g.n; ++i) {
                const Vec3 x = g.coord(i, j, k);
                const double ph = bump(x.norm(), support_radius);
                if (ph == 0.0) continue;
                corr += h3 * ph * x * x.transpose();
            }
    const Vec3 a = corr.ldlt().solve(m);
    for (std::size_t k = 0; k < g.n; ++k)
        for (std::size_t j = 0; j < g.n; ++j)
            for (std::size_t i = 0; i < g.n; ++i) {
                const Vec3 x = g.coord(i, j, k);
                const double ph = bump(x.norm(), support_radius);
                if (ph == 0.0) continue;
                out.at(i, j, k) -= ph * a.dot(x);
            }
    return out;
}

namespace {

double trilinear(const VoxelGrid& g, const Vec3& x) {
    const Vec3 u = (x - g.origin) / g.spacing;
    const auto fi = std::floor(u.x()), fj = std::floor(u.y()), fk = std::floor(u.z());
    const auto i = static_cast<std::ptrdiff_t>(fi);
    const auto j = static_cast<std::ptrdiff_t>(fj);
    const auto k = static_cast<std::ptrdiff_t>(fk);
    if (i < 0 || j < 0 || k < 0 || i + 1 >= static_cast<std::ptrdiff_t>(g.n) ||
        j + 1 >= static_cast<std::ptrdiff_t>(g.n) || k + 1 >= static_cast<std::ptrdiff_t>(g.n))
        return 0.0;
    const double a = u.x() - fi, b = u.y() - fj, c = u.z() - fk;
    auto v = [&](int di, int dj, int dk) {
        return g.at(static_cast<std::size_t>(i + di), static_cast<std::size_t>(j + dj),
                    static_cast<std::size_t>(k + dk));
    };
    return (1 - a) * (1 - b) * (1 - c) * v(0, 0, 0) + a * (1 - b) * (1 - c) * v(1, 0, 0) +
           (1 - a) * b * (1 - c) * v(0, 1, 0) + a * b * (1 - c) * v(1, 1, 0) +
           (1 - a) * (1 - b) * c * v(0, 0, 1) + a * (1 - b) * c * v(1, 0, 1) +
           (1 - a) * b * c * v(0, 1, 1) + a * b * c * v(1, 1, 1);
}

void fft_inplace(std::vector<cplx>& a, std::size_t n, std::size_t stride, std::size_t offset,
                 std::vector<cplx>& scratch) {
    // iterative radix-2 Cooley-Tukey on the strided line
    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) scratch[i] = a[offset + i * stride];
    // bit reversal
    std::size_t j = 0;
    for (std::size_t i = 1; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(scratch[i], scratch[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (std::size_t m = 0; m < len / 2; ++m) {
                const cplx u = scratch[i + m];
                const cplx v = scratch[i + m + len / 2] * w;
                scratch[i + m] = u + v;
                scratch[i + m + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) a[offset + i * stride] = scratch[i];
}

}  // namespace

namespace {

// continuous Fourier transform of the Kaiser-Bessel gridding kernel
// k(t) = I0(beta sqrt(1-(2t/J)^2)) / I0(beta), |t| <= J/2, at frequency
// nu (cycles per frequency-grid sample)
double kb_hat(double nu, double beta, double J) {
    const double arg = beta * beta - kPi * kPi * J * J * nu * nu;
    double shape;
    if (arg > 0) {
        const double g = std::sqrt(arg);
        shape = std::sinh(g) / g;
    } else if (arg < 0) {
        const double g = std::sqrt(-arg);
        shape = std::sin(g) / g;
    } else {
        shape = 1.0;
    }
    return J * shape / std::cyl_bessel_i(0.0, beta);
}

double kb_kernel(double t, double beta, double J) {
    const double s = 2.0 * t / J;
    if (std::abs(s) >= 1.0) return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - s * s)) /
           std::cyl_bessel_i(0.0, beta);
}

}  // namespace

VoxelSpectralProvider::VoxelSpectralProvider(const VoxelGrid& g, double support_radius,
                                             std::size_t pad_factor) {
    if (g.n == 0 || (g.n & (g.n - 1)) != 0)
        fail("invalid-argument", "voxel spectral provider needs a power-of-two grid side");
    if (pad_factor < 2 || (pad_factor & (pad_factor - 1)) != 0)
        fail("invalid-argument", "pad factor must be a power of two >= 2");
    const VoxelGrid projected = moment_project(g, support_radius);

    n_ = g.n * pad_factor;
    // Kaiser-Bessel gridding parameters (Beatty's beta for this oversampling)
    const double sigma_os = static_cast<double>(pad_factor);
    beta_ = kPi * std::sqrt(kJ_ * kJ_ / (sigma_os * sigma_os) * (sigma_os - 0.5) * (sigma_os - 0.5) -
                            0.8);

    // apodization correction in space: divide by the kernel transform
    fhat_.assign(n_ * n_ * n_, cplx{});
    const double denom_scale = static_cast<double>(n_) * g.spacing;
    for (std::size_t k = 0; k < g.n; ++k)
        for (std::size_t j = 0; j < g.n; ++j)
            for (std::size_t i = 0; i < g.n; ++i) {
                const Vec3 x = g.coord(i, j, k);
                const double corr = kb_hat(x.x() / denom_scale, beta_, kJ_) *
                                    kb_hat(x.y() / denom_scale, beta_, kJ_) *
                                    kb_hat(x.z() / denom_scale, beta_, kJ_);
                fhat_[(k * n_ + j) * n_ + i] =
                    projected.data[(k * g.n + j) * g.n + i] / corr;
            }
    std::vector<cplx> scratch;
    // separable FFT along each axis
    for (std::size_t k = 0; k < n_; ++k)
        for (std::size_t j = 0; j < n_; ++j)
            fft_inplace(fhat_, n_, 1, (k * n_ + j) * n_, scratch);
    for (std::size_t k = 0; k < n_; ++k)
        for (std::size_t i = 0; i < n_; ++i)
            fft_inplace(fhat_, n_, n_, k * n_ * n_ + i, scratch);
    for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t i = 0; i < n_; ++i)
            fft_inplace(fhat_, n_, n_ * n_, j * n_ + i, scratch);

    // continuous normalization with the origin phase, then fftshift
    const double h = g.spacing;
    dk_ = 2.0 * kPi / (static_cast<double>(n_) * h);
    const double norm = h * h * h / std::pow(2.0 * kPi, 1.5);
    std::vector<cplx> shifted(fhat_.size());
    const auto half = static_cast<std::ptrdiff_t>(n_ / 2);
    for (std::size_t k = 0; k < n_; ++k)
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t i = 0; i < n_; ++i) {
                // signed frequency indices of the shifted layout
                const auto si = static_cast<std::ptrdiff_t>(i) - half;
                const auto sj = static_cast<std::ptrdiff_t>(j) - half;
                const auto sk = static_cast<std::ptrdiff_t>(k) - half;
                const std::size_t ui = static_cast<std::size_t>((si + static_cast<std::ptrdiff_t>(n_)) %
                                                                static_cast<std::ptrdiff_t>(n_));
                const std::size_t uj = static_cast<std::size_t>((sj + static_cast<std::ptrdiff_t>(n_)) %
                                                                static_cast<std::ptrdiff_t>(n_));
                const std::size_t uk = static_cast<std::size_t>((sk + static_cast<std::ptrdiff_t>(n_)) %
                                                                static_cast<std::ptrdiff_t>(n_));
                const Vec3 kap = dk_ * Vec3{static_cast<double>(si), static_cast<double>(sj),
                                            static_cast<double>(sk)};
                const cplx phase = std::exp(cplx(0, -1) * g.origin.dot(kap));
                shifted[(k * n_ + j) * n_ + i] =
                    norm * phase * fhat_[(uk * n_ + uj) * n_ + ui];
            }
    fhat_ = std::move(shifted);
    // leave margin for the gridding kernel plus FD steps
    kmax_ = dk_ * (static_cast<double>(n_) / 2.0 - static_cast<double>(kHalfJ_) - 2.0);
}

cplx VoxelSpectralProvider::interp(const Vec3& kappa) const {
    const auto half = static_cast<double>(n_) / 2.0;
    const Vec3 u = kappa / dk_ + Vec3{half, half, half};
    const auto ix = static_cast<std::ptrdiff_t>(std::floor(u.x()));
    const auto iy = static_cast<std::ptrdiff_t>(std::floor(u.y()));
    const auto iz = static_cast<std::ptrdiff_t>(std::floor(u.z()));
    const auto lo = static_cast<std::ptrdiff_t>(kHalfJ_) - 1;
    const auto hi = static_cast<std::ptrdiff_t>(n_) - static_cast<std::ptrdiff_t>(kHalfJ_);
    if (ix < lo || iy < lo || iz < lo || ix > hi || iy > hi || iz > hi)
        fail("out-of-grid", "frequency outside the interpolable band");
    double wx[kJ_i], wy[kJ_i], wz[kJ_i];
    for (int a = 0; a < kJ_i; ++a) {
        const double off = static_cast<double>(a - kHalfJ_i + 1);
        wx[a] = kb_kernel(u.x() - (static_cast<double>(ix) + off), beta_, kJ_);
        wy[a] = kb_kernel(u.y() - (static_cast<double>(iy) + off), beta_, kJ_);
        wz[a] = kb_kernel(u.z() - (static_cast<double>(iz) + off), beta_, kJ_);
    }
    cplx acc = 0;
    for (int c = 0; c < kJ_i; ++c) {
        if (wz[c] == 0.0) continue;
        for (int b = 0; b < kJ_i; ++b) {
            if (wy[b] == 0.0) continue;
            cplx row = 0;
            const std::size_t base =
                (static_cast<std::size_t>(iz + c - kHalfJ_i + 1) * n_ +
                 static_cast<std::size_t>(iy + b - kHalfJ_i + 1)) *
                n_ +
                static_cast<std::size_t>(ix - kHalfJ_i + 1);
            for (int a = 0; a < kJ_i; ++a) row += wx[a] * fhat_[base + static_cast<std::size_t>(a)];
            acc += wz[c] * wy[b] * row;
        }
    }
    return acc;
}

phantom::SpectralDerivatives VoxelSpectralProvider::eval(const Vec3& kappa, int order) const {
    phantom::SpectralDerivatives out;
    out.value = interp(kappa);
    if (order < 1) return out;
    // the gridded interpolant is analytic, so small steps are safe; larger
    // steps for higher orders keep the aliasing noise amplification down
    const double h = 0.02 * dk_;
    auto E = [](int i) {
        Vec3 v = Vec3::Zero();
        v(i) = 1;
        return v;
    };
    for (int i = 0; i < 3; ++i)
        out.grad(i) = (interp(kappa + h * E(i)) - interp(kappa - h * E(i))) / (2 * h);
    if (order < 2) return out;
    const double h2 = 0.06 * dk_;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            cplx v;
            if (i == j)
                v = (interp(kappa + h2 * E(i)) - 2.0 * out.value + interp(kappa - h2 * E(i))) /
                    (h2 * h2);
            else
                v = (interp(kappa + h2 * E(i) + h2 * E(j)) -
                     interp(kappa + h2 * E(i) - h2 * E(j)) -
                     interp(kappa - h2 * E(i) + h2 * E(j)) +
                     interp(kappa - h2 * E(i) - h2 * E(j))) /
                    (4 * h2 * h2);
            out.hess(i, j) = v;
            out.hess(j, i) = v;
        }
    if (order < 3) return out;
    // third derivatives by differencing the hessian; adequate for smoke use
    const double h3 = 0.12 * dk_;
    for (int i = 0; i < 3; ++i) {
        const auto hp = eval(kappa + h3 * E(i), 2).hess;
        const auto hm = eval(kappa - h3 * E(i), 2).hess;
        out.third[static_cast<std::size_t>(i)] = (hp - hm) / (2 * h3);
    }
    return out;
}

Vec3 slice_center(const VoxelGrid& g, const Vec3& w, double support_radius,
                  std::size_t n_grid) {
    if (w.norm() == 0) fail("invalid-argument", "slice direction must be nonzero");
    const Vec3 n = w.normalized();
    Vec3 any = std::abs(n.z()) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    const Vec3 u = n.cross(any).normalized();
    const Vec3 v = n.cross(u);
    const double d = w.norm();
    if (d >= support_radius) return Vec3::Zero();
    const double L = std::sqrt(support_radius * support_radius - d * d) * 1.001;
    const double hstep = 2.0 * L / static_cast<double>(n_grid - 1);
    Vec3 acc = Vec3::Zero();
    for (std::size_t i = 0; i < n_grid; ++i)
        for (std::size_t j = 0; j < n_grid; ++j) {
            const Vec3 x =
                w + (-L + hstep * static_cast<double>(i)) * u + (-L + hstep * static_cast<double>(j)) * v;
            const double fv = trilinear(g, x);
            if (fv != 0.0) acc += fv * x;
        }
    return acc * hstep * hstep;
}

}  // namespace rotrec::voxel
