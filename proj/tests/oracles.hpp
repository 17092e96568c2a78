#pragma once

// Independent numerical oracles used by the test suites. These deliberately
// avoid the library's closed-form paths: quadrature, finite differences and
// brute-force sweeps only.

#include <cmath>
#include <functional>

#include "rotrec/common.hpp"
#include "rotrec/phantom.hpp"
#include "rotrec/so3.hpp"

namespace oracles {

using rotrec::cplx;
using rotrec::Mat3;
using rotrec::Vec2;
using rotrec::Vec3;

// radial quadrature of the ball-indicator Fourier transform:
// (2 pi)^{-3/2} * 4 pi * int_0^eps r^2 sinc(|kappa| r) dr, Simpson rule
inline double ball_transform_quadrature(double eps, double kappa_norm, int n = 4001) {
    auto f = [&](double r) {
        const double x = kappa_norm * r;
        const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
        return r * r * sinc;
    };
    const double h = eps / (n - 1);
    double acc = f(0) + f(eps);
    for (int i = 1; i < n - 1; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
    const double integral = acc * h / 3.0;
    return 4.0 * rotrec::kPi * integral / std::pow(2.0 * rotrec::kPi, 1.5);
}

// central difference of a complex scalar field along direction e
inline cplx central_diff(const std::function<cplx(const Vec3&)>& f, const Vec3& x,
                         const Vec3& e, double h) {
    return (f(x + h * e) - f(x - h * e)) / (2.0 * h);
}

// 5-point derivative of a matrix-valued curve (4th order)
inline Mat3 matrix_curve_derivative(const std::function<Mat3(double)>& f, double t, double h) {
    return (f(t - 2 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2 * h)) / (12.0 * h);
}

// Fourier slice oracle: line integrals of the rotated phantom on a detector
// grid followed by a discrete 2D transform; returns the estimate of
// f-hat(R (k,0)) = m-hat(k) / sqrt(2 pi).
inline cplx fourier_slice_quadrature(const rotrec::phantom::Phantom& ph, const Mat3& R,
                                     const Vec2& k, std::size_t n) {
    const double L = ph.support_radius();
    const double h = 2.0 * L / static_cast<double>(n);
    cplx acc = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double x1 = -L + (static_cast<double>(i) + 0.5) * h;
            const double x2 = -L + (static_cast<double>(j) + 0.5) * h;
            double line = 0;
            for (std::size_t l = 0; l < n; ++l) {
                const double x3 = -L + (static_cast<double>(l) + 0.5) * h;
                line += ph.value_spatial(R * Vec3{x1, x2, x3});
            }
            line *= h;
            acc += line * std::exp(cplx(0, -1) * (k.x() * x1 + k.y() * x2));
        }
    acc *= h * h / (2.0 * rotrec::kPi);          // m-hat(k)
    return acc / std::sqrt(2.0 * rotrec::kPi);   // Fourier slice theorem
}

}  // namespace oracles
