#pragma once

#include <string>
#include <vector>

#include "rotrec/common.hpp"
#include "rotrec/phantom.hpp"

namespace rotrec::voxel {

// Cube grid of real samples; x varies fastest in memory. spacing is the
// voxel pitch, origin the coordinate of sample (0,0,0).
struct VoxelGrid {
    std::size_t n = 0;
    double spacing = 0;
    Vec3 origin = Vec3::Zero();
    std::vector<double> data;  // n^3, x-fastest

    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(k * n + j) * n + i];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(k * n + j) * n + i];
    }
    Vec3 coord(std::size_t i, std::size_t j, std::size_t k) const {
        return origin + spacing * Vec3{static_cast<double>(i), static_cast<double>(j),
                                       static_cast<double>(k)};
    }
    Vec3 moment() const;     // integral of x f(x) dx (Riemann sum)
    double max_abs() const;
};

VoxelGrid rasterize(const phantom::Phantom& ph, std::size_t n);

// Subtracts sum_j a_j x_j phi(x) with a fixed radial bump phi supported in
// the inner half ball so first moments vanish; values outside supp(phi) are
// untouched. Raises support-violation if the data touches the boundary shell.
VoxelGrid moment_project(const VoxelGrid& g, double support_radius);

// Slice first-moment integral over the plane through w orthogonal to w,
// trilinear interpolation of the grid.
Vec3 slice_center(const VoxelGrid& g, const Vec3& w, double support_radius,
                  std::size_t n_grid = 201);

// DFT-backed spectral provider with the continuous-transform normalization:
// tricubic interpolation of f-hat on the frequency grid, finite-difference
// derivatives. Grid side must be a power of two.
class VoxelSpectralProvider : public phantom::SpectralProvider {
public:
    // pad_factor zero-pads the spatial grid before the FFT, refining the
    // frequency pitch for the interpolation (power of two)
    VoxelSpectralProvider(const VoxelGrid& g, double support_radius,
                          std::size_t pad_factor = 2);

    phantom::SpectralDerivatives eval(const Vec3& kappa, int order) const override;

    double kappa_max() const { return kmax_; }

private:
    cplx interp(const Vec3& kappa) const;

    static constexpr double kJ_ = 8.0;  // gridding kernel width in samples
    static constexpr int kJ_i = 8;
    static constexpr int kHalfJ_i = 4;
    static constexpr std::size_t kHalfJ_ = 4;

    std::size_t n_;
    double dk_;    // frequency grid pitch
    double kmax_;  // usable |kappa| bound for interpolation
    double beta_;  // Kaiser-Bessel shape
    std::vector<cplx> fhat_;  // n^3, x-fastest, frequencies fftshifted to [-n/2, n/2)
};

}  // namespace rotrec::voxel
