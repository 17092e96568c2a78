#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rotrec/common.hpp"
#include "rotrec/pointset.hpp"

namespace rotrec::phantom {

struct BlobProfile {
    enum class Kind { BallIndicator, Gaussian } kind = Kind::Gaussian;
    double radius_or_sigma = 0.05;

    // effective support radius (6 sigma for the gaussian kind)
    double support_radius() const {
        return kind == Kind::BallIndicator ? radius_or_sigma : 6.0 * radius_or_sigma;
    }
};

// Value and derivatives of f-hat at one wavenumber. hess and third are
// symmetric by construction.
struct SpectralDerivatives {
    cplx value{};
    Vec3c grad = Vec3c::Zero();
    Mat3c hess = Mat3c::Zero();
    std::array<Mat3c, 3> third = {Mat3c::Zero(), Mat3c::Zero(), Mat3c::Zero()};

    cplx d3(int i, int j, int k) const { return third[static_cast<std::size_t>(i)](j, k); }
};

// Anything that can serve frequency-domain values to the forward models.
class SpectralProvider {
public:
    virtual ~SpectralProvider() = default;
    virtual SpectralDerivatives eval(const Vec3& kappa, int order) const = 0;
};

// Weighted sum of identical radial blobs centered on a point set, with
// vanishing first moments. Closed-form Fourier transform and derivatives.
class Phantom : public SpectralProvider {
public:
    Phantom(pointset::PointSet points, std::vector<double> weights, BlobProfile profile,
            double support_radius);

    const pointset::PointSet& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    const BlobProfile& profile() const { return profile_; }
    double support_radius() const { return r_s_; }

    SpectralDerivatives eval(const Vec3& kappa, int order) const override;

    // spatial-domain value (gaussian blobs truncated at 6 sigma)
    double value_spatial(const Vec3& x) const;

private:
    pointset::PointSet points_;
    std::vector<double> weights_;
    BlobProfile profile_;
    double r_s_;
};

SpectralDerivatives spectral_eval(const Phantom& ph, const Vec3& kappa, int order);

// Convenience: balance weights over the point set, then build the phantom.
Phantom phantom_from_pointset(const pointset::PointSet& points, BlobProfile profile,
                              double support_radius);

// Fourier transform of a single centered blob (radial in kappa).
cplx blob_transform(const BlobProfile& profile, double kappa_norm);

struct SymmetrySpec {
    pointset::Model model = pointset::Model::PB;
    double k0 = 0;          // DT only
    double lambda_max = 10; // PB only
};

struct Frame {
    Vec3 xi;
    Vec3 eta;
    std::optional<Vec3> nu;  // required in DT mode
};

// Max over the sample grid of the defining inner product of DT-/PB-symmetry
// for the given frame; zero for symmetric objects in the matching frame.
double symmetry_residual(const SpectralProvider& f, const Frame& frame,
                         const SymmetrySpec& spec, std::size_t samples);

// Minimal residual over a Fibonacci sweep of frames; diagnostic for
// asymmetry margins. Returns {min residual, argmin frame}.
std::pair<double, Frame> symmetry_margin(const SpectralProvider& f, const SymmetrySpec& spec,
                                         std::size_t frames, std::size_t samples);

// Phantom with points mirrored across the plane through the origin with the
// given unit normal; weights are duplicated pairwise.
Phantom mirror_symmetrize(const Phantom& ph, const Vec3& normal);

// First-moment integral int_{E_w} x f(x) dS over the plane through w
// orthogonal to w, by tensor-product quadrature.
Vec3 slice_center(const Phantom& ph, const Vec3& w, std::size_t n_grid = 201);

}  // namespace rotrec::phantom
