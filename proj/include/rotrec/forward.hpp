#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rotrec/common.hpp"
#include "rotrec/phantom.hpp"
#include "rotrec/so3.hpp"

namespace rotrec::forward {

using pointset::Model;

struct ModelConfig {
    Model model = Model::PB;
    double k0 = 0;  // DT wavenumber; unused for PB
    // radial sample values along each azimuth line: mu for DT (|mu| <= 0.9 k0),
    // lambda for PB
    std::vector<double> samples;
    enum class Backend { Analytic, FiniteDifference } backend = Backend::Analytic;
    double fd_dt = 1e-4;
    double fd_dk = 1e-3;
    std::size_t phi_lines = 64;  // azimuth lines stored in measurement files

    void validate() const;
};

std::vector<double> default_samples(Model model, double k0, std::size_t n);

// h(mu) = sqrt(k0^2 - mu^2) - k0
inline double dt_height(double k0, double mu) {
    return std::sqrt(k0 * k0 - mu * mu) - k0;
}

// frequency point sampled by the detector at in-plane frequency k
Vec3 lift_frequency(const ModelConfig& cfg, const Vec2& k);

// m-hat(t,k) for orientation R; DT raises out-of-band for ||k|| >= k0.
cplx measure(const phantom::SpectralProvider& f, const so3::Rotation& R,
             const ModelConfig& cfg, const Vec2& k);

enum JetPart : unsigned {
    JetValue = 1,
    JetDt = 2,
    JetGradK = 4,
    JetHessK = 8,
    JetThirdK = 16,
    JetDtGradK = 32,
    JetDtHessK = 64,
    JetDttGradK = 128,
    JetFirstOrder = JetValue | JetDt | JetGradK,
    JetAll = 255,
};

// All measurement derivatives the solvers consume at one (t, k).
struct MeasurementJet {
    cplx value{};
    cplx dt{};
    Vec2c grad_k = Vec2c::Zero();
    Mat2c hess_k = Mat2c::Zero();
    std::array<Mat2c, 2> third_k = {Mat2c::Zero(), Mat2c::Zero()};
    Vec2c dt_grad_k = Vec2c::Zero();
    Mat2c dt_hess_k = Mat2c::Zero();
    Vec2c dtt_grad_k = Vec2c::Zero();

    cplx third(int i, int j, int k) const {
        return third_k[static_cast<std::size_t>(i)](j, k);
    }
};

// Exact jets by the chain rule through kappa(t,k) = R(t) L(k).
MeasurementJet analytic_jet(const phantom::SpectralProvider& f, const so3::MotionModel& motion,
                            const ModelConfig& cfg, double t, const Vec2& k,
                            unsigned mask = JetAll);

// Finite-difference jets of an arbitrary sampler (2nd order in t, 4th in k).
using SampleFn = std::function<cplx(double, const Vec2&)>;
MeasurementJet fd_jet(const SampleFn& sample, double t, const Vec2& k, double dt, double dk,
                      unsigned mask = JetAll);

// Jet source for the per-step solvers; implementations are pure in (index, k).
class JetProvider {
public:
    virtual ~JetProvider() = default;
    virtual MeasurementJet jet(std::size_t t_index, const Vec2& k, unsigned mask) const = 0;
    virtual const std::vector<double>& times() const = 0;
    virtual const ModelConfig& config() const = 0;
};

class AnalyticJetProvider : public JetProvider {
public:
    AnalyticJetProvider(std::shared_ptr<const phantom::SpectralProvider> f,
                        std::shared_ptr<const so3::MotionModel> motion, ModelConfig cfg,
                        std::vector<double> times);

    MeasurementJet jet(std::size_t t_index, const Vec2& k, unsigned mask) const override;
    const std::vector<double>& times() const override { return times_; }
    const ModelConfig& config() const override { return cfg_; }

private:
    std::shared_ptr<const phantom::SpectralProvider> f_;
    std::shared_ptr<const so3::MotionModel> motion_;
    ModelConfig cfg_;
    std::vector<double> times_;
};

// Measures on demand (optionally with a deterministic noise field) and
// differentiates with central stencils.
class FdJetProvider : public JetProvider {
public:
    struct NoiseField {
        double level = 0;
        std::uint64_t seed = 0;
        double rms_ref = 1.0;  // reference rms the level multiplies
    };

    FdJetProvider(std::shared_ptr<const phantom::SpectralProvider> f,
                  std::shared_ptr<const so3::MotionModel> motion, ModelConfig cfg,
                  std::vector<double> times, std::optional<NoiseField> noise = std::nullopt);

    MeasurementJet jet(std::size_t t_index, const Vec2& k, unsigned mask) const override;
    const std::vector<double>& times() const override { return times_; }
    const ModelConfig& config() const override { return cfg_; }

    cplx sample(double t, const Vec2& k) const;

private:
    std::shared_ptr<const phantom::SpectralProvider> f_;
    std::shared_ptr<const so3::MotionModel> motion_;
    ModelConfig cfg_;
    std::vector<double> times_;
    std::optional<NoiseField> noise_;
};

struct NoiseRecord {
    double level = 0;
    std::uint64_t seed = 0;
    double rms_ref = 0;
};

// Sampled measurement values on the (time x azimuth-line x radial-sample)
// pattern, with provenance for reproduction.
struct MeasurementSet {
    ModelConfig cfg;
    std::vector<double> times;
    std::vector<double> phi_grid;  // azimuth angles in [0, pi)
    std::vector<cplx> values;      // t-major, then line, then sample
    std::optional<NoiseRecord> noise;
    std::string phantom_hash;
    std::string motion_hash;

    std::size_t lines() const { return phi_grid.size(); }
    std::size_t samples_per_line() const { return cfg.samples.size(); }
    cplx& at(std::size_t t, std::size_t line, std::size_t s) {
        return values[(t * lines() + line) * samples_per_line() + s];
    }
    cplx at(std::size_t t, std::size_t line, std::size_t s) const {
        return values[(t * lines() + line) * samples_per_line() + s];
    }
    double rms() const;
};

MeasurementSet synthesize(const phantom::SpectralProvider& f, const so3::MotionModel& motion,
                          const ModelConfig& cfg, const std::vector<double>& grid);

// i.i.d. complex gaussian noise with std dev level * rms(|values|), keyed by
// (seed, t_index, sample_index); level 0 returns the input unchanged.
MeasurementSet add_noise(const MeasurementSet& ms, double level, std::uint64_t seed);

// Max |m(t, l_t(lambda)) - m(s, l_s(lambda))| over the lambda grid along the
// common line of the slices at times s and t (PB only, exact re-measurement).
double verify_common_line(const phantom::SpectralProvider& f, const so3::MotionTrajectory& traj,
                          std::size_t s_index, std::size_t t_index,
                          const std::vector<double>& lambdas);

// Same check evaluated by bicubic interpolation of per-time Cartesian k-grids.
double verify_common_line_interpolated(const phantom::SpectralProvider& f,
                                       const so3::MotionTrajectory& traj, std::size_t s_index,
                                       std::size_t t_index, const std::vector<double>& lambdas,
                                       std::size_t grid_n, double k_max);

}  // namespace rotrec::forward
