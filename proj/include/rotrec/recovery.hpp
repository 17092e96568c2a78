#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rotrec/forward.hpp"
#include "rotrec/so3.hpp"

namespace rotrec::recover {

using forward::JetProvider;
using pointset::Model;

struct SolverConfig {
    std::size_t phi_grid = 96;      // azimuth candidates on the upper semicircle
    std::size_t refine_iters = 60;  // golden-section refinement steps
    double residual_tol = 1e-8;     // relative; FD backends want ~1e-4
    double ambiguity_ratio = 10.0;  // second-best basin vs best
    double condition_max = 1e6;
    std::size_t threads = 1;
    bool one_sided_boundary = true;  // one-sided stencils for the series rates

    void validate() const;
};

enum class Ambiguity { Unique, PlanarFamily, RhoZeroFamily, Degenerate };

std::string to_string(Ambiguity a);

struct StepEstimate {
    Vec3 omega_hat = Vec3::Zero();
    double residual = 0;    // absolute rms of the step equation
    double data_scale = 0;  // magnitude reference the residual compares to
    Ambiguity ambiguity = Ambiguity::Unique;
    double condition = 0;
    double phi = 0;   // azimuth in [0, pi)
    double zeta = 0;
    double rho = 0;
};

// One time step of the infinitesimal common-circle solver (DT).
StepEstimate dt_recover_step(const JetProvider& jets, std::size_t t_index,
                             const SolverConfig& cfg);

// Residual of the DT common-circle equation for a given u (forward check).
double dt_equation_residual(const JetProvider& jets, std::size_t t_index, const Vec3& u);

struct FirstOrderStep {
    double phi = 0;
    double zeta = 0;
    double residual = 0;
    double data_scale = 0;
    Ambiguity ambiguity = Ambiguity::Unique;
};

// One time step of the first-order infinitesimal common-line solver (PB).
FirstOrderStep pb_first_order_step(const JetProvider& jets, std::size_t t_index,
                                   const SolverConfig& cfg);

// Residual of the PB first-order equation for a given u (forward check).
double pb_equation_residual(const JetProvider& jets, std::size_t t_index, const Vec3& u);

// Recovered azimuth/zeta series with rates; phi is unwrapped continuously
// (period pi with sign bookkeeping handled by the caller via parity).
struct FirstOrderSeries {
    std::vector<double> phi;    // unwrapped
    std::vector<int> parity;    // +1 if phi was in [0,pi) as recovered, -1 after odd wraps
    std::vector<double> zeta;
    std::vector<double> phi_dot;
    std::vector<double> zeta_dot;
    std::vector<Ambiguity> flags;
};

FirstOrderSeries pb_first_order_series(const JetProvider& jets, const SolverConfig& cfg);

// Fills phi_dot/zeta_dot with wrap-aware central differences (one-sided at
// the ends when enabled).
void differentiate_series(FirstOrderSeries& s, const std::vector<double>& times,
                          const SolverConfig& cfg);

struct CoefficientRow {
    cplx a0, a02, a1;   // the verbatim coefficient formulas
    double prefactor;   // zeta + phi' from the first-order series
};

// Coefficient rows over the lambda grid at one time step. The prefactor is
// carried separately: the third-order data relation only constrains the
// product, so conditioning must account for it.
std::vector<CoefficientRow> pb_coefficients(const JetProvider& jets, std::size_t t_index,
                                            const FirstOrderSeries& series,
                                            const SolverConfig& cfg);

struct ThirdOrderResult {
    double X1 = 0;  // rho^2
    double X2 = 0;  // rho'/rho
    double condition = 0;
    bool degenerate = false;
    double residual = 0;
};

ThirdOrderResult pb_third_order_step(const std::vector<CoefficientRow>& rows,
                                     const SolverConfig& cfg);

// rho(t) = +sqrt(X1) with the branch convention; raises degenerate-data when
// X1 is not positive and continuity-violation when a sign flip is forced.
std::vector<double> rho_sign_continuation(const std::vector<double>& X1,
                                          const std::vector<double>& X2,
                                          const std::vector<double>& times,
                                          const SolverConfig& cfg);

enum class Branch { Direct, Sigma };

struct RecoveryResult {
    so3::MotionTrajectory trajectory;  // recovered; R(0) = I
    std::vector<StepEstimate> steps;
    double equivalence_distance = -1;  // min over branches; -1 without truth
    Branch branch = Branch::Direct;
    bool clean = true;  // no step flagged ambiguous or degenerate
};

// Full per-step recovery + trajectory integration. Ground truth, when given,
// is only used for the equivalence-class distance report.
RecoveryResult recover_trajectory(const JetProvider& jets, const SolverConfig& cfg,
                                  const so3::MotionTrajectory* truth = nullptr);

// max_t || R1(t) - R2(t) ||_F
double trajectory_distance(const so3::MotionTrajectory& a, const so3::MotionTrajectory& b);

// RK4 over a cubic interpolation of the sampled omega series, with polar
// projection; R(times[0]) = I.
std::vector<Mat3> integrate_omega_series(const std::vector<double>& times,
                                         const std::vector<Vec3>& omega);

}  // namespace rotrec::recover
