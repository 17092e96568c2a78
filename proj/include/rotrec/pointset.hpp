#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rotrec/common.hpp"
#include "rotrec/rng.hpp"

namespace rotrec::pointset {

using PointSet = std::vector<Vec3>;

enum class Model { DT, PB };

// Determinant-nonzero tolerance relative to the cube of the row scale
// (determinants of 3x3 matrices are homogeneous of degree 3 in their rows).
inline constexpr double kDetTol = 1e-10;

// Sufficient certificate for DT-asymmetry: all point triples independent and
// all cross-product triples from six distinct indices independent. |P| >= 8.
bool dt_pointset_certificate(const PointSet& p);

// Sufficient certificate for PB-asymmetry: all point triples independent and
// all difference triples over index pairs covering >= 4 distinct indices
// independent. |P| >= 7.
bool pb_pointset_certificate(const PointSet& p);

// Brute-force oracle for the defining property at one direction xi: returns
// a pair of points witnessing the DT or PB definition, or nullopt.
std::optional<std::pair<Vec3, Vec3>> pointset_direction_witness(const PointSet& p,
                                                                const Vec3& xi,
                                                                Model model);

struct Placement {
    enum class Kind { Ball, Shell } kind = Kind::Ball;
    double radius = 0.6;   // ball: sampling radius; shell: sphere radius
    double cap_eps = 0.0;  // shell only: required cap height for coverage
};

inline Placement ball_placement(double radius) {
    return {Placement::Kind::Ball, radius, 0.0};
}
inline Placement shell_placement(double radius, double cap_eps) {
    return {Placement::Kind::Shell, radius, cap_eps};
}

// Deterministic under seed. The returned set passes both certificates; shell
// placement additionally guarantees that every spherical cap of height
// cap_eps contains a point, verified on a 4096-direction Fibonacci grid.
PointSet generate_asymmetric_pointset(std::size_t n, std::uint64_t seed,
                                      const Placement& placement);

// Nonzero weights with sum w_j p_j = 0, normalized to max |w_j| = 1,
// following the inductive construction. Requires every triple independent.
std::vector<double> balance_weights(const PointSet& p);

// Fibonacci lattice on the unit sphere (low-discrepancy direction sweeps).
std::vector<Vec3> fibonacci_sphere(std::size_t n);

// Max gap (radians) between grid directions and their nearest point direction.
double covering_radius_on_grid(const PointSet& p, const std::vector<Vec3>& grid);

}  // namespace rotrec::pointset
