#include "rotrec/pointset.hpp"

#include <algorithm>
#include <cmath>

namespace rotrec::pointset {

namespace {

double det3(const Vec3& a, const Vec3& b, const Vec3& c) {
    Mat3 m;
    m.col(0) = a;
    m.col(1) = b;
    m.col(2) = c;
    return m.determinant();
}

double row_scale(const Vec3& a, const Vec3& b, const Vec3& c) {
    return std::max({a.norm(), b.norm(), c.norm(), 1e-300});
}

bool det_ok(const Vec3& a, const Vec3& b, const Vec3& c) {
    const double s = row_scale(a, b, c);
    return std::abs(det3(a, b, c)) > kDetTol * s * s * s;
}

// Walk all triples of points; early-out on the first failure.
bool all_triples_independent(const PointSet& p) {
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k)
                if (!det_ok(p[i], p[j], p[k])) return false;
    return true;
}

bool all_cross_triples_independent(const PointSet& p) {
    const std::size_t n = p.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<Vec3> cross;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            pairs.emplace_back(i, j);
            cross.push_back(p[i].cross(p[j]));
        }
    const std::size_t m = pairs.size();
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            if (pairs[b].first == pairs[a].first || pairs[b].first == pairs[a].second ||
                pairs[b].second == pairs[a].first || pairs[b].second == pairs[a].second)
                continue;
            for (std::size_t c = b + 1; c < m; ++c) {
                const auto& pc = pairs[c];
                if (pc.first == pairs[a].first || pc.first == pairs[a].second ||
                    pc.second == pairs[a].first || pc.second == pairs[a].second ||
                    pc.first == pairs[b].first || pc.first == pairs[b].second ||
                    pc.second == pairs[b].first || pc.second == pairs[b].second)
                    continue;
                if (!det_ok(cross[a], cross[b], cross[c])) return false;
            }
        }
    return true;
}

bool all_difference_triples_independent(const PointSet& p) {
    const std::size_t n = p.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<Vec3> diff;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            pairs.emplace_back(i, j);
            diff.push_back(p[i] - p[j]);
        }
    const std::size_t m = pairs.size();
    auto distinct_count = [&](std::size_t a, std::size_t b, std::size_t c) {
        std::size_t idx[6] = {pairs[a].first, pairs[a].second, pairs[b].first,
                              pairs[b].second, pairs[c].first, pairs[c].second};
        std::sort(std::begin(idx), std::end(idx));
        return static_cast<std::size_t>(std::unique(std::begin(idx), std::end(idx)) -
                                        std::begin(idx));
    };
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            for (std::size_t c = b + 1; c < m; ++c) {
                if (distinct_count(a, b, c) < 4) continue;
                if (!det_ok(diff[a], diff[b], diff[c])) return false;
            }
    return true;
}

}  // namespace

bool dt_pointset_certificate(const PointSet& p) {
    if (p.size() < 8) fail("too-few-points", "DT certificate needs at least 8 points");
    return all_triples_independent(p) && all_cross_triples_independent(p);
}

bool pb_pointset_certificate(const PointSet& p) {
    if (p.size() < 7) fail("too-few-points", "PB certificate needs at least 7 points");
    return all_triples_independent(p) && all_difference_triples_independent(p);
}

std::optional<std::pair<Vec3, Vec3>> pointset_direction_witness(const PointSet& p,
                                                                const Vec3& xi,
                                                                Model model) {
    if (std::abs(xi.norm() - 1.0) > 1e-10)
        fail("invalid-argument", "witness direction must be a unit vector");
    const std::size_t n = p.size();
    const double scale = [&] {
        double s = 0;
        for (const auto& q : p) s = std::max(s, q.norm());
        return std::max(s, 1e-300);
    }();

    std::vector<std::size_t> candidates;
    if (model == Model::DT) {
        // projections onto the plane orthogonal to xi
        std::vector<Vec3> proj(n);
        for (std::size_t i = 0; i < n; ++i) proj[i] = p[i] - p[i].dot(xi) * xi;
        for (std::size_t i = 0; i < n; ++i) {
            if (proj[i].norm() <= 1e-10 * scale) continue;  // pi_xi(p)=0: cannot serve
            if (std::abs(p[i].dot(xi)) <= 1e-10 * scale) continue;
            bool ok = true;
            for (std::size_t j = 0; j < n && ok; ++j) {
                if (j == i) continue;
                if (proj[j].norm() <= 1e-10 * scale) continue;  // excluded per definition
                const double sin_angle =
                    proj[i].cross(proj[j]).norm() / (proj[i].norm() * proj[j].norm());
                if (sin_angle < 1e-10) ok = false;
            }
            if (ok) candidates.push_back(i);
        }
        for (std::size_t a = 0; a < candidates.size(); ++a)
            for (std::size_t b = a + 1; b < candidates.size(); ++b)
                return std::make_pair(p[candidates[a]], p[candidates[b]]);
        return std::nullopt;
    }

    // PB: unique projection onto xi relative to every other point
    for (std::size_t i = 0; i < n; ++i) {
        bool unique = true;
        for (std::size_t j = 0; j < n && unique; ++j) {
            if (j == i) continue;
            if (std::abs((p[i] - p[j]).dot(xi)) <= 1e-10 * scale) unique = false;
        }
        if (unique) candidates.push_back(i);
    }
    for (std::size_t a = 0; a < candidates.size(); ++a)
        for (std::size_t b = a + 1; b < candidates.size(); ++b) {
            const double d = det3(xi, p[candidates[a]], p[candidates[b]]);
            const double s = row_scale(xi, p[candidates[a]], p[candidates[b]]);
            if (std::abs(d) > kDetTol * s * s * s)
                return std::make_pair(p[candidates[a]], p[candidates[b]]);
        }
    return std::nullopt;
}

std::vector<Vec3> fibonacci_sphere(std::size_t n) {
    std::vector<Vec3> pts(n);
    const double ga = kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        pts[i] = {r * std::cos(ga * static_cast<double>(i)),
                  r * std::sin(ga * static_cast<double>(i)), z};
    }
    return pts;
}

double covering_radius_on_grid(const PointSet& p, const std::vector<Vec3>& grid) {
    double worst = 0;
    for (const auto& u : grid) {
        double best = -1;
        for (const auto& q : p) best = std::max(best, u.dot(q) / q.norm());
        worst = std::max(worst, std::acos(std::clamp(best, -1.0, 1.0)));
    }
    return worst;
}

namespace {

// Anneal unit directions so that every direction of `grid` lies within
// theta_c of some point. Deterministic (fixed internal seed).
std::vector<Vec3> optimize_covering(std::size_t n, const std::vector<Vec3>& grid,
                                    double theta_c) {
    std::vector<Vec3> pts = fibonacci_sphere(n);
    const std::size_t m = grid.size();
    std::vector<double> best_cos(m);
    std::vector<std::size_t> nearest(m);

    auto rescan_dir = [&](std::size_t u) {
        double bc = -2;
        std::size_t bj = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = grid[u].dot(pts[j]);
            if (c > bc) {
                bc = c;
                bj = j;
            }
        }
        best_cos[u] = bc;
        nearest[u] = bj;
    };
    for (std::size_t u = 0; u < m; ++u) rescan_dir(u);

    auto cover = [&] {
        double worst = 1;
        for (std::size_t u = 0; u < m; ++u) worst = std::min(worst, best_cos[u]);
        return std::acos(std::clamp(worst, -1.0, 1.0));
    };
    auto worst_u = [&] {
        std::size_t w = 0;
        for (std::size_t u = 1; u < m; ++u)
            if (best_cos[u] < best_cos[w]) w = u;
        return w;
    };

    Rng rng(0x5EEDC0FFEEull);
    double c = cover();
    std::vector<Vec3> best = pts;
    double bestc = c;
    const std::size_t iters = 24000;
    for (std::size_t it = 0; it < iters && bestc > theta_c * 0.97; ++it) {
        const double frac = 1.0 - static_cast<double>(it) / static_cast<double>(iters);
        const double temp = 2e-3 * frac * frac + 1e-8;
        const double step = 0.10 * frac * frac + 5e-4;

        std::size_t j;
        Vec3 moved;
        if (rng.uniform() < 0.5) {
            const std::size_t uw = worst_u();
            // one of the three nearest points to the worst-covered direction
            std::array<std::pair<double, std::size_t>, 3> top{
                {{-2.0, 0}, {-2.0, 0}, {-2.0, 0}}};
            for (std::size_t q = 0; q < n; ++q) {
                const double cq = grid[uw].dot(pts[q]);
                if (cq > top[0].first) {
                    top[2] = top[1];
                    top[1] = top[0];
                    top[0] = {cq, q};
                } else if (cq > top[1].first) {
                    top[2] = top[1];
                    top[1] = {cq, q};
                } else if (cq > top[2].first) {
                    top[2] = {cq, q};
                }
            }
            j = top[std::min<std::size_t>(2, static_cast<std::size_t>(rng.uniform() * 3))]
                    .second;
            moved = pts[j] + (0.5 + 1.5 * rng.uniform()) * step * (grid[uw] - pts[j]);
        } else {
            j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
            if (j >= n) j = n - 1;
            moved = pts[j] + step * Vec3{rng.normal(), rng.normal(), rng.normal()};
        }
        moved.normalize();

        const Vec3 old = pts[j];
        pts[j] = moved;
        // incremental update of best_cos
        std::vector<std::pair<std::size_t, double>> touched;
        for (std::size_t u = 0; u < m; ++u) {
            const double cnew = grid[u].dot(moved);
            if (nearest[u] == j) {
                touched.emplace_back(u, best_cos[u]);
                rescan_dir(u);
            } else if (cnew > best_cos[u]) {
                touched.emplace_back(u, best_cos[u]);
                best_cos[u] = cnew;
                nearest[u] = j;
            }
        }
        const double c2 = cover();
        if (c2 < c || rng.uniform() < std::exp(-(c2 - c) / temp)) {
            c = c2;
            if (c < bestc) {
                bestc = c;
                best = pts;
            }
        } else {
            pts[j] = old;
            for (auto& [u, bc] : touched) rescan_dir(u);
        }
    }
    return best;
}

}  // namespace

PointSet generate_asymmetric_pointset(std::size_t n, std::uint64_t seed,
                                      const Placement& placement) {
    if (n < 8) fail("invalid-argument", "asymmetric point sets need n >= 8");
    if (placement.radius <= 0) fail("invalid-argument", "placement radius must be positive");

    Rng rng(seed);
    const std::size_t budget = 1'000'000;
    std::size_t draws = 0;

    if (placement.kind == Placement::Kind::Ball) {
        // iterative construction: add points one at a time, rejecting any
        // candidate that breaks a triple or difference-triple against the
        // partial set, then confirm the full certificates once complete
        while (true) {
            PointSet pts;
            auto compatible = [&](const Vec3& cand) {
                for (const auto& q : pts)
                    if ((q - cand).norm() < 1e-6 * placement.radius) return false;
                for (std::size_t i = 0; i < pts.size(); ++i)
                    for (std::size_t j = i + 1; j < pts.size(); ++j)
                        if (!det_ok(pts[i], pts[j], cand)) return false;
                return true;
            };
            while (pts.size() < n) {
                if (draws++ > budget)
                    fail("generation-failed", "rejection budget exhausted");
                Vec3 cand = rng.in_ball(placement.radius);
                if (cand.norm() < 0.15 * placement.radius) continue;  // stay off the origin
                if (compatible(cand)) pts.push_back(cand);
            }
            if (dt_pointset_certificate(pts) && pb_pointset_certificate(pts)) return pts;
            if (draws > budget) fail("generation-failed", "rejection budget exhausted");
        }
    }

    // Shell placement: coverage-optimized base directions (deterministic),
    // then seeded jitter until certificates and grid coverage both hold.
    if (!(placement.cap_eps > 0))
        fail("invalid-argument", "shell placement requires cap_eps > 0");
    const double theta_c = std::acos(1.0 - placement.cap_eps / placement.radius);
    const auto check_grid = fibonacci_sphere(4096);
    const auto base = optimize_covering(n, check_grid, theta_c);

    double jitter = 0.0012;  // radians, ~0.07 deg
    for (std::size_t attempt = 0; attempt < 400; ++attempt) {
        PointSet pts(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 v = base[i] + jitter * Vec3{rng.normal(), rng.normal(), rng.normal()};
            v.normalize();
            pts[i] = placement.radius * v;
        }
        if (covering_radius_on_grid(pts, check_grid) < theta_c &&
            dt_pointset_certificate(pts) && pb_pointset_certificate(pts))
            return pts;
        if (attempt % 16 == 15) jitter = std::min(jitter * 1.3, 0.01);
    }
    fail("generation-failed", "no jitter satisfied coverage and certificates");
}

std::vector<double> balance_weights(const PointSet& p) {
    const std::size_t n = p.size();
    if (n < 4) fail("invalid-argument", "weight balancing needs at least 4 points");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k)
                if (!det_ok(p[i], p[j], p[k]))
                    fail("degenerate-set", "three points are linearly dependent");

    auto solve3 = [&](std::size_t i, std::size_t j, std::size_t k, const Vec3& rhs) {
        Mat3 m;
        m.col(0) = p[i];
        m.col(1) = p[j];
        m.col(2) = p[k];
        return Vec3(m.colPivHouseholderQr().solve(rhs));
    };

    // base case N = 4: p4 = a1 p1 + a2 p2 + a3 p3
    std::vector<double> w(n, 0.0);
    {
        const Vec3 a = solve3(0, 1, 2, p[3]);
        w[0] = a[0];
        w[1] = a[1];
        w[2] = a[2];
        w[3] = -1.0;
    }
    for (std::size_t N = 5; N <= n; ++N) {
        const std::size_t iN = N - 1;
        const Vec3 a = solve3(iN - 3, iN - 2, iN - 1, p[iN]);
        // pick lambda so no coefficient w_j - lambda a_j vanishes
        double lmax = 0;
        for (int q = 0; q < 3; ++q)
            lmax = std::max(lmax, std::abs(w[iN - 3 + static_cast<std::size_t>(q)] / a[q]));
        double lambda = lmax + 1.0;
        for (int tries = 0; tries < 64; ++tries) {
            double mn = std::abs(lambda);
            for (int q = 0; q < 3; ++q)
                mn = std::min(mn,
                              std::abs(w[iN - 3 + static_cast<std::size_t>(q)] - lambda * a[q]));
            double mx = std::abs(lambda);
            for (std::size_t j = 0; j < iN; ++j) mx = std::max(mx, std::abs(w[j]));
            if (mn > 1e-6 * mx) break;
            lambda *= 2.0;
        }
        for (int q = 0; q < 3; ++q) w[iN - 3 + static_cast<std::size_t>(q)] -= lambda * a[q];
        w[iN] = lambda;
    }

    double mx = 0;
    for (double x : w) mx = std::max(mx, std::abs(x));
    for (double& x : w) x /= mx;
    return w;
}

}  // namespace rotrec::pointset
