#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace rotrec {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using cplx = std::complex<double>;
using Vec2c = Eigen::Vector2cd;
using Vec3c = Eigen::Vector3cd;
using Mat2c = Eigen::Matrix2cd;
using Mat3c = Eigen::Matrix3cd;

// Error with a stable machine-readable code (kebab-case) next to the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
    throw Error(code, what);
}

inline Mat3 skew(const Vec3& w) {
    Mat3 m;
    m << 0, -w.z(), w.y(),
         w.z(), 0, -w.x(),
         -w.y(), w.x(), 0;
    return m;
}

inline Vec3 vee(const Mat3& a) {
    return {a(2, 1), a(0, 2), a(1, 0)};
}

inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

// (v1, v2, 0)
inline Vec3 lift2(const Vec2& v) { return {v.x(), v.y(), 0.0}; }

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace rotrec
