// Shared basics: error types, angle reduction, small numeric helpers.
#ifndef TORSION_COMMON_HPP
#define TORSION_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace torsion {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kPi = std::numbers::pi;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct RationalDetected : Error {
    explicit RationalDetected(const std::string& msg) : Error(msg) {}
};
struct NewtonDivergence : Error {
    explicit NewtonDivergence(const std::string& msg) : Error(msg) {}
};
struct NotHyperbolic : Error {
    explicit NotHyperbolic(const std::string& msg) : Error(msg) {}
};
struct RegimeInfeasible : Error {
    explicit RegimeInfeasible(const std::string& msg) : Error(msg) {}
};
// An intermediate point of a word composition left the annulus. `step` is the
// index of the offending symbol; this signals escape, not a numerical bug.
struct LeftDomain : Error {
    std::size_t step;
    LeftDomain(std::size_t step_, const std::string& msg) : Error(msg), step(step_) {}
};
struct SmallDivisorBlowup : Error {
    long mode;
    SmallDivisorBlowup(long mode_, const std::string& msg) : Error(msg), mode(mode_) {}
};
struct NoTransverseZero : Error {
    explicit NoTransverseZero(const std::string& msg) : Error(msg) {}
};
struct ContractionFailure : Error {
    explicit ContractionFailure(const std::string& msg) : Error(msg) {}
};
struct SearchExhausted : Error {
    explicit SearchExhausted(const std::string& msg) : Error(msg) {}
};
struct NoHeteroclinic : Error {
    explicit NoHeteroclinic(const std::string& msg) : Error(msg) {}
};
struct SteeringStuck : Error {
    explicit SteeringStuck(const std::string& msg) : Error(msg) {}
};
struct WindowTooShort : Error {
    explicit WindowTooShort(const std::string& msg) : Error(msg) {}
};
struct NearCollision : Error {
    explicit NearCollision(const std::string& msg) : Error(msg) {}
};
struct StepUnderflow : Error {
    explicit StepUnderflow(const std::string& msg) : Error(msg) {}
};
struct BudgetExhausted : Error {
    explicit BudgetExhausted(const std::string& msg) : Error(msg) {}
};

// Reduce an angle to [0, 2*pi).
inline double wrap_angle(double phi) {
    double w = std::fmod(phi, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    // fmod can return exactly 2*pi after the correction when phi is a tiny
    // negative number; fold that back.
    if (w >= kTwoPi) w -= kTwoPi;
    return w;
}

// Reduce an angle to the symmetric representative in (-pi, pi].
inline double wrap_signed(double phi) {
    double w = std::fmod(phi, kTwoPi);
    if (w > kPi) w -= kTwoPi;
    if (w <= -kPi) w += kTwoPi;
    return w;
}

// Same reduction in long double, for n*beta with n up to ~1e12.
inline long double wrap_signed_l(long double phi) {
    const long double two_pi = 2.0L * 3.14159265358979323846264338327950288L;
    long double w = std::fmod(phi, two_pi);
    if (w > two_pi / 2) w -= two_pi;
    if (w <= -two_pi / 2) w += two_pi;
    return w;
}

// Fractional part in [0,1).
inline long double frac_l(long double x) {
    long double f = x - std::floor(x);
    if (f >= 1.0L) f -= 1.0L;
    return f;
}

// Distance of x to the nearest integer.
inline long double dist_to_int_l(long double x) {
    long double f = frac_l(x);
    return f <= 0.5L ? f : 1.0L - f;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

struct Mat2 {
    // Row-major: [[a, b], [c, d]].
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    double det() const { return a * d - b * c; }
    double trace() const { return a + d; }
    Mat2 mul(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 inverse() const {
        double dt = det();
        return {d / dt, -b / dt, -c / dt, a / dt};
    }
};

}  // namespace torsion

#endif  // TORSION_COMMON_HPP
