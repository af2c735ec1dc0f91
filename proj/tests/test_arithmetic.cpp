#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "torsion/arithmetic.hpp"

using namespace torsion;

namespace {

// Independent brute-force oracle for the constant-type certificate, written
// against doubles and fmod rather than the library's accumulation loop.
double alpha_oracle(double beta, std::uint64_t q_max) {
    double best = 1.0;
    for (std::uint64_t q = 1; q <= q_max; ++q) {
        double qb = std::fmod(static_cast<double>(q) * beta, 1.0);
        double d = std::min(qb, 1.0 - qb);
        best = std::min(best, static_cast<double>(q) * d);
    }
    return best;
}

// Independent gap scan used to validate orbit_density_radius.
double radius_oracle(double beta, double offset, std::uint64_t N) {
    std::vector<double> pts;
    for (std::uint64_t n = 1; n <= N; ++n) {
        double x = std::fmod(offset + static_cast<double>(n) * beta, 1.0);
        if (x < 0) x += 1.0;
        pts.push_back(x);
    }
    std::sort(pts.begin(), pts.end());
    double gap = pts.front() + 1.0 - pts.back();
    for (std::size_t i = 1; i < pts.size(); ++i) gap = std::max(gap, pts[i] - pts[i - 1]);
    return gap / 2.0;
}

const double kGolden = 0.6180339887498949;  // (sqrt(5)-1)/2
const double kSilver = 0.41421356237309515;  // sqrt(2)-1

}  // namespace

TEST_CASE("continued fraction of quadratic irrationals") {
    auto g = continued_fraction(static_cast<long double>(kGolden), 6);
    CHECK(g == std::vector<std::uint64_t>{1, 1, 1, 1, 1, 1});

    auto s = continued_fraction(static_cast<long double>(kSilver), 5);
    CHECK(s == std::vector<std::uint64_t>{2, 2, 2, 2, 2});
}

TEST_CASE("near-rational input snaps at depth 1 and is rejected deeper") {
    const long double x = 0.5L + 1e-15L;
    auto one = continued_fraction(x, 1);
    CHECK(one == std::vector<std::uint64_t>{2});
    CHECK_THROWS_AS(continued_fraction(x, 3), RationalDetected);
}

TEST_CASE("quotient ceiling flags rationals") {
    ContinuedFractionOptions opt;
    opt.quotient_ceiling = 1000;
    opt.rational_tol = 1e-18L;  // force the ceiling path
    CHECK_THROWS_AS(continued_fraction(0.5L + 1e-15L, 3, opt), RationalDetected);
}

TEST_CASE("convergents approximate to 1/q^2") {
    RotationNumber beta(kGolden);
    auto q = beta.partial_quotients(20);
    auto cv = convergents(q);
    for (const auto& c : cv) {
        double approx = static_cast<double>(c.p) / static_cast<double>(c.q);
        double err = std::fabs(kGolden - approx);
        CHECK(err < 1.0 / (static_cast<double>(c.q) * static_cast<double>(c.q)));
    }
    // Reconstruction from k quotients is within 1/(q_k q_{k+1}).
    for (std::size_t k = 1; k + 1 < cv.size(); ++k) {
        std::vector<std::uint64_t> head(q.begin(), q.begin() + static_cast<long>(k));
        double rec = static_cast<double>(value_from_quotients(head));
        double bound = 1.0 / (static_cast<double>(cv[k - 1].q) * static_cast<double>(cv[k].q));
        CHECK(std::fabs(rec - kGolden) <= bound * (1.0 + 1e-12));
    }
}

TEST_CASE("diophantine constant of the golden mean") {
    RotationNumber beta(kGolden);
    double a100 = diophantine_constant(beta, 100);
    CHECK(a100 == doctest::Approx(0.38196601125010515).epsilon(1e-9));
    CHECK(a100 == doctest::Approx(alpha_oracle(kGolden, 100)).epsilon(1e-9));

    // Along Fibonacci denominators the certificate decays toward 1/sqrt(5)
    // but never drops below ~0.38 up to 1e5.
    double a1e5 = diophantine_constant(beta, 100000);
    CHECK(a1e5 >= 0.38);
    CHECK(a1e5 <= a100 + 1e-15);  // non-increasing in q_max
}

TEST_CASE("a huge partial quotient destroys the certificate") {
    std::vector<std::uint64_t> q{1, 1, 1000000, 1, 1, 1, 1, 1, 1, 1};
    double beta = static_cast<double>(value_from_quotients(q));
    RotationNumber rn(beta);
    double alpha = diophantine_constant(rn, 5'000'000);
    CHECK(alpha < 1e-5);
    CHECK(alpha == doctest::Approx(alpha_oracle(beta, 5'000'000)).epsilon(1e-6));
}

TEST_CASE("diophantine constant is non-increasing in q_max") {
    RotationNumber beta(kSilver);
    double prev = 1.0;
    for (std::uint64_t q : {10ULL, 100ULL, 1000ULL, 10000ULL}) {
        double a = diophantine_constant(beta, q);
        CHECK(a <= prev + 1e-18);
        prev = a;
    }
}

TEST_CASE("orbit covering radius: single point") {
    RotationNumber beta(0.3183098861837907);
    CHECK(orbit_density_radius(beta, 0.0, 1) == doctest::Approx(0.5));
}

TEST_CASE("orbit covering radius: golden mean Dirichlet bound") {
    RotationNumber beta(kGolden);
    const std::uint64_t N = 10000;
    double r = orbit_density_radius(beta, 0.0, N);
    CHECK(r == doctest::Approx(radius_oracle(kGolden, 0.0, N)).epsilon(1e-12));
    double alpha = diophantine_constant(beta, N);
    double C = r * static_cast<double>(N) * alpha;
    INFO("empirical Dirichlet constant C = ", C);
    CHECK(r <= 3.0 / (static_cast<double>(N) * alpha));

    double r2 = orbit_density_radius(beta, 0.0, 2 * N);
    CHECK(r2 >= r / 4.0);
    CHECK(r2 <= r * 1.0000001);
}

TEST_CASE("Dirichlet bound holds for randomly generated rotation numbers") {
    std::mt19937_64 rng(20240817);
    std::uniform_int_distribution<std::uint64_t> quot(1, 6);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::uint64_t> q;
        for (int k = 0; k < 24; ++k) q.push_back(quot(rng));
        double beta = static_cast<double>(value_from_quotients(q));
        RotationNumber rn(beta);
        for (std::uint64_t N : {100ULL, 1000ULL, 10000ULL}) {
            double r = orbit_density_radius(rn, 0.37, N);
            double alpha = diophantine_constant(rn, N);
            CHECK(r <= 3.0 / (static_cast<double>(N) * alpha));
        }
    }
}
