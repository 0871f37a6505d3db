#pragma once

// Shared helpers for the test binaries: fixture loading, random models and
// reference formulas written independently of the library code.

#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "twin_discrim/twin_discrim.hpp"

#ifndef TWIN_DISCRIM_FIXTURE_DIR
#define TWIN_DISCRIM_FIXTURE_DIR "tests/fixtures"
#endif

namespace tdtest {

using namespace twin_discrim;

inline nlohmann::json load_fixture(const std::string& name)
{
    std::ifstream in(std::string(TWIN_DISCRIM_FIXTURE_DIR) + "/" + name);
    if (!in) throw std::runtime_error("missing fixture " + name);
    return nlohmann::json::parse(in);
}

/// Printed Box-Jenkins family keyed by order label, channels "y" and "u".
inline std::map<std::string, std::map<std::string, BoxJenkinsModel>> load_bj_family(const nlohmann::json& j)
{
    std::map<std::string, std::map<std::string, BoxJenkinsModel>> out;
    for (const auto& [order, channels] : j.at("orders").items()) {
        for (const auto& [ch, polys] : channels.items()) {
            BoxJenkinsModel m;
            m.b = DiscretePolynomial(polys.at("B").get<std::vector<double>>());
            m.c = DiscretePolynomial(polys.at("C").get<std::vector<double>>());
            m.d = DiscretePolynomial(polys.at("D").get<std::vector<double>>());
            m.f = DiscretePolynomial(polys.at("F").get<std::vector<double>>());
            m.delay = order.back() - '0';
            out[order][ch] = m;
        }
    }
    return out;
}

/// Monic polynomial whose roots are drawn inside the given radius (conjugate pairs kept real).
inline DiscretePolynomial random_stable(Rng& rng, int degree, double radius = 0.9)
{
    std::vector<double> p{1.0};
    int left = degree;
    auto mul = [&](std::vector<double> f) {
        std::vector<double> out(p.size() + f.size() - 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t j = 0; j < f.size(); ++j) out[i + j] += p[i] * f[j];
        p = out;
    };
    while (left > 0) {
        if (left >= 2 && rng.uniform() < 0.5) {
            const double r = radius * std::sqrt(rng.uniform());
            const double th = rng.uniform(0.0, std::numbers::pi);
            mul({1.0, -2.0 * r * std::cos(th), r * r});
            left -= 2;
        } else {
            mul({1.0, -rng.uniform(-radius, radius)});
            left -= 1;
        }
    }
    return DiscretePolynomial(p);
}

inline DiscretePolynomial random_poly(Rng& rng, int degree, double scale = 1.0)
{
    std::vector<double> c(static_cast<std::size_t>(degree + 1));
    for (auto& v : c) v = rng.uniform(-scale, scale);
    return DiscretePolynomial(c);
}

inline SimoModel random_simo(Rng& rng, const std::string& label)
{
    const int n = 1 + static_cast<int>(rng.uniform() * 3.0);
    DiscreteTransferFunction ty(random_poly(rng, n), random_stable(rng, n));
    DiscreteTransferFunction tu(random_poly(rng, n), random_stable(rng, n));
    return SimoModel(ty, tu, label);
}

/// Direct difference equation, written out term by term.
inline std::vector<double> oracle_filter(const std::vector<double>& b, const std::vector<double>& a,
                                         const std::vector<double>& x)
{
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < b.size() && i <= k; ++i) acc += b[i] * x[k - i];
        for (std::size_t j = 1; j < a.size() && j <= k; ++j) acc -= a[j] * y[k - j];
        y[k] = acc / a[0];
    }
    return y;
}

/// Scalar chordal distance |g1 - g2| / sqrt((1+|g1|^2)(1+|g2|^2)).
inline double oracle_scalar_chordal(std::complex<double> g1, std::complex<double> g2)
{
    return std::abs(g1 - g2) / std::sqrt((1.0 + std::norm(g1)) * (1.0 + std::norm(g2)));
}

/// Column chordal distance through an explicit SVD of the 2x1 product.
inline double oracle_column_chordal(const std::vector<std::complex<double>>& p1,
                                    const std::vector<std::complex<double>>& p2)
{
    using M = Eigen::Matrix2cd;
    Eigen::Vector2cd a(p1[0], p1[1]), b(p2[0], p2[1]);
    const M lhs = M::Identity() + b * b.adjoint();
    Eigen::SelfAdjointEigenSolver<M> es(lhs);
    const M inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                       es.eigenvectors().adjoint();
    const double right = 1.0 / std::sqrt(1.0 + a.squaredNorm());
    return (inv_sqrt * (a - b)).norm() * right;
}

inline double oracle_naic(const std::vector<double>& e, int np)
{
    double s = 0.0;
    for (double v : e) s += v * v;
    const double n = static_cast<double>(e.size());
    return std::log(s / n) + 2.0 * np / n;
}

inline double oracle_bic(const std::vector<double>& e, int np)
{
    double s = 0.0;
    for (double v : e) s += v * v;
    const double n = static_cast<double>(e.size());
    return n * std::log(s / n) + n * (std::log(2.0 * std::numbers::pi) + 1.0) + np * std::log(n);
}

inline double oracle_mdl(const std::vector<double>& e, int np)
{
    double s = 0.0;
    for (double v : e) s += v * v;
    const double n = static_cast<double>(e.size());
    return (s / n) * (1.0 + np / n) * std::log(n);
}

/// Token length by hand: sign plus the decimal digits of the rounded scaled value.
inline long oracle_code_length(double v, int precision)
{
    const double scaled = v * std::pow(10.0, precision);
    const long long k = std::llround(scaled);
    if (k == 0) return 1;
    return 1 + static_cast<long>(std::to_string(k < 0 ? -k : k).size());
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace tdtest
