#pragma once

/** @file
 * Discrete-time polynomials and transfer functions in the delay operator.
 *
 * A polynomial stores the coefficients of z^0, z^-1, z^-2, ... in that order,
 * so a row such as "1 -1.997 0.999" reads as 1 - 1.997 z^-1 + 0.999 z^-2.
 * Transfer functions are N(z^-1) / D(z^-1) with D monic; a pure delay is
 * written as leading zeros of N.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace twin_discrim {

using Complex = std::complex<double>;

class DiscretePolynomial {
public:
    DiscretePolynomial() : coeffs_{0.0} {}

    explicit DiscretePolynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs))
    {
        if (coeffs_.empty()) throw InvalidInput("polynomial needs at least one coefficient");
    }

    DiscretePolynomial(std::initializer_list<double> coeffs)
        : DiscretePolynomial(std::vector<double>(coeffs)) {}

    static DiscretePolynomial one() { return DiscretePolynomial{1.0}; }

    std::size_t degree() const noexcept { return coeffs_.size() - 1; }
    std::size_t size() const noexcept { return coeffs_.size(); }
    std::span<const double> coeffs() const noexcept { return coeffs_; }
    const std::vector<double>& vector() const noexcept { return coeffs_; }
    double operator[](std::size_t i) const { return coeffs_[i]; }

    bool is_monic() const noexcept { return coeffs_.front() == 1.0; }

    bool is_zero() const noexcept
    {
        return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return c == 0.0; });
    }

    /// Sum of c_k q^k, i.e. the polynomial with q standing for z^-1.
    Complex evaluate(Complex q) const noexcept
    {
        Complex acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * q + *it;
        return acc;
    }

    friend DiscretePolynomial operator*(const DiscretePolynomial& a, const DiscretePolynomial& b)
    {
        std::vector<double> out(a.size() + b.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
        return DiscretePolynomial(std::move(out));
    }

    friend bool operator==(const DiscretePolynomial&, const DiscretePolynomial&) = default;

    std::string to_string() const
    {
        std::ostringstream os;
        os.precision(17);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) os << (i ? " " : "") << coeffs_[i];
        return os.str();
    }

private:
    std::vector<double> coeffs_;
};

class DiscreteTransferFunction {
public:
    DiscreteTransferFunction()
        : numerator_{0.0}, denominator_{1.0}, sample_time_(1.0) {}

    DiscreteTransferFunction(DiscretePolynomial numerator, DiscretePolynomial denominator,
                             double sample_time = 1.0)
        : numerator_(std::move(numerator)),
          denominator_(std::move(denominator)),
          sample_time_(sample_time)
    {
        if (!(sample_time_ > 0.0)) throw InvalidInput("sample time must be positive");
    }

    const DiscretePolynomial& numerator() const noexcept { return numerator_; }
    const DiscretePolynomial& denominator() const noexcept { return denominator_; }
    double sample_time() const noexcept { return sample_time_; }

    friend DiscreteTransferFunction operator*(const DiscreteTransferFunction& a,
                                              const DiscreteTransferFunction& b)
    {
        return {a.numerator_ * b.numerator_, a.denominator_ * b.denominator_, a.sample_time_};
    }

private:
    DiscretePolynomial numerator_;
    DiscretePolynomial denominator_;
    double sample_time_;
};

/// Operating point around which a SIMO model maps deviations.
struct OperatingPoint {
    double r0 = 0.0;
    double y0 = 0.0;
    double u0 = 0.0;
};

/// Reference r driving temperature y and control u.
class SimoModel {
public:
    SimoModel() = default;

    SimoModel(DiscreteTransferFunction tf_y, DiscreteTransferFunction tf_u, std::string label,
              OperatingPoint op = {})
        : tf_y_(std::move(tf_y)), tf_u_(std::move(tf_u)), label_(std::move(label)), op_(op)
    {
        if (tf_y_.sample_time() != tf_u_.sample_time())
            throw InvalidModel("SIMO channels must share a sample time");
    }

    const DiscreteTransferFunction& tf_y() const noexcept { return tf_y_; }
    const DiscreteTransferFunction& tf_u() const noexcept { return tf_u_; }
    const std::string& label() const noexcept { return label_; }
    const OperatingPoint& operating_point() const noexcept { return op_; }
    double sample_time() const noexcept { return tf_y_.sample_time(); }

private:
    DiscreteTransferFunction tf_y_;
    DiscreteTransferFunction tf_u_;
    std::string label_;
    OperatingPoint op_;
};

/// Runs N/D as a difference equation from rest.
inline std::vector<double> filter(const DiscretePolynomial& num, const DiscretePolynomial& den,
                                  std::span<const double> input)
{
    if (den[0] != 1.0)
        throw InvalidModel("denominator z^0 coefficient must be 1, got " + std::to_string(den[0]));
    const auto b = num.coeffs();
    const auto a = den.coeffs();
    std::vector<double> y(input.size(), 0.0);
    for (std::size_t k = 0; k < input.size(); ++k) {
        double acc = 0.0;
        const std::size_t nb = std::min(b.size(), k + 1);
        for (std::size_t i = 0; i < nb; ++i) acc += b[i] * input[k - i];
        const std::size_t na = std::min(a.size(), k + 1);
        for (std::size_t j = 1; j < na; ++j) acc -= a[j] * y[k - j];
        y[k] = acc;
    }
    return y;
}

inline std::vector<double> simulate(const DiscreteTransferFunction& tf, std::span<const double> input)
{
    if (input.empty()) throw InvalidInput("simulate: input must be non-empty");
    return filter(tf.numerator(), tf.denominator(), input);
}

/// Simulated (y, u) for a SIMO model driven by an absolute reference.
inline std::pair<std::vector<double>, std::vector<double>> predict_channels(
    const SimoModel& model, std::span<const double> reference)
{
    const auto& op = model.operating_point();
    std::vector<double> dr(reference.begin(), reference.end());
    for (auto& v : dr) v -= op.r0;
    auto y = simulate(model.tf_y(), dr);
    auto u = simulate(model.tf_u(), dr);
    for (auto& v : y) v += op.y0;
    for (auto& v : u) v += op.u0;
    return {std::move(y), std::move(u)};
}

/// N(e^{-jw}) / D(e^{-jw}) on a grid of w in [0, pi].
inline std::vector<Complex> frequency_response(const DiscreteTransferFunction& tf,
                                               std::span<const double> omegas)
{
    std::vector<Complex> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        if (!(w >= 0.0 && w <= std::numbers::pi))
            throw InvalidInput("frequency_response: omega outside [0, pi]: " + std::to_string(w));
        const Complex q = std::polar(1.0, -w);
        const Complex den = tf.denominator().evaluate(q);
        if (std::abs(den) < 1e-300)
            throw NearPoleError("frequency_response: denominator vanishes at omega=" +
                                    std::to_string(w),
                                w);
        out.push_back(tf.numerator().evaluate(q) / den);
    }
    return out;
}

/// Roots in z of c0 z^n + c1 z^(n-1) + ... + cn, via companion-matrix eigenvalues.
/// Leading zero coefficients (roots at infinity) are dropped.
inline std::vector<Complex> roots(const DiscretePolynomial& p)
{
    if (p.is_zero()) throw InvalidInput("roots: zero polynomial");
    auto c = p.coeffs();
    std::size_t first = 0;
    while (c[first] == 0.0) ++first;
    const std::size_t n = c.size() - 1 - first;
    if (n == 0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) companion(0, static_cast<Eigen::Index>(j)) = -c[first + 1 + j] / c[first];
    for (std::size_t i = 1; i < n; ++i)
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    const auto& ev = solver.eigenvalues();
    std::vector<Complex> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = ev(static_cast<Eigen::Index>(i));
    return out;
}

/// Monic polynomial in z^-1 whose roots (in z) are `rs`; complex pairs must be closed.
inline DiscretePolynomial from_roots(std::span<const Complex> rs)
{
    std::vector<Complex> acc{1.0};
    for (const auto& r : rs) {
        std::vector<Complex> next(acc.size() + 1, 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            next[i] += acc[i];
            next[i + 1] -= r * acc[i];
        }
        acc = std::move(next);
    }
    std::vector<double> out(acc.size());
    std::transform(acc.begin(), acc.end(), out.begin(), [](Complex v) { return v.real(); });
    return DiscretePolynomial(std::move(out));
}

/// Root magnitudes, descending.
inline std::vector<double> pole_magnitudes(const DiscretePolynomial& p)
{
    if (p.degree() < 1) throw InvalidInput("pole_magnitudes: degree must be at least 1");
    const auto rs = roots(p);
    std::vector<double> mags(rs.size());
    std::transform(rs.begin(), rs.end(), mags.begin(), [](Complex r) { return std::abs(r); });
    std::sort(mags.begin(), mags.end(), std::greater<>());
    return mags;
}

inline double spectral_radius(const DiscretePolynomial& p)
{
    if (p.degree() < 1) return 0.0;
    const auto mags = pole_magnitudes(p);
    return mags.empty() ? 0.0 : mags.front();
}

/// Pulls every root with |z| > max_radius radially onto max_radius. Monic input only.
inline DiscretePolynomial stabilize(const DiscretePolynomial& p, double max_radius)
{
    if (p.degree() < 1) return p;
    auto rs = roots(p);
    bool changed = false;
    for (auto& r : rs) {
        const double m = std::abs(r);
        if (m > max_radius) {
            r *= max_radius / m;
            changed = true;
        }
    }
    if (!changed) return p;
    auto out = from_roots(rs);
    auto c = out.vector();
    c.resize(p.size(), 0.0);
    return DiscretePolynomial(std::move(c));
}

}  // namespace twin_discrim
