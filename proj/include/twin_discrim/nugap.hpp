#pragma once

/** @file
 * Vinnicombe nu-gap between SIMO (m x 1) frequency responses and the
 * cumulative-sum choice of a nominal model from a family.
 *
 * For a column P the chordal distance at one frequency is
 *   || (I + P2 P2^*)^{-1/2} (P1 - P2) (1 + P1^* P1)^{-1/2} ||_2
 * and the left factor has the closed form I - v v^* (1 - 1/sqrt(1+|v|^2)) / |v|^2.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "lti.hpp"
#include "parallel.hpp"

namespace twin_discrim {

struct NuGapOptions {
    std::size_t grid_size = 2048;
    int refine_iterations = 20;
    /// Also require the winding-number condition; returns 1 when it fails.
    bool strict_winding = false;
    unsigned threads = 1;
};

struct NuGapMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> values;
    std::vector<double> cumulative;
};

struct NominalSelection {
    NuGapMatrix matrix;
    std::size_t winner = 0;
    bool tie = false;
};

class NuGapError : public std::runtime_error {
public:
    NuGapError(const std::string& what, std::string model, double omega)
        : std::runtime_error(what), model_(std::move(model)), omega_(omega) {}
    const std::string& model() const noexcept { return model_; }
    double omega() const noexcept { return omega_; }

private:
    std::string model_;
    double omega_;
};

inline double chordal_distance(std::span<const Complex> p1, std::span<const Complex> p2)
{
    if (p1.size() != p2.size() || p1.empty())
        throw InvalidInput("chordal_distance: responses must be non-empty columns of equal size");
    double n1 = 0.0, n2 = 0.0;
    Complex p2h_diff = 0.0;  // P2^* (P1 - P2)
    std::vector<Complex> diff(p1.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        diff[i] = p1[i] - p2[i];
        n1 += std::norm(p1[i]);
        n2 += std::norm(p2[i]);
        p2h_diff += std::conj(p2[i]) * diff[i];
    }
    // (I + v v^*)^{-1/2} w = w - v (v^* w) (1 - 1/sqrt(1+|v|^2)) / |v|^2
    const double shrink = n2 > 0.0 ? (1.0 - 1.0 / std::sqrt(1.0 + n2)) / n2 : 0.0;
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) norm_sq += std::norm(diff[i] - p2[i] * p2h_diff * shrink);
    return std::sqrt(norm_sq) / std::sqrt(1.0 + n1);
}

namespace detail {

inline std::vector<Complex> simo_response(const SimoModel& m, double w)
{
    const Complex q = std::polar(1.0, -w);
    std::vector<Complex> out;
    out.reserve(2);
    for (const auto* tf : {&m.tf_y(), &m.tf_u()}) {
        const Complex den = tf->denominator().evaluate(q);
        if (std::abs(den) < 1e-300)
            throw NuGapError("nugap: model '" + m.label() + "' has a pole on the unit circle at omega=" +
                                 std::to_string(w),
                             m.label(), w);
        out.push_back(tf->numerator().evaluate(q) / den);
    }
    return out;
}

inline void check_unit_circle_poles(const SimoModel& m)
{
    for (const auto* tf : {&m.tf_y(), &m.tf_u()}) {
        if (tf->denominator().degree() < 1) continue;
        for (const auto& r : roots(tf->denominator())) {
            if (std::abs(std::abs(r) - 1.0) < 1e-10)
                throw NuGapError("nugap: model '" + m.label() + "' has a pole on the unit circle at omega=" +
                                     std::to_string(std::abs(std::arg(r))),
                                 m.label(), std::abs(std::arg(r)));
        }
    }
}

inline int unstable_pole_count(const SimoModel& m)
{
    // Poles of the column are the union of both channel denominators' roots.
    int count = 0;
    for (const auto* tf : {&m.tf_y(), &m.tf_u()}) {
        if (tf->denominator().degree() < 1) continue;
        for (const auto& r : roots(tf->denominator()))
            if (std::abs(r) > 1.0) ++count;
    }
    return count;
}

inline double chordal_at(const SimoModel& a, const SimoModel& b, double w)
{
    const auto pa = simo_response(a, w);
    const auto pb = simo_response(b, w);
    return chordal_distance(pa, pb);
}

/// Winding number of 1 + P2^* P1 around the full unit circle.
inline int winding_number(const SimoModel& p1, const SimoModel& p2, std::size_t grid)
{
    const std::size_t n = 2 * grid;
    double total = 0.0;
    Complex prev{};
    for (std::size_t k = 0; k <= n; ++k) {
        const double w = 2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
        // Responses at w > pi follow from conjugate symmetry.
        const double wf = w <= std::numbers::pi ? w : 2.0 * std::numbers::pi - w;
        auto a = simo_response(p1, wf);
        auto b = simo_response(p2, wf);
        if (w > std::numbers::pi) {
            for (auto& v : a) v = std::conj(v);
            for (auto& v : b) v = std::conj(v);
        }
        Complex det = 1.0;
        for (std::size_t i = 0; i < a.size(); ++i) det += std::conj(b[i]) * a[i];
        if (std::abs(det) < 1e-12) return 1 << 20;  // passes through the origin
        if (k > 0) total += std::arg(det / prev);
        prev = det;
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

}  // namespace detail

inline double nugap(const SimoModel& m1, const SimoModel& m2, const NuGapOptions& opts = {})
{
    if (m1.sample_time() != m2.sample_time())
        throw InvalidInput("nugap: models must share a sample time");
    if (opts.grid_size < 64) throw InvalidInput("nugap: grid size must be at least 64");
    detail::check_unit_circle_poles(m1);
    detail::check_unit_circle_poles(m2);

    if (opts.strict_winding) {
        const int wno = detail::winding_number(m1, m2, opts.grid_size);
        if (wno + detail::unstable_pole_count(m1) - detail::unstable_pole_count(m2) != 0) return 1.0;
    }

    const std::size_t n = opts.grid_size;
    const double step = std::numbers::pi / static_cast<double>(n - 1);
    double best = -1.0;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = detail::chordal_at(m1, m2, step * static_cast<double>(k));
        if (d > best) {
            best = d;
            best_k = k;
        }
    }

    // Golden-section refinement on the bracket around the grid maximizer.
    double lo = best_k > 0 ? step * static_cast<double>(best_k - 1) : 0.0;
    double hi = best_k + 1 < n ? step * static_cast<double>(best_k + 1) : std::numbers::pi;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = detail::chordal_at(m1, m2, x1), f2 = detail::chordal_at(m1, m2, x2);
    for (int it = 0; it < opts.refine_iterations; ++it) {
        best = std::max({best, f1, f2});
        if (f1 > f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = detail::chordal_at(m1, m2, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = detail::chordal_at(m1, m2, x2);
        }
    }
    best = std::max({best, f1, f2});
    return std::clamp(best, 0.0, 1.0);
}

struct ArgminResult {
    std::size_t index = 0;
    bool tie = false;
};

/// Smallest cumulative sum; ties go to the lowest index and are flagged.
inline ArgminResult argmin_cumulative(std::span<const double> sums)
{
    if (sums.empty()) throw InvalidInput("argmin_cumulative: empty");
    ArgminResult res;
    for (std::size_t i = 1; i < sums.size(); ++i)
        if (sums[i] < sums[res.index]) res.index = i;
    for (std::size_t i = 0; i < sums.size(); ++i)
        if (i != res.index && sums[i] == sums[res.index]) res.tie = true;
    return res;
}

inline NominalSelection select_nominal(std::span<const SimoModel> models, const NuGapOptions& opts = {})
{
    if (models.size() < 2) throw InvalidInput("select_nominal: needs at least two models");
    const std::size_t n = models.size();
    NominalSelection sel;
    auto& mat = sel.matrix;
    for (const auto& m : models) mat.labels.push_back(m.label());
    mat.values.assign(n, std::vector<double>(n, 0.0));

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::vector<double> gaps(pairs.size());
    NuGapOptions inner = opts;
    inner.threads = 1;
    parallel_for(pairs.size(), opts.threads,
                 [&](std::size_t p) { gaps[p] = nugap(models[pairs[p].first], models[pairs[p].second], inner); });
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        mat.values[i][j] = mat.values[j][i] = gaps[p];
    }

    mat.cumulative.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) mat.cumulative[i] += mat.values[i][j];
    const auto am = argmin_cumulative(mat.cumulative);
    sel.winner = am.index;
    sel.tie = am.tie;
    return sel;
}

}  // namespace twin_discrim
