#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace twin_discrim {

/// Sampled closed-loop record: time [s], reference [degC], control [counts], output [degC].
struct TimeSeriesDataset {
    std::vector<double> t;
    std::vector<double> r;
    std::vector<double> u;
    std::vector<double> y;
    std::string label;

    std::size_t size() const noexcept { return t.size(); }

    double sample_time() const
    {
        if (t.size() < 2) throw InvalidInput("dataset needs at least two samples");
        return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    }

    /// Equal column lengths and uniform, strictly increasing time.
    void validate() const
    {
        const auto n = t.size();
        if (n < 2 || r.size() != n || u.size() != n || y.size() != n)
            throw InvalidInput("dataset '" + label + "': columns must have equal length >= 2");
        const double dt = sample_time();
        if (!(dt > 0.0)) throw InvalidInput("dataset '" + label + "': time must increase");
        for (std::size_t k = 1; k < n; ++k) {
            const double step = t[k] - t[k - 1];
            if (!(step > 0.0) || std::abs(step - dt) > 1e-6 * dt)
                throw InvalidInput("dataset '" + label + "': non-uniform time at row " +
                                   std::to_string(k + 1));
        }
        for (std::size_t k = 0; k < n; ++k)
            if (!std::isfinite(r[k]) || !std::isfinite(u[k]) || !std::isfinite(y[k]))
                throw InvalidInput("dataset '" + label + "': non-finite value at row " +
                                   std::to_string(k + 1));
    }
};

}  // namespace twin_discrim
