#pragma once

/** @file
 * Code-length calculus for look-up-table models.
 *
 * Each table entry is scaled by radix^precision, rounded to an integer and
 * written with an explicit sign and no leading zeros: 10.34 -> "+1034",
 * -0.45 -> "-45". A model's length is a fixed program length plus the summed
 * token lengths of its table. The trivial model tabulates the raw outputs; a
 * candidate model tabulates its residuals y - yhat. Information gain is the
 * length saved by the candidate over the trivial model.
 */

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "lti.hpp"

namespace twin_discrim {

struct CodingConfig {
    int radix = 10;
    int decimal_precision = 2;
    long trivial_program_length = 15;
    long model_program_length = 176;
    /// Encode an exact zero as "+0" instead of "0".
    bool signed_zero = false;

    void validate() const
    {
        if (radix < 2 || radix > 36) throw InvalidInput("coding: radix must be in [2, 36]");
        if (decimal_precision < 0) throw InvalidInput("coding: decimal precision must be >= 0");
        if (trivial_program_length < 0 || model_program_length < 0)
            throw InvalidInput("coding: program lengths must be >= 0");
    }
};

struct CodeLengthReport {
    long program_length = 0;
    long table_length = 0;
    long total = 0;
};

struct InformationGainReport {
    long l_trivial = 0;
    long l_model = 0;
    long gain = 0;
    double explanation_degree = 0.0;
};

namespace detail {

inline std::int64_t scaled_integer(double n, const CodingConfig& cfg)
{
    if (!std::isfinite(n)) throw InvalidValue("coding: non-finite value");
    const long double scaled =
        static_cast<long double>(n) * std::pow(static_cast<long double>(cfg.radix), cfg.decimal_precision);
    const long double rounded = std::round(scaled);  // half away from zero
    if (!(std::fabs(rounded) < 9.223372036854775807e18L))
        throw InvalidInput("coding: scaled value exceeds 64-bit range");
    return static_cast<std::int64_t>(rounded);
}

}  // namespace detail

inline std::string encode_number(double n, const CodingConfig& cfg = {})
{
    cfg.validate();
    const std::int64_t v = detail::scaled_integer(n, cfg);
    if (v == 0) return cfg.signed_zero ? "+0" : "0";
    static constexpr char digits[] = "0123456789abcdefghijklmnopqrstuvwxyz";
    std::uint64_t mag = v < 0 ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
    std::string body;
    while (mag > 0) {
        body.insert(body.begin(), digits[mag % static_cast<std::uint64_t>(cfg.radix)]);
        mag /= static_cast<std::uint64_t>(cfg.radix);
    }
    return (v < 0 ? "-" : "+") + body;
}

inline long code_length(double n, const CodingConfig& cfg = {})
{
    cfg.validate();
    const std::int64_t v = detail::scaled_integer(n, cfg);
    if (v == 0) return cfg.signed_zero ? 2 : 1;
    std::uint64_t mag = v < 0 ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
    long len = 1;  // sign
    while (mag > 0) {
        ++len;
        mag /= static_cast<std::uint64_t>(cfg.radix);
    }
    return len;
}

inline long table_length(std::span<const double> values, const CodingConfig& cfg = {})
{
    long total = 0;
    for (double v : values) total += code_length(v, cfg);
    return total;
}

inline CodeLengthReport trivial_length(std::span<const double> outputs, const CodingConfig& cfg = {})
{
    if (outputs.empty()) throw InvalidInput("trivial_length: outputs must be non-empty");
    CodeLengthReport rep;
    rep.program_length = cfg.trivial_program_length;
    rep.table_length = table_length(outputs, cfg);
    rep.total = rep.program_length + rep.table_length;
    return rep;
}

inline CodeLengthReport model_length(std::span<const double> outputs,
                                     std::span<const double> predictions,
                                     const CodingConfig& cfg = {})
{
    if (outputs.size() != predictions.size())
        throw InvalidInput("model_length: outputs and predictions differ in length");
    std::vector<double> residuals(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) residuals[i] = outputs[i] - predictions[i];
    CodeLengthReport rep;
    rep.program_length = cfg.model_program_length;
    rep.table_length = table_length(residuals, cfg);
    rep.total = rep.program_length + rep.table_length;
    return rep;
}

inline InformationGainReport information_gain(const CodeLengthReport& trivial,
                                              const CodeLengthReport& model)
{
    if (trivial.total <= 0) throw InvalidInput("information_gain: trivial length must be positive");
    InformationGainReport rep;
    rep.l_trivial = trivial.total;
    rep.l_model = model.total;
    rep.gain = trivial.total - model.total;
    rep.explanation_degree = static_cast<double>(rep.gain) / static_cast<double>(rep.l_trivial);
    return rep;
}

struct SimoInformationGain {
    InformationGainReport y;
    InformationGainReport u;
    long total_gain = 0;
};

/// Scores both channels of a SIMO model simulated from the dataset's reference.
inline SimoInformationGain simo_information_gain(const TimeSeriesDataset& data, const SimoModel& model,
                                                 const CodingConfig& cfg = {})
{
    if (data.r.size() != data.y.size() || data.r.size() != data.u.size())
        throw InvalidInput("simo_information_gain: channels not aligned with reference");
    const auto [y_hat, u_hat] = predict_channels(model, data.r);
    SimoInformationGain out;
    out.y = information_gain(trivial_length(data.y, cfg), model_length(data.y, y_hat, cfg));
    out.u = information_gain(trivial_length(data.u, cfg), model_length(data.u, u_hat, cfg));
    out.total_gain = out.y.gain + out.u.gain;
    return out;
}

}  // namespace twin_discrim
