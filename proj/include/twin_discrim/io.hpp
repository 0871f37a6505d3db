#pragma once

/** @file
 * Dataset CSV files, key-value config/params files and atomic file output.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "twin.hpp"

namespace twin_discrim {

/// Malformed input file; line is 1-based, 0 when not tied to a line.
class ParseError : public InvalidInput {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& msg)
        : InvalidInput(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Shortest text that reads back to the same double.
inline std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temp file, then renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---- dataset CSV ---------------------------------------------------------

inline std::string dataset_to_csv(const TimeSeriesDataset& d)
{
    d.validate();
    std::string out = "t,r,u,y\n";
    for (std::size_t k = 0; k < d.size(); ++k) {
        out += format_double(d.t[k]);
        out += ',';
        out += format_double(d.r[k]);
        out += ',';
        out += format_double(d.u[k]);
        out += ',';
        out += format_double(d.y[k]);
        out += '\n';
    }
    return out;
}

/// Parses a CSV with at least the columns t, r, u, y (any order, extra columns ignored).
inline TimeSeriesDataset dataset_from_csv(std::string_view text, const std::string& name = "<csv>")
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    if (lines.empty()) throw ParseError(name, 0, "empty file");

    auto split = [](std::string_view line) {
        std::vector<std::string_view> cells;
        std::size_t p = 0;
        while (true) {
            const auto c = line.find(',', p);
            cells.push_back(line.substr(p, c == std::string_view::npos ? std::string_view::npos : c - p));
            if (c == std::string_view::npos) break;
            p = c + 1;
        }
        return cells;
    };
    auto trim = [](std::string_view s) {
        while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
        return s;
    };

    const auto header = split(lines[0]);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(trim(header[i])), i);
    std::size_t idx[4];
    const char* names[4] = {"t", "r", "u", "y"};
    for (int c = 0; c < 4; ++c) {
        const auto it = col.find(names[c]);
        if (it == col.end()) throw ParseError(name, 1, std::string("missing required column '") + names[c] + "'");
        idx[c] = it->second;
    }

    TimeSeriesDataset d;
    std::vector<double>* dest[4] = {&d.t, &d.r, &d.u, &d.y};
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (trim(lines[ln]).empty()) continue;
        const auto cells = split(lines[ln]);
        if (cells.size() != header.size())
            throw ParseError(name, ln + 1, "expected " + std::to_string(header.size()) + " fields");
        for (int c = 0; c < 4; ++c) {
            const auto v = parse_double(cells[idx[c]]);
            if (!v) throw ParseError(name, ln + 1, std::string("bad number in column '") + names[c] + "'");
            dest[c]->push_back(*v);
        }
    }
    d.label = std::filesystem::path(name).stem().string();
    try {
        d.validate();
    } catch (const InvalidInput& e) {
        throw ParseError(name, 0, e.what());
    }
    return d;
}

inline TimeSeriesDataset read_dataset_csv(const std::filesystem::path& path)
{
    return dataset_from_csv(read_file(path), path.string());
}

// ---- key-value files -----------------------------------------------------

/// `key = value` lines, `#` comments and `[section]` headers. Keys before any
/// header belong to the section named "".
struct KeyValueFile {
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    struct Section {
        std::string name;
        std::size_t line = 0;
        std::map<std::string, Entry> entries;
    };
    std::string name;
    std::vector<Section> sections;

    const Section* find(const std::string& section) const
    {
        for (const auto& s : sections)
            if (s.name == section) return &s;
        return nullptr;
    }
};

inline KeyValueFile parse_key_value(std::string_view text, const std::string& name)
{
    KeyValueFile kv;
    kv.name = name;
    kv.sections.push_back({"", 0, {}});
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        return s;
    };
    std::size_t pos = 0, ln = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++ln;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) {
            if (nl == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(name, ln, "unterminated section header");
            const auto sec = std::string(trim(line.substr(1, line.size() - 2)));
            if (sec.empty()) throw ParseError(name, ln, "empty section name");
            if (kv.find(sec)) throw ParseError(name, ln, "duplicate section [" + sec + "]");
            kv.sections.push_back({sec, ln, {}});
        } else {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ParseError(name, ln, "expected 'key = value'");
            const auto key = std::string(trim(line.substr(0, eq)));
            const auto value = std::string(trim(line.substr(eq + 1)));
            if (key.empty()) throw ParseError(name, ln, "empty key");
            if (value.empty()) throw ParseError(name, ln, "empty value for '" + key + "'");
            auto& entries = kv.sections.back().entries;
            if (entries.count(key)) throw ParseError(name, ln, "duplicate key '" + key + "'");
            entries.emplace(key, KeyValueFile::Entry{value, ln});
        }
        if (nl == text.size()) break;
    }
    return kv;
}

namespace detail {

/// Typed reads from one section with unknown-key detection.
class SectionReader {
public:
    SectionReader(const KeyValueFile& file, const KeyValueFile::Section& sec) : file_(file), sec_(sec) {}

    void number(const std::string& key, double& out)
    {
        if (const auto* e = take(key)) {
            const auto v = parse_double(e->value);
            if (!v || !std::isfinite(*v)) throw ParseError(file_.name, e->line, "'" + key + "' must be a number");
            out = *v;
        }
    }

    void integer(const std::string& key, long long& out)
    {
        if (const auto* e = take(key)) {
            long long v = 0;
            const auto& s = e->value;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
                throw ParseError(file_.name, e->line, "'" + key + "' must be an integer");
            out = v;
        }
    }

    const KeyValueFile::Entry* take(const std::string& key)
    {
        const auto it = sec_.entries.find(key);
        if (it == sec_.entries.end()) return nullptr;
        used_.push_back(key);
        return &it->second;
    }

    void finish() const
    {
        for (const auto& [key, e] : sec_.entries)
            if (std::find(used_.begin(), used_.end(), key) == used_.end())
                throw ParseError(file_.name, e.line, "unknown key '" + key + "'");
    }

private:
    const KeyValueFile& file_;
    const KeyValueFile::Section& sec_;
    std::vector<std::string> used_;
};

inline void require_version(const KeyValueFile& kv)
{
    const auto& top = kv.sections.front();
    const auto it = top.entries.find("version");
    if (it == top.entries.end()) throw ParseError(kv.name, 1, "missing 'version = 1'");
    if (it->second.value != "1")
        throw ParseError(kv.name, it->second.line, "unsupported version '" + it->second.value + "'");
}

}  // namespace detail

/// What `simulate` produces: one dataset per setpoint.
struct CampaignConfig {
    SimConfig base;
    std::vector<int> setpoints{30, 50, 70, 90};
    std::uint64_t seed = 0;
};

inline CampaignConfig parse_campaign_config(std::string_view text, const std::string& name = "<config>")
{
    const auto kv = parse_key_value(text, name);
    detail::require_version(kv);
    CampaignConfig cfg;
    auto& b = cfg.base;
    for (const auto& sec : kv.sections) {
        detail::SectionReader rd(kv, sec);
        if (sec.name.empty()) {
            rd.take("version");
            if (const auto* e = rd.take("setpoints")) {
                cfg.setpoints.clear();
                std::string_view rest = e->value;
                while (!rest.empty()) {
                    const auto c = rest.find(',');
                    const auto item = rest.substr(0, c);
                    const auto v = parse_double(item);
                    if (!v || *v != std::floor(*v) || std::abs(*v) > 1e6)
                        throw ParseError(name, e->line, "setpoints must be a comma-separated list of integers");
                    cfg.setpoints.push_back(static_cast<int>(*v));
                    if (c == std::string_view::npos) break;
                    rest = rest.substr(c + 1);
                }
            }
            long long seed = 0;
            rd.integer("seed", seed);
            if (seed < 0) throw ParseError(name, sec.entries.at("seed").line, "seed must be non-negative");
            cfg.seed = static_cast<std::uint64_t>(seed);
            rd.number("ambient", b.ambient);
            rd.number("duration", b.duration);
            rd.number("sample_time", b.sample_time);
            rd.number("step_time", b.step_time);
            rd.number("reference_step", b.reference_step);
            long long sub = b.ode_substeps;
            rd.integer("ode_substeps", sub);
            b.ode_substeps = static_cast<int>(sub);
            rd.number("supply_voltage", b.supply_voltage);
            rd.number("face_loss_conductance", b.face_loss_conductance);
            rd.number("heatsink_conductance", b.heatsink_conductance);
            rd.number("heatsink_capacity", b.heatsink_capacity);
        } else if (sec.name == "pid") {
            rd.number("kp", b.pid.kp);
            rd.number("ki", b.pid.ki);
            rd.number("kd", b.pid.kd);
            rd.number("out_min", b.pid.out_min);
            rd.number("out_max", b.pid.out_max);
            rd.number("setpoint_weight", b.pid.setpoint_weight);
            if (const auto* e = rd.take("anti_windup")) {
                if (e->value == "none") b.pid.anti_windup = AntiWindup::none;
                else if (e->value == "conditional") b.pid.anti_windup = AntiWindup::conditional;
                else throw ParseError(name, e->line, "anti_windup must be 'none' or 'conditional'");
            }
        } else if (sec.name == "sensor") {
            rd.number("quantization", b.sensor.quantization);
            rd.number("noise_sigma", b.sensor.noise_sigma);
        } else {
            throw ParseError(name, sec.line, "unknown section [" + sec.name + "]");
        }
        rd.finish();
    }
    if (cfg.setpoints.empty()) throw ParseError(name, 0, "no setpoints");
    try {
        b.validate();
    } catch (const InvalidInput& e) {
        throw ParseError(name, 0, e.what());
    }
    return cfg;
}

/// Twin parameters: an optional default block plus `[setpoint N]` overrides.
struct ParamsFile {
    std::optional<PeltierParams> fallback;
    std::map<int, PeltierParams> per_setpoint;

    PeltierParams for_setpoint(int sp) const
    {
        if (const auto it = per_setpoint.find(sp); it != per_setpoint.end()) return it->second;
        if (fallback) return *fallback;
        throw InvalidInput("no parameters for setpoint " + std::to_string(sp));
    }
};

inline ParamsFile parse_params_file(std::string_view text, const std::string& name = "<params>")
{
    const auto kv = parse_key_value(text, name);
    detail::require_version(kv);
    ParamsFile pf;
    for (const auto& sec : kv.sections) {
        detail::SectionReader rd(kv, sec);
        if (sec.name.empty()) rd.take("version");
        const bool any = sec.entries.size() > (sec.name.empty() ? 1u : 0u);
        PeltierParams p{};
        const char* keys[4] = {"alpha_v_per_k", "r_ohm", "k_w_per_k", "c_j_per_k"};
        double* dst[4] = {&p.alpha, &p.r_ohm, &p.k_cond, &p.c_heat};
        if (any || !sec.name.empty()) {
            for (int i = 0; i < 4; ++i) {
                if (!sec.entries.count(keys[i]))
                    throw ParseError(name, sec.line ? sec.line : 1,
                                     std::string("missing '") + keys[i] + "'" +
                                         (sec.name.empty() ? "" : " in [" + sec.name + "]"));
                rd.number(keys[i], *dst[i]);
            }
        }
        rd.finish();
        try {
            if (any || !sec.name.empty()) p.validate();
        } catch (const InvalidInput& e) {
            throw ParseError(name, sec.line ? sec.line : 1, e.what());
        }
        if (sec.name.empty()) {
            if (any) pf.fallback = p;
            continue;
        }
        const std::string prefix = "setpoint ";
        if (sec.name.rfind(prefix, 0) != 0) throw ParseError(name, sec.line, "unknown section [" + sec.name + "]");
        const auto v = parse_double(sec.name.substr(prefix.size()));
        if (!v || *v != std::floor(*v)) throw ParseError(name, sec.line, "section must be [setpoint <integer>]");
        pf.per_setpoint[static_cast<int>(*v)] = p;
    }
    if (!pf.fallback && pf.per_setpoint.empty()) throw ParseError(name, 0, "no parameters given");
    return pf;
}

}  // namespace twin_discrim
