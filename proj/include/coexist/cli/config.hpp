#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coexist/errors.hpp"
#include "coexist/grid.hpp"
#include "coexist/models.hpp"

namespace coexist::cli {

/// Allowed keys per section. Anything else in a config file is rejected.
inline const std::map<std::string, std::set<std::string>>& config_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"run", {"out", "seed", "threads"}},
        {"grid", {"n", "length"}},
        {"model", {"name", "functions", "b", "c", "chi", "sensitivity", "sensitivity_value"}},
        {"eig", {"case", "A", "B", "C", "side", "parameter", "tol", "max_iter"}},
        {"semitrivial", {"problem", "d", "parameter_min", "parameter_max", "count"}},
        {"curves", {"curve", "parameter_min", "parameter_max", "count"}},
        {"branch", {"side", "parameter", "ds", "max_steps", "window_lo", "window_hi", "norm_cap", "boundary_tol",
                    "matching_tol"}},
        {"region", {"lambda_min", "lambda_max", "lambda_count", "mu_min", "mu_max", "mu_count", "random_seeds",
                    "probe_proven_empty"}},
        {"check", {"u_max", "v_max", "samples"}},
    };
    return keys;
}

/// Numbers may be written relative to lambda1 = (pi/length)^2:
///   "3.5", "lambda1", "lambda1+2", "lambda1-2", "6*lambda1", "-1".
inline double parse_value(const std::string& raw, double lambda1, const std::string& where) {
    std::string s;
    for (char ch : raw)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    auto number = [&](const std::string& t) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (t.empty() || used != t.size() || !std::isfinite(v))
            fail(ErrorKind::ConfigError, where + ": cannot parse number '" + raw + "'");
        return v;
    };
    const std::string key = "lambda1";
    const auto pos = s.find(key);
    if (pos == std::string::npos) return number(s);
    const std::string before = s.substr(0, pos);
    const std::string after = s.substr(pos + key.size());
    double factor = 1.0;
    if (!before.empty()) {
        if (before.back() != '*') fail(ErrorKind::ConfigError, where + ": expected '<k>*lambda1' in '" + raw + "'");
        factor = number(before.substr(0, before.size() - 1));
    }
    double offset = 0.0;
    if (!after.empty()) {
        if (after[0] != '+' && after[0] != '-')
            fail(ErrorKind::ConfigError, where + ": expected 'lambda1+<x>' or 'lambda1-<x>' in '" + raw + "'");
        offset = number(after);
    }
    return factor * lambda1 + offset;
}

class Config {
public:
    static Config from_file(const std::string& path) {
        Config c;
        try {
            boost::property_tree::read_ini(path, c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            fail(ErrorKind::ConfigError, std::string("config parse error: ") + e.what());
        }
        c.validate();
        return c;
    }

    static Config from_string(const std::string& text) {
        Config c;
        std::istringstream in(text);
        try {
            boost::property_tree::read_ini(in, c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            fail(ErrorKind::ConfigError, std::string("config parse error: ") + e.what());
        }
        c.validate();
        return c;
    }

    [[nodiscard]] bool has(const std::string& section, const std::string& key) const {
        return overrides_.count(section + "." + key) || tree_.get_optional<std::string>(section + "." + key);
    }

    [[nodiscard]] std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
        if (auto it = overrides_.find(section + "." + key); it != overrides_.end()) return it->second;
        return tree_.get<std::string>(section + "." + key, fallback);
    }

    [[nodiscard]] double real(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        return parse_value(text(section, key, ""), lambda1(), section + "." + key);
    }

    [[nodiscard]] std::optional<double> optional_real(const std::string& section, const std::string& key) const {
        if (!has(section, key)) return std::nullopt;
        return real(section, key, 0.0);
    }

    [[nodiscard]] long long integer(const std::string& section, const std::string& key, long long fallback) const {
        if (!has(section, key)) return fallback;
        const std::string raw = text(section, key, "");
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(raw, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (raw.empty() || used != raw.size())
            fail(ErrorKind::ConfigError, section + "." + key + ": expected an integer, got '" + raw + "'");
        return v;
    }

    [[nodiscard]] bool boolean(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string raw = text(section, key, "");
        if (raw == "true" || raw == "1" || raw == "yes") return true;
        if (raw == "false" || raw == "0" || raw == "no") return false;
        fail(ErrorKind::ConfigError, section + "." + key + ": expected true/false, got '" + raw + "'");
    }

    /// Command-line overrides (--n, --seed, --out) take precedence over the file.
    void set_override(const std::string& section, const std::string& key, const std::string& value) {
        overrides_[section + "." + key] = value;
    }

    [[nodiscard]] double length() const {
        if (!has("grid", "length")) return 1.0;
        const std::string raw = text("grid", "length", "1");
        return parse_value(raw, 0.0, "grid.length");
    }
    [[nodiscard]] double lambda1() const {
        const double L = length();
        return (M_PI / L) * (M_PI / L);
    }

    [[nodiscard]] Grid grid() const {
        const long long n = integer("grid", "n", 199);
        if (n < 3) fail(ErrorKind::ConfigError, "grid.n must be at least 3");
        const double L = length();
        if (!(L > 0.0)) fail(ErrorKind::ConfigError, "grid.length must be positive");
        return make_grid(static_cast<std::size_t>(n), L);
    }

    [[nodiscard]] std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("run", "seed", 0)); }

    [[nodiscard]] Model model() const {
        const std::string name = text("model", "name", "ap1");
        if (name == "ap1") {
            const std::string fns = text("model", "functions", "ap1-sample");
            const double b = real("model", "b", 1.0), c = real("model", "c", 1.0);
            if (!(b > 0.0 && c > 0.0)) fail(ErrorKind::ConfigError, "model.b and model.c must be positive for ap1");
            if (fns == "ap1-sample") return model_ap1_sample(b, c);
            if (fns == "ap1-linear") {
                // A = 1, G(u) = u, H = 1: the classical Lotka-Volterra prey-predator system.
                const SmoothFunction one{[](double) { return 1.0; }, [](double) { return 0.0; },
                                         [](double) { return 0.0; }};
                const SmoothFunction id{[](double s) { return s; }, [](double) { return 1.0; },
                                        [](double) { return 0.0; }};
                Model m = model_ap1(b, c, one, id, one, 1.0, 1.0, 1.0, 1.0);
                m.label = "ap1-linear";
                return m;
            }
            fail(ErrorKind::ConfigError, "unknown model.functions '" + fns + "' (ap1-sample, ap1-linear)");
        }
        if (name == "ap2") {
            const double chi = real("model", "chi", 0.5), b = real("model", "b", 1.0), c = real("model", "c", 1.0);
            if (!(chi >= 0.0 && c > 0.0)) fail(ErrorKind::ConfigError, "ap2 needs chi >= 0 and c > 0");
            const std::string sens = text("model", "sensitivity", "constant");
            if (sens == "constant") {
                const double k = real("model", "sensitivity_value", 1.0);
                return model_ap2(chi, b, c, constant_sensitivity(k), [k](double z) { return k * z; });
            }
            if (sens == "saturating")
                return model_ap2(chi, b, c, saturating_sensitivity(), [](double z) { return std::log1p(z); });
            fail(ErrorKind::ConfigError, "unknown model.sensitivity '" + sens + "' (constant, saturating)");
        }
        fail(ErrorKind::ConfigError, "unknown model.name '" + name + "' (ap1, ap2)");
    }

    /// count evenly spaced values from min to max inclusive.
    [[nodiscard]] std::vector<double> linspace(const std::string& section, const std::string& lo_key,
                                               const std::string& hi_key, const std::string& count_key,
                                               double lo_default, double hi_default, long long count_default) const {
        const double lo = real(section, lo_key, lo_default), hi = real(section, hi_key, hi_default);
        const long long k = integer(section, count_key, count_default);
        if (k < 1) fail(ErrorKind::ConfigError, section + "." + count_key + " must be positive");
        if (k > 1 && !(hi > lo))
            fail(ErrorKind::ConfigError, section + ": " + hi_key + " must exceed " + lo_key);
        std::vector<double> out;
        for (long long i = 0; i < k; ++i)
            out.push_back(k == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1));
        return out;
    }

private:
    void validate() const {
        const auto& keys = config_keys();
        for (const auto& [section, body] : tree_) {
            const auto it = keys.find(section);
            if (it == keys.end()) fail(ErrorKind::ConfigError, "unknown config section [" + section + "]");
            if (!body.data().empty() && body.empty())
                fail(ErrorKind::ConfigError, "top-level key '" + section + "' outside a section");
            for (const auto& [key, value] : body)
                if (!it->second.count(key))
                    fail(ErrorKind::ConfigError, "unknown key '" + key + "' in section [" + section + "]");
        }
    }

    boost::property_tree::ptree tree_;
    std::map<std::string, std::string> overrides_;
};

} // namespace coexist::cli
