// config.hpp - flat key = value experiment configuration
//
//   # comment
//   model.N       = [3, 4]
//   model.J_bar   = pi/4
//   bath.beta     = [0.1, 1, 10]
//   run.protocol  = trajectories
//
// Scalars may be written as one-element lists and vice versa. Numbers accept
// the symbol pi with an optional factor and divisor (pi, -pi, 2pi, 3*pi/4).

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dtc/bath.hpp"
#include "dtc/evolution.hpp"
#include "dtc/model.hpp"
#include "dtc/types.hpp"

namespace dtc {

enum class Protocol { plain, thermo, measured_average, trajectories };

inline std::string to_string(Protocol p)
{
    switch (p) {
    case Protocol::plain: return "plain";
    case Protocol::thermo: return "thermo";
    case Protocol::measured_average: return "measured-average";
    case Protocol::trajectories: return "trajectories";
    }
    return "?";
}

inline Protocol parse_protocol(std::string_view s)
{
    if (s == "plain") return Protocol::plain;
    if (s == "thermo") return Protocol::thermo;
    if (s == "measured-average") return Protocol::measured_average;
    if (s == "trajectories") return Protocol::trajectories;
    throw ConfigError("unknown protocol '" + std::string(s) + "'", "run.protocol");
}

// per-realization: realization r draws its own disorder.
// fixed: every realization shares the disorder of r = 0.
enum class DisorderMode { per_realization, fixed };

inline std::string to_string(DisorderMode m) { return m == DisorderMode::fixed ? "fixed" : "per-realization"; }

inline DisorderMode parse_disorder_mode(std::string_view s)
{
    if (s == "per-realization") return DisorderMode::per_realization;
    if (s == "fixed") return DisorderMode::fixed;
    throw ConfigError("unknown disorder mode '" + std::string(s) + "'", "run.disorder");
}

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_plain_double(std::string_view s)
{
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace detail

inline double parse_number(std::string_view text, const std::string& key)
{
    const std::string s = detail::trim(text);
    if (auto v = detail::parse_plain_double(s)) return *v;

    const auto at = s.find("pi");
    if (at == std::string::npos) throw ConfigError("not a number: '" + s + "'", key);
    std::string factor = s.substr(0, at);
    if (!factor.empty() && factor.back() == '*') factor.pop_back();
    double f = 1.0;
    if (factor == "-") f = -1.0;
    else if (!factor.empty() && factor != "+") {
        auto v = detail::parse_plain_double(factor);
        if (!v) throw ConfigError("not a number: '" + s + "'", key);
        f = *v;
    }
    double div = 1.0;
    const std::string rest = s.substr(at + 2);
    if (!rest.empty()) {
        if (rest.front() != '/') throw ConfigError("not a number: '" + s + "'", key);
        auto v = detail::parse_plain_double(rest.substr(1));
        if (!v || *v == 0.0) throw ConfigError("not a number: '" + s + "'", key);
        div = *v;
    }
    return f * pi / div;
}

// Raw string values keyed by dotted name; later assignments win.
class ConfigMap {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = detail::trim(value); }

    // "key=value" from the command line.
    void set_assignment(std::string_view assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'", "--set");
        const std::string key = detail::trim(assignment.substr(0, eq));
        if (key.empty()) throw ConfigError("empty key in '" + std::string(assignment) + "'", "--set");
        set(key, std::string(assignment.substr(eq + 1)));
    }

    void parse(std::istream& in, const std::string& source = "<config>")
    {
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string t = detail::trim(line);
            if (t.empty()) continue;
            if (t.find('=') == std::string::npos) {
                throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value", t);
            }
            set_assignment(t);
        }
    }

    void load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'", "--config");
        parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::vector<std::string> list(const std::string& key) const
    {
        std::string v = values_.at(key);
        if (!v.empty() && v.front() == '[') {
            if (v.back() != ']') throw ConfigError("unterminated list", key);
            v = v.substr(1, v.size() - 2);
        }
        std::vector<std::string> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = detail::trim(item);
            if (item.empty()) throw ConfigError("empty list element", key);
            out.push_back(item);
        }
        if (out.empty()) throw ConfigError("empty value", key);
        return out;
    }

    std::string scalar(const std::string& key) const
    {
        const auto l = list(key);
        if (l.size() != 1) throw ConfigError("expected a single value", key);
        return l.front();
    }

    double number(const std::string& key) const { return parse_number(scalar(key), key); }

    std::vector<double> numbers(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& s : list(key)) out.push_back(parse_number(s, key));
        return out;
    }

    std::int64_t integer(const std::string& key) const { return to_integer(scalar(key), key); }

    std::vector<std::int64_t> integers(const std::string& key) const
    {
        std::vector<std::int64_t> out;
        for (const auto& s : list(key)) out.push_back(to_integer(s, key));
        return out;
    }

    std::uint64_t unsigned_integer(const std::string& key) const
    {
        const std::string s = scalar(key);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("not an unsigned integer: '" + s + "'", key);
        return v;
    }

private:
    static std::int64_t to_integer(const std::string& s, const std::string& key)
    {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("not an integer: '" + s + "'", key);
        return v;
    }

    std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
    ModelParams model;                 // model.N is taken from Ns
    std::vector<int> Ns{5};
    std::vector<double> betas{1.0};
    std::vector<double> Gammas{0.01};
    double omega_c = 1.0;
    std::vector<Axis> axes{Axis::x};
    Protocol protocol = Protocol::plain;
    DisorderMode disorder = DisorderMode::per_realization;
    int replications = 1;
    int trajectories = 1;              // per realization
    int n_periods = 100;
    double sample_dt = 0.01;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string output_dir = "out";

    void validate() const
    {
        if (Ns.empty()) throw ConfigError("grid is empty", "model.N");
        if (betas.empty()) throw ConfigError("grid is empty", "bath.beta");
        if (Gammas.empty()) throw ConfigError("grid is empty", "bath.Gamma");
        if (axes.empty()) throw ConfigError("grid is empty", "run.axis");
        if (!seed_set) throw ConfigError("a master seed is required", "run.seed");
        for (int n : Ns) {
            ModelParams p = model;
            p.N = n;
            p.validate();
        }
        for (double b : betas) BathParams{b, Gammas.front(), omega_c}.validate();
        for (double g : Gammas) BathParams{betas.front(), g, omega_c}.validate();
        if (replications < 1) throw ConfigError("must be >= 1", "run.replications");
        if (trajectories < 1) throw ConfigError("must be >= 1", "run.trajectories");
        if (n_periods < 1) throw ConfigError("must be >= 1", "run.n_periods");
        if (!(sample_dt > 0)) throw ConfigError("must be > 0", "run.sample_dt");
        if (protocol != Protocol::trajectories) {
            PeriodSchedule{model.T_z, model.T_x, sample_dt, n_periods}.validate();
        }
    }
};

inline const std::vector<std::string>& known_config_keys()
{
    static const std::vector<std::string> keys{
        "model.N",       "model.h_bar",     "model.delta_h",    "model.J_bar",       "model.delta_J",
        "model.T_z",     "model.T_x",       "bath.beta",        "bath.Gamma",        "bath.omega_c",
        "run.axis",      "run.protocol",    "run.disorder",     "run.replications",  "run.trajectories",
        "run.n_periods", "run.sample_dt",   "run.seed",         "run.output_dir"};
    return keys;
}

inline ExperimentConfig resolve_config(const ConfigMap& map)
{
    const auto& known = known_config_keys();
    for (const auto& [key, value] : map.values()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown key", key);
    }

    ExperimentConfig c;
    auto num = [&](const char* key, double& dst) {
        if (map.has(key)) dst = map.number(key);
    };
    auto whole = [&](const char* key, int& dst) {
        if (map.has(key)) dst = static_cast<int>(map.integer(key));
    };

    if (map.has("model.N")) {
        c.Ns.clear();
        for (auto n : map.integers("model.N")) c.Ns.push_back(static_cast<int>(n));
    }
    num("model.h_bar", c.model.h_bar);
    num("model.delta_h", c.model.delta_h);
    num("model.J_bar", c.model.J_bar);
    num("model.delta_J", c.model.delta_J);
    num("model.T_z", c.model.T_z);
    num("model.T_x", c.model.T_x);
    if (map.has("bath.beta")) c.betas = map.numbers("bath.beta");
    if (map.has("bath.Gamma")) c.Gammas = map.numbers("bath.Gamma");
    num("bath.omega_c", c.omega_c);
    if (map.has("run.axis")) {
        c.axes.clear();
        for (const auto& a : map.list("run.axis")) {
            try {
                c.axes.push_back(parse_axis(a));
            } catch (const std::invalid_argument&) {
                throw ConfigError("axis must be z or x, got '" + a + "'", "run.axis");
            }
        }
    }
    if (map.has("run.protocol")) c.protocol = parse_protocol(map.scalar("run.protocol"));
    if (map.has("run.disorder")) c.disorder = parse_disorder_mode(map.scalar("run.disorder"));
    whole("run.replications", c.replications);
    whole("run.trajectories", c.trajectories);
    whole("run.n_periods", c.n_periods);
    num("run.sample_dt", c.sample_dt);
    if (map.has("run.seed")) {
        c.seed = map.unsigned_integer("run.seed");
        c.seed_set = true;
    }
    if (map.has("run.output_dir")) c.output_dir = map.scalar("run.output_dir");
    c.model.N = c.Ns.front();
    c.validate();
    return c;
}

} // namespace dtc
