#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ckcomp/errors.hpp"
#include "ckcomp/system.hpp"
#include "ckcomp/transform.hpp"

namespace ckcomp {

// Run configuration: a single structured text file with nested blocks.
// Exact syntax is documented in docs/config.md; sketch:
//
//   # comment
//   system {
//     state_dim 2
//     forcing_dim 1
//     f "x2"
//     f "mu1^2*(1 - x1^2)*x2 - x1"
//     mu "(2/pi)*atan(t)"
//     mu_plus 1
//     mu_minus -1
//     class two-sided
//   }
//   transform { kind arctan }
//   analysis { k 2 }
//   simulate { initial 2 0 0  span 40  tol 1e-8 }
//   output { dir out }
//
// Repeated keys accumulate (f, mu, initial). Unknown keys are errors.

struct RunConfig {
    // system
    int state_dim = 0;
    int forcing_dim = 0;
    std::vector<std::string> f_sources;
    std::vector<std::string> mu_sources;
    std::optional<std::vector<double>> mu_plus;
    std::optional<std::vector<double>> mu_minus;
    AsymptoticClass asymptotic_class = AsymptoticClass::TwoSided;

    // transform
    TransformKind transform_kind = TransformKind::Arctan;
    int transform_m = 1;
    std::string transform_expr;
    std::optional<double> t_plus;
    std::optional<double> t_minus;

    // analysis
    int k = 2;
    int max_order = 12;
    ProbeOptions probe;

    // simulate
    std::vector<std::vector<double>> initials; // each of length N+1: (x, s)
    double span = 40.0;
    double sim_tol = 1e-8;
    bool stop_at_boundary = false;

    // output
    std::string output_dir = "out";
    std::string output_format = "csv";

    SystemSpec make_system_spec() const {
        return make_system(state_dim, forcing_dim, f_sources, mu_sources, mu_plus,
                           mu_minus, asymptotic_class);
    }

    TransformSpec make_transform_spec() const {
        AsymptoticClass side = AsymptoticClass::TwoSided;
        if (t_plus && !t_minus) side = AsymptoticClass::Right;
        if (t_minus && !t_plus) side = AsymptoticClass::Left;
        switch (transform_kind) {
            case TransformKind::Arctan: {
                TransformSpec s = arctan_transform(max_order);
                s.side = side;
                if (t_plus) s.t_plus = *t_plus;
                if (t_minus) s.t_minus = *t_minus;
                return s;
            }
            case TransformKind::PhiM: {
                TransformSpec s = phi_m_transform(transform_m, max_order);
                s.side = side;
                if (t_plus) s.t_plus = *t_plus;
                if (t_minus) s.t_minus = *t_minus;
                return s;
            }
            case TransformKind::User:
                return user_transform(transform_expr, max_order, side,
                                      t_plus.value_or(0.0), t_minus.value_or(0.0));
        }
        throw ConfigError("corrupt transform kind");
    }

    void validate() const {
        make_system_spec(); // throws on inconsistency
        if (t_plus && t_minus)
            throw ConfigError("transform: t_plus and t_minus are mutually exclusive "
                              "(a transform is one-sided toward one end)");
        if (k < 1) throw ConfigError("analysis: k must be >= 1");
        if (k + 1 > max_order)
            throw ConfigError("analysis: k+1 = " + std::to_string(k + 1) +
                              " exceeds max_order = " + std::to_string(max_order));
        if (transform_kind == TransformKind::User && transform_expr.empty())
            throw ConfigError("transform: kind user requires expr");
        for (const auto& ic : initials)
            if (static_cast<int>(ic.size()) != state_dim + 1)
                throw ConfigError("simulate: each initial needs " +
                                  std::to_string(state_dim + 1) + " values (x1..xN, s)");
        if (sim_tol <= 0.0) throw ConfigError("simulate: tol must be positive");
    }
};

namespace detail {

struct ConfigLine {
    int number;
    std::string key;
    std::vector<std::string> values;
};

inline std::vector<std::string> split_config_values(const std::string& rest, int line_no) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < rest.size()) {
        while (i < rest.size() && std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
        if (i >= rest.size()) break;
        if (rest[i] == '"') {
            const std::size_t close = rest.find('"', i + 1);
            if (close == std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": unterminated string literal");
            out.push_back(rest.substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            std::size_t j = i;
            while (j < rest.size() && !std::isspace(static_cast<unsigned char>(rest[j]))) ++j;
            out.push_back(rest.substr(i, j - i));
            i = j;
        }
    }
    return out;
}

inline double config_number(const ConfigLine& ln, std::size_t idx = 0) {
    if (idx >= ln.values.size())
        throw ConfigError("line " + std::to_string(ln.number) + ": '" + ln.key +
                          "' needs a numeric value");
    try {
        std::size_t used = 0;
        const double v = std::stod(ln.values[idx], &used);
        if (used != ln.values[idx].size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(ln.number) + ": '" + ln.values[idx] +
                          "' is not a number");
    }
}

inline int config_int(const ConfigLine& ln, std::size_t idx = 0) {
    const double v = config_number(ln, idx);
    if (v != static_cast<double>(static_cast<long long>(v)))
        throw ConfigError("line " + std::to_string(ln.number) + ": '" + ln.key +
                          "' needs an integer");
    return static_cast<int>(v);
}

inline std::string config_word(const ConfigLine& ln, std::size_t idx = 0) {
    if (idx >= ln.values.size())
        throw ConfigError("line " + std::to_string(ln.number) + ": '" + ln.key +
                          "' needs a value");
    return ln.values[idx];
}

} // namespace detail

/// Parses the block-structured run configuration. Unknown keys and
/// unknown blocks are hard errors.
inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::string block;
    bool saw_system = false;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = [&] {
            bool quoted = false;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                if (raw[i] == '"') quoted = !quoted;
                if (raw[i] == '#' && !quoted) return i;
            }
            return raw.size();
        }();
        std::string line = raw.substr(0, hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line.empty()) continue;

        if (line == "}") {
            if (block.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": stray '}'");
            block.clear();
            continue;
        }
        if (line.size() > 1 && line.back() == '{') {
            if (!block.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": nested blocks");
            std::string name = line.substr(0, line.size() - 1);
            const auto be = name.find_last_not_of(" \t");
            name = name.substr(0, be + 1);
            if (name != "system" && name != "transform" && name != "analysis" &&
                name != "simulate" && name != "output")
                throw ConfigError("line " + std::to_string(line_no) + ": unknown block '" +
                                  name + "'");
            block = name;
            if (block == "system") saw_system = true;
            continue;
        }
        if (block.empty())
            throw ConfigError("line " + std::to_string(line_no) +
                              ": entries must live inside a block");

        detail::ConfigLine ln;
        ln.number = line_no;
        const std::size_t sp = line.find_first_of(" \t");
        ln.key = line.substr(0, sp);
        ln.values = sp == std::string::npos
                        ? std::vector<std::string>{}
                        : detail::split_config_values(line.substr(sp + 1), line_no);

        auto unknown = [&]() -> ConfigError {
            return ConfigError("line " + std::to_string(ln.number) + ": unknown key '" +
                               ln.key + "' in block '" + block + "'");
        };

        if (block == "system") {
            if (ln.key == "state_dim") cfg.state_dim = detail::config_int(ln);
            else if (ln.key == "forcing_dim") cfg.forcing_dim = detail::config_int(ln);
            else if (ln.key == "f") cfg.f_sources.push_back(detail::config_word(ln));
            else if (ln.key == "mu") cfg.mu_sources.push_back(detail::config_word(ln));
            else if (ln.key == "mu_plus") {
                std::vector<double> v;
                for (std::size_t i = 0; i < ln.values.size(); ++i)
                    v.push_back(detail::config_number(ln, i));
                cfg.mu_plus = std::move(v);
            } else if (ln.key == "mu_minus") {
                std::vector<double> v;
                for (std::size_t i = 0; i < ln.values.size(); ++i)
                    v.push_back(detail::config_number(ln, i));
                cfg.mu_minus = std::move(v);
            } else if (ln.key == "class") {
                const std::string w = detail::config_word(ln);
                if (w == "two-sided") cfg.asymptotic_class = AsymptoticClass::TwoSided;
                else if (w == "right") cfg.asymptotic_class = AsymptoticClass::Right;
                else if (w == "left") cfg.asymptotic_class = AsymptoticClass::Left;
                else throw ConfigError("line " + std::to_string(ln.number) +
                                       ": class must be two-sided|right|left");
            } else throw unknown();
        } else if (block == "transform") {
            if (ln.key == "kind") {
                const std::string w = detail::config_word(ln);
                if (w == "arctan") cfg.transform_kind = TransformKind::Arctan;
                else if (w == "phi_m") cfg.transform_kind = TransformKind::PhiM;
                else if (w == "user") cfg.transform_kind = TransformKind::User;
                else throw ConfigError("line " + std::to_string(ln.number) +
                                       ": kind must be arctan|phi_m|user");
            } else if (ln.key == "m") cfg.transform_m = detail::config_int(ln);
            else if (ln.key == "expr") cfg.transform_expr = detail::config_word(ln);
            else if (ln.key == "t_plus") cfg.t_plus = detail::config_number(ln);
            else if (ln.key == "t_minus") cfg.t_minus = detail::config_number(ln);
            else throw unknown();
        } else if (block == "analysis") {
            if (ln.key == "k") cfg.k = detail::config_int(ln);
            else if (ln.key == "max_order") cfg.max_order = detail::config_int(ln);
            else if (ln.key == "probe_tol") cfg.probe.tolerance = detail::config_number(ln);
            else if (ln.key == "diverge_bound") cfg.probe.divergence_bound = detail::config_number(ln);
            else if (ln.key == "probe_jmin") cfg.probe.j_min = detail::config_int(ln);
            else if (ln.key == "probe_jmax") cfg.probe.j_max = detail::config_int(ln);
            else throw unknown();
        } else if (block == "simulate") {
            if (ln.key == "initial") {
                std::vector<double> ic;
                for (std::size_t i = 0; i < ln.values.size(); ++i)
                    ic.push_back(detail::config_number(ln, i));
                cfg.initials.push_back(std::move(ic));
            } else if (ln.key == "span") cfg.span = detail::config_number(ln);
            else if (ln.key == "tol") cfg.sim_tol = detail::config_number(ln);
            else if (ln.key == "stop_at_boundary") {
                const std::string w = detail::config_word(ln);
                if (w == "true") cfg.stop_at_boundary = true;
                else if (w == "false") cfg.stop_at_boundary = false;
                else throw ConfigError("line " + std::to_string(ln.number) +
                                       ": stop_at_boundary must be true|false");
            } else throw unknown();
        } else if (block == "output") {
            if (ln.key == "dir") cfg.output_dir = detail::config_word(ln);
            else if (ln.key == "format") {
                cfg.output_format = detail::config_word(ln);
                if (cfg.output_format != "csv")
                    throw ConfigError("line " + std::to_string(ln.number) +
                                      ": only the csv output format is supported");
            } else throw unknown();
        }
    }
    if (!block.empty()) throw ConfigError("unterminated block '" + block + "'");
    if (!saw_system) throw ConfigError("configuration has no system block");
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace ckcomp
