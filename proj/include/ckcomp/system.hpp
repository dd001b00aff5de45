#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ckcomp/bell.hpp"
#include "ckcomp/errors.hpp"
#include "ckcomp/expr.hpp"
#include "ckcomp/linalg.hpp"

namespace ckcomp {

/// Which infinite time ends carry a declared forcing limit.
enum class AsymptoticClass { TwoSided, Right, Left };

inline const char* to_string(AsymptoticClass c) {
    switch (c) {
        case AsymptoticClass::TwoSided: return "two-sided";
        case AsymptoticClass::Right: return "right";
        case AsymptoticClass::Left: return "left";
    }
    return "?";
}

/// A nonautonomous system dx/dt = f(x, mu(t)) with asymptotically
/// constant forcing. Expressions are parsed once and shared; instances
/// are immutable after validate().
struct SystemSpec {
    int state_dim = 0;                 // N
    int forcing_dim = 0;               // d
    std::vector<Expr> f;               // N components over x1..xN, mu1..mud
    std::vector<std::string> f_source;
    std::vector<Expr> mu;              // d components over t
    std::vector<std::string> mu_source;
    std::optional<std::vector<double>> mu_plus;
    std::optional<std::vector<double>> mu_minus;
    AsymptoticClass asymptotic_class = AsymptoticClass::TwoSided;

    /// Parses sources and checks dimension/limit consistency.
    void validate() const {
        if (state_dim < 1) throw ConfigError("system: state_dim must be >= 1");
        if (forcing_dim < 1) throw ConfigError("system: forcing_dim must be >= 1");
        if (static_cast<int>(f.size()) != state_dim)
            throw ConfigError("system: expected " + std::to_string(state_dim) +
                              " f components, got " + std::to_string(f.size()));
        if (static_cast<int>(mu.size()) != forcing_dim)
            throw ConfigError("system: expected " + std::to_string(forcing_dim) +
                              " mu components, got " + std::to_string(mu.size()));
        for (int i = 0; i < state_dim; ++i) {
            const VarUsage u = usage(f[static_cast<std::size_t>(i)]);
            if (u.max_x > state_dim)
                throw ConfigError("f" + std::to_string(i + 1) + " references x" +
                                  std::to_string(u.max_x) + " beyond state_dim");
            if (u.max_mu > forcing_dim)
                throw ConfigError("f" + std::to_string(i + 1) + " references mu" +
                                  std::to_string(u.max_mu) + " beyond forcing_dim");
            if (u.uses_t || u.uses_s)
                throw ConfigError("f" + std::to_string(i + 1) +
                                  " must depend on (x, mu) only");
        }
        for (int c = 0; c < forcing_dim; ++c) {
            const VarUsage u = usage(mu[static_cast<std::size_t>(c)]);
            if (u.max_x > 0 || u.max_mu > 0 || u.uses_s)
                throw ConfigError("mu" + std::to_string(c + 1) +
                                  " must depend on t only");
        }
        auto check_limit = [&](const std::optional<std::vector<double>>& lim,
                               const char* name) {
            if (lim && static_cast<int>(lim->size()) != forcing_dim)
                throw ConfigError(std::string("system: ") + name + " must have " +
                                  std::to_string(forcing_dim) + " components");
        };
        check_limit(mu_plus, "mu_plus");
        check_limit(mu_minus, "mu_minus");
        const bool need_plus = asymptotic_class != AsymptoticClass::Left;
        const bool need_minus = asymptotic_class != AsymptoticClass::Right;
        if (need_plus && !mu_plus)
            throw ConfigError("system: asymptotic class requires mu_plus");
        if (need_minus && !mu_minus)
            throw ConfigError("system: asymptotic class requires mu_minus");
    }

    std::vector<double> mu_eval(double t) const {
        std::vector<double> out(static_cast<std::size_t>(forcing_dim));
        VarBindings env;
        env.t = t;
        for (int c = 0; c < forcing_dim; ++c)
            out[static_cast<std::size_t>(c)] = eval_real(mu[static_cast<std::size_t>(c)], env);
        return out;
    }

    /// mu_c^(1)..mu_c^(order) at t.
    DerivativeTable<double> mu_table(int component, double t, int order) const {
        VarBindings env;
        const JetD j = eval_jet(mu[static_cast<std::size_t>(component)],
                                ActiveVar{VarKind::T, 0}, env, t, order);
        return DerivativeTable<double>::from_jet(j);
    }

    std::vector<double> f_eval(const std::vector<double>& x,
                               const std::vector<double>& mu_val) const {
        VarBindings env;
        env.x = x;
        env.mu = mu_val;
        std::vector<double> out(static_cast<std::size_t>(state_dim));
        for (int i = 0; i < state_dim; ++i)
            out[static_cast<std::size_t>(i)] = eval_real(f[static_cast<std::size_t>(i)], env);
        return out;
    }

    /// d f_i / d x_j by jet differentiation, one active variable at a time.
    Mat f_jacobian_x(const std::vector<double>& x,
                     const std::vector<double>& mu_val) const {
        Mat jac(state_dim, state_dim);
        VarBindings env;
        env.x = x;
        env.mu = mu_val;
        for (int j = 0; j < state_dim; ++j) {
            for (int i = 0; i < state_dim; ++i) {
                const JetD jet = eval_jet(f[static_cast<std::size_t>(i)],
                                          ActiveVar{VarKind::X, j + 1}, env,
                                          x[static_cast<std::size_t>(j)], 1);
                jac(i, j) = jet.derivative(1);
            }
        }
        return jac;
    }

    /// d f_i / d mu_c.
    Mat f_jacobian_mu(const std::vector<double>& x,
                      const std::vector<double>& mu_val) const {
        Mat jac(state_dim, forcing_dim);
        VarBindings env;
        env.x = x;
        env.mu = mu_val;
        for (int c = 0; c < forcing_dim; ++c) {
            for (int i = 0; i < state_dim; ++i) {
                const JetD jet = eval_jet(f[static_cast<std::size_t>(i)],
                                          ActiveVar{VarKind::Mu, c + 1}, env,
                                          mu_val[static_cast<std::size_t>(c)], 1);
                jac(i, c) = jet.derivative(1);
            }
        }
        return jac;
    }

    const std::vector<double>& limit(int side) const {
        if (side > 0) {
            if (!mu_plus) throw StructureError("system has no declared mu_plus");
            return *mu_plus;
        }
        if (!mu_minus) throw StructureError("system has no declared mu_minus");
        return *mu_minus;
    }
};

/// Convenience constructor from expression sources.
inline SystemSpec make_system(int state_dim, int forcing_dim,
                              const std::vector<std::string>& f_sources,
                              const std::vector<std::string>& mu_sources,
                              std::optional<std::vector<double>> mu_plus,
                              std::optional<std::vector<double>> mu_minus,
                              AsymptoticClass cls) {
    SystemSpec spec;
    spec.state_dim = state_dim;
    spec.forcing_dim = forcing_dim;
    for (const std::string& s : f_sources) {
        spec.f.push_back(parse(s));
        spec.f_source.push_back(s);
    }
    for (const std::string& s : mu_sources) {
        spec.mu.push_back(parse(s));
        spec.mu_source.push_back(s);
    }
    spec.mu_plus = std::move(mu_plus);
    spec.mu_minus = std::move(mu_minus);
    spec.asymptotic_class = cls;
    spec.validate();
    return spec;
}

/// The worked example of the library: a van der Pol oscillator whose
/// damping is driven by the bi-asymptotically constant forcing
/// mu(t) = (2/pi) atan(t), with frozen limits mu = +-1.
inline SystemSpec vdp_system() {
    return make_system(
        2, 1,
        {"x2", "mu1^2*(1 - x1^2)*x2 - x1"},
        {"(2/pi)*atan(t)"},
        std::vector<double>{1.0}, std::vector<double>{-1.0},
        AsymptoticClass::TwoSided);
}

} // namespace ckcomp
