#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace ckcomp {

enum class LimitDirection { PlusInfinity, MinusInfinity };

inline const char* to_string(LimitDirection d) {
    return d == LimitDirection::PlusInfinity ? "t->+inf" : "t->-inf";
}

enum class ProbeStatus { Converged, Diverged, Inconclusive };

inline const char* to_string(ProbeStatus s) {
    switch (s) {
        case ProbeStatus::Converged: return "converged";
        case ProbeStatus::Diverged: return "diverged";
        case ProbeStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

/// Sampling and classification knobs for numerical limit probes.
struct ProbeOptions {
    double tolerance = 1e-6;       // absolute agreement of Aitken extrapolants
    double divergence_bound = 1e6; // |sample| beyond this counts as blow-up
    int j_min = 1;                 // geometric grid t_j = +-10^j
    int j_max = 8;
};

/// Outcome of numerically probing a limit t -> +-inf: the evidence trail
/// (samples and extrapolants), the final extrapolated value and a
/// three-way verdict. "Inconclusive" is first class: a stalled probe is
/// not a proof of non-existence.
struct LimitProbe {
    LimitDirection direction = LimitDirection::PlusInfinity;
    std::vector<std::pair<double, double>> samples; // (t, value)
    std::vector<double> extrapolants;               // Aitken Delta^2 sequence
    double extrapolant = 0.0;
    ProbeStatus status = ProbeStatus::Inconclusive;
    double tolerance = 0.0;
    std::string note; // evaluation failures, if any

    bool converged() const { return status == ProbeStatus::Converged; }
    double value() const { return extrapolant; }
};

/// Samples value_fn on t_j = +-10^j, applies Aitken Delta^2, and
/// classifies:
///   converged    - the last three extrapolants agree within tolerance
///   diverged     - |value| exceeds the divergence bound on the final two
///                  samples with growing magnitude
///   inconclusive - anything else, including evaluation failures
inline LimitProbe probe_limit(const std::function<double(double)>& value_fn,
                              LimitDirection direction,
                              const ProbeOptions& opt = {}) {
    LimitProbe probe;
    probe.direction = direction;
    probe.tolerance = opt.tolerance;
    const double sign = direction == LimitDirection::PlusInfinity ? 1.0 : -1.0;
    for (int j = opt.j_min; j <= opt.j_max; ++j) {
        const double t = sign * std::pow(10.0, j);
        double v;
        try {
            v = value_fn(t);
        } catch (const std::exception& ex) {
            probe.status = ProbeStatus::Inconclusive;
            probe.note = "evaluation failed at t=" + std::to_string(t) + ": " + ex.what();
            return probe;
        }
        if (!std::isfinite(v)) {
            probe.status = ProbeStatus::Inconclusive;
            probe.note = "non-finite sample at t=" + std::to_string(t);
            return probe;
        }
        probe.samples.emplace_back(t, v);
    }
    const std::size_t n = probe.samples.size();
    if (n >= 2) {
        const double last = std::abs(probe.samples[n - 1].second);
        const double prev = std::abs(probe.samples[n - 2].second);
        if (last > opt.divergence_bound && prev > opt.divergence_bound && last > prev) {
            probe.status = ProbeStatus::Diverged;
            probe.extrapolant = probe.samples[n - 1].second;
            return probe;
        }
    }
    // Aitken Delta^2; a vanishing second difference means the sequence is
    // (locally) exact, keep the raw value.
    for (std::size_t i = 0; i + 2 < n; ++i) {
        const double x0 = probe.samples[i].second;
        const double x1 = probe.samples[i + 1].second;
        const double x2 = probe.samples[i + 2].second;
        const double dd = x2 - 2.0 * x1 + x0;
        double a;
        if (dd == 0.0 || !std::isfinite((x2 - x1) * (x2 - x1) / dd))
            a = x2;
        else
            a = x2 - (x2 - x1) * (x2 - x1) / dd;
        probe.extrapolants.push_back(a);
    }
    if (probe.extrapolants.size() < 3) {
        probe.status = ProbeStatus::Inconclusive;
        probe.note = "probe grid too short for extrapolation";
        return probe;
    }
    const std::size_t m = probe.extrapolants.size();
    const double e0 = probe.extrapolants[m - 3];
    const double e1 = probe.extrapolants[m - 2];
    const double e2 = probe.extrapolants[m - 1];
    probe.extrapolant = e2;
    const double spread = std::max(std::abs(e2 - e1),
                                   std::max(std::abs(e1 - e0), std::abs(e2 - e0)));
    probe.status = spread <= opt.tolerance ? ProbeStatus::Converged
                                           : ProbeStatus::Inconclusive;
    return probe;
}

} // namespace ckcomp
