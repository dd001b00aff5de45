#pragma once

#include <complex>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ckcomp/cycles.hpp"
#include "ckcomp/errors.hpp"
#include "ckcomp/integrate.hpp"

namespace ckcomp {

namespace detail {
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace detail

/// Trajectory CSV: header row, columns t, x1..xN, s.
inline void write_trajectory_csv(const Trajectory& traj, int state_dim,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "t";
    for (int i = 1; i <= state_dim; ++i) out << ",x" << i;
    out << ",s\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << detail::fmt_g17(traj.times[i]);
        for (double v : traj.states[i]) out << "," << detail::fmt_g17(v);
        out << "\n";
    }
}

/// Distance series CSV: columns t, dist.
inline void write_distance_csv(const std::vector<std::pair<double, double>>& series,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "t,dist\n";
    for (const auto& [t, d] : series)
        out << detail::fmt_g17(t) << "," << detail::fmt_g17(d) << "\n";
}

/// Orbit CSV (dense samples) plus a key-value summary with period and
/// multipliers.
inline void write_orbit_csv(const PeriodicOrbit& orbit, const std::string& csv_path,
                            const std::string& summary_path) {
    {
        std::ofstream out(csv_path);
        if (!out) throw Error("cannot open '" + csv_path + "' for writing");
        const std::size_t N = orbit.dense.empty() ? 0 : orbit.dense.front().size();
        out << "arc_index";
        for (std::size_t i = 1; i <= N; ++i) out << ",x" << i;
        out << "\n";
        for (std::size_t i = 0; i < orbit.dense.size(); ++i) {
            out << i;
            for (double v : orbit.dense[i]) out << "," << detail::fmt_g17(v);
            out << "\n";
        }
    }
    std::ofstream out(summary_path);
    if (!out) throw Error("cannot open '" + summary_path + "' for writing");
    out << "period=" << detail::fmt_g17(orbit.period) << "\n";
    out << "residual=" << detail::fmt_g17(orbit.residual) << "\n";
    out << "anchor=";
    for (std::size_t i = 0; i < orbit.anchor.size(); ++i)
        out << (i ? "," : "") << detail::fmt_g17(orbit.anchor[i]);
    out << "\n";
    for (std::size_t i = 0; i < orbit.multipliers.size(); ++i) {
        out << "multiplier." << (i + 1) << "=" << detail::fmt_g17(orbit.multipliers[i].real())
            << (orbit.multipliers[i].imag() < 0 ? "-" : "+")
            << detail::fmt_g17(std::abs(orbit.multipliers[i].imag())) << "i\n";
        out << "multiplier." << (i + 1)
            << ".modulus=" << detail::fmt_g17(std::abs(orbit.multipliers[i])) << "\n";
    }
}

} // namespace ckcomp
