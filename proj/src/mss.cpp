/*
 Copyright 2026 The platoon-mss Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "pmss/mss.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <thread>

namespace pmss {

namespace {

bool all_at_least(const std::vector<int>& m, int k) {
    for (int v : m)
        if (v < k) return false;
    return true;
}

bool near_one(double rho, double band) { return std::abs(rho - 1.0) <= band; }

double max_abs(const VectorD& v) {
    return v.size() == 0 ? std::numeric_limits<double>::quiet_NaN() : v.cwiseAbs().maxCoeff();
}

}  // namespace

MssReport mss_verdict(const PlatoonRealization& platoon, const MssOptions& opt) {
    MssReport r;
    const MatrixD K = mean_square_matrix(platoon, opt.guard);
    r.rho_A = spectral_radius(platoon.A);
    r.rho_kron = spectral_radius(K);
    r.marginal = near_one(r.rho_A, opt.marginal_band) || near_one(r.rho_kron, opt.marginal_band);
    if (r.rho_A >= 1.0) {
        r.reasons.push_back("rho(A) >= 1");
        if (r.rho_kron >= 1.0) r.reasons.push_back("rho(A kron A + Delta) >= 1");
        return r;
    }
    const auto z11 = zero_multiplicity_at_one(subsystem_tf(platoon, Subsystem::M11), opt.zero_tol);
    const auto z21 = zero_multiplicity_at_one(subsystem_tf(platoon, Subsystem::M21), opt.zero_tol);
    r.m11_at_one = z11.value_at_one.col(0);
    r.m11_multiplicity = z11.multiplicity;
    r.m21_at_one = z21.value_at_one.col(0);
    r.m21_multiplicity = z21.multiplicity;
    const bool m11_zero = all_at_least(z11.multiplicity, 1);
    const bool m21_zero = all_at_least(z21.multiplicity, 1);
    if (!m11_zero) r.reasons.push_back("M11 has no zero at z=1");
    if (!m21_zero) r.reasons.push_back("M21 has no zero at z=1");
    if (r.rho_kron >= 1.0) r.reasons.push_back("rho(A kron A + Delta) >= 1");
    r.mean_converges = m11_zero;
    r.var_converges = m21_zero && r.rho_kron < 1.0;
    r.mss = r.mean_converges && r.var_converges;

    auto& st = r.stationary;
    st.m11_multiplicity = z11.multiplicity;
    st.m21_multiplicity = z21.multiplicity;
    if (opt.stationary && r.mean_converges) {
        const auto sm = stationary_mean(platoon, opt.m0, opt.zero_tol);
        st.mean_converges = sm.converges;
        st.mean_zeta = sm.value;
    }
    if (opt.stationary && r.var_converges) {
        const auto sc = stationary_covariance(platoon, opt.m0, z21.multiplicity, K);
        st.cov_converges = sc.converges;
        st.cov_zeta = sc.value;
        st.mu_v_stationary = sc.mu_v;
        st.warnings = sc.warnings;
    }
    return r;
}

MssReport analyze_platoon(const PlatoonRealization& platoon, const MssOptions& opt) {
    try {
        return mss_verdict(platoon, opt);
    } catch (const GuardError&) {
        if (!platoon.channel.is_independent()) throw;
    }
    MssReport r;
    r.method = "per_vehicle";
    r.per_vehicle = per_vehicle_conditions(platoon, opt.zero_tol, opt.marginal_band);
    const auto& pv = *r.per_vehicle;
    const auto N = static_cast<Eigen::Index>(pv.conditions.size());
    r.m11_at_one = VectorD::Zero(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto& c = pv.conditions[i];
        r.rho_A = std::max(r.rho_A, c.rho_alpha);
        r.rho_kron = std::max(r.rho_kron, c.rho_alpha_kron);
        r.m11_at_one(i) = c.Ma_at_one;
        r.m11_multiplicity.push_back(c.Ma_multiplicity);
        r.m21_multiplicity.push_back(c.Mb_multiplicity);
    }
    std::vector<double> mb;
    for (const auto& c : pv.conditions)
        for (Eigen::Index j = 0; j < c.Mb_at_one.size(); ++j) mb.push_back(c.Mb_at_one(j));
    r.m21_at_one = Eigen::Map<VectorD>(mb.data(), static_cast<Eigen::Index>(mb.size()));
    r.mean_converges = pv.mean_converges;
    r.var_converges = pv.var_converges;
    r.mss = pv.mss;
    r.marginal = pv.marginal;
    if (r.rho_A >= 1.0) r.reasons.push_back("rho(A) >= 1");
    if (!all_at_least(r.m11_multiplicity, 1)) r.reasons.push_back("M11 has no zero at z=1");
    if (!all_at_least(r.m21_multiplicity, 1)) r.reasons.push_back("M21 has no zero at z=1");
    if (r.rho_kron >= 1.0) r.reasons.push_back("rho(A kron A + Delta) >= 1");
    r.stationary.m11_multiplicity = r.m11_multiplicity;
    r.stationary.m21_multiplicity = r.m21_multiplicity;
    r.stationary.warnings.push_back("stationary values need the global Kronecker system, skipped");
    return r;
}

PerVehicleReport per_vehicle_conditions(const std::vector<VehicleRealization>& vehicles, const std::vector<double>& p,
                                        double tol, double band) {
    if (vehicles.size() != p.size()) throw DimensionError("one probability per vehicle required");
    PerVehicleReport rep;
    rep.mean_converges = rep.var_converges = true;
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        const auto& v = vehicles[i];
        const double pi = p[i];
        if (!(pi > 0.0 && pi <= 1.0)) throw InvalidModelError("success probability must lie in (0, 1]");
        PerVehicleCondition c;
        c.index = static_cast<int>(i) + 1;
        c.p = pi;
        const MatrixD alpha = v.A + pi * v.B * v.C_v;
        const MatrixD delta = pi * (1.0 - pi) * kron(v.B, v.B) * kron(v.C_v, v.C_v);
        c.rho_alpha = spectral_radius(alpha);
        c.rho_alpha_kron = spectral_radius(MatrixD(kron(alpha, alpha) + delta));
        if (c.rho_alpha < 1.0) {
            const MatrixD Bin = pi * v.B * v.D_v;
            const auto za = zero_multiplicity_at_one(StateSpaceD(alpha, Bin, v.C_zeta, v.D_zeta), tol);
            const auto zb = zero_multiplicity_at_one(StateSpaceD(alpha, Bin, v.C_v, v.D_v), tol);
            c.Ma_at_one = za.value_at_one(0, 0);
            c.Ma_multiplicity = za.multiplicity[0];
            c.Mb_at_one = zb.value_at_one.col(0);
            c.Mb_multiplicity = *std::min_element(zb.multiplicity.begin(), zb.multiplicity.end());
            c.mean_ok = c.Ma_multiplicity >= 1;
            c.var_ok = c.Mb_multiplicity >= 1 && c.rho_alpha_kron < 1.0;
        } else {
            c.Ma_at_one = std::numeric_limits<double>::quiet_NaN();
            c.Mb_at_one = VectorD::Constant(v.n_v, std::numeric_limits<double>::quiet_NaN());
        }
        rep.mean_converges = rep.mean_converges && c.mean_ok;
        rep.var_converges = rep.var_converges && c.var_ok;
        rep.marginal = rep.marginal || near_one(c.rho_alpha, band) || near_one(c.rho_alpha_kron, band);
        rep.conditions.push_back(std::move(c));
    }
    rep.mss = rep.mean_converges && rep.var_converges;
    return rep;
}

PerVehicleReport per_vehicle_conditions(const PlatoonRealization& platoon, double tol, double band) {
    if (!platoon.channel.is_independent())
        throw UnsupportedModelError("per-vehicle conditions require mutually independent links");
    return per_vehicle_conditions(platoon.vehicles, platoon.channel.marginals(), tol, band);
}

PerVehicleReport homogeneous_conditions(const VehicleRealization& vehicle, double p, int N, double tol, double band) {
    if (N < 1) throw InvalidParameterError("platoon size must be positive");
    return per_vehicle_conditions(std::vector<VehicleRealization>{vehicle}, std::vector<double>{p}, tol, band);
}

std::vector<SweepRow> sweep(const PlatoonTemplate& tmpl, const std::vector<SweepAxis>& axes, const MssOptions& opt,
                            unsigned threads) {
    if (axes.empty() || axes.size() > 2) throw UnsupportedModelError("sweeps take one or two probability axes");
    if (tmpl.base_p.size() != tmpl.vehicles.size()) throw DimensionError("template needs one base probability per link");
    for (const auto& ax : axes) {
        if (ax.values.empty()) throw InvalidParameterError("empty sweep axis");
        for (double v : ax.values)
            if (!(v > 0.0 && v <= 1.0)) throw InvalidParameterError("sweep values must lie in (0, 1]");
        for (auto l : ax.links)
            if (l >= tmpl.vehicles.size()) throw InvalidParameterError("sweep axis names a link outside the platoon");
    }
    const std::size_t n1 = axes[0].values.size();
    const std::size_t n2 = axes.size() == 2 ? axes[1].values.size() : 1;
    std::vector<SweepRow> rows(n1 * n2);
    MssOptions o = opt;
    o.stationary = false;

    auto eval = [&](std::size_t idx) {
        const std::size_t a = idx / n2, b = idx % n2;
        std::vector<double> p = tmpl.base_p;
        for (auto l : axes[0].links) p[l] = axes[0].values[a];
        if (axes.size() == 2)
            for (auto l : axes[1].links) p[l] = axes[1].values[b];
        const auto platoon = build_platoon(tmpl.vehicles, ChannelModel::independent(p), tmpl.realization_tol);
        const auto rep = analyze_platoon(platoon, o);
        SweepRow& row = rows[idx];
        row.p1 = axes[0].values[a];
        if (axes.size() == 2) row.p2 = axes[1].values[b];
        row.rho_A = rep.rho_A;
        row.rho_kron = rep.rho_kron;
        row.m11_norm = max_abs(rep.m11_at_one);
        row.m21_norm = max_abs(rep.m21_at_one);
        row.mean_ok = rep.mean_converges;
        row.var_ok = rep.var_converges;
        row.mss = rep.mss;
        row.marginal = rep.marginal;
    };

    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, rows.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) eval(i);
        return rows;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < rows.size(); i += workers) eval(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "p1,p2,rho_A,rho_kron,m11_norm,m21_norm,mean_ok,var_ok,mss,marginal\n";
    os << std::setprecision(10);
    for (const auto& r : rows) {
        os << r.p1 << ',';
        if (r.p2) os << *r.p2;
        os << ',' << r.rho_A << ',' << r.rho_kron << ',' << r.m11_norm << ',' << r.m21_norm << ',' << int(r.mean_ok) << ','
           << int(r.var_ok) << ',' << int(r.mss) << ',' << int(r.marginal) << '\n';
    }
}

StringBehavior string_behavior_report(const MomentTrajectory& traj) {
    StringBehavior s;
    if (traj.mu_zeta.empty()) return s;
    const Eigen::Index N = traj.mu_zeta.front().size();
    s.mean_peak.assign(N, 0.0);
    s.var_peak.assign(N, 0.0);
    for (std::size_t k = 0; k < traj.mu_zeta.size(); ++k)
        for (Eigen::Index i = 0; i < N; ++i) {
            s.mean_peak[i] = std::max(s.mean_peak[i], std::abs(traj.mu_zeta[k](i)));
            if (k < traj.P_zeta.size()) s.var_peak[i] = std::max(s.var_peak[i], traj.P_zeta[k](i, i));
        }
    auto nonincreasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] > v[i - 1] * (1.0 + 1e-9) + 1e-12) return false;
        return true;
    };
    s.mean_nonincreasing = nonincreasing(s.mean_peak);
    s.var_nonincreasing = nonincreasing(s.var_peak);
    s.nonincreasing = s.mean_nonincreasing && s.var_nonincreasing;
    return s;
}

}  // namespace pmss
