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
#pragma once

// Mean-square stability verdicts, per-vehicle conditions, probability sweeps and
// peak diagnostics along the string.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pmss/moments.hpp"

namespace pmss {

struct PerVehicleCondition {
    int index = 0;  // 1-based
    double p = 1.0;
    double rho_alpha = 0.0;
    double Ma_at_one = 0.0;
    int Ma_multiplicity = 0;
    double rho_alpha_kron = 0.0;
    VectorD Mb_at_one;
    int Mb_multiplicity = 0;
    bool mean_ok = false;
    bool var_ok = false;
};

struct PerVehicleReport {
    std::vector<PerVehicleCondition> conditions;
    bool mean_converges = false;
    bool var_converges = false;
    bool mss = false;
    bool marginal = false;
};

struct StationaryMoments {
    bool mean_converges = false;
    VectorD mean_zeta;
    bool cov_converges = false;
    MatrixD cov_zeta;
    VectorD mu_v_stationary;
    std::vector<int> m11_multiplicity, m21_multiplicity;
    std::vector<std::string> warnings;
};

struct MssOptions {
    double zero_tol = 1e-6;
    double marginal_band = 0.01;
    double m0 = 0.0;             // leader's final speed, for stationary values
    bool stationary = true;
    double guard = kDeltaGuard;
};

struct MssReport {
    std::string method = "global";  // "global" or "per_vehicle"
    double rho_A = 0.0;
    VectorD m11_at_one;
    std::vector<int> m11_multiplicity;
    double rho_kron = 0.0;
    VectorD m21_at_one;
    std::vector<int> m21_multiplicity;
    bool mean_converges = false;
    bool var_converges = false;
    bool mss = false;
    bool marginal = false;
    StationaryMoments stationary;
    std::optional<PerVehicleReport> per_vehicle;
    std::vector<std::string> reasons;
};

MssReport mss_verdict(const PlatoonRealization& platoon, const MssOptions& opt = {});

// mss_verdict, falling back to the per-vehicle conditions for independent links when
// the Kronecker guard trips. Correlated links rethrow the GuardError.
MssReport analyze_platoon(const PlatoonRealization& platoon, const MssOptions& opt = {});

PerVehicleReport per_vehicle_conditions(const std::vector<VehicleRealization>& vehicles, const std::vector<double>& p,
                                        double tol = 1e-6, double band = 0.01);
PerVehicleReport per_vehicle_conditions(const PlatoonRealization& platoon, double tol = 1e-6, double band = 0.01);

// Every follower identical; the verdict does not depend on N.
PerVehicleReport homogeneous_conditions(const VehicleRealization& vehicle, double p, int N, double tol = 1e-6,
                                        double band = 0.01);

struct SweepAxis {
    std::vector<std::size_t> links;  // 0-based link indices set to the axis value
    std::vector<double> values;
};

struct PlatoonTemplate {
    std::vector<VehicleSpec> vehicles;
    std::vector<double> base_p;  // links not on any axis keep these
    double realization_tol = 1e-9;
};

struct SweepRow {
    double p1 = 0.0;
    std::optional<double> p2;
    double rho_A = 0.0, rho_kron = 0.0, m11_norm = 0.0, m21_norm = 0.0;
    bool mean_ok = false, var_ok = false, mss = false, marginal = false;
};

// Grid in row-major order (axis 1 outer). Independent links only.
std::vector<SweepRow> sweep(const PlatoonTemplate& tmpl, const std::vector<SweepAxis>& axes, const MssOptions& opt = {},
                            unsigned threads = 0);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

struct StringBehavior {
    std::vector<double> mean_peak;  // max_k |mu_zeta_i(k)|
    std::vector<double> var_peak;   // max_k P_zeta_ii(k)
    bool mean_nonincreasing = true;
    bool var_nonincreasing = true;
    bool nonincreasing = true;
};

StringBehavior string_behavior_report(const MomentTrajectory& traj);

}  // namespace pmss
