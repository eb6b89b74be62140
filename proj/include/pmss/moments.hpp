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

// First and second moments of the platoon under Bernoulli links.

#include <optional>
#include <string>
#include <vector>

#include "pmss/platoon.hpp"

namespace pmss {

// Entries k = 0..horizon.
struct MomentTrajectory {
    int horizon = 0;
    std::vector<VectorD> mu_x, mu_zeta, mu_v;
    std::vector<MatrixD> P_x, P_zeta, P_v;
};

// y0 must hold at least horizon+1 samples. mu_x0 defaults to the platoon's initial state.
MomentTrajectory mean_recursion(const PlatoonRealization& platoon, const VectorD& y0, int horizon,
                                const std::optional<VectorD>& mu_x0 = std::nullopt);

// Fills the covariance part of a trajectory produced by mean_recursion. P_x0 defaults to 0.
void covariance_recursion(const PlatoonRealization& platoon, MomentTrajectory& traj,
                          const std::optional<MatrixD>& P_x0 = std::nullopt);

MomentTrajectory moment_trajectory(const PlatoonRealization& platoon, const VectorD& y0, int horizon);

inline constexpr double kDeltaGuard = 4e7;

// (calB kron calB) diag(vec P_Theta) (C_v kron C_v).
MatrixD delta_matrix(const PlatoonRealization& platoon, double guard = kDeltaGuard);

// A kron A + Delta.
MatrixD mean_square_matrix(const PlatoonRealization& platoon, double guard = kDeltaGuard);

MatrixD kron(const MatrixD& a, const MatrixD& b);
VectorD vec(const MatrixD& m);
MatrixD unvec(const VectorD& v, Eigen::Index rows);

struct StationaryMean {
    bool converges = false;
    VectorD value;
    std::vector<int> multiplicity;
};

struct StationaryCovariance {
    bool converges = false;
    MatrixD value;
    MatrixD state_value;
    VectorD mu_v;
    std::vector<int> multiplicity;
    double rcond = 1.0;
    std::vector<std::string> warnings;
};

StationaryMean stationary_mean(const PlatoonRealization& platoon, double m0, double tol = 1e-6);
StationaryCovariance stationary_covariance(const PlatoonRealization& platoon, double m0, double tol = 1e-6,
                                           double guard = kDeltaGuard);

// Same, reusing M21 multiplicities and A kron A + Delta already at hand; assumes convergence.
StationaryCovariance stationary_covariance(const PlatoonRealization& platoon, double m0,
                                           const std::vector<int>& m21_multiplicity, const MatrixD& mean_square);

}  // namespace pmss
