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

// Leader profiles, sampled platoon runs, ensemble statistics and exact path enumeration.

#include <cstdint>
#include <vector>

#include "pmss/moments.hpp"

namespace pmss {

struct LeaderSegment {
    double accel = 0.0;  // m/step^2
    int duration = 0;    // steps
};

struct LeaderProfile {
    enum class Kind { Ramp, Piecewise };
    Kind kind = Kind::Ramp;
    double slope = 0.0;  // ramp speed, m/step
    std::vector<LeaderSegment> segments;
    double initial_position = 0.0;
    double initial_speed = 0.0;  // piecewise only
};

struct LeaderSeries {
    VectorD y0;  // k = 0..horizon
    VectorD m0;  // y0(k) - y0(k-1)
    double final_speed() const { return m0.size() ? m0(m0.size() - 1) : 0.0; }
};

// Speed is clipped at zero: the leader never reverses.
LeaderSeries leader_trajectory(const LeaderProfile& profile, int horizon);

// Rows k = 0..horizon, one column per follower.
struct RunSeries {
    MatrixD y, zeta;
};

RunSeries simulate_run(const PlatoonRealization& platoon, const VectorD& y0, int horizon, std::uint64_t seed);

// Same experiment evaluated from the signal equations and direct-form filters, never
// touching a state-space realization. Draws the channel in the same order as simulate_run.
RunSeries simulate_signal_level(const std::vector<VehicleSpec>& specs, const ChannelModel& channel, const VectorD& y0,
                                int horizon, std::uint64_t seed);

inline std::uint64_t run_seed(std::uint64_t base, std::uint64_t run) { return stream_seed(base, run); }

struct EnsembleStats {
    int runs = 0;
    std::uint64_t base_seed = 0;  // run r uses run_seed(base_seed, r)
    MatrixD mean, var, se_mean;   // (horizon+1) x N
};

EnsembleStats ensemble_stats(const PlatoonRealization& platoon, const VectorD& y0, int horizon, int runs,
                             std::uint64_t base_seed, unsigned threads = 0);

// Fraction of (k, vehicle) points with |mean - mu| <= z * se.
double agreement_fraction(const EnsembleStats& stats, const MomentTrajectory& traj, double z = 4.0);

struct ExactMoments {
    std::vector<VectorD> mu_zeta;
    std::vector<MatrixD> P_zeta;
    std::size_t paths = 0;
};

inline constexpr double kEnumerationGuard = 1048576.0;

ExactMoments enumerate_exact(const PlatoonRealization& platoon, const VectorD& y0, int horizon,
                             double guard = kEnumerationGuard);

}  // namespace pmss
