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

// Channel statistics and the stacked closed loop of a predecessor-following platoon.

#include <cstdint>
#include <vector>

#include "pmss/lti.hpp"
#include "pmss/rng.hpp"
#include "pmss/strategies.hpp"

namespace pmss {

struct JointOutcome {
    std::vector<std::uint8_t> bits;  // bits[i] = theta of link i+1
    double probability = 0.0;
};

class ChannelModel {
public:
    ChannelModel() = default;

    static ChannelModel independent(std::vector<double> p);
    static ChannelModel joint_pmf(std::vector<JointOutcome> outcomes);

    bool is_independent() const { return independent_; }
    std::size_t links() const { return p_.size(); }
    const std::vector<double>& marginals() const { return p_; }
    const std::vector<JointOutcome>& outcomes() const { return outcomes_; }

    // Raw N x N covariance of (theta_1, ..., theta_N).
    MatrixD covariance() const;

    // All outcomes with positive probability; independent links are expanded as a product.
    std::vector<JointOutcome> support() const;

private:
    bool independent_ = true;
    std::vector<double> p_;
    std::vector<JointOutcome> outcomes_;
    MatrixD cov_;
};

struct ChannelMoments {
    MatrixD Upsilon;
    MatrixD P_Theta;  // expanded to the channel-vector width
};

ChannelMoments channel_moments(const ChannelModel& model, const std::vector<int>& widths);

std::vector<std::uint8_t> sample_channel(const ChannelModel& model, Rng& rng);

struct BlockIndex {
    Eigen::Index state_offset = 0, state_dim = 0;
    Eigen::Index channel_offset = 0, channel_dim = 0;
};

// x(k+1) = calA x + calB Theta_d v, the loop before averaging over the channel.
struct OpenLoopForm {
    MatrixD calA, calB, C_y;
};

struct PlatoonRealization {
    MatrixD A, B, calB, C_zeta, D_zeta, C_v, D_v;
    OpenLoopForm openloop;
    std::vector<BlockIndex> blocks;
    std::vector<VehicleRealization> vehicles;
    ChannelModel channel;
    ChannelMoments moments;
    VectorD x0;

    std::size_t size() const { return vehicles.size(); }
    Eigen::Index states() const { return A.rows(); }
    Eigen::Index channel_width() const { return calB.cols(); }
};

PlatoonRealization assemble_platoon(std::vector<VehicleRealization> vehicles, const ChannelModel& channel);

// Realizes every spec (hooks evaluated on the channel marginals) and assembles.
PlatoonRealization build_platoon(const std::vector<VehicleSpec>& specs, const ChannelModel& channel, double tol = 1e-9);

enum class Subsystem { M11, M21 };

// M11: y0 -> zeta, M21: y0 -> v, both through the mean loop.
StateSpaceD subsystem_tf(const PlatoonRealization& platoon, Subsystem which);

}  // namespace pmss
