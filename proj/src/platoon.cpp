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
#include "pmss/platoon.hpp"

#include <cmath>
#include <set>
#include <string>

namespace pmss {

ChannelModel ChannelModel::independent(std::vector<double> p) {
    if (p.empty()) throw InvalidModelError("channel needs at least one link");
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!(p[i] > 0.0 && p[i] <= 1.0))
            throw InvalidModelError("link " + std::to_string(i + 1) + " success probability must lie in (0, 1]");
    ChannelModel m;
    m.independent_ = true;
    m.cov_ = MatrixD::Zero(p.size(), p.size());
    for (std::size_t i = 0; i < p.size(); ++i) m.cov_(i, i) = p[i] * (1.0 - p[i]);
    m.p_ = std::move(p);
    return m;
}

ChannelModel ChannelModel::joint_pmf(std::vector<JointOutcome> outcomes) {
    if (outcomes.empty()) throw InvalidModelError("joint pmf has no outcomes");
    const std::size_t n = outcomes.front().bits.size();
    if (n == 0 || n > 16) throw InvalidModelError("joint pmf supports 1 to 16 links");
    std::set<std::vector<std::uint8_t>> seen;
    double total = 0.0;
    for (const auto& o : outcomes) {
        if (o.bits.size() != n) throw InvalidModelError("joint pmf patterns have different lengths");
        for (auto b : o.bits)
            if (b > 1) throw InvalidModelError("joint pmf pattern entries must be 0 or 1");
        if (!(o.probability >= 0.0 && o.probability <= 1.0)) throw InvalidModelError("outcome probability outside [0, 1]");
        if (!seen.insert(o.bits).second) throw InvalidModelError("duplicate pattern in joint pmf");
        total += o.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidModelError("joint pmf probabilities do not sum to 1");
    ChannelModel m;
    m.independent_ = false;
    m.p_.assign(n, 0.0);
    MatrixD second = MatrixD::Zero(n, n);
    for (const auto& o : outcomes) {
        for (std::size_t i = 0; i < n; ++i) {
            m.p_[i] += o.probability * o.bits[i];
            for (std::size_t j = 0; j < n; ++j) second(i, j) += o.probability * o.bits[i] * o.bits[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!(m.p_[i] > 0.0)) throw InvalidModelError("link " + std::to_string(i + 1) + " never delivers");
    const VectorD mu = Eigen::Map<const VectorD>(m.p_.data(), n);
    m.cov_ = second - mu * mu.transpose();
    m.outcomes_ = std::move(outcomes);
    return m;
}

MatrixD ChannelModel::covariance() const { return cov_; }

std::vector<JointOutcome> ChannelModel::support() const {
    std::vector<JointOutcome> out;
    if (!independent_) {
        for (const auto& o : outcomes_)
            if (o.probability > 0.0) out.push_back(o);
        return out;
    }
    out.push_back({{}, 1.0});
    for (double pi : p_) {
        std::vector<JointOutcome> next;
        for (const auto& o : out) {
            for (std::uint8_t b : {std::uint8_t{1}, std::uint8_t{0}}) {
                const double w = b ? pi : 1.0 - pi;
                if (w <= 0.0) continue;
                JointOutcome e = o;
                e.bits.push_back(b);
                e.probability *= w;
                next.push_back(std::move(e));
            }
        }
        out = std::move(next);
    }
    return out;
}

ChannelMoments channel_moments(const ChannelModel& model, const std::vector<int>& widths) {
    if (widths.size() != model.links()) throw DimensionError("one channel width per link required");
    std::vector<Eigen::Index> off(widths.size() + 1, 0);
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (widths[i] < 1) throw DimensionError("channel widths must be positive");
        off[i + 1] = off[i] + widths[i];
    }
    const Eigen::Index n = off.back();
    const MatrixD cov = model.covariance();
    ChannelMoments m{MatrixD::Zero(n, n), MatrixD::Zero(n, n)};
    for (std::size_t i = 0; i < widths.size(); ++i) {
        m.Upsilon.block(off[i], off[i], widths[i], widths[i]).diagonal().setConstant(model.marginals()[i]);
        for (std::size_t j = 0; j < widths.size(); ++j)
            m.P_Theta.block(off[i], off[j], widths[i], widths[j]).setConstant(cov(i, j));
    }
    return m;
}

std::vector<std::uint8_t> sample_channel(const ChannelModel& model, Rng& rng) {
    const auto& p = model.marginals();
    std::vector<std::uint8_t> theta(p.size(), 0);
    if (model.is_independent()) {
        for (std::size_t i = 0; i < p.size(); ++i) theta[i] = rng.uniform() < p[i] ? 1 : 0;
        return theta;
    }
    const double u = rng.uniform();
    double cum = 0.0;
    const JointOutcome* pick = nullptr;
    for (const auto& o : model.outcomes()) {
        if (o.probability <= 0.0) continue;
        pick = &o;
        cum += o.probability;
        if (u < cum) break;
    }
    return pick->bits;
}

PlatoonRealization assemble_platoon(std::vector<VehicleRealization> vehicles, const ChannelModel& channel) {
    const std::size_t N = vehicles.size();
    if (N == 0) throw DimensionError("platoon needs at least one follower");
    if (channel.links() != N) throw DimensionError("channel link count differs from the number of followers");
    PlatoonRealization P;
    P.blocks.resize(N);
    Eigen::Index nx = 0, nv = 0;
    std::vector<int> widths;
    for (std::size_t i = 0; i < N; ++i) {
        const auto& v = vehicles[i];
        const Eigen::Index ni = v.A.rows();
        if (v.A.cols() != ni || v.B.rows() != ni || v.B.cols() != v.n_v || v.C_y.rows() != 1 || v.C_y.cols() != ni ||
            v.C_zeta.rows() != 1 || v.C_zeta.cols() != ni || v.C_v.rows() != v.n_v || v.C_v.cols() != ni ||
            v.D_zeta.rows() != 1 || v.D_zeta.cols() != 1 || v.D_v.rows() != v.n_v || v.D_v.cols() != 1 || v.x0.size() != ni)
            throw DimensionError("vehicle " + std::to_string(i + 1) + " realization has inconsistent dimensions");
        P.blocks[i] = {nx, ni, nv, v.n_v};
        nx += ni;
        nv += v.n_v;
        widths.push_back(v.n_v);
    }
    P.moments = channel_moments(channel, widths);
    const auto& p = channel.marginals();

    P.A = MatrixD::Zero(nx, nx);
    P.B = MatrixD::Zero(nx, 1);
    P.calB = MatrixD::Zero(nx, nv);
    P.C_zeta = MatrixD::Zero(N, nx);
    P.D_zeta = MatrixD::Zero(N, 1);
    P.C_v = MatrixD::Zero(nv, nx);
    P.D_v = MatrixD::Zero(nv, 1);
    P.openloop.calA = MatrixD::Zero(nx, nx);
    P.openloop.C_y = MatrixD::Zero(N, nx);
    P.x0 = VectorD::Zero(nx);
    for (std::size_t i = 0; i < N; ++i) {
        const auto& v = vehicles[i];
        const auto& b = P.blocks[i];
        const Eigen::Index so = b.state_offset, sd = b.state_dim, co = b.channel_offset, cd = b.channel_dim;
        P.openloop.calA.block(so, so, sd, sd) = v.A;
        P.calB.block(so, co, sd, cd) = v.B;
        P.openloop.C_y.block(i, so, 1, sd) = v.C_y;
        P.C_zeta.block(i, so, 1, sd) = v.C_zeta;
        P.C_v.block(co, so, cd, sd) = v.C_v;
        P.A.block(so, so, sd, sd) = v.A + p[i] * v.B * v.C_v;
        P.x0.segment(so, sd) = v.x0;
        if (i == 0) {
            P.B.middleRows(so, sd) = p[0] * v.B * v.D_v;
            P.D_zeta(0, 0) = v.D_zeta(0, 0);
            P.D_v.middleRows(co, cd) = v.D_v;
        } else {
            const auto& prev = vehicles[i - 1];
            const auto& pb = P.blocks[i - 1];
            P.A.block(so, pb.state_offset, sd, pb.state_dim) = p[i] * v.B * v.D_v * prev.C_y;
            P.C_zeta.block(i, pb.state_offset, 1, pb.state_dim) = v.D_zeta * prev.C_y;
            P.C_v.block(co, pb.state_offset, cd, pb.state_dim) = v.D_v * prev.C_y;
        }
    }
    P.openloop.calB = P.calB;
    P.vehicles = std::move(vehicles);
    P.channel = channel;
    return P;
}

PlatoonRealization build_platoon(const std::vector<VehicleSpec>& specs, const ChannelModel& channel, double tol) {
    std::vector<VehicleRealization> rs;
    rs.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i)
        rs.push_back(build_vehicle_realization(resolve_hooks(specs[i], i, channel.marginals()), tol));
    return assemble_platoon(std::move(rs), channel);
}

StateSpaceD subsystem_tf(const PlatoonRealization& platoon, Subsystem which) {
    if (which == Subsystem::M11) return StateSpaceD(platoon.A, platoon.B, platoon.C_zeta, platoon.D_zeta);
    return StateSpaceD(platoon.A, platoon.B, platoon.C_v, platoon.D_v);
}

}  // namespace pmss
