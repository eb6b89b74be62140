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
#include "pmss/montecarlo.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <thread>

namespace pmss {

LeaderSeries leader_trajectory(const LeaderProfile& profile, int horizon) {
    if (horizon < 1) throw InvalidParameterError("horizon must be at least 1");
    LeaderSeries s{VectorD(horizon + 1), VectorD(horizon + 1)};
    if (profile.kind == LeaderProfile::Kind::Ramp) {
        for (int k = 0; k <= horizon; ++k) {
            s.y0(k) = profile.initial_position + profile.slope * k;
            s.m0(k) = profile.slope;
        }
        return s;
    }
    if (profile.segments.empty()) throw InvalidParameterError("piecewise leader profile has no segments");
    std::vector<double> accel;
    for (const auto& seg : profile.segments) {
        if (seg.duration < 0) throw InvalidParameterError("segment duration must be non-negative");
        accel.insert(accel.end(), seg.duration, seg.accel);
    }
    double speed = std::max(0.0, profile.initial_speed);
    s.y0(0) = profile.initial_position;
    s.m0(0) = speed;
    for (int k = 0; k < horizon; ++k) {
        const double a = k < static_cast<int>(accel.size()) ? accel[k] : 0.0;
        speed = std::max(0.0, speed + a);
        s.y0(k + 1) = s.y0(k) + speed;
        s.m0(k + 1) = speed;
    }
    return s;
}

RunSeries simulate_run(const PlatoonRealization& platoon, const VectorD& y0, int horizon, std::uint64_t seed) {
    if (y0.size() < horizon + 1) throw DimensionError("leader series shorter than the horizon");
    const std::size_t N = platoon.size();
    Rng rng(seed);
    RunSeries out{MatrixD(horizon + 1, N), MatrixD(horizon + 1, N)};
    std::vector<VectorD> x(N);
    for (std::size_t i = 0; i < N; ++i) {
        const auto& b = platoon.blocks[i];
        x[i] = platoon.x0.segment(b.state_offset, b.state_dim);
    }
    std::vector<double> y(N);
    for (int k = 0; k <= horizon; ++k) {
        for (std::size_t i = 0; i < N; ++i) y[i] = platoon.vehicles[i].C_y.row(0).dot(x[i]);
        const auto theta = k < horizon ? sample_channel(platoon.channel, rng) : std::vector<std::uint8_t>(N, 0);
        for (std::size_t i = 0; i < N; ++i) {
            const auto& v = platoon.vehicles[i];
            const double yp = i == 0 ? y0(k) : y[i - 1];
            out.y(k, i) = y[i];
            out.zeta(k, i) = v.C_zeta.row(0).dot(x[i]) + v.D_zeta(0, 0) * yp;
            if (k == horizon) continue;
            VectorD next = v.A * x[i];
            if (theta[i]) next += v.B * (v.C_v * x[i] + v.D_v.col(0) * yp);
            x[i] = std::move(next);
        }
    }
    return out;
}

namespace {

// Direct-form SISO filter with zero history before k = 0.
struct DirectForm {
    std::vector<double> b, a;  // both length n+1, a[0] = 1
    std::vector<double> in, out;

    explicit DirectForm(const TransferFunction& tf) {
        a = tf.denominator();
        b.assign(a.size(), 0.0);
        const auto& num = tf.numerator();
        std::copy(num.begin(), num.end(), b.end() - num.size());
    }
    bool instantaneous() const { return b[0] != 0.0; }

    // Output at the current step; u is the current input, ignored when b[0] = 0.
    double output(double u) const {
        const std::size_t k = out.size();
        double o = b[0] * u;
        for (std::size_t j = 1; j < b.size() && j <= k; ++j) o += b[j] * in[k - j];
        for (std::size_t j = 1; j < a.size() && j <= k; ++j) o -= a[j] * out[k - j];
        return o;
    }
    void commit(double u, double o) {
        in.push_back(u);
        out.push_back(o);
    }
};

struct VehicleSignals {
    std::vector<SignalEquation> eqs;
    std::vector<std::size_t> order;
    std::map<Signal, std::vector<double>> series;
    std::map<std::pair<Signal, int>, double> before_start;
    std::vector<DirectForm> filters;
    std::vector<int> filter_of;
};

}  // namespace

RunSeries simulate_signal_level(const std::vector<VehicleSpec>& specs, const ChannelModel& channel, const VectorD& y0,
                                int horizon, std::uint64_t seed) {
    if (specs.size() != channel.links()) throw DimensionError("channel link count differs from the number of followers");
    if (y0.size() < horizon + 1) throw DimensionError("leader series shorter than the horizon");
    const std::size_t N = specs.size();
    std::vector<VehicleSignals> veh(N);
    for (std::size_t i = 0; i < N; ++i) {
        const VehicleSpec s = resolve_hooks(specs[i], i, channel.marginals());
        auto& V = veh[i];
        V.eqs = vehicle_signal_equations(s.strategy.variant);
        const TransferFunction H = headway_tf(s.h);
        V.filter_of.assign(V.eqs.size(), -1);
        for (std::size_t r = 0; r < V.eqs.size(); ++r) {
            const Operator op = V.eqs[r].op;
            if (op == Operator::Sum) continue;
            V.filter_of[r] = static_cast<int>(V.filters.size());
            V.filters.emplace_back(op == Operator::Controller ? s.K : op == Operator::Plant ? s.G : H);
        }
        const auto init = compensator_initial_signals(s.strategy.variant);
        for (std::size_t j = 0; j < s.strategy.initial_values.size(); ++j)
            V.before_start[init[j]] = s.strategy.initial_values[j];

        // Evaluation order from the delay-free dependencies.
        std::map<Signal, std::size_t> def;
        for (std::size_t r = 0; r < V.eqs.size(); ++r) def[V.eqs[r].target] = r;
        std::vector<std::vector<std::size_t>> users(V.eqs.size());
        std::vector<int> pending(V.eqs.size(), 0);
        for (std::size_t r = 0; r < V.eqs.size(); ++r) {
            const auto& eq = V.eqs[r];
            for (const auto& t : eq.terms) {
                if (t.delay > 0 || t.signal == Signal::PredecessorPosition) continue;
                if (eq.op != Operator::Sum && !V.filters[V.filter_of[r]].instantaneous()) continue;
                users[def.at(t.signal)].push_back(r);
                ++pending[r];
            }
        }
        std::vector<std::size_t> ready;
        for (std::size_t r = 0; r < V.eqs.size(); ++r)
            if (pending[r] == 0) ready.push_back(r);
        while (!ready.empty()) {
            const std::size_t r = ready.back();
            ready.pop_back();
            V.order.push_back(r);
            for (auto u : users[r])
                if (--pending[u] == 0) ready.push_back(u);
        }
        if (V.order.size() != V.eqs.size()) throw WellPosednessError("algebraic loop in the signal equations");
        for (const auto& eq : V.eqs) V.series[eq.target].reserve(horizon + 1);
    }

    Rng rng(seed);
    RunSeries out{MatrixD(horizon + 1, N), MatrixD(horizon + 1, N)};
    for (int k = 0; k <= horizon; ++k) {
        const auto theta = k < horizon ? sample_channel(channel, rng) : std::vector<std::uint8_t>(N, 0);
        for (std::size_t i = 0; i < N; ++i) {
            auto& V = veh[i];
            const double yp = i == 0 ? y0(k) : veh[i - 1].series.at(Signal::Position)[k];
            auto value = [&](Signal s, int delay) {
                if (s == Signal::PredecessorPosition) return yp;
                const int t = k - delay;
                if (t < 0) {
                    auto it = V.before_start.find({s, -t});
                    return it == V.before_start.end() ? 0.0 : it->second;
                }
                return V.series.at(s)[t];
            };
            for (std::size_t r : V.order) {
                const auto& eq = V.eqs[r];
                double val = 0.0;
                if (eq.op == Operator::Sum) {
                    for (const auto& t : eq.terms) {
                        const double gate = t.gated ? theta[i] : 1.0;
                        val += t.coefficient * gate * value(t.signal, t.delay);
                    }
                } else {
                    const auto& f = V.filters[V.filter_of[r]];
                    val = f.output(f.instantaneous() ? value(eq.terms[0].signal, eq.terms[0].delay) : 0.0);
                }
                V.series[eq.target].push_back(val);
            }
            for (std::size_t r = 0; r < V.eqs.size(); ++r) {
                if (V.filter_of[r] < 0) continue;
                const auto& eq = V.eqs[r];
                V.filters[V.filter_of[r]].commit(value(eq.terms[0].signal, eq.terms[0].delay), V.series.at(eq.target)[k]);
            }
            out.y(k, i) = V.series.at(Signal::Position)[k];
            out.zeta(k, i) = V.series.at(Signal::TrackingError)[k];
        }
    }
    return out;
}

namespace {

struct Accumulator {
    long count = 0;
    MatrixD mean, m2;
};

void merge(Accumulator& into, const Accumulator& from) {
    if (from.count == 0) return;
    if (into.count == 0) {
        into = from;
        return;
    }
    const double na = into.count, nb = from.count, n = na + nb;
    const MatrixD delta = from.mean - into.mean;
    into.mean += delta * (nb / n);
    into.m2 += from.m2 + delta.cwiseProduct(delta) * (na * nb / n);
    into.count += from.count;
}

}  // namespace

EnsembleStats ensemble_stats(const PlatoonRealization& platoon, const VectorD& y0, int horizon, int runs,
                             std::uint64_t base_seed, unsigned threads) {
    if (runs < 1) throw InvalidParameterError("at least one run required");
    constexpr int kChunk = 64;
    const int chunks = (runs + kChunk - 1) / kChunk;
    std::vector<Accumulator> acc(chunks);
    auto do_chunk = [&](int c) {
        Accumulator& a = acc[c];
        const int end = std::min(runs, (c + 1) * kChunk);
        for (int r = c * kChunk; r < end; ++r) {
            const MatrixD z = simulate_run(platoon, y0, horizon, run_seed(base_seed, r)).zeta;
            if (a.count == 0) {
                a.mean = MatrixD::Zero(z.rows(), z.cols());
                a.m2 = MatrixD::Zero(z.rows(), z.cols());
            }
            ++a.count;
            const MatrixD d = z - a.mean;
            a.mean += d / static_cast<double>(a.count);
            a.m2 += d.cwiseProduct(z - a.mean);
        }
    };
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(chunks));
    if (workers <= 1) {
        for (int c = 0; c < chunks; ++c) do_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int c = static_cast<int>(w); c < chunks; c += static_cast<int>(workers)) do_chunk(c);
            });
        for (auto& t : pool) t.join();
    }
    Accumulator total;
    for (const auto& a : acc) merge(total, a);

    EnsembleStats s;
    s.runs = runs;
    s.base_seed = base_seed;
    s.mean = total.mean;
    if (runs >= 2) {
        s.var = total.m2 / static_cast<double>(runs - 1);
        s.se_mean = (s.var / static_cast<double>(runs)).cwiseSqrt();
    } else {
        s.var = MatrixD::Constant(total.mean.rows(), total.mean.cols(), std::numeric_limits<double>::quiet_NaN());
        s.se_mean = s.var;
    }
    return s;
}

double agreement_fraction(const EnsembleStats& stats, const MomentTrajectory& traj, double z) {
    const Eigen::Index K = std::min<Eigen::Index>(stats.mean.rows(), static_cast<Eigen::Index>(traj.mu_zeta.size()));
    long inside = 0, total = 0;
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index i = 0; i < stats.mean.cols(); ++i) {
            ++total;
            if (std::abs(stats.mean(k, i) - traj.mu_zeta[k](i)) <= z * stats.se_mean(k, i) + 1e-9) ++inside;
        }
    return total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
}

ExactMoments enumerate_exact(const PlatoonRealization& platoon, const VectorD& y0, int horizon, double guard) {
    if (horizon < 0) throw InvalidParameterError("horizon must be non-negative");
    if (y0.size() < horizon + 1) throw DimensionError("leader series shorter than the horizon");
    const auto support = platoon.channel.support();
    const double paths = std::pow(static_cast<double>(support.size()), horizon);
    if (paths > guard) throw GuardError("channel path count exceeds the enumeration guard");
    const std::size_t N = platoon.size();
    const Eigen::Index nv = platoon.channel_width();

    std::vector<VectorD> gates;
    for (const auto& o : support) {
        VectorD g(nv);
        for (std::size_t i = 0; i < N; ++i)
            g.segment(platoon.blocks[i].channel_offset, platoon.blocks[i].channel_dim).setConstant(o.bits[i]);
        gates.push_back(g);
    }

    ExactMoments ex;
    ex.paths = static_cast<std::size_t>(paths);
    ex.mu_zeta.assign(horizon + 1, VectorD::Zero(N));
    ex.P_zeta.assign(horizon + 1, MatrixD::Zero(N, N));

    // Two passes over the path tree so the second moments are accumulated about the exact mean.
    for (int pass = 0; pass < 2; ++pass) {
        struct Frame {
            VectorD x;
            double w;
            int k;
        };
        std::vector<Frame> stack{{platoon.x0, 1.0, 0}};
        while (!stack.empty()) {
            Frame f = std::move(stack.back());
            stack.pop_back();
            const VectorD zeta = platoon.C_zeta * f.x + platoon.D_zeta.col(0) * y0(f.k);
            if (pass == 0) {
                ex.mu_zeta[f.k] += f.w * zeta;
            } else {
                const VectorD d = zeta - ex.mu_zeta[f.k];
                ex.P_zeta[f.k] += f.w * d * d.transpose();
            }
            if (f.k == horizon) continue;
            const VectorD v = platoon.C_v * f.x + platoon.D_v.col(0) * y0(f.k);
            const VectorD ax = platoon.openloop.calA * f.x;
            for (std::size_t s = 0; s < support.size(); ++s)
                stack.push_back({ax + platoon.calB * gates[s].cwiseProduct(v), f.w * support[s].probability, f.k + 1});
        }
    }
    return ex;
}

}  // namespace pmss
