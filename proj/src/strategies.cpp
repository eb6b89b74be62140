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
#include "pmss/strategies.hpp"

#include <array>
#include <cmath>
#include <map>
#include <sstream>

namespace pmss {

namespace {

constexpr std::array<std::pair<StrategyVariant, std::string_view>, 5> kNames{{
    {StrategyVariant::MeasurementEstimate, "measurement_estimate"},
    {StrategyVariant::ErrorToZero, "error_to_zero"},
    {StrategyVariant::ErrorHoldControlHold, "error_hold_control_hold"},
    {StrategyVariant::MeasurementToZero, "measurement_to_zero"},
    {StrategyVariant::MeasurementHold, "measurement_hold"},
}};

SignalTerm term(double c, Signal s, int delay = 0, bool gated = false) { return {c, s, delay, gated}; }

SignalEquation sum(Signal target, Role role, std::vector<SignalTerm> terms) {
    return {target, Operator::Sum, role, std::move(terms)};
}

SignalEquation filter(Signal target, Operator op, Signal input) {
    return {target, op, Role::Loop, {term(1.0, input)}};
}

// theta(k)*(s(k) - s_held(k-1)) + s_held(k-1)
std::vector<SignalTerm> hold(Signal fresh, Signal held) {
    return {term(1.0, fresh, 0, true), term(-1.0, held, 1, true), term(1.0, held, 1)};
}

bool is_measurement_strategy(StrategyVariant v) {
    return v == StrategyVariant::MeasurementEstimate || v == StrategyVariant::MeasurementToZero ||
           v == StrategyVariant::MeasurementHold;
}

// Linear combination of states, signals and inputs.
struct LinExpr {
    VectorD x, sig, in;
    LinExpr(Eigen::Index nx, Eigen::Index ns, Eigen::Index ni)
        : x(VectorD::Zero(nx)), sig(VectorD::Zero(ns)), in(VectorD::Zero(ni)) {}
};

}  // namespace

std::string_view to_string(StrategyVariant v) {
    for (const auto& [var, name] : kNames)
        if (var == v) return name;
    return "unknown";
}

StrategyVariant parse_strategy(std::string_view name) {
    for (const auto& [var, n] : kNames)
        if (n == name) return var;
    throw InvalidParameterError("unknown strategy '" + std::string(name) + "'");
}

int channel_width(StrategyVariant v) { return v == StrategyVariant::ErrorHoldControlHold ? 2 : 1; }

std::vector<std::pair<Signal, int>> compensator_initial_signals(StrategyVariant v) {
    switch (v) {
        case StrategyVariant::ErrorHoldControlHold: return {{Signal::ErrorHat, 1}, {Signal::Control, 1}};
        case StrategyVariant::MeasurementHold: return {{Signal::MeasurementHat, 1}};
        case StrategyVariant::MeasurementEstimate: return {{Signal::MeasurementHat, 1}, {Signal::MeasurementHat, 2}};
        default: return {};
    }
}

std::vector<SignalEquation> strategy_signal_equations(StrategyVariant v) {
    using S = Signal;
    constexpr Role C = Role::Compensator;
    switch (v) {
        case StrategyVariant::ErrorToZero: return {sum(S::ErrorHat, C, {term(1.0, S::Error, 0, true)})};
        case StrategyVariant::ErrorHoldControlHold:
            return {sum(S::ErrorHat, C, hold(S::Error, S::ErrorHat)), sum(S::ControlHat, C, hold(S::Control, S::Control))};
        case StrategyVariant::MeasurementEstimate:
            return {sum(S::Estimate, C, {term(2.0, S::MeasurementHat, 1), term(-1.0, S::MeasurementHat, 2)}),
                    sum(S::MeasurementHat, C,
                        {term(1.0, S::PredecessorPosition, 0, true), term(-1.0, S::Estimate, 0, true), term(1.0, S::Estimate)})};
        case StrategyVariant::MeasurementToZero:
            return {sum(S::MeasurementHat, C, {term(1.0, S::PredecessorPosition, 0, true)})};
        case StrategyVariant::MeasurementHold:
            return {sum(S::MeasurementHat, C, hold(S::PredecessorPosition, S::MeasurementHat))};
    }
    return {};
}

std::vector<SignalEquation> vehicle_signal_equations(StrategyVariant v) {
    using S = Signal;
    std::vector<SignalEquation> eqs;
    const bool meas = is_measurement_strategy(v);
    eqs.push_back(sum(S::Error, Role::Loop, {term(1.0, meas ? S::MeasurementHat : S::PredecessorPosition), term(-1.0, S::HeadwayOutput)}));
    for (auto& eq : strategy_signal_equations(v)) eqs.push_back(std::move(eq));
    eqs.push_back(filter(S::Control, Operator::Controller, meas ? S::Error : S::ErrorHat));
    eqs.push_back(filter(S::Position, Operator::Plant, v == StrategyVariant::ErrorHoldControlHold ? S::ControlHat : S::Control));
    eqs.push_back(filter(S::HeadwayOutput, Operator::Headway, S::Position));
    eqs.push_back(sum(S::TrackingError, Role::Loop, {term(1.0, S::PredecessorPosition), term(-1.0, S::HeadwayOutput)}));
    return eqs;
}

std::string_view signal_symbol(Signal s) {
    switch (s) {
        case Signal::PredecessorPosition: return "y_{i-1}";
        case Signal::Estimate: return "η";
        case Signal::MeasurementHat: return "ŷ";
        case Signal::Error: return "e";
        case Signal::ErrorHat: return "ê";
        case Signal::Control: return "u";
        case Signal::ControlHat: return "û";
        case Signal::Position: return "y";
        case Signal::HeadwayOutput: return "w";
        case Signal::TrackingError: return "ζ";
    }
    return "?";
}

std::string to_string(const SignalEquation& eq) {
    auto ref = [](const SignalTerm& t) {
        std::ostringstream os;
        os << signal_symbol(t.signal) << "(k";
        if (t.delay > 0) os << "−" << t.delay;
        os << ")";
        return os.str();
    };
    auto chain = [&](const std::vector<SignalTerm>& ts) {
        std::ostringstream os;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double c = ts[i].coefficient;
            if (i > 0) os << (c < 0 ? " − " : " + ");
            else if (c < 0) os << "−";
            if (std::abs(c) != 1.0) os << std::abs(c);
            os << ref(ts[i]);
        }
        return os.str();
    };
    std::ostringstream os;
    os << signal_symbol(eq.target) << "(k) = ";
    switch (eq.op) {
        case Operator::Controller: return os.str() + "K[" + std::string(signal_symbol(eq.terms[0].signal)) + "](k)";
        case Operator::Plant: return os.str() + "G[" + std::string(signal_symbol(eq.terms[0].signal)) + "](k)";
        case Operator::Headway: return os.str() + "H[" + std::string(signal_symbol(eq.terms[0].signal)) + "](k)";
        case Operator::Sum: break;
    }
    std::vector<SignalTerm> gated, plain;
    for (const auto& t : eq.terms) (t.gated ? gated : plain).push_back(t);
    if (!gated.empty()) {
        os << "θ(k)·";
        if (gated.size() > 1) os << "(" << chain(gated) << ")";
        else os << chain(gated);
        if (!plain.empty()) {
            const std::string rest = chain(plain);
            os << (rest[0] == '-' || rest.rfind("−", 0) == 0 ? " " : " + ") << rest;
        }
    } else {
        os << chain(plain);
    }
    return os.str();
}

VehicleSpec resolve_hooks(const VehicleSpec& spec, std::size_t index, const std::vector<double>& p) {
    if (!spec.hook) return spec;
    if (index >= p.size()) throw InvalidParameterError("hook index outside the link list");
    if (spec.hook->window < 1) throw InvalidParameterError("hook window must be at least 1");
    const std::size_t first = index + 1 >= static_cast<std::size_t>(spec.hook->window) ? index + 1 - spec.hook->window : 0;
    double tau = 0.0;
    for (std::size_t j = first; j <= index; ++j) tau += p[j];
    tau /= static_cast<double>(index - first + 1);
    VehicleSpec out = spec;
    out.K = std::pow(tau, spec.hook->exponent) * spec.K;
    out.hook.reset();
    return out;
}

VehicleRealization build_vehicle_realization(const VehicleSpec& spec, double tol, bool minimal) {
    if (spec.hook) throw InvalidParameterError("parameter hook must be resolved before realization");
    if (spec.epsilon != 0.0) throw InvalidParameterError("only zero standstill distance is supported");
    const StrategyVariant v = spec.strategy.variant;
    const int nv = channel_width(v);
    const auto eqs = vehicle_signal_equations(v);
    const auto init_sigs = compensator_initial_signals(v);
    if (!spec.strategy.initial_values.empty() && spec.strategy.initial_values.size() != init_sigs.size())
        throw InvalidParameterError("strategy '" + std::string(to_string(v)) + "' takes " +
                                    std::to_string(init_sigs.size()) + " initial values");
    if ((spec.G * spec.K).is_strictly_proper() == false && !(spec.G.is_zero() || spec.K.is_zero()))
        throw WellPosednessError("G*K must be strictly proper");

    const TransferFunction H = headway_tf(spec.h);
    auto filter_tf = [&](Operator op) -> const TransferFunction& {
        return op == Operator::Controller ? spec.K : op == Operator::Plant ? spec.G : H;
    };

    // Signal and state bookkeeping.
    std::map<Signal, Eigen::Index> sig_index;
    for (const auto& eq : eqs) sig_index[eq.target] = static_cast<Eigen::Index>(sig_index.size());
    const Eigen::Index ns = static_cast<Eigen::Index>(eqs.size());
    const Eigen::Index ni = nv + 1;
    const Eigen::Index yp_in = nv;

    std::vector<StateSpaceD> filt(eqs.size());
    std::vector<Eigen::Index> filt_offset(eqs.size(), 0);
    Eigen::Index nx = 0;
    for (std::size_t r = 0; r < eqs.size(); ++r) {
        if (eqs[r].op == Operator::Sum) continue;
        filt[r] = ss_realize(filter_tf(eqs[r].op));
        filt_offset[r] = nx;
        nx += filt[r].states();
    }
    std::map<Signal, int> max_delay;
    for (const auto& eq : eqs)
        for (const auto& t : eq.terms)
            if (t.delay > 0) max_delay[t.signal] = std::max(max_delay[t.signal], t.delay);
    for (const auto& [s, d] : init_sigs) max_delay[s] = std::max(max_delay[s], d);
    std::map<std::pair<Signal, int>, Eigen::Index> delay_state;
    for (const auto& [s, d] : max_delay)
        for (int j = 1; j <= d; ++j) delay_state[{s, j}] = nx++;

    auto add_ref = [&](LinExpr& e, double c, Signal s, int delay) {
        if (delay > 0) {
            e.x(delay_state.at({s, delay})) += c;
        } else if (s == Signal::PredecessorPosition) {
            e.in(yp_in) += c;
        } else {
            e.sig(sig_index.at(s)) += c;
        }
    };

    MatrixD Fx = MatrixD::Zero(ns, nx), Fs = MatrixD::Zero(ns, ns), Fin = MatrixD::Zero(ns, ni);
    MatrixD Ux = MatrixD::Zero(nx, nx), Us = MatrixD::Zero(nx, ns), Uin = MatrixD::Zero(nx, ni);
    std::vector<LinExpr> channel;
    for (std::size_t r = 0; r < eqs.size(); ++r) {
        const auto& eq = eqs[r];
        LinExpr target(nx, ns, ni);
        if (eq.op == Operator::Sum) {
            bool has_gate = false;
            LinExpr vj(nx, ns, ni);
            for (const auto& t : eq.terms) {
                if (t.gated) {
                    has_gate = true;
                    add_ref(vj, t.coefficient, t.signal, t.delay);
                } else {
                    add_ref(target, t.coefficient, t.signal, t.delay);
                }
            }
            if (has_gate) {
                target.in(static_cast<Eigen::Index>(channel.size())) += 1.0;
                channel.push_back(std::move(vj));
            }
        } else {
            const StateSpaceD& f = filt[r];
            const Eigen::Index off = filt_offset[r], nf = f.states();
            LinExpr input(nx, ns, ni);
            add_ref(input, 1.0, eq.terms[0].signal, eq.terms[0].delay);
            target.x.segment(off, nf) = f.C.row(0).transpose();
            target.x += f.D(0, 0) * input.x;
            target.sig += f.D(0, 0) * input.sig;
            target.in += f.D(0, 0) * input.in;
            Ux.block(off, off, nf, nf) = f.A;
            Ux.middleRows(off, nf) += f.B * input.x.transpose();
            Us.middleRows(off, nf) += f.B * input.sig.transpose();
            Uin.middleRows(off, nf) += f.B * input.in.transpose();
        }
        Fx.row(r) = target.x.transpose();
        Fs.row(r) = target.sig.transpose();
        Fin.row(r) = target.in.transpose();
    }
    if (static_cast<int>(channel.size()) != nv) throw RealizationError("channel width mismatch in strategy wiring");
    for (const auto& [key, idx] : delay_state) {
        const auto [s, d] = key;
        LinExpr prev(nx, ns, ni);
        add_ref(prev, 1.0, s, d - 1);
        Ux.row(idx) = prev.x.transpose();
        Us.row(idx) = prev.sig.transpose();
        Uin.row(idx) = prev.in.transpose();
    }

    Eigen::FullPivLU<MatrixD> loop(MatrixD::Identity(ns, ns) - Fs);
    if (!loop.isInvertible()) throw WellPosednessError("algebraic loop in the vehicle wiring");
    const MatrixD Sx = loop.solve(Fx), Sin = loop.solve(Fin);
    const MatrixD A = Ux + Us * Sx;
    const MatrixD B = Uin + Us * Sin;

    auto out_row = [&](const LinExpr& e, MatrixD& C, MatrixD& D, Eigen::Index row) {
        C.row(row) = e.x.transpose() + e.sig.transpose() * Sx;
        D.row(row) = e.in.transpose() + e.sig.transpose() * Sin;
    };
    MatrixD Cout(2 + nv, nx), Dout(2 + nv, ni);
    LinExpr y(nx, ns, ni), z(nx, ns, ni);
    add_ref(y, 1.0, Signal::Position, 0);
    add_ref(z, 1.0, Signal::TrackingError, 0);
    out_row(y, Cout, Dout, 0);
    out_row(z, Cout, Dout, 1);
    for (int j = 0; j < nv; ++j) out_row(channel[j], Cout, Dout, 2 + j);

    const double scale = std::max({A.norm(), B.norm(), Cout.norm(), 1.0});
    const double eps = 1e-12 * scale;
    if (B.col(yp_in).cwiseAbs().maxCoeff() > eps)
        throw RealizationError("predecessor position enters the state update directly");
    if (Dout.row(0).cwiseAbs().maxCoeff() > eps) throw WellPosednessError("own position has direct feedthrough");
    if (Dout.row(1).head(nv).cwiseAbs().maxCoeff() > eps)
        throw WellPosednessError("tracking error depends on the channel output without delay");
    if (Dout.bottomRows(nv).leftCols(nv).cwiseAbs().maxCoeff() > eps)
        throw WellPosednessError("delay-free path from channel output to channel input");

    VectorD x0 = VectorD::Zero(nx);
    for (std::size_t j = 0; j < spec.strategy.initial_values.size(); ++j)
        x0(delay_state.at(init_sigs[j])) = spec.strategy.initial_values[j];

    VehicleRealization r;
    r.n_v = nv;
    r.D_zeta = Dout.block(1, yp_in, 1, 1);
    r.D_v = Dout.block(2, yp_in, nv, 1);
    if (!minimal) {
        r.A = A;
        r.B = B.leftCols(nv);
        r.C_y = Cout.row(0);
        r.C_zeta = Cout.row(1);
        r.C_v = Cout.bottomRows(nv);
        r.x0 = x0;
        r.n_x = static_cast<int>(nx);
        return r;
    }
    // Initial values that the link input cannot reach widen the reachable subspace.
    const bool widen = x0.norm() > 0.0;
    MatrixD Bred(nx, nv + (widen ? 1 : 0));
    Bred.leftCols(nv) = B.leftCols(nv);
    if (widen) Bred.col(nv) = x0;
    const auto mr = minimal_realization(StateSpaceD(A, Bred, Cout, MatrixD::Zero(2 + nv, Bred.cols())), tol);
    r.A = mr.system.A;
    r.B = mr.system.B.leftCols(nv);
    r.C_y = mr.system.C.row(0);
    r.C_zeta = mr.system.C.row(1);
    r.C_v = mr.system.C.bottomRows(nv);
    r.x0 = mr.state_map * x0;
    r.n_x = static_cast<int>(r.A.rows());
    return r;
}

VehicleRealization similarity_transform(const VehicleRealization& r, const MatrixD& T) {
    if (T.rows() != r.n_x || T.cols() != r.n_x) throw DimensionError("similarity matrix has the wrong size");
    const MatrixD Ti = T.inverse();
    VehicleRealization out = r;
    out.A = T * r.A * Ti;
    out.B = T * r.B;
    out.C_y = r.C_y * Ti;
    out.C_zeta = r.C_zeta * Ti;
    out.C_v = r.C_v * Ti;
    out.x0 = T * r.x0;
    return out;
}

}  // namespace pmss
