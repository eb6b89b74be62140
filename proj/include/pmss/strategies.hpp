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

// Data-loss compensation strategies and the per-vehicle realization builder.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmss/lti.hpp"

namespace pmss {

enum class StrategyVariant {
    MeasurementEstimate,
    ErrorToZero,
    ErrorHoldControlHold,
    MeasurementToZero,
    MeasurementHold,
};

inline constexpr StrategyVariant kAllStrategies[] = {
    StrategyVariant::MeasurementEstimate, StrategyVariant::ErrorToZero, StrategyVariant::ErrorHoldControlHold,
    StrategyVariant::MeasurementToZero, StrategyVariant::MeasurementHold};

std::string_view to_string(StrategyVariant v);
StrategyVariant parse_strategy(std::string_view name);

// Width of the signal sent over the link.
int channel_width(StrategyVariant v);

struct CompensationStrategy {
    StrategyVariant variant = StrategyVariant::ErrorToZero;
    std::vector<double> initial_values;  // empty means all zero
};

// K is multiplied by tau^exponent, tau being the mean success probability of the
// `window` links ending at this vehicle's own link.
struct ParameterHook {
    int window = 1;
    double exponent = -1.0;
};

struct VehicleSpec {
    TransferFunction G;
    TransferFunction K;
    double h = 0.0;
    CompensationStrategy strategy;
    double epsilon = 0.0;
    std::optional<ParameterHook> hook;
};

// Substitutes the hook of vehicle `index` (0-based) given all link probabilities.
VehicleSpec resolve_hooks(const VehicleSpec& spec, std::size_t index, const std::vector<double>& p);

struct VehicleRealization {
    MatrixD A, B, C_y, C_zeta, D_zeta, C_v, D_v;
    VectorD x0;
    int n_x = 0;
    int n_v = 0;
};

VehicleRealization build_vehicle_realization(const VehicleSpec& spec, double tol = 1e-9, bool minimal = true);

// x -> T x coordinates.
VehicleRealization similarity_transform(const VehicleRealization& r, const MatrixD& T);

// Signal-level description of one vehicle loop.
enum class Signal {
    PredecessorPosition,  // y_{i-1}
    Estimate,             // eta
    MeasurementHat,       // y-hat
    Error,                // e
    ErrorHat,             // e-hat
    Control,              // u
    ControlHat,           // u-hat
    Position,             // y_i
    HeadwayOutput,        // w
    TrackingError,        // zeta
};

enum class Operator { Sum, Controller, Plant, Headway };
enum class Role { Compensator, Loop };

// coefficient * [theta(k) if gated] * signal(k - delay)
struct SignalTerm {
    double coefficient = 1.0;
    Signal signal = Signal::Error;
    int delay = 0;
    bool gated = false;
};

// For filter operators `terms` holds the single input with unit coefficient.
struct SignalEquation {
    Signal target;
    Operator op = Operator::Sum;
    Role role = Role::Loop;
    std::vector<SignalTerm> terms;
};

std::vector<SignalEquation> strategy_signal_equations(StrategyVariant v);
std::vector<SignalEquation> vehicle_signal_equations(StrategyVariant v);

// Delayed signals that carry the compensator initial values, in initial_values order.
std::vector<std::pair<Signal, int>> compensator_initial_signals(StrategyVariant v);

std::string_view signal_symbol(Signal s);
std::string to_string(const SignalEquation& eq);

}  // namespace pmss
