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

// Experiment configuration: JSON schema, parsing and normalized serialization.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmss/montecarlo.hpp"
#include "pmss/mss.hpp"

namespace pmss {

inline constexpr int kSchemaVersion = 1;

struct ScenarioConfig {
    std::string name;
    ChannelModel channel;
};

struct AnalysisOptions {
    int horizon = 400;
    double zero_tol = 1e-6;
    double marginal_band = 0.01;
    double realization_tol = 1e-9;
};

struct SimulationOptions {
    int runs = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    int dump_runs = 0;
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::vector<VehicleSpec> vehicles;
    std::vector<ScenarioConfig> scenarios;
    LeaderProfile leader;
    AnalysisOptions analysis;
    SimulationOptions simulation;
    std::vector<SweepAxis> sweep_axes;
    std::string output_dir;
};

// Throws SchemaError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Normalized form: vehicles listed one by one, polynomials as monic-denominator coefficients.
nlohmann::json to_json(const ExperimentConfig& cfg);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace pmss
