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
#include "pmss/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pmss {

namespace {

using json = nlohmann::json;

void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key()) && it.key().rfind('_', 0) != 0 && it.key() != "description")
            throw SchemaError(path + "/" + it.key(), "unknown field");
}

const json& req(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(path + "/" + key, std::string("missing required field \"") + key + "\"");
    return *it;
}

const json* opt(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
    return v;
}

long long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
    return j.get<long long>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "/" + std::to_string(i)));
    return out;
}

double probability(const json& j, const std::string& path) {
    const double p = number(j, path);
    if (!(p > 0.0 && p <= 1.0)) throw SchemaError(path, "probability must lie in (0, 1]");
    return p;
}

std::vector<std::complex<double>> root_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of roots");
    std::vector<std::complex<double>> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        if (j[i].is_array()) {
            if (j[i].size() != 2) throw SchemaError(p, "complex root must be [re, im]");
            out.emplace_back(number(j[i][0], p + "/0"), number(j[i][1], p + "/1"));
        } else {
            out.emplace_back(number(j[i], p), 0.0);
        }
    }
    for (const auto& r : out) {
        if (r.imag() == 0.0) continue;
        const auto conj = std::count(out.begin(), out.end(), std::conj(r));
        if (conj != std::count(out.begin(), out.end(), r))
            throw SchemaError(path, "complex roots must come in conjugate pairs");
    }
    return out;
}

TransferFunction parse_tf(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object with num/den or gain/zeros/poles");
    try {
        if (j.contains("num") || j.contains("den")) {
            expect_object(j, path, {"num", "den"});
            const auto num = numbers(req(j, "num", path), path + "/num");
            const auto den = numbers(req(j, "den", path), path + "/den");
            if (num.empty() || den.empty()) throw SchemaError(path, "empty coefficient list");
            return TransferFunction(num, den);
        }
        expect_object(j, path, {"gain", "zeros", "poles"});
        const double gain = number(req(j, "gain", path), path + "/gain");
        const auto* z = opt(j, "zeros");
        const auto zeros = z ? root_list(*z, path + "/zeros") : std::vector<std::complex<double>>{};
        const auto poles = root_list(req(j, "poles", path), path + "/poles");
        return TransferFunction::from_zpk(zeros, poles, gain);
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError(path, e.what());
    }
}

ChannelModel parse_channel(const json& j, const std::string& path, std::size_t N) {
    expect_object(j, path, {"independent", "joint_pmf"});
    try {
        if (const auto* ind = opt(j, "independent")) {
            const std::string p = path + "/independent";
            if (!ind->is_array() || ind->empty()) throw SchemaError(p, "expected a non-empty probability list");
            std::vector<double> probs;
            for (std::size_t i = 0; i < ind->size(); ++i) probs.push_back(probability((*ind)[i], p + "/" + std::to_string(i)));
            if (probs.size() == 1) probs.assign(N, probs[0]);
            if (probs.size() != N) throw SchemaError(p, "needs one probability per follower (or a single value)");
            return ChannelModel::independent(probs);
        }
        const auto& pmf = req(j, "joint_pmf", path);
        const std::string p = path + "/joint_pmf";
        if (!pmf.is_array() || pmf.empty()) throw SchemaError(p, "expected a non-empty outcome list");
        std::vector<JointOutcome> outs;
        for (std::size_t i = 0; i < pmf.size(); ++i) {
            const std::string q = p + "/" + std::to_string(i);
            expect_object(pmf[i], q, {"pattern", "probability"});
            const auto& pat = req(pmf[i], "pattern", q);
            if (!pat.is_string()) throw SchemaError(q + "/pattern", "expected a string of 0/1 characters");
            JointOutcome o;
            for (char c : pat.get<std::string>()) {
                if (c != '0' && c != '1') throw SchemaError(q + "/pattern", "pattern characters must be 0 or 1");
                o.bits.push_back(static_cast<std::uint8_t>(c - '0'));
            }
            if (o.bits.size() != N) throw SchemaError(q + "/pattern", "pattern length must equal the number of followers");
            o.probability = number(req(pmf[i], "probability", q), q + "/probability");
            outs.push_back(std::move(o));
        }
        return ChannelModel::joint_pmf(std::move(outs));
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError(path, e.what());
    }
}

LeaderProfile parse_leader(const json& j, const std::string& path) {
    expect_object(j, path, {"ramp", "piecewise"});
    LeaderProfile L;
    if (const auto* r = opt(j, "ramp")) {
        const std::string p = path + "/ramp";
        expect_object(*r, p, {"slope", "initial_position"});
        L.kind = LeaderProfile::Kind::Ramp;
        L.slope = number(req(*r, "slope", p), p + "/slope");
        if (const auto* x = opt(*r, "initial_position")) L.initial_position = number(*x, p + "/initial_position");
        return L;
    }
    const auto& pw = req(j, "piecewise", path);
    const std::string p = path + "/piecewise";
    expect_object(pw, p, {"segments", "initial_speed", "initial_position"});
    L.kind = LeaderProfile::Kind::Piecewise;
    const auto& segs = req(pw, "segments", p);
    if (!segs.is_array() || segs.empty()) throw SchemaError(p + "/segments", "expected a non-empty segment list");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string q = p + "/segments/" + std::to_string(i);
        expect_object(segs[i], q, {"accel", "duration"});
        LeaderSegment s;
        s.accel = number(req(segs[i], "accel", q), q + "/accel");
        const long long d = integer(req(segs[i], "duration", q), q + "/duration");
        if (d < 0) throw SchemaError(q + "/duration", "must be non-negative");
        s.duration = static_cast<int>(d);
        L.segments.push_back(s);
    }
    if (const auto* v = opt(pw, "initial_speed")) L.initial_speed = number(*v, p + "/initial_speed");
    if (const auto* x = opt(pw, "initial_position")) L.initial_position = number(*x, p + "/initial_position");
    return L;
}

std::vector<VehicleSpec> parse_vehicles(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a non-empty vehicle list");
    std::vector<VehicleSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        expect_object(j[i], p, {"count", "plant", "controller", "headway", "strategy", "initial_values", "hook", "epsilon"});
        VehicleSpec v;
        v.G = parse_tf(req(j[i], "plant", p), p + "/plant");
        v.K = parse_tf(req(j[i], "controller", p), p + "/controller");
        v.h = number(req(j[i], "headway", p), p + "/headway");
        if (v.h < 0.0) throw SchemaError(p + "/headway", "must be non-negative");
        const auto& st = req(j[i], "strategy", p);
        if (!st.is_string()) throw SchemaError(p + "/strategy", "expected a strategy name");
        try {
            v.strategy.variant = parse_strategy(st.get<std::string>());
        } catch (const Error& e) {
            throw SchemaError(p + "/strategy", e.what());
        }
        if (const auto* iv = opt(j[i], "initial_values")) {
            v.strategy.initial_values = numbers(*iv, p + "/initial_values");
            const auto need = compensator_initial_signals(v.strategy.variant).size();
            if (!v.strategy.initial_values.empty() && v.strategy.initial_values.size() != need)
                throw SchemaError(p + "/initial_values", "strategy takes " + std::to_string(need) + " initial values");
        }
        if (const auto* e = opt(j[i], "epsilon")) {
            if (number(*e, p + "/epsilon") != 0.0) throw SchemaError(p + "/epsilon", "only 0 is supported");
        }
        if (const auto* h = opt(j[i], "hook")) {
            const std::string q = p + "/hook";
            expect_object(*h, q, {"window", "exponent"});
            ParameterHook hook;
            if (const auto* w = opt(*h, "window")) hook.window = static_cast<int>(integer(*w, q + "/window"));
            if (hook.window < 1) throw SchemaError(q + "/window", "must be at least 1");
            if (const auto* x = opt(*h, "exponent")) hook.exponent = number(*x, q + "/exponent");
            v.hook = hook;
        }
        long long count = 1;
        if (const auto* c = opt(j[i], "count")) count = integer(*c, p + "/count");
        if (count < 1 || count > 1000) throw SchemaError(p + "/count", "must lie in [1, 1000]");
        out.insert(out.end(), static_cast<std::size_t>(count), v);
    }
    return out;
}

std::vector<SweepAxis> parse_sweep(const json& j, const std::string& path, std::size_t N) {
    expect_object(j, path, {"axes"});
    const auto& axes = req(j, "axes", path);
    if (!axes.is_array() || axes.empty()) throw SchemaError(path + "/axes", "expected a non-empty axis list");
    if (axes.size() > 2) throw SchemaError(path + "/axes", "at most two probability axes are supported");
    std::vector<SweepAxis> out;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        const std::string p = path + "/axes/" + std::to_string(a);
        expect_object(axes[a], p, {"links", "values", "range"});
        SweepAxis ax;
        const auto& links = req(axes[a], "links", p);
        if (!links.is_array() || links.empty()) throw SchemaError(p + "/links", "expected a non-empty list of link numbers");
        for (std::size_t i = 0; i < links.size(); ++i) {
            const long long l = integer(links[i], p + "/links/" + std::to_string(i));
            if (l < 1 || static_cast<std::size_t>(l) > N) throw SchemaError(p + "/links/" + std::to_string(i), "link number out of range");
            ax.links.push_back(static_cast<std::size_t>(l - 1));
        }
        if (const auto* v = opt(axes[a], "values")) {
            if (!v->is_array() || v->empty()) throw SchemaError(p + "/values", "expected a non-empty list");
            for (std::size_t i = 0; i < v->size(); ++i) ax.values.push_back(probability((*v)[i], p + "/values/" + std::to_string(i)));
        } else {
            const auto& r = req(axes[a], "range", p);
            const std::string q = p + "/range";
            expect_object(r, q, {"start", "stop", "count"});
            const double lo = number(req(r, "start", q), q + "/start");
            const double hi = number(req(r, "stop", q), q + "/stop");
            const long long n = integer(req(r, "count", q), q + "/count");
            if (n < 1 || n > 100000) throw SchemaError(q + "/count", "must lie in [1, 100000]");
            for (long long i = 0; i < n; ++i) {
                const double v = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
                if (!(v > 0.0 && v <= 1.0)) throw SchemaError(q, "grid values must lie in (0, 1]");
                ax.values.push_back(v);
            }
        }
        out.push_back(std::move(ax));
    }
    return out;
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    return true;
}

json tf_json(const TransferFunction& tf) { return {{"num", tf.numerator()}, {"den", tf.denominator()}}; }

json channel_json(const ChannelModel& c) {
    if (c.is_independent()) return {{"independent", c.marginals()}};
    json outs = json::array();
    for (const auto& o : c.outcomes()) {
        std::string pat;
        for (auto b : o.bits) pat.push_back(static_cast<char>('0' + b));
        outs.push_back({{"pattern", pat}, {"probability", o.probability}});
    }
    return {{"joint_pmf", outs}};
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    expect_object(j, "", {"schema_version", "vehicles", "channel", "scenarios", "leader", "analysis", "simulation", "sweep",
                          "output_dir"});
    ExperimentConfig cfg;
    cfg.schema_version = static_cast<int>(integer(req(j, "schema_version", ""), "/schema_version"));
    if (cfg.schema_version != kSchemaVersion)
        throw SchemaError("/schema_version", "unsupported schema version " + std::to_string(cfg.schema_version));
    cfg.vehicles = parse_vehicles(req(j, "vehicles", ""), "/vehicles");
    const std::size_t N = cfg.vehicles.size();

    const json* ch = opt(j, "channel");
    const json* sc = opt(j, "scenarios");
    if (ch && sc) throw SchemaError("/scenarios", "give either \"channel\" or \"scenarios\", not both");
    if (!ch && !sc) throw SchemaError("/channel", "missing required field \"channel\"");
    if (ch) {
        cfg.scenarios.push_back({"default", parse_channel(*ch, "/channel", N)});
    } else {
        if (!sc->is_array() || sc->empty()) throw SchemaError("/scenarios", "expected a non-empty scenario list");
        std::set<std::string> names;
        for (std::size_t i = 0; i < sc->size(); ++i) {
            const std::string p = "/scenarios/" + std::to_string(i);
            expect_object((*sc)[i], p, {"name", "channel"});
            const auto& nm = req((*sc)[i], "name", p);
            if (!nm.is_string() || !valid_name(nm.get<std::string>()))
                throw SchemaError(p + "/name", "name must be non-empty and use only letters, digits, '_', '-', '.'");
            if (!names.insert(nm.get<std::string>()).second) throw SchemaError(p + "/name", "duplicate scenario name");
            cfg.scenarios.push_back({nm.get<std::string>(), parse_channel(req((*sc)[i], "channel", p), p + "/channel", N)});
        }
    }

    if (const auto* l = opt(j, "leader")) cfg.leader = parse_leader(*l, "/leader");
    if (const auto* a = opt(j, "analysis")) {
        expect_object(*a, "/analysis", {"horizon", "zero_tol", "marginal_band", "realization_tol"});
        if (const auto* h = opt(*a, "horizon")) cfg.analysis.horizon = static_cast<int>(integer(*h, "/analysis/horizon"));
        if (cfg.analysis.horizon < 1) throw SchemaError("/analysis/horizon", "must be at least 1");
        if (const auto* t = opt(*a, "zero_tol")) cfg.analysis.zero_tol = number(*t, "/analysis/zero_tol");
        if (const auto* b = opt(*a, "marginal_band")) cfg.analysis.marginal_band = number(*b, "/analysis/marginal_band");
        if (const auto* r = opt(*a, "realization_tol")) cfg.analysis.realization_tol = number(*r, "/analysis/realization_tol");
        if (!(cfg.analysis.zero_tol > 0)) throw SchemaError("/analysis/zero_tol", "must be positive");
        if (!(cfg.analysis.realization_tol > 0)) throw SchemaError("/analysis/realization_tol", "must be positive");
        if (!(cfg.analysis.marginal_band >= 0)) throw SchemaError("/analysis/marginal_band", "must be non-negative");
    }
    if (const auto* s = opt(j, "simulation")) {
        expect_object(*s, "/simulation", {"runs", "seed", "threads", "dump_runs"});
        if (const auto* r = opt(*s, "runs")) cfg.simulation.runs = static_cast<int>(integer(*r, "/simulation/runs"));
        if (cfg.simulation.runs < 1) throw SchemaError("/simulation/runs", "must be at least 1");
        if (const auto* x = opt(*s, "seed")) {
            if (!x->is_number_unsigned()) throw SchemaError("/simulation/seed", "expected a non-negative integer");
            cfg.simulation.seed = x->get<std::uint64_t>();
        }
        if (const auto* t = opt(*s, "threads")) {
            const long long n = integer(*t, "/simulation/threads");
            if (n < 0) throw SchemaError("/simulation/threads", "must be non-negative");
            cfg.simulation.threads = static_cast<unsigned>(n);
        }
        if (const auto* d = opt(*s, "dump_runs")) cfg.simulation.dump_runs = static_cast<int>(integer(*d, "/simulation/dump_runs"));
        if (cfg.simulation.dump_runs < 0) throw SchemaError("/simulation/dump_runs", "must be non-negative");
    }
    if (const auto* sw = opt(j, "sweep")) cfg.sweep_axes = parse_sweep(*sw, "/sweep", N);
    if (const auto* o = opt(j, "output_dir")) {
        if (!o->is_string()) throw SchemaError("/output_dir", "expected a path string");
        cfg.output_dir = o->get<std::string>();
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("", "cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    json vs = json::array();
    for (const auto& v : cfg.vehicles) {
        json e{{"plant", tf_json(v.G)},
               {"controller", tf_json(v.K)},
               {"headway", v.h},
               {"strategy", std::string(to_string(v.strategy.variant))}};
        if (!v.strategy.initial_values.empty()) e["initial_values"] = v.strategy.initial_values;
        if (v.hook) e["hook"] = {{"window", v.hook->window}, {"exponent", v.hook->exponent}};
        vs.push_back(std::move(e));
    }
    j["vehicles"] = vs;
    json sc = json::array();
    for (const auto& s : cfg.scenarios) sc.push_back({{"name", s.name}, {"channel", channel_json(s.channel)}});
    j["scenarios"] = sc;
    if (cfg.leader.kind == LeaderProfile::Kind::Ramp) {
        j["leader"] = {{"ramp", {{"slope", cfg.leader.slope}, {"initial_position", cfg.leader.initial_position}}}};
    } else {
        json segs = json::array();
        for (const auto& s : cfg.leader.segments) segs.push_back({{"accel", s.accel}, {"duration", s.duration}});
        j["leader"] = {{"piecewise",
                        {{"segments", segs},
                         {"initial_speed", cfg.leader.initial_speed},
                         {"initial_position", cfg.leader.initial_position}}}};
    }
    j["analysis"] = {{"horizon", cfg.analysis.horizon},
                     {"zero_tol", cfg.analysis.zero_tol},
                     {"marginal_band", cfg.analysis.marginal_band},
                     {"realization_tol", cfg.analysis.realization_tol}};
    j["simulation"] = {{"runs", cfg.simulation.runs},
                       {"seed", cfg.simulation.seed},
                       {"threads", cfg.simulation.threads},
                       {"dump_runs", cfg.simulation.dump_runs}};
    if (!cfg.sweep_axes.empty()) {
        json axes = json::array();
        for (const auto& ax : cfg.sweep_axes) {
            json links = json::array();
            for (auto l : ax.links) links.push_back(l + 1);
            axes.push_back({{"links", links}, {"values", ax.values}});
        }
        j["sweep"] = {{"axes", axes}};
    }
    if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir;
    return j;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_json(a) == to_json(b); }

}  // namespace pmss
