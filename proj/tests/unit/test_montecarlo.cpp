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
#include <doctest.h>

#include "pmss/montecarlo.hpp"

using namespace pmss;

namespace {

VehicleSpec homogeneous(StrategyVariant v) {
    VehicleSpec s;
    s.G = TransferFunction({1.0}, {1.0, -1.0});
    s.K = TransferFunction::from_zpk({0.0, 0.88}, {1.0, -0.79, 0.8}, 0.27);
    s.h = 4.0;
    s.strategy.variant = v;
    return s;
}

LeaderProfile ramp_profile(double slope) {
    LeaderProfile L;
    L.slope = slope;
    return L;
}

}  // namespace

TEST_CASE("leader profiles") {
    const auto r = leader_trajectory(ramp_profile(35.0), 3);
    REQUIRE(r.y0.size() == 4);
    CHECK(r.y0(0) == 0.0);
    CHECK(r.y0(1) == 35.0);
    CHECK(r.y0(3) == 105.0);
    CHECK(r.final_speed() == 35.0);

    LeaderProfile L;
    L.kind = LeaderProfile::Kind::Piecewise;
    L.initial_speed = 1.0;
    L.segments = {{1.0, 2}, {-2.0, 3}};
    const auto p = leader_trajectory(L, 8);
    CHECK(p.m0.minCoeff() >= 0.0);
    CHECK(p.final_speed() == 0.0);
    for (Eigen::Index k = 1; k < p.y0.size(); ++k) CHECK(p.y0(k) >= p.y0(k - 1));

    L.segments.clear();
    CHECK_THROWS_AS(leader_trajectory(L, 8), InvalidParameterError);
}

TEST_CASE("single runs") {
    const auto s = homogeneous(StrategyVariant::ErrorHoldControlHold);
    const auto y0 = leader_trajectory(ramp_profile(35.0), 60).y0;
    SUBCASE("perfect links reproduce the mean recursion") {
        const auto P = build_platoon({s, s, s}, ChannelModel::independent({1.0, 1.0, 1.0}));
        const auto run = simulate_run(P, y0, 60, 7);
        const auto m = mean_recursion(P, y0, 60);
        const double tol = 1e-12 * y0.cwiseAbs().maxCoeff();
        for (int k = 0; k <= 60; ++k)
            for (int i = 0; i < 3; ++i) CHECK(std::abs(run.zeta(k, i) - m.mu_zeta[k](i)) <= tol);
    }
    SUBCASE("a seed fixes the run") {
        const auto P = build_platoon({s, s}, ChannelModel::independent({0.7, 0.7}));
        const auto a = simulate_run(P, y0, 60, 42), b = simulate_run(P, y0, 60, 42), c = simulate_run(P, y0, 60, 43);
        CHECK(a.zeta == b.zeta);
        CHECK(a.y == b.y);
        CHECK(a.zeta != c.zeta);
    }
    SUBCASE("signal equations match the realization") {
        const StrategyVariant kinds[] = {StrategyVariant::ErrorHoldControlHold, StrategyVariant::MeasurementToZero,
                                         StrategyVariant::MeasurementHold, StrategyVariant::ErrorToZero,
                                         StrategyVariant::MeasurementEstimate};
        std::vector<VehicleSpec> specs;
        for (auto v : kinds) specs.push_back(homogeneous(v));
        specs[0].strategy.initial_values = {0.5, -1.0};
        specs[4].strategy.initial_values = {2.0, 1.0};
        const auto ch = ChannelModel::independent({0.6, 0.7, 0.8, 0.9, 0.5});
        const auto P = build_platoon(specs, ch);
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto a = simulate_run(P, y0, 60, seed);
            const auto b = simulate_signal_level(specs, ch, y0, 60, seed);
            CHECK((a.zeta - b.zeta).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + b.zeta.cwiseAbs().maxCoeff()));
            CHECK((a.y - b.y).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + b.y.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("path enumeration") {
    const auto s = homogeneous(StrategyVariant::ErrorHoldControlHold);
    SUBCASE("one follower, five steps") {
        const auto P = build_platoon({s}, ChannelModel::independent({0.5}));
        VectorD y0(6);
        y0 << 0.0, 1.0, 3.0, 2.0, 5.0, 4.5;
        const auto e = enumerate_exact(P, y0, 5);
        CHECK(e.paths == 32);
        const auto m = moment_trajectory(P, y0, 5);
        for (int k = 0; k <= 5; ++k) {
            CHECK(e.mu_zeta[k](0) == doctest::Approx(m.mu_zeta[k](0)).epsilon(1e-10).scale(1.0));
            CHECK(e.P_zeta[k](0, 0) == doctest::Approx(m.P_zeta[k](0, 0)).epsilon(1e-10).scale(1.0));
        }
    }
    SUBCASE("correlated links") {
        // brute force over the two-outcome channel in tools/oracle.py
        const auto P = build_platoon({s, homogeneous(StrategyVariant::MeasurementHold)},
                                     ChannelModel::joint_pmf({{{1, 1}, 0.8}, {{0, 0}, 0.2}}));
        const VectorD y0 = leader_trajectory(ramp_profile(35.0), 6).y0;
        const auto e = enumerate_exact(P, y0, 6);
        CHECK(e.paths == 64);
        CHECK(e.mu_zeta[3](0) == doctest::Approx(74.76).epsilon(1e-10));
        CHECK(e.mu_zeta[3](1) == doctest::Approx(6.048).epsilon(1e-10));
        CHECK(e.mu_zeta[6](0) == doctest::Approx(5.139180479999961).epsilon(1e-10));
        CHECK(e.mu_zeta[6](1) == doctest::Approx(51.75840902400002).epsilon(1e-10));
        CHECK(e.P_zeta[6](0, 0) == doctest::Approx(1012.3335603567838).epsilon(1e-10));
        CHECK(e.P_zeta[6](0, 1) == doctest::Approx(-390.5297041079822).epsilon(1e-10));
        CHECK(e.P_zeta[6](1, 1) == doctest::Approx(227.32237912109395).epsilon(1e-10));
        const auto m = moment_trajectory(P, y0, 6);
        for (int k = 0; k <= 6; ++k) {
            CHECK((e.mu_zeta[k] - m.mu_zeta[k]).cwiseAbs().maxCoeff() <= 1e-9);
            CHECK((e.P_zeta[k] - m.P_zeta[k]).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
    SUBCASE("guard") {
        const auto P = build_platoon({s, s, s}, ChannelModel::independent({0.5, 0.5, 0.5}));
        const VectorD y0 = leader_trajectory(ramp_profile(1.0), 10).y0;
        CHECK_THROWS_AS(enumerate_exact(P, y0, 10, 1e6), GuardError);
    }
}

TEST_CASE("ensembles") {
    const auto s = homogeneous(StrategyVariant::ErrorHoldControlHold);
    const auto y0 = leader_trajectory(ramp_profile(35.0), 100).y0;
    SUBCASE("no erasures, no spread") {
        const auto P = build_platoon({s, s}, ChannelModel::independent({1.0, 1.0}));
        const auto e = ensemble_stats(P, y0, 100, 10, 5);
        CHECK(e.runs == 10);
        CHECK(e.var.cwiseAbs().maxCoeff() <= 1e-16 * (1.0 + e.mean.squaredNorm()));
    }
    SUBCASE("thread count does not change the numbers") {
        const auto P = build_platoon({s, s}, ChannelModel::independent({0.9, 0.9}));
        const auto a = ensemble_stats(P, y0, 100, 300, 11, 1);
        const auto b = ensemble_stats(P, y0, 100, 300, 11, 4);
        CHECK(a.mean == b.mean);
        CHECK(a.var == b.var);
    }
    SUBCASE("one run has no variance estimate") {
        const auto P = build_platoon({s}, ChannelModel::independent({0.9}));
        const auto e = ensemble_stats(P, y0, 100, 1, 3);
        CHECK(std::isnan(e.var(50, 0)));
    }
    SUBCASE("standard error scales with the run count") {
        // held measurements: light tails, so sample variances settle quickly
        const auto P = build_platoon({homogeneous(StrategyVariant::MeasurementHold)}, ChannelModel::independent({0.95}));
        const auto half = ensemble_stats(P, y0, 100, 8000, 21);
        const auto full = ensemble_stats(P, y0, 100, 16000, 22);
        const double r = half.se_mean.col(0).tail(51).squaredNorm() / full.se_mean.col(0).tail(51).squaredNorm();
        CHECK(r == doctest::Approx(2.0).epsilon(0.1));
        CHECK(agreement_fraction(full, moment_trajectory(P, y0, 100)) >= 0.95);
    }
    CHECK_THROWS_AS(ensemble_stats(build_platoon({s}, ChannelModel::independent({0.9})), y0, 100, 0, 1),
                    InvalidParameterError);
}
