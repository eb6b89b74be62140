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

#include "pmss/platoon.hpp"

using namespace pmss;
using cd = std::complex<double>;

namespace {

VehicleSpec homogeneous(StrategyVariant v) {
    VehicleSpec s;
    s.G = TransferFunction({1.0}, {1.0, -1.0});
    s.K = TransferFunction::from_zpk({0.0, 0.88}, {1.0, -0.79, 0.8}, 0.27);
    s.h = 4.0;
    s.strategy.variant = v;
    return s;
}

// Nearest-neighbour matching of two root sets; returns the largest distance.
double root_match(std::vector<cd> a, std::vector<cd> b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (const auto& r : a) {
        auto it = std::min_element(b.begin(), b.end(), [&](const cd& x, const cd& y) { return std::abs(x - r) < std::abs(y - r); });
        worst = std::max(worst, std::abs(*it - r));
        b.erase(it);
    }
    return worst;
}

}  // namespace

TEST_CASE("channel models validate their parameters") {
    CHECK_THROWS_AS(ChannelModel::independent({0.0}), InvalidModelError);
    CHECK_THROWS_AS(ChannelModel::independent({1.2}), InvalidModelError);
    CHECK_THROWS_AS(ChannelModel::independent({}), InvalidModelError);
    CHECK_THROWS_AS(ChannelModel::joint_pmf({{{1, 1}, 0.7}, {{0, 0}, 0.2}}), InvalidModelError);
    CHECK_THROWS_AS(ChannelModel::joint_pmf({{{1, 1}, 0.8}, {{1, 1}, 0.2}}), InvalidModelError);
    CHECK_THROWS_AS(ChannelModel::joint_pmf({{{1, 0}, 0.8}, {{1, 0}, 0.2}}), InvalidModelError);
    CHECK_THROWS_AS(ChannelModel::joint_pmf({{{1, 0}, 0.5}, {{0, 0}, 0.5}}), InvalidModelError);  // link 2 never delivers
    CHECK_THROWS_AS(ChannelModel::joint_pmf({{{1, 1}, 0.8}, {{0}, 0.2}}), InvalidModelError);
    CHECK_NOTHROW(ChannelModel::joint_pmf({{{1, 1}, 0.8}, {{0, 0}, 0.2}}));
}

TEST_CASE("channel moments") {
    SUBCASE("independent") {
        const auto m = channel_moments(ChannelModel::independent({0.9, 0.8}), {1, 1});
        CHECK(m.P_Theta(0, 0) == doctest::Approx(0.09));
        CHECK(m.P_Theta(1, 1) == doctest::Approx(0.16));
        CHECK(m.P_Theta(0, 1) == 0.0);
        CHECK(m.Upsilon(1, 1) == doctest::Approx(0.8));
    }
    SUBCASE("perfect links") {
        CHECK(channel_moments(ChannelModel::independent({1.0, 1.0}), {1, 1}).P_Theta.norm() == 0.0);
    }
    SUBCASE("correlated pair") {
        const auto c = ChannelModel::joint_pmf({{{1, 1}, 0.8}, {{0, 0}, 0.2}});
        CHECK(c.marginals()[0] == doctest::Approx(0.8));
        CHECK(c.marginals()[1] == doctest::Approx(0.8));
        CHECK(c.covariance()(0, 1) == doctest::Approx(0.16));
        const auto m = channel_moments(c, {2, 1});
        REQUIRE(m.P_Theta.rows() == 3);
        CHECK(m.P_Theta(0, 1) == doctest::Approx(0.16));
        CHECK(m.P_Theta(1, 2) == doctest::Approx(0.16));
        CHECK(m.Upsilon(1, 1) == doctest::Approx(0.8));
        CHECK((m.P_Theta - m.P_Theta.transpose()).norm() == 0.0);
        Eigen::SelfAdjointEigenSolver<MatrixD> es(m.P_Theta);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);
    }
    SUBCASE("independent widths expand to constant blocks") {
        const auto m = channel_moments(ChannelModel::independent({0.6, 0.7}), {2, 2});
        CHECK(m.P_Theta.block(0, 0, 2, 2).isApproxToConstant(0.24));
        CHECK(m.P_Theta.block(0, 2, 2, 2).norm() == 0.0);
    }
    CHECK_THROWS_AS(channel_moments(ChannelModel::independent({0.6, 0.7}), {1}), DimensionError);
}

TEST_CASE("channel sampling") {
    Rng rng(42);
    for (int i = 0; i < 100; ++i) CHECK(sample_channel(ChannelModel::independent({1.0}), rng)[0] == 1);

    const int n = 100000;
    double s = 0.0;
    const auto half = ChannelModel::independent({0.5});
    for (int i = 0; i < n; ++i) s += sample_channel(half, rng)[0];
    CHECK(std::abs(s / n - 0.5) <= 0.005);

    const auto c = ChannelModel::joint_pmf({{{1, 1}, 0.8}, {{0, 0}, 0.2}});
    double s1 = 0, s2 = 0, s12 = 0;
    for (int i = 0; i < n; ++i) {
        const auto b = sample_channel(c, rng);
        s1 += b[0];
        s2 += b[1];
        s12 += b[0] * b[1];
    }
    const double cov = s12 / n - (s1 / n) * (s2 / n);
    CHECK(std::abs(cov - 0.16) <= 0.004);

    Rng a(9), b(9);
    for (int i = 0; i < 50; ++i) CHECK(sample_channel(half, a) == sample_channel(half, b));
}

TEST_CASE("stacked loop structure") {
    const auto spec = homogeneous(StrategyVariant::ErrorHoldControlHold);
    const auto v = build_vehicle_realization(spec);
    const Eigen::Index n = v.n_x;

    SUBCASE("single follower") {
        const auto P = build_platoon({spec}, ChannelModel::independent({0.9}));
        CHECK((P.A - (v.A + 0.9 * v.B * v.C_v)).norm() < 1e-12);
        CHECK((P.B - 0.9 * v.B * v.D_v).norm() < 1e-12);
    }
    SUBCASE("two followers") {
        const auto P = build_platoon({spec, spec}, ChannelModel::independent({0.9, 0.7}));
        REQUIRE(P.states() == 2 * n);
        CHECK((P.A.block(0, 0, n, n) - (v.A + 0.9 * v.B * v.C_v)).norm() < 1e-12);
        CHECK((P.A.block(n, n, n, n) - (v.A + 0.7 * v.B * v.C_v)).norm() < 1e-12);
        CHECK(P.A.block(0, n, n, n).norm() == 0.0);
        CHECK((P.A.block(n, 0, n, n) - 0.7 * v.B * v.D_v * v.C_y).norm() < 1e-12);
        CHECK(P.B.bottomRows(n).norm() == 0.0);
        CHECK(P.D_zeta(1, 0) == 0.0);
        CHECK(P.D_v.bottomRows(v.n_v).norm() == 0.0);
        CHECK((P.C_zeta.block(1, 0, 1, n) - v.D_zeta * v.C_y).norm() < 1e-12);
        CHECK((P.openloop.calA.block(n, n, n, n) - v.A).norm() < 1e-12);
        CHECK(P.openloop.calA.block(n, 0, n, n).norm() == 0.0);
    }
    SUBCASE("block-triangular spectrum") {
        const auto P = build_platoon({spec, spec, spec}, ChannelModel::independent({0.9, 0.8, 0.95}));
        double rmax = 0.0;
        for (double p : {0.9, 0.8, 0.95}) rmax = std::max(rmax, spectral_radius(MatrixD(v.A + p * v.B * v.C_v)));
        CHECK(spectral_radius(P.A) == doctest::Approx(rmax).epsilon(1e-8));
        const auto H = build_platoon({spec, spec, spec}, ChannelModel::independent({0.9, 0.9, 0.9}));
        CHECK(spectral_radius(H.A) == doctest::Approx(0.8554145896210404).epsilon(1e-8));
    }
    SUBCASE("mixed strategies") {
        auto other = homogeneous(StrategyVariant::MeasurementHold);
        const auto P = build_platoon({spec, other}, ChannelModel::independent({0.9, 0.9}));
        CHECK(P.channel_width() == 3);
        CHECK(P.blocks[1].channel_offset == 2);
    }
    CHECK_THROWS_AS(build_platoon({spec, spec}, ChannelModel::independent({0.9, 0.8, 0.7})), DimensionError);
}

TEST_CASE("mean transfer functions") {
    SUBCASE("tracking error map of the double hold at 0.9") {
        const auto P = build_platoon({homogeneous(StrategyVariant::ErrorHoldControlHold)}, ChannelModel::independent({0.9}));
        const auto m11 = ss_minimal(subsystem_tf(P, Subsystem::M11), 1e-9);
        const auto tf = cancel_common_factors(tf_from_ss(m11), 1e-6);
        // reference roots from an exact rational computation (tools/oracle.py)
        CHECK(root_match(tf.zeros(), {1.0, 1.0, -0.79, 0.1}) < 1e-6);
        CHECK(root_match(tf.poles(), {-0.3833864804351653, {0.41898594540706247, 0.6255868278721572},
                                      {0.41898594540706247, -0.6255868278721572}, 0.8554145896210404}) < 1e-9);
        // and the rounded reference factorization
        const double disc = std::sqrt(0.56 - 0.42 * 0.42);
        CHECK(root_match(tf.poles(), {-0.39, 0.85, {0.42, disc}, {0.42, -disc}}) < 0.02);
        CHECK(zero_multiplicity_at_one(subsystem_tf(P, Subsystem::M11)).multiplicity[0] == 2);

        const auto m21 = subsystem_tf(P, Subsystem::M21);
        CHECK(m21.outputs() == 2);
        const auto z = zero_multiplicity_at_one(m21);
        CHECK(z.multiplicity == std::vector<int>{2, 2});
    }
    SUBCASE("to-zero measurement forwards the leader") {
        const auto P = build_platoon({homogeneous(StrategyVariant::MeasurementToZero)}, ChannelModel::independent({0.98}));
        const auto m21 = subsystem_tf(P, Subsystem::M21);
        for (double w : {0.0, 0.7, 2.0}) CHECK(std::abs(ss_eval(m21, std::polar(1.0, w))(0, 0) - cd(1.0)) < 1e-12);
        const auto m11 = subsystem_tf(P, Subsystem::M11);
        CHECK(zero_multiplicity_at_one(m11).multiplicity[0] == 0);
    }
    SUBCASE("perfect links track with two zeros at one") {
        for (auto v : kAllStrategies) {
            const auto P = build_platoon({homogeneous(v), homogeneous(v)}, ChannelModel::independent({1.0, 1.0}));
            const auto m11 = subsystem_tf(P, Subsystem::M11);
            CHECK(ss_eval(m11, cd(1.0)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}
