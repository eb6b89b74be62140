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

#include <random>

#include "pmss/moments.hpp"

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

PlatoonRealization one(StrategyVariant v, double p) {
    return build_platoon({homogeneous(v)}, ChannelModel::independent({p}));
}

VectorD ramp(double slope, int horizon) {
    VectorD y(horizon + 1);
    for (int k = 0; k <= horizon; ++k) y(k) = slope * k;
    return y;
}

MatrixD random_matrix(std::mt19937_64& g, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> nd;
    MatrixD m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = nd(g);
    return m;
}

}  // namespace

TEST_CASE("vectorization identities") {
    std::mt19937_64 g(5);
    const MatrixD A = random_matrix(g, 4, 4), P = random_matrix(g, 4, 4);
    CHECK((vec(A * P * A.transpose()) - kron(A, A) * vec(P)).norm() < 1e-10);
    const MatrixD M = random_matrix(g, 3, 3), N = random_matrix(g, 3, 3);
    CHECK((vec(M.cwiseProduct(N)) - vec(M).asDiagonal() * vec(N)).norm() < 1e-12);
    CHECK((unvec(vec(M), 3) - M).norm() == 0.0);
    CHECK_THROWS_AS(unvec(VectorD::Ones(5), 2), DimensionError);
}

TEST_CASE("delta matrix") {
    VehicleRealization v;
    v.A = MatrixD::Constant(1, 1, 0.5);
    v.B = MatrixD::Constant(1, 1, 2.0);
    v.C_y = MatrixD::Constant(1, 1, 1.0);
    v.C_zeta = MatrixD::Constant(1, 1, -1.0);
    v.D_zeta = MatrixD::Constant(1, 1, 1.0);
    v.C_v = MatrixD::Constant(1, 1, 3.0);
    v.D_v = MatrixD::Constant(1, 1, 1.0);
    v.x0 = VectorD::Zero(1);
    v.n_x = v.n_v = 1;
    const auto P = assemble_platoon({v}, ChannelModel::independent({0.7}));
    const MatrixD D = delta_matrix(P);
    REQUIRE(D.rows() == 1);
    CHECK(D(0, 0) == doctest::Approx(0.7 * 0.3 * 4.0 * 9.0));

    CHECK(delta_matrix(one(StrategyVariant::ErrorHoldControlHold, 1.0)).norm() == 0.0);

    SUBCASE("sparse assembly equals the dense formula") {
        const auto Q = build_platoon({homogeneous(StrategyVariant::ErrorHoldControlHold), homogeneous(StrategyVariant::MeasurementHold)},
                                     ChannelModel::joint_pmf({{{1, 1}, 0.7}, {{1, 0}, 0.1}, {{0, 1}, 0.05}, {{0, 0}, 0.15}}));
        const MatrixD dense = kron(Q.calB, Q.calB) * vec(Q.moments.P_Theta).asDiagonal() * kron(Q.C_v, Q.C_v);
        CHECK((delta_matrix(Q) - dense).norm() < 1e-12 * std::max(1.0, dense.norm()));
    }
    SUBCASE("mean-square radius of the single follower") {
        // reference values from the independent signal-level model in tools/oracle.py
        CHECK(spectral_radius(mean_square_matrix(one(StrategyVariant::ErrorHoldControlHold, 0.9))) ==
              doctest::Approx(0.8490532975835255).epsilon(1e-9));
        CHECK(spectral_radius(mean_square_matrix(one(StrategyVariant::ErrorHoldControlHold, 0.8))) ==
              doctest::Approx(1.016160909355874).epsilon(1e-9));
        CHECK(spectral_radius(mean_square_matrix(one(StrategyVariant::MeasurementHold, 0.95))) ==
              doctest::Approx(0.7294242608948818).epsilon(1e-9));
        CHECK(spectral_radius(mean_square_matrix(one(StrategyVariant::ErrorToZero, 0.95))) ==
              doctest::Approx(0.7259238099149469).epsilon(1e-9));
        CHECK(spectral_radius(mean_square_matrix(one(StrategyVariant::MeasurementEstimate, 0.47))) ==
              doctest::Approx(1.2995551405198325).epsilon(1e-9));
    }
    CHECK_THROWS_AS(delta_matrix(one(StrategyVariant::ErrorHoldControlHold, 0.9), 100.0), GuardError);
}

TEST_CASE("trajectory against the signal-level reference") {
    const auto spec = homogeneous(StrategyVariant::ErrorHoldControlHold);
    const auto P = build_platoon({spec, spec}, ChannelModel::independent({0.7, 0.6}));
    const auto t = moment_trajectory(P, ramp(35.0, 6), 6);
    const double mu[7][2] = {{0.0, 0.0},           {35.0, 0.0},          {70.0, 0.0},
                             {81.8475, 4.6305},    {69.18642500000001, 17.867115},
                             {38.54048799999998, 39.3351714}, {7.036681417500034, 62.03463055649999}};
    const double var[7][3] = {{0, 0, 0},
                              {0, 0, 0},
                              {0, 0, 0},
                              {557.9173687500015, -111.58347375, 22.316694750000007},
                              {1487.7691792818769, -383.7225325263753, 108.26093047927509},
                              {1994.6487245370934, -534.1647851911434, 196.1783642425528},
                              {1829.0867224506515, -479.7804062826823, 323.8675302972856}};
    for (int k = 0; k <= 6; ++k) {
        CAPTURE(k);
        CHECK(t.mu_zeta[k](0) == doctest::Approx(mu[k][0]).epsilon(1e-10));
        CHECK(t.mu_zeta[k](1) == doctest::Approx(mu[k][1]).epsilon(1e-10));
        CHECK(t.P_zeta[k](0, 0) == doctest::Approx(var[k][0]).epsilon(1e-9).scale(1.0));
        CHECK(t.P_zeta[k](0, 1) == doctest::Approx(var[k][1]).epsilon(1e-9).scale(1.0));
        CHECK(t.P_zeta[k](1, 1) == doctest::Approx(var[k][2]).epsilon(1e-9).scale(1.0));
        CHECK((t.P_zeta[k] - P.C_zeta * t.P_x[k] * P.C_zeta.transpose()).norm() == 0.0);
    }
}

TEST_CASE("matrix and vectorized covariance recursions agree") {
    const auto spec = homogeneous(StrategyVariant::ErrorHoldControlHold);
    const auto P = build_platoon({spec, homogeneous(StrategyVariant::MeasurementEstimate)},
                                 ChannelModel::joint_pmf({{{1, 1}, 0.8}, {{0, 1}, 0.1}, {{0, 0}, 0.1}}));
    const int T = 50;
    const auto t = moment_trajectory(P, ramp(3.0, T), T);
    const MatrixD L = mean_square_matrix(P);
    VectorD X = VectorD::Zero(P.states() * P.states());
    for (int k = 0; k < T; ++k) {
        const VectorD& mv = t.mu_v[k];
        const MatrixD S = P.calB * P.moments.P_Theta.cwiseProduct(mv * mv.transpose()) * P.calB.transpose();
        X = L * X + vec(S);
        const MatrixD Px = unvec(X, P.states());
        CHECK((Px - t.P_x[k + 1]).norm() <= 1e-10 * std::max(1.0, Px.norm()));
        Eigen::SelfAdjointEigenSolver<MatrixD> es(t.P_x[k + 1]);
        CHECK(es.eigenvalues().minCoeff() >= -1e-9 * std::max(1.0, Px.norm()));
    }
}

TEST_CASE("qualitative moment behaviour") {
    SUBCASE("perfect links track a ramp without variance") {
        const auto t = moment_trajectory(one(StrategyVariant::ErrorHoldControlHold, 1.0), ramp(35.0, 400), 400);
        CHECK(std::abs(t.mu_zeta[400](0)) < 1e-8);
        for (const auto& Pz : t.P_zeta) CHECK(Pz.norm() == 0.0);
    }
    SUBCASE("variance diverges at 0.8") {
        const auto t = moment_trajectory(one(StrategyVariant::ErrorHoldControlHold, 0.8), ramp(35.0, 400), 400);
        CHECK(t.P_zeta[400](0, 0) > 10.0 * t.P_zeta[200](0, 0));
    }
    SUBCASE("to-zero measurement never settles") {
        const auto t = mean_recursion(one(StrategyVariant::MeasurementToZero, 0.98), ramp(35.0, 2000), 2000);
        CHECK(t.mu_zeta[2000](0) == doctest::Approx(1400.0).epsilon(1e-9));
        CHECK(t.mu_zeta[2000](0) - t.mu_zeta[1000](0) == doctest::Approx(700.0).epsilon(1e-6));
    }
    SUBCASE("initial mean is configurable") {
        const auto P = one(StrategyVariant::ErrorToZero, 0.9);
        VectorD x0 = VectorD::Ones(P.states());
        const auto t = mean_recursion(P, ramp(0.0, 3), 3, x0);
        CHECK((t.mu_x[0] - x0).norm() == 0.0);
        CHECK((t.mu_x[1] - P.A * x0).norm() < 1e-14);
    }
}

TEST_CASE("stationary values") {
    SUBCASE("double integral action gives zero limits") {
        const auto P = one(StrategyVariant::ErrorHoldControlHold, 0.9);
        const auto m = stationary_mean(P, 35.0);
        CHECK(m.converges);
        CHECK(m.multiplicity == std::vector<int>{2});
        CHECK(m.value(0) == 0.0);
        const auto c = stationary_covariance(P, 35.0);
        CHECK(c.converges);
        CHECK(c.value(0, 0) == 0.0);
        const auto t = moment_trajectory(P, ramp(35.0, 2000), 2000);
        CHECK(std::abs(t.mu_zeta[2000](0)) < 1e-6);
        CHECK(std::abs(t.P_zeta[2000](0, 0)) < 1e-6);
    }
    SUBCASE("held measurement settles at a nonzero offset") {
        const auto P = one(StrategyVariant::MeasurementHold, 0.95);
        const auto m = stationary_mean(P, 35.0);
        CHECK(m.converges);
        CHECK(m.multiplicity == std::vector<int>{1});
        CHECK(m.value(0) == doctest::Approx(1.8421052631747443).epsilon(1e-6));
        CHECK(m.value(0) == doctest::Approx(35.0 / 19.0).epsilon(1e-9));
        const auto c = stationary_covariance(P, 35.0);
        CHECK(c.converges);
        CHECK(c.value(0, 0) == doctest::Approx(173.08547090751378).epsilon(1e-6));
        const auto t = moment_trajectory(P, ramp(35.0, 2000), 2000);
        CHECK(t.mu_zeta[2000](0) == doctest::Approx(m.value(0)).epsilon(1e-6));
        CHECK(t.P_zeta[2000](0, 0) == doctest::Approx(c.value(0, 0)).epsilon(1e-6));
    }
    SUBCASE("stationary leader") {
        const auto P = one(StrategyVariant::MeasurementHold, 0.95);
        CHECK(stationary_mean(P, 0.0).value.norm() == 0.0);
        CHECK(stationary_covariance(P, 0.0).value.norm() == 0.0);
    }
    SUBCASE("divergence is flagged, not thrown") {
        CHECK_FALSE(stationary_mean(one(StrategyVariant::MeasurementToZero, 0.98), 35.0).converges);
        CHECK_FALSE(stationary_covariance(one(StrategyVariant::ErrorHoldControlHold, 0.8), 35.0).converges);
        CHECK_FALSE(stationary_mean(one(StrategyVariant::ErrorHoldControlHold, 0.47), 35.0).converges);
    }
}
