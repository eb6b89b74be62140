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

#include "pmss/strategies.hpp"

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

// Loop closed with a perfect link: v~ = v.
StateSpaceD perfect_link(const VehicleRealization& r, const MatrixD& C) {
    const MatrixD A = r.A + r.B * r.C_v;
    const MatrixD B = r.B * r.D_v;
    MatrixD D = MatrixD::Zero(C.rows(), 1);
    if (&C == &r.C_zeta) D = r.D_zeta;
    return StateSpaceD(A, B, C, D);
}

double mean_radius(const VehicleRealization& r, double p) { return spectral_radius(MatrixD(r.A + p * r.B * r.C_v)); }

}  // namespace

TEST_CASE("strategy names") {
    for (auto v : kAllStrategies) CHECK(parse_strategy(to_string(v)) == v);
    CHECK(to_string(StrategyVariant::ErrorHoldControlHold) == "error_hold_control_hold");
    CHECK(to_string(StrategyVariant::MeasurementEstimate) == "measurement_estimate");
    CHECK_THROWS_AS(parse_strategy("hold_everything"), InvalidParameterError);
    for (auto v : kAllStrategies) CHECK(channel_width(v) == (v == StrategyVariant::ErrorHoldControlHold ? 2 : 1));
}

TEST_CASE("compensator difference equations") {
    auto render = [](StrategyVariant v) {
        std::vector<std::string> out;
        for (const auto& e : strategy_signal_equations(v)) out.push_back(to_string(e));
        return out;
    };
    CHECK(render(StrategyVariant::ErrorToZero) == std::vector<std::string>{"ê(k) = θ(k)·e(k)"});
    CHECK(render(StrategyVariant::ErrorHoldControlHold) ==
          std::vector<std::string>{"ê(k) = θ(k)·(e(k) − ê(k−1)) + ê(k−1)", "û(k) = θ(k)·(u(k) − u(k−1)) + u(k−1)"});
    CHECK(render(StrategyVariant::MeasurementEstimate) ==
          std::vector<std::string>{"η(k) = 2ŷ(k−1) − ŷ(k−2)", "ŷ(k) = θ(k)·(y_{i-1}(k) − η(k)) + η(k)"});
    CHECK(render(StrategyVariant::MeasurementToZero) == std::vector<std::string>{"ŷ(k) = θ(k)·y_{i-1}(k)"});
    CHECK(render(StrategyVariant::MeasurementHold) ==
          std::vector<std::string>{"ŷ(k) = θ(k)·(y_{i-1}(k) − ŷ(k−1)) + ŷ(k−1)"});
    CHECK(compensator_initial_signals(StrategyVariant::ErrorHoldControlHold).size() == 2);
    CHECK(compensator_initial_signals(StrategyVariant::MeasurementEstimate).size() == 2);
    CHECK(compensator_initial_signals(StrategyVariant::ErrorToZero).empty());
}

TEST_CASE("realization structure per strategy") {
    SUBCASE("error to zero sends the whole error") {
        const auto r = build_vehicle_realization(homogeneous(StrategyVariant::ErrorToZero));
        CHECK(r.n_v == 1);
        CHECK(r.D_v(0, 0) == doctest::Approx(1.0));
        CHECK((r.C_v - r.C_zeta).norm() < 1e-12);
    }
    SUBCASE("two sub-signals for the double hold") {
        const auto r = build_vehicle_realization(homogeneous(StrategyVariant::ErrorHoldControlHold));
        CHECK(r.n_v == 2);
        CHECK(r.C_v.rows() == 2);
        CHECK(r.B.cols() == 2);
    }
    SUBCASE("to-zero measurement forwards the raw position") {
        const auto r = build_vehicle_realization(homogeneous(StrategyVariant::MeasurementToZero));
        CHECK(r.C_v.norm() < 1e-12);
        CHECK(r.D_v(0, 0) == doctest::Approx(1.0));
    }
    for (auto v : kAllStrategies) {
        CAPTURE(to_string(v));
        const auto r = build_vehicle_realization(homogeneous(v));
        CHECK(r.D_zeta(0, 0) == doctest::Approx(1.0));
        CHECK(r.C_y.rows() == 1);
        CHECK(r.x0.size() == r.n_x);
        CHECK(r.x0.norm() == 0.0);
        // minimal with respect to the link input
        CHECK(controllable_rank<double>(r.A, r.B, 1e-9) == r.n_x);
        MatrixD Cout(r.C_y.rows() + r.C_zeta.rows() + r.C_v.rows(), r.n_x);
        Cout << r.C_y, r.C_zeta, r.C_v;
        CHECK(controllable_rank<double>(MatrixD(r.A.transpose()), MatrixD(Cout.transpose()), 1e-9) == r.n_x);
    }
}

TEST_CASE("minimal orders match the staircase rank of the structural wiring") {
    const std::pair<StrategyVariant, int> want[] = {{StrategyVariant::ErrorHoldControlHold, 6},
                                                    {StrategyVariant::MeasurementHold, 5},
                                                    {StrategyVariant::MeasurementToZero, 4},
                                                    {StrategyVariant::ErrorToZero, 4},
                                                    {StrategyVariant::MeasurementEstimate, 6}};
    for (const auto& [v, n] : want) {
        CAPTURE(to_string(v));
        const auto full = build_vehicle_realization(homogeneous(v), 1e-9, false);
        const auto r = build_vehicle_realization(homogeneous(v));
        CHECK(r.n_x == n);
        CHECK(full.n_x >= r.n_x);
        CHECK(controllable_rank<double>(full.A, full.B, 1e-9) >= r.n_x);
    }
}

TEST_CASE("perfect link reproduces the closed loop") {
    const auto spec = homogeneous(StrategyVariant::ErrorToZero);
    const auto T = complementary_sensitivity(spec.G, spec.K, headway_tf(spec.h));
    const auto H = headway_tf(spec.h);
    for (auto v : kAllStrategies) {
        CAPTURE(to_string(v));
        const auto r = build_vehicle_realization(homogeneous(v));
        const auto ys = perfect_link(r, r.C_y);
        const auto zs = perfect_link(r, r.C_zeta);
        for (int i = 0; i < 48; ++i) {
            const cd z = std::polar(1.0, 0.013 + 0.065 * i);
            CHECK(std::abs(ss_eval(ys, z)(0, 0) - T(z)) < 1e-8);
            CHECK(std::abs(ss_eval(zs, z)(0, 0) - (1.0 - H(z) * T(z))) < 1e-8);
        }
    }
}

TEST_CASE("tracking error step response against the block diagram") {
    // e = u_step - w, u = K e, y = G u, w = (1+h) y(k) - h y(k-1), zeta = u_step - w
    const auto spec = homogeneous(StrategyVariant::ErrorToZero);
    const auto r = build_vehicle_realization(spec);
    const auto zs = perfect_link(r, r.C_zeta);
    const Poly<double> kn = {0.0, 0.27, -0.2376, 0.0}, kd = spec.K.denominator();
    std::vector<double> y(60, 0.0), u(60, 0.0), e(60, 0.0);
    VectorD x = VectorD::Zero(zs.states());
    for (int k = 0; k < 60; ++k) {
        y[k] = k > 0 ? y[k - 1] + u[k - 1] : 0.0;
        const double w = 5.0 * y[k] - 4.0 * (k > 0 ? y[k - 1] : 0.0);
        e[k] = 1.0 - w;
        double uk = 0.0;
        for (int j = 1; j <= 3; ++j)
            if (k - j >= 0) uk += kn[j] * e[k - j] - kd[j] * u[k - j];
        u[k] = uk;
        const double zeta = (zs.C * x + zs.D * VectorD::Ones(1))(0);
        CHECK(zeta == doctest::Approx(1.0 - w).epsilon(1e-10));
        x = zs.A * x + zs.B * VectorD::Ones(1);
    }
}

TEST_CASE("mean dynamics radii") {
    // reference values from the independent signal-level model in tools/oracle.py
    const auto c = build_vehicle_realization(homogeneous(StrategyVariant::ErrorHoldControlHold));
    CHECK(mean_radius(c, 0.9) == doctest::Approx(0.8554145896210404).epsilon(1e-9));
    CHECK(mean_radius(c, 0.8) == doctest::Approx(0.8568084034255932).epsilon(1e-9));
    CHECK(mean_radius(c, 0.47) == doctest::Approx(1.002630071406398).epsilon(1e-9));
    const auto z = build_vehicle_realization(homogeneous(StrategyVariant::ErrorToZero));
    CHECK(mean_radius(z, 0.95) == doctest::Approx(0.8519311139838343).epsilon(1e-9));
    for (auto v : {StrategyVariant::MeasurementHold, StrategyVariant::MeasurementToZero,
                   StrategyVariant::MeasurementEstimate}) {
        const auto r = build_vehicle_realization(homogeneous(v));
        for (double p : {0.8, 0.95, 1.0}) CHECK(mean_radius(r, p) == doctest::Approx(0.8540633822468024).epsilon(1e-9));
    }
}

TEST_CASE("radii do not depend on the state ordering") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd;
    for (auto v : kAllStrategies) {
        const auto r = build_vehicle_realization(homogeneous(v));
        MatrixD T(r.n_x, r.n_x);
        for (Eigen::Index i = 0; i < T.size(); ++i) T(i) = nd(gen);
        T += 3.0 * MatrixD::Identity(r.n_x, r.n_x);
        const auto s = similarity_transform(r, T);
        Eigen::PermutationMatrix<Eigen::Dynamic> P(r.n_x);
        P.setIdentity();
        std::shuffle(P.indices().data(), P.indices().data() + r.n_x, gen);
        const auto q = similarity_transform(r, MatrixD(P));
        for (double p : {0.5, 0.9}) {
            CHECK(mean_radius(s, p) == doctest::Approx(mean_radius(r, p)).epsilon(1e-9));
            CHECK(mean_radius(q, p) == doctest::Approx(mean_radius(r, p)).epsilon(1e-9));
        }
    }
}

TEST_CASE("compensator initial values enter the state") {
    auto spec = homogeneous(StrategyVariant::ErrorHoldControlHold);
    spec.strategy.initial_values = {0.5, -1.0};
    const auto r = build_vehicle_realization(spec);
    CHECK(r.x0.norm() > 0.0);
    // first link output: v_a(0) = e(0) - e_hat(-1), v_b(0) = u(0) - u(-1), with y_{i-1}(0) = 0
    const VectorD v0 = r.C_v * r.x0;
    CHECK(v0(0) == doctest::Approx(-0.5));
    CHECK(v0(1) == doctest::Approx(1.0));

    auto me = homogeneous(StrategyVariant::MeasurementEstimate);
    me.strategy.initial_values = {2.0, 1.0};
    const auto rm = build_vehicle_realization(me);
    // eta(0) = 2*2 - 1 = 3, so v(0) = y_{i-1}(0) - 3
    CHECK((rm.C_v * rm.x0)(0) == doctest::Approx(-3.0));
}

TEST_CASE("parameter hooks scale the controller") {
    auto spec = homogeneous(StrategyVariant::ErrorHoldControlHold);
    spec.hook = ParameterHook{1, -1.0};
    const auto a = resolve_hooks(spec, 0, {0.8, 0.6});
    CHECK(a.K(cd(2.0)).real() == doctest::Approx(spec.K(cd(2.0)).real() / 0.8));
    spec.hook = ParameterHook{2, -1.0};
    const auto b = resolve_hooks(spec, 1, {0.8, 0.6});
    CHECK(b.K(cd(2.0)).real() == doctest::Approx(spec.K(cd(2.0)).real() * 2.0 / 1.4));
    // window clipped at the first link
    const auto c = resolve_hooks(spec, 0, {0.8, 0.6});
    CHECK(c.K(cd(2.0)).real() == doctest::Approx(spec.K(cd(2.0)).real() / 0.8));
    spec.hook.reset();
    CHECK(resolve_hooks(spec, 0, {0.5}).K(cd(2.0)) == spec.K(cd(2.0)));
}

TEST_CASE("ill-posed wiring is rejected") {
    auto spec = homogeneous(StrategyVariant::ErrorToZero);
    spec.G = TransferFunction({1.0, 0.0}, {1.0, -1.0});
    spec.K = TransferFunction({1.0, 0.0}, {1.0, -0.5});
    CHECK_THROWS_AS(build_vehicle_realization(spec), WellPosednessError);

    // biproper controller: the control sub-signal reacts to the error sub-signal within the step
    spec = homogeneous(StrategyVariant::ErrorHoldControlHold);
    spec.K = TransferFunction({0.3, -0.2}, {1.0, -1.0});
    CHECK_THROWS_AS(build_vehicle_realization(spec), WellPosednessError);

    spec = homogeneous(StrategyVariant::ErrorToZero);
    spec.G = TransferFunction({1.0}, {1.0, 0.0, 0.0, 0.0});
    spec.K = TransferFunction({1.0, 0.0, 0.0}, {1.0, -1.0});
    CHECK_THROWS_AS(build_vehicle_realization(spec), RealizationError);

    spec = homogeneous(StrategyVariant::ErrorHoldControlHold);
    spec.strategy.initial_values = {1.0};
    CHECK_THROWS_AS(build_vehicle_realization(spec), InvalidParameterError);
    spec.strategy.initial_values.clear();
    spec.hook = ParameterHook{};
    CHECK_THROWS_AS(build_vehicle_realization(spec), InvalidParameterError);
}
