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
#include "pmss/moments.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <sstream>

namespace pmss {

MatrixD kron(const MatrixD& a, const MatrixD& b) { return Eigen::kroneckerProduct(a, b).eval(); }

VectorD vec(const MatrixD& m) { return Eigen::Map<const VectorD>(m.data(), m.size()); }

MatrixD unvec(const VectorD& v, Eigen::Index rows) {
    if (rows <= 0 || v.size() % rows != 0) throw DimensionError("vector length is not a multiple of the row count");
    return Eigen::Map<const MatrixD>(v.data(), rows, v.size() / rows);
}

MomentTrajectory mean_recursion(const PlatoonRealization& platoon, const VectorD& y0, int horizon,
                                const std::optional<VectorD>& mu_x0) {
    if (horizon < 1) throw InvalidParameterError("horizon must be at least 1");
    if (y0.size() < horizon + 1) throw DimensionError("leader series shorter than the horizon");
    MomentTrajectory t;
    t.horizon = horizon;
    t.mu_x.reserve(horizon + 1);
    VectorD mu = mu_x0 ? *mu_x0 : platoon.x0;
    if (mu.size() != platoon.states()) throw DimensionError("initial mean has the wrong size");
    for (int k = 0; k <= horizon; ++k) {
        t.mu_x.push_back(mu);
        t.mu_zeta.push_back(platoon.C_zeta * mu + platoon.D_zeta.col(0) * y0(k));
        t.mu_v.push_back(platoon.C_v * mu + platoon.D_v.col(0) * y0(k));
        if (k < horizon) mu = platoon.A * mu + platoon.B.col(0) * y0(k);
    }
    return t;
}

void covariance_recursion(const PlatoonRealization& platoon, MomentTrajectory& traj, const std::optional<MatrixD>& P_x0) {
    const Eigen::Index n = platoon.states();
    MatrixD P = P_x0 ? *P_x0 : MatrixD::Zero(n, n);
    if (P.rows() != n || P.cols() != n) throw DimensionError("initial covariance has the wrong size");
    const MatrixD& PT = platoon.moments.P_Theta;
    const MatrixD& A = platoon.A;
    const MatrixD& cB = platoon.calB;
    traj.P_x.clear();
    traj.P_zeta.clear();
    traj.P_v.clear();
    for (int k = 0; k <= traj.horizon; ++k) {
        const MatrixD Pv = platoon.C_v * P * platoon.C_v.transpose();
        traj.P_x.push_back(P);
        traj.P_zeta.push_back(platoon.C_zeta * P * platoon.C_zeta.transpose());
        traj.P_v.push_back(Pv);
        if (k == traj.horizon) break;
        const VectorD& mv = traj.mu_v[k];
        const MatrixD second = Pv + mv * mv.transpose();
        MatrixD next = A * P * A.transpose() + cB * PT.cwiseProduct(second) * cB.transpose();
        P = 0.5 * (next + next.transpose());
    }
}

MomentTrajectory moment_trajectory(const PlatoonRealization& platoon, const VectorD& y0, int horizon) {
    MomentTrajectory t = mean_recursion(platoon, y0, horizon);
    covariance_recursion(platoon, t);
    return t;
}

namespace {

void check_guard(Eigen::Index n, double guard) {
    const double entries = static_cast<double>(n) * n * n * n;
    if (entries > guard) {
        std::ostringstream os;
        os << "Kronecker matrix of size " << n * n << "x" << n * n << " exceeds the memory guard; "
           << "use the per-vehicle conditions for independent channels";
        throw GuardError(os.str());
    }
}

struct SparseVec {
    std::vector<Eigen::Index> idx;
    std::vector<double> val;
};

SparseVec sparse_kron(const VectorD& a, const VectorD& b) {
    SparseVec s;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) == 0.0) continue;
        for (Eigen::Index j = 0; j < b.size(); ++j)
            if (b(j) != 0.0) {
                s.idx.push_back(i * b.size() + j);
                s.val.push_back(a(i) * b(j));
            }
    }
    return s;
}

}  // namespace

MatrixD delta_matrix(const PlatoonRealization& platoon, double guard) {
    const Eigen::Index n = platoon.states(), m = platoon.channel_width();
    check_guard(n, guard);
    MatrixD D = MatrixD::Zero(n * n, n * n);
    const MatrixD& PT = platoon.moments.P_Theta;
    const MatrixD& cB = platoon.calB;
    const MatrixD& Cv = platoon.C_v;
    // Column b*m+a of vec(P_Theta) pairs column kron(B_b, B_a) with row kron(Cv_b, Cv_a).
    for (Eigen::Index b = 0; b < m; ++b) {
        for (Eigen::Index a = 0; a < m; ++a) {
            const double w = PT(a, b);
            if (w == 0.0) continue;
            const SparseVec u = sparse_kron(cB.col(b), cB.col(a));
            const SparseVec r = sparse_kron(Cv.row(b).transpose(), Cv.row(a).transpose());
            for (std::size_t i = 0; i < u.idx.size(); ++i)
                for (std::size_t j = 0; j < r.idx.size(); ++j) D(u.idx[i], r.idx[j]) += w * u.val[i] * r.val[j];
        }
    }
    return D;
}

MatrixD mean_square_matrix(const PlatoonRealization& platoon, double guard) {
    check_guard(platoon.states(), guard);
    return kron(platoon.A, platoon.A) + delta_matrix(platoon, guard);
}

namespace {

bool all_at_least(const std::vector<int>& m, int k) {
    for (int v : m)
        if (v < k) return false;
    return true;
}

// -m0 C (I-A)^{-2} B with rows of multiplicity >= 2 set to exactly zero.
VectorD ramp_limit(const MatrixD& A, const MatrixD& B, const MatrixD& C, double m0, const std::vector<int>& mult) {
    VectorD out = VectorD::Zero(C.rows());
    if (m0 == 0.0 || all_at_least(mult, 2)) return out;
    const Eigen::Index n = A.rows();
    auto lu = (MatrixD::Identity(n, n) - A).partialPivLu();
    out = -m0 * (C * lu.solve(lu.solve(B))).col(0);
    for (Eigen::Index r = 0; r < out.size(); ++r)
        if (mult[r] >= 2) out(r) = 0.0;
    return out;
}

}  // namespace

StationaryMean stationary_mean(const PlatoonRealization& platoon, double m0, double tol) {
    StationaryMean s;
    if (spectral_radius(platoon.A) >= 1.0) return s;
    const auto zm = zero_multiplicity_at_one(subsystem_tf(platoon, Subsystem::M11), tol);
    s.multiplicity = zm.multiplicity;
    if (!all_at_least(zm.multiplicity, 1)) return s;
    s.converges = true;
    s.value = ramp_limit(platoon.A, platoon.B, platoon.C_zeta, m0, zm.multiplicity);
    return s;
}

StationaryCovariance stationary_covariance(const PlatoonRealization& platoon, double m0, double tol, double guard) {
    StationaryCovariance s;
    if (spectral_radius(platoon.A) >= 1.0) return s;
    const auto zm = zero_multiplicity_at_one(subsystem_tf(platoon, Subsystem::M21), tol);
    s.multiplicity = zm.multiplicity;
    if (!all_at_least(zm.multiplicity, 1)) return s;
    const MatrixD K = mean_square_matrix(platoon, guard);
    if (spectral_radius(K) >= 1.0) return s;
    return stationary_covariance(platoon, m0, zm.multiplicity, K);
}

StationaryCovariance stationary_covariance(const PlatoonRealization& platoon, double m0,
                                           const std::vector<int>& m21_multiplicity, const MatrixD& mean_square) {
    StationaryCovariance s;
    const Eigen::Index n = platoon.states();
    s.multiplicity = m21_multiplicity;
    s.converges = true;
    s.mu_v = ramp_limit(platoon.A, platoon.B, platoon.C_v, m0, m21_multiplicity);
    if (s.mu_v.isZero(0.0)) {
        s.state_value = MatrixD::Zero(n, n);
        s.value = MatrixD::Zero(platoon.size(), platoon.size());
        return s;
    }
    const MatrixD S = platoon.calB * platoon.moments.P_Theta.cwiseProduct(s.mu_v * s.mu_v.transpose()) *
                      platoon.calB.transpose();
    auto lu = (MatrixD::Identity(n * n, n * n) - mean_square).partialPivLu();
    s.rcond = lu.rcond();
    if (s.rcond < 1e-12) {
        std::ostringstream os;
        os << "I - A kron A - Delta is ill-conditioned (condition estimate " << 1.0 / s.rcond << ")";
        s.warnings.push_back(os.str());
    }
    MatrixD X = unvec(lu.solve(vec(S)), n);
    s.state_value = 0.5 * (X + X.transpose());
    s.value = platoon.C_zeta * s.state_value * platoon.C_zeta.transpose();
    return s;
}

}  // namespace pmss
