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

// Discrete-time SISO transfer functions and state-space systems, templated on
// the scalar type. Polynomials are coefficient vectors in descending powers of z.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "pmss/errors.hpp"

namespace pmss {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Poly = std::vector<Scalar>;

namespace poly {

// Drops exact leading zeros; the zero polynomial is {0}.
template <typename S>
Poly<S> trim(const Poly<S>& p) {
    auto it = std::find_if(p.begin(), p.end(), [](S c) { return c != S(0); });
    Poly<S> out(it, p.end());
    if (out.empty()) out.push_back(S(0));
    return out;
}

template <typename S>
bool is_zero(const Poly<S>& p) {
    return std::all_of(p.begin(), p.end(), [](S c) { return c == S(0); });
}

// Degree of the zero polynomial is -1.
template <typename S>
int degree(const Poly<S>& p) {
    if (is_zero(p)) return -1;
    return static_cast<int>(trim(p).size()) - 1;
}

template <typename S>
Poly<S> mul(const Poly<S>& a, const Poly<S>& b) {
    if (a.empty() || b.empty()) return {S(0)};
    Poly<S> out(a.size() + b.size() - 1, S(0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

template <typename S>
Poly<S> add(const Poly<S>& a, const Poly<S>& b) {
    Poly<S> out(std::max(a.size(), b.size()), S(0));
    std::copy(a.begin(), a.end(), out.end() - a.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[out.size() - b.size() + i] += b[i];
    return out;
}

template <typename S>
Poly<S> scale(Poly<S> p, S c) {
    for (auto& v : p) v *= c;
    return p;
}

template <typename S, typename Z>
Z eval(const Poly<S>& p, Z z) {
    Z acc(0);
    for (S c : p) acc = acc * z + Z(c);
    return acc;
}

template <typename S>
S max_abs(const Poly<S>& p) {
    S m(0);
    for (S c : p) m = std::max(m, std::abs(c));
    return m;
}

// Roots via companion-matrix eigenvalues. Trailing zero coefficients give exact zero roots.
template <typename S>
std::vector<std::complex<S>> roots(const Poly<S>& p_in) {
    Poly<S> p = trim(p_in);
    std::vector<std::complex<S>> out;
    while (p.size() > 1 && p.back() == S(0)) {
        p.pop_back();
        out.emplace_back(S(0), S(0));
    }
    const int n = static_cast<int>(p.size()) - 1;
    if (n <= 0) return out;
    Mat<S> comp = Mat<S>::Zero(n, n);
    for (int j = 0; j < n; ++j) comp(0, j) = -p[j + 1] / p[0];
    for (int i = 1; i < n; ++i) comp(i, i - 1) = S(1);
    Eigen::EigenSolver<Mat<S>> es(comp, false);
    for (int i = 0; i < n; ++i) out.push_back(es.eigenvalues()(i));
    return out;
}

template <typename S>
Poly<S> from_roots(const std::vector<std::complex<S>>& r, S gain = S(1)) {
    std::vector<std::complex<S>> acc{std::complex<S>(gain)};
    for (const auto& root : r) {
        std::vector<std::complex<S>> next(acc.size() + 1, std::complex<S>(0));
        for (std::size_t i = 0; i < acc.size(); ++i) {
            next[i] += acc[i];
            next[i + 1] -= acc[i] * root;
        }
        acc = std::move(next);
    }
    Poly<S> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = acc[i].real();
    return out;
}

// How many times (z - r) divides p, deflating while the remainder is below tol * max|coeff|.
template <typename S>
int multiplicity_at(const Poly<S>& p_in, S r, S tol) {
    Poly<S> p = trim(p_in);
    int count = 0;
    while (p.size() > 1) {
        Poly<S> q(p.size() - 1);
        S acc(0);
        for (std::size_t i = 0; i + 1 < p.size(); ++i) {
            acc = acc * r + p[i];
            q[i] = acc;
        }
        const S rem = acc * r + p.back();
        if (std::abs(rem) > tol * max_abs(p)) break;
        p = std::move(q);
        ++count;
    }
    return count;
}

}  // namespace poly

template <typename Scalar>
class RationalTF {
public:
    using Complex = std::complex<Scalar>;

    RationalTF() : num_{Scalar(0)}, den_{Scalar(1)} {}

    RationalTF(Poly<Scalar> num, Poly<Scalar> den) {
        den = poly::trim(den);
        if (poly::is_zero(den)) throw InvalidParameterError("transfer function denominator is zero");
        for (Scalar c : num)
            if (!std::isfinite(static_cast<double>(c))) throw InvalidParameterError("non-finite numerator coefficient");
        for (Scalar c : den)
            if (!std::isfinite(static_cast<double>(c))) throw InvalidParameterError("non-finite denominator coefficient");
        const Scalar lead = den.front();
        num_ = poly::scale(poly::trim(num), Scalar(1) / lead);
        den_ = poly::scale(den, Scalar(1) / lead);
    }

    static RationalTF constant(Scalar c) { return RationalTF({c}, {Scalar(1)}); }

    static RationalTF from_zpk(const std::vector<Complex>& zeros, const std::vector<Complex>& poles, Scalar gain) {
        return RationalTF(poly::from_roots(zeros, gain), poly::from_roots(poles));
    }

    const Poly<Scalar>& numerator() const { return num_; }
    const Poly<Scalar>& denominator() const { return den_; }

    bool is_zero() const { return poly::is_zero(num_); }
    int num_degree() const { return poly::degree(num_); }
    int den_degree() const { return poly::degree(den_); }
    bool is_proper() const { return num_degree() <= den_degree(); }
    bool is_strictly_proper() const { return num_degree() < den_degree(); }

    Complex operator()(Complex z) const { return poly::eval(num_, z) / poly::eval(den_, z); }

    std::vector<Complex> zeros() const { return is_zero() ? std::vector<Complex>{} : poly::roots(num_); }
    std::vector<Complex> poles() const { return poly::roots(den_); }

private:
    Poly<Scalar> num_;
    Poly<Scalar> den_;
};

template <typename S>
RationalTF<S> operator*(const RationalTF<S>& a, const RationalTF<S>& b) {
    return RationalTF<S>(poly::mul(a.numerator(), b.numerator()), poly::mul(a.denominator(), b.denominator()));
}

template <typename S>
RationalTF<S> operator*(S c, const RationalTF<S>& a) {
    return RationalTF<S>(poly::scale(a.numerator(), c), a.denominator());
}

template <typename S>
S max_pole_modulus(const RationalTF<S>& tf) {
    S m(0);
    for (const auto& p : tf.poles()) m = std::max(m, std::abs(p));
    return m;
}

// Removes common factors: exact z^k first, then zero/pole pairs closer than tol * max(1, |pole|).
template <typename S>
RationalTF<S> cancel_common_factors(const RationalTF<S>& tf, S tol = S(1e-6)) {
    if (tf.is_zero()) return RationalTF<S>::constant(S(0));
    Poly<S> num = tf.numerator();
    Poly<S> den = tf.denominator();
    while (num.size() > 1 && den.size() > 1 && num.back() == S(0) && den.back() == S(0)) {
        num.pop_back();
        den.pop_back();
    }
    auto zeros = poly::roots(num);
    auto poles = poly::roots(den);
    std::vector<bool> zero_used(zeros.size(), false), pole_used(poles.size(), false);
    bool cancelled = false;
    for (std::size_t i = 0; i < zeros.size(); ++i) {
        std::size_t best = poles.size();
        S best_dist = std::numeric_limits<S>::infinity();
        for (std::size_t j = 0; j < poles.size(); ++j) {
            if (pole_used[j]) continue;
            const S d = std::abs(zeros[i] - poles[j]);
            if (d < best_dist) {
                best_dist = d;
                best = j;
            }
        }
        if (best < poles.size() && best_dist < tol * std::max(S(1), std::abs(poles[best]))) {
            zero_used[i] = pole_used[best] = cancelled = true;
        }
    }
    if (!cancelled) return RationalTF<S>(num, den);
    std::vector<std::complex<S>> kz, kp;
    for (std::size_t i = 0; i < zeros.size(); ++i)
        if (!zero_used[i]) kz.push_back(zeros[i]);
    for (std::size_t j = 0; j < poles.size(); ++j)
        if (!pole_used[j]) kp.push_back(poles[j]);
    return RationalTF<S>::from_zpk(kz, kp, num.front() / den.front());
}

// H(z) = ((1+h)z - h)/z.
template <typename S>
RationalTF<S> headway_tf(S h) {
    if (!std::isfinite(static_cast<double>(h)) || h < S(0))
        throw InvalidParameterError("headway must be finite and non-negative");
    if (h == S(0)) return RationalTF<S>::constant(S(1));
    return RationalTF<S>({S(1) + h, -h}, {S(1), S(0)});
}

// T = GK/(1+GHK).
template <typename S>
RationalTF<S> complementary_sensitivity(const RationalTF<S>& G, const RationalTF<S>& K, const RationalTF<S>& H,
                                        S tol = S(1e-6)) {
    if (G.is_zero() || K.is_zero()) return RationalTF<S>::constant(S(0));
    const Poly<S> gk_num = poly::mul(G.numerator(), K.numerator());
    const Poly<S> gk_den = poly::mul(G.denominator(), K.denominator());
    const Poly<S> loop_den = poly::mul(gk_den, H.denominator());
    const Poly<S> loop_num = poly::mul(gk_num, H.numerator());
    const int d = poly::degree(loop_den);
    if (poly::degree(loop_num) > d) throw WellPosednessError("G*H*K is improper");
    const Poly<S> den = poly::add(loop_den, loop_num);
    const std::size_t lead_idx = den.size() - 1 - static_cast<std::size_t>(d);
    const S lead = den[lead_idx];
    if (std::abs(lead) <= S(100) * std::numeric_limits<S>::epsilon() * poly::max_abs(den))
        throw WellPosednessError("1 + G*H*K vanishes at infinity: delay-free algebraic loop");
    return cancel_common_factors(RationalTF<S>(poly::mul(gk_num, H.denominator()), den), tol);
}

template <typename Scalar>
struct StateSpace {
    Mat<Scalar> A, B, C, D;

    StateSpace() = default;
    StateSpace(Mat<Scalar> a, Mat<Scalar> b, Mat<Scalar> c, Mat<Scalar> d)
        : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
        if (A.rows() != A.cols()) throw DimensionError("A must be square");
        if (B.rows() != A.rows() || C.cols() != A.rows() || D.rows() != C.rows() || D.cols() != B.cols())
            throw DimensionError("state-space matrices are not conformable");
    }

    Eigen::Index states() const { return A.rows(); }
    Eigen::Index inputs() const { return B.cols(); }
    Eigen::Index outputs() const { return C.rows(); }
};

// Controllable canonical form.
template <typename S>
StateSpace<S> ss_realize(const RationalTF<S>& tf) {
    if (!tf.is_proper()) throw RealizationError("cannot realize an improper transfer function");
    const Poly<S>& den = tf.denominator();
    const int n = static_cast<int>(den.size()) - 1;
    Poly<S> num(den.size(), S(0));
    const Poly<S>& tn = tf.numerator();
    std::copy(tn.begin(), tn.end(), num.end() - tn.size());
    const S d = num[0];
    Mat<S> A = Mat<S>::Zero(n, n), B = Mat<S>::Zero(n, 1), C(1, n), D(1, 1);
    for (int j = 0; j < n; ++j) {
        A(0, j) = -den[j + 1];
        C(0, j) = num[j + 1] - d * den[j + 1];
    }
    for (int i = 1; i < n; ++i) A(i, i - 1) = S(1);
    if (n > 0) B(0, 0) = S(1);
    D(0, 0) = d;
    return StateSpace<S>(A, B, C, D);
}

// SISO transfer function of (A, B, C, D) by Faddeev-LeVerrier.
template <typename S>
RationalTF<S> tf_from_ss(const StateSpace<S>& ss, Eigen::Index out = 0, Eigen::Index in = 0) {
    const Eigen::Index n = ss.states();
    Poly<S> charpoly(n + 1, S(0));
    Poly<S> adj_num(n + 1, S(0));
    charpoly[0] = S(1);
    Mat<S> M = Mat<S>::Zero(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        M = ss.A * M + charpoly[k - 1] * Mat<S>::Identity(n, n);
        adj_num[k] = (ss.C.row(out) * M * ss.B.col(in))(0, 0);
        charpoly[k] = -(ss.A * M).trace() / S(k);
    }
    Poly<S> num = poly::add(adj_num, poly::scale(charpoly, ss.D(out, in)));
    return RationalTF<S>(num, charpoly);
}

// y = b(a(u)).
template <typename S>
StateSpace<S> ss_series(const StateSpace<S>& a, const StateSpace<S>& b) {
    const Eigen::Index na = a.states(), nb = b.states();
    Mat<S> A = Mat<S>::Zero(na + nb, na + nb);
    A.topLeftCorner(na, na) = a.A;
    A.bottomLeftCorner(nb, na) = b.B * a.C;
    A.bottomRightCorner(nb, nb) = b.A;
    Mat<S> B(na + nb, a.inputs());
    B << a.B, b.B * a.D;
    Mat<S> C(b.outputs(), na + nb);
    C << b.D * a.C, b.C;
    return StateSpace<S>(A, B, C, b.D * a.D);
}

template <typename S>
std::vector<std::complex<S>> eigenvalues(const Mat<S>& M) {
    std::vector<std::complex<S>> out;
    if (M.rows() == 0) return out;
    Eigen::EigenSolver<Mat<S>> es(M, false);
    for (Eigen::Index i = 0; i < M.rows(); ++i) out.push_back(es.eigenvalues()(i));
    return out;
}

// C (zI - A)^{-1} B + D.
template <typename S>
Mat<std::complex<S>> ss_eval(const StateSpace<S>& ss, std::complex<S> z, S tol = S(1e-10)) {
    using Cx = std::complex<S>;
    const Eigen::Index n = ss.states();
    if (n == 0) return ss.D.template cast<Cx>();
    for (const auto& lam : eigenvalues(ss.A))
        if (std::abs(lam - z) <= tol * std::max(S(1), std::abs(z)))
            throw SingularityError("evaluation point coincides with an eigenvalue of A");
    Mat<Cx> zI_A = z * Mat<Cx>::Identity(n, n) - ss.A.template cast<Cx>();
    Mat<Cx> X = zI_A.partialPivLu().solve(ss.B.template cast<Cx>());
    return ss.C.template cast<Cx>() * X + ss.D.template cast<Cx>();
}

namespace detail {

// Orthonormal basis of the columns of M with singular values above thr.
template <typename S>
Mat<S> orth_columns(const Mat<S>& M, S thr) {
    if (M.cols() == 0 || M.rows() == 0) return Mat<S>(M.rows(), 0);
    Eigen::JacobiSVD<Mat<S>> svd(M, Eigen::ComputeThinU);
    Eigen::Index r = 0;
    while (r < svd.singularValues().size() && svd.singularValues()(r) > thr) ++r;
    return svd.matrixU().leftCols(r);
}

// Orthonormal basis of the Krylov space span{B, AB, A^2B, ...} built block by block.
template <typename S>
Mat<S> krylov_basis(const Mat<S>& A, const Mat<S>& B, S thr) {
    const Eigen::Index n = A.rows();
    Mat<S> basis = orth_columns<S>(B, thr);
    Mat<S> block = basis;
    while (block.cols() > 0 && basis.cols() < n) {
        Mat<S> W = A * block;
        for (int pass = 0; pass < 2; ++pass) W -= basis * (basis.transpose() * W);
        block = orth_columns<S>(W, thr);
        Mat<S> grown(n, basis.cols() + block.cols());
        grown << basis, block;
        basis = std::move(grown);
    }
    return basis;
}

}  // namespace detail

template <typename S>
struct MinimalRealization {
    StateSpace<S> system;
    Mat<S> state_map;            // x_min = state_map * x for x in the reachable subspace
    Mat<S> controllable_basis;   // orthonormal basis of the reachable subspace
};

// Staircase reduction: reachable part first, then the observable quotient of that.
template <typename S>
MinimalRealization<S> minimal_realization(const StateSpace<S>& ss, S tol) {
    if (!(tol > S(0))) throw InvalidParameterError("tolerance must be positive");
    const Eigen::Index n = ss.states();
    if (n == 0) return {ss, Mat<S>(0, 0), Mat<S>(0, 0)};
    const S scale = std::max({ss.A.norm(), ss.B.norm(), ss.C.norm(), std::numeric_limits<S>::min()});
    const S thr = tol * scale;
    Mat<S> Tc = detail::krylov_basis<S>(ss.A, ss.B, thr);
    Mat<S> A1 = Tc.transpose() * ss.A * Tc;
    Mat<S> B1 = Tc.transpose() * ss.B;
    Mat<S> C1 = ss.C * Tc;
    Mat<S> To = detail::krylov_basis<S>(A1.transpose(), C1.transpose(), thr);
    StateSpace<S> sys(To.transpose() * A1 * To, To.transpose() * B1, C1 * To, ss.D);
    return {std::move(sys), To.transpose() * Tc.transpose(), Tc};
}

template <typename S>
StateSpace<S> ss_minimal(const StateSpace<S>& ss, S tol) {
    return minimal_realization(ss, tol).system;
}

// Rank of the controllability (or, transposed, observability) staircase.
template <typename S>
Eigen::Index controllable_rank(const Mat<S>& A, const Mat<S>& B, S tol) {
    const S scale = std::max({A.norm(), B.norm(), std::numeric_limits<S>::min()});
    return detail::krylov_basis<S>(A, B, tol * scale).cols();
}

// Spectral radius of a dense matrix via a full eigensolve.
template <typename Derived>
typename Derived::RealScalar spectral_radius_dense(const Eigen::MatrixBase<Derived>& M) {
    using S = typename Derived::RealScalar;
    if (M.rows() != M.cols()) throw DimensionError("spectral radius needs a square matrix");
    S rho(0);
    for (const auto& lam : eigenvalues<S>(M.eval())) rho = std::max(rho, std::abs(lam));
    return rho;
}

namespace detail {

// Growth-rate estimate of the dominant eigenvalue modulus; used only beyond the dense limit.
template <typename S>
S power_iteration_radius(const Mat<S>& M, int iterations = 4000) {
    const Eigen::Index n = M.rows();
    Vec<S> x(n);
    std::uint64_t s = 0x9E3779B97F4A7C15ull;
    for (Eigen::Index i = 0; i < n; ++i) {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        x(i) = S(1) + S((s >> 11) & 0xFFFF) / S(65536);
    }
    x.normalize();
    const int window = iterations / 2;
    S log_growth(0);
    for (int k = 0; k < iterations; ++k) {
        x = M * x;
        const S nrm = x.norm();
        if (nrm == S(0)) return S(0);
        if (k >= iterations - window) log_growth += std::log(nrm);
        x /= nrm;
    }
    return std::exp(log_growth / S(window));
}

// Strongly connected components of the sparsity graph of M (iterative Tarjan).
template <typename S>
std::vector<std::vector<Eigen::Index>> sparsity_components(const Mat<S>& M) {
    const Eigen::Index n = M.rows();
    std::vector<std::vector<Eigen::Index>> adj(n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (M(i, j) != S(0)) adj[i].push_back(j);
    std::vector<Eigen::Index> index(n, -1), low(n, 0), stack;
    std::vector<bool> on_stack(n, false);
    std::vector<std::vector<Eigen::Index>> comps;
    Eigen::Index counter = 0;
    std::vector<std::pair<Eigen::Index, std::size_t>> call;
    for (Eigen::Index root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        call.emplace_back(root, 0);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& [v, next] = call.back();
            if (next < adj[v].size()) {
                const Eigen::Index w = adj[v][next++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const Eigen::Index done = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
            if (low[done] == index[done]) {
                std::vector<Eigen::Index> comp;
                Eigen::Index w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != done);
                comps.push_back(std::move(comp));
            }
        }
    }
    return comps;
}

}  // namespace detail

// Spectral radius exploiting reducibility: eigenvalues of M are the union of those of the
// diagonal blocks of its strongly connected components. Components above dense_limit fall
// back to power iteration.
template <typename Derived>
typename Derived::RealScalar spectral_radius(const Eigen::MatrixBase<Derived>& M_in, Eigen::Index dense_limit = 4000) {
    using S = typename Derived::RealScalar;
    if (M_in.rows() != M_in.cols()) throw DimensionError("spectral radius needs a square matrix");
    const Mat<S> M = M_in;
    for (Eigen::Index j = 0; j < M.cols(); ++j)
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            if (!std::isfinite(static_cast<double>(M(i, j)))) throw InvalidParameterError("non-finite matrix entry");
    S rho(0);
    for (const auto& comp : detail::sparsity_components<S>(M)) {
        const Eigen::Index m = static_cast<Eigen::Index>(comp.size());
        if (m == 1) {
            rho = std::max(rho, std::abs(M(comp[0], comp[0])));
            continue;
        }
        Mat<S> sub(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = M(comp[a], comp[b]);
        rho = std::max(rho, m > dense_limit ? detail::power_iteration_radius<S>(sub) : spectral_radius_dense(sub));
    }
    return rho;
}

template <typename S>
struct ZeroMultiplicity {
    Mat<S> value_at_one;        // C (I-A)^{-1} B + D
    Mat<S> derivative_term;     // C (I-A)^{-2} B, equal to -M'(1)
    std::vector<int> multiplicity;   // per output row, saturating at 2
};

// Multiplicity of the zero at z=1, row by row. Each entry is compared against the largest
// impulse-response coefficient of that entry over the first 2n samples.
template <typename S>
ZeroMultiplicity<S> zero_multiplicity_at_one(const StateSpace<S>& ss, S tol = S(1e-6)) {
    if (!(tol > S(0))) throw InvalidParameterError("tolerance must be positive");
    const Eigen::Index n = ss.states(), p = ss.outputs(), m = ss.inputs();
    if (n > 0 && spectral_radius(ss.A) >= S(1))
        throw PreconditionError("zero multiplicity at z=1 needs a Schur-stable A");
    ZeroMultiplicity<S> out;
    Mat<S> scale = ss.D.cwiseAbs();
    if (n == 0) {
        out.value_at_one = ss.D;
        out.derivative_term = Mat<S>::Zero(p, m);
    } else {
        Mat<S> AkB = ss.B;
        for (Eigen::Index k = 1; k < 2 * n; ++k) {
            scale = scale.cwiseMax((ss.C * AkB).cwiseAbs());
            AkB = ss.A * AkB;
        }
        auto lu = (Mat<S>::Identity(n, n) - ss.A).partialPivLu();
        const Mat<S> X1 = lu.solve(ss.B);
        const Mat<S> X2 = lu.solve(X1);
        out.value_at_one = ss.C * X1 + ss.D;
        out.derivative_term = ss.C * X2;
    }
    out.multiplicity.assign(p, 2);
    for (Eigen::Index r = 0; r < p; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) {
            const S thr = tol * scale(r, c);
            int mult = 0;
            if (std::abs(out.value_at_one(r, c)) <= thr) mult = std::abs(out.derivative_term(r, c)) <= thr ? 2 : 1;
            out.multiplicity[r] = std::min(out.multiplicity[r], mult);
        }
    }
    return out;
}

// sup over the unit circle of |tf|, by a 4096-point grid on [0, pi] and golden-section refinement.
template <typename S>
S hinf_norm(const RationalTF<S>& tf, S tol = S(1e-9)) {
    if (max_pole_modulus(tf) >= S(1)) throw PreconditionError("H-infinity norm needs a stable transfer function");
    if (tf.den_degree() == 0) return std::abs(tf.numerator().back() / tf.denominator().back());
    const S pi = std::acos(S(-1));
    auto mag = [&](S w) { return std::abs(tf(std::polar(S(1), w))); };
    const int grid = 4096;
    std::vector<S> w(grid), f(grid);
    for (int k = 0; k < grid; ++k) {
        w[k] = pi * S(k) / S(grid - 1);
        f[k] = mag(w[k]);
    }
    std::vector<int> peaks;
    for (int k = 0; k < grid; ++k) {
        const bool left = k == 0 || f[k] >= f[k - 1];
        const bool right = k == grid - 1 || f[k] >= f[k + 1];
        if (left && right) peaks.push_back(k);
    }
    std::sort(peaks.begin(), peaks.end(), [&](int a, int b) { return f[a] > f[b]; });
    if (peaks.size() > 8) peaks.resize(8);
    S best = *std::max_element(f.begin(), f.end());
    const S ratio = (std::sqrt(S(5)) - S(1)) / S(2);
    for (int k : peaks) {
        S a = w[std::max(k - 1, 0)], b = w[std::min(k + 1, grid - 1)];
        S c = b - ratio * (b - a), d = a + ratio * (b - a);
        S fc = mag(c), fd = mag(d);
        for (int it = 0; it < 200 && (b - a) > std::max(tol, std::numeric_limits<S>::epsilon()) * S(1e-3); ++it) {
            if (fc >= fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = mag(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = mag(d);
            }
        }
        best = std::max({best, fc, fd});
    }
    return best;
}

struct AssumptionReport {
    bool t_stable = false;
    bool t_strictly_proper = false;
    bool no_unstable_cancellation = false;
    bool double_integrator = false;
    double hinf_t = std::numeric_limits<double>::infinity();
    std::vector<std::string> messages;

    bool passed() const { return t_stable && t_strictly_proper && no_unstable_cancellation && double_integrator; }
};

template <typename S>
AssumptionReport validate_vehicle_assumptions(const RationalTF<S>& G, const RationalTF<S>& K, S h) {
    AssumptionReport rep;
    const S root_tol = S(1e-6);
    RationalTF<S> H;
    try {
        H = headway_tf(h);
    } catch (const Error& e) {
        rep.messages.push_back(e.what());
        return rep;
    }

    try {
        const RationalTF<S> T = complementary_sensitivity(G, K, H);
        rep.t_strictly_proper = T.is_strictly_proper();
        if (!rep.t_strictly_proper) rep.messages.push_back("T is not strictly proper");
        const S rho = max_pole_modulus(T);
        rep.t_stable = rho < S(1);
        if (rep.t_stable) {
            rep.hinf_t = static_cast<double>(hinf_norm(T));
            if (rep.hinf_t > 1.0 + 1e-3)
                rep.messages.push_back("||T||_inf = " + std::to_string(rep.hinf_t) + " exceeds 1");
        } else {
            rep.messages.push_back("T has a pole of modulus " + std::to_string(static_cast<double>(rho)));
        }
    } catch (const Error& e) {
        rep.messages.push_back(e.what());
    }

    std::vector<std::complex<S>> zs, ps;
    for (const RationalTF<S>* f : std::array<const RationalTF<S>*, 3>{&G, &H, &K}) {
        for (const auto& z : f->zeros()) zs.push_back(z);
        for (const auto& p : f->poles()) ps.push_back(p);
    }
    rep.no_unstable_cancellation = true;
    for (const auto& z : zs)
        for (const auto& p : ps)
            if (std::abs(z - p) < root_tol && std::abs(p) >= S(1) - root_tol) {
                rep.no_unstable_cancellation = false;
                rep.messages.push_back("pole-zero cancellation at |z| = " + std::to_string(static_cast<double>(std::abs(p))));
            }

    const int poles_at_one = poly::multiplicity_at(G.denominator(), S(1), root_tol) +
                             poly::multiplicity_at(K.denominator(), S(1), root_tol) -
                             poly::multiplicity_at(G.numerator(), S(1), root_tol) -
                             poly::multiplicity_at(K.numerator(), S(1), root_tol);
    rep.double_integrator = poles_at_one >= 2;
    if (!rep.double_integrator)
        rep.messages.push_back("K*G has " + std::to_string(std::max(poles_at_one, 0)) + " pole(s) at z=1, need 2");
    return rep;
}

using TransferFunction = RationalTF<double>;
using StateSpaceD = StateSpace<double>;
using MatrixD = Mat<double>;
using VectorD = Vec<double>;

}  // namespace pmss
