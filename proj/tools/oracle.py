# Copyright 2026 The platoon-mss Authors
# SPDX-License-Identifier: Apache-2.0
"""Reference values for the C++ test suites.

Everything here is computed from the signal-level loop equations with explicit
history buffers, never from the C++ realizations. Linear maps are read off the
step function by linearity; exact checks go through sympy rationals.

    python3 tools/oracle.py > /tmp/oracle.json
"""
import itertools
import json
import sys

import numpy as np
import sympy as sp

STRATEGIES = ["measurement_estimate", "error_to_zero", "error_hold_control_hold",
              "measurement_to_zero", "measurement_hold"]


def from_roots(gain, roots):
    c = [gain]
    for r in roots:
        c = [a - r * b for a, b in zip(c + [0], [0] + c)]
    return c


class Vehicle:
    def __init__(self, gnum, gden, knum, kden, h, strategy):
        self.gnum, self.gden, self.knum, self.kden = gnum, gden, knum, kden
        self.h, self.strategy = h, strategy
        self.nG, self.nK = len(gden) - 1, len(kden) - 1
        self.bG = [0] * (len(gden) - len(gnum)) + list(gnum)
        self.bK = [0] * (len(kden) - len(knum)) + list(knum)
        assert self.bG[0] == 0
        # y, gin: nG each; c, u: nK each; ehat(k-1); yhat(k-1), yhat(k-2)
        self.n = 2 * self.nG + 2 * self.nK + 3

    def step(self, x, yin, th):
        nG, nK = self.nG, self.nK
        y, gin = x[0:nG], x[nG:2 * nG]
        c, u = x[2 * nG:2 * nG + nK], x[2 * nG + nK:2 * nG + 2 * nK]
        eh1, yh1, yh2 = x[-3], x[-2], x[-1]
        aG, aK = self.gden, self.kden
        yk = sum(self.bG[j] * gin[j - 1] for j in range(1, nG + 1)) - sum(aG[j] * y[j - 1] for j in range(1, nG + 1))
        wk = (1 + self.h) * yk - self.h * y[0]
        eh, yh = 0, 0
        s = self.strategy
        if s == "error_hold_control_hold":
            eh = th * ((yin - wk) - eh1) + eh1
            ck = eh
        elif s == "error_to_zero":
            ck = th * (yin - wk)
        elif s == "measurement_to_zero":
            yh = th * yin
            ck = yh - wk
        elif s == "measurement_hold":
            yh = th * (yin - yh1) + yh1
            ck = yh - wk
        elif s == "measurement_estimate":
            eta = 2 * yh1 - yh2
            yh = th * (yin - eta) + eta
            ck = yh - wk
        else:
            raise ValueError(s)
        uk = self.bK[0] * ck + sum(self.bK[j] * c[j - 1] for j in range(1, nK + 1)) \
            - sum(aK[j] * u[j - 1] for j in range(1, nK + 1))
        gk = th * (uk - u[0]) + u[0] if s == "error_hold_control_hold" else uk
        zeta = yin - wk
        xn = list(x)
        xn[0:nG] = [yk] + list(y[:-1])
        xn[nG:2 * nG] = [gk] + list(gin[:-1])
        xn[2 * nG:2 * nG + nK] = [ck] + list(c[:-1])
        xn[2 * nG + nK:2 * nG + 2 * nK] = [uk] + list(u[:-1])
        xn[-3], xn[-2], xn[-1] = eh, yh, (yh1 if s == "measurement_estimate" else 0)
        return xn, yk, zeta


def platoon_step(vs, x, y0, thetas):
    out, ys, zs, off, yin = [], [], [], 0, y0
    for v, th in zip(vs, thetas):
        xn, yk, z = v.step(x[off:off + v.n], yin, th)
        out += xn
        ys.append(yk)
        zs.append(z)
        yin = yk
        off += v.n
    return out, ys, zs


def linear_maps(vs, thetas):
    """x+ = A x + B y0, zeta = Cz x + Dz y0, y = Cy x for a fixed erasure pattern."""
    n = sum(v.n for v in vs)
    N = len(vs)
    A, Cz, Cy = np.zeros((n, n)), np.zeros((N, n)), np.zeros((N, n))
    for j in range(n):
        e = [0.0] * n
        e[j] = 1.0
        xn, ys, zs = platoon_step(vs, e, 0.0, thetas)
        A[:, j], Cz[:, j], Cy[:, j] = xn, zs, ys
    xn, ys, zs = platoon_step(vs, [0.0] * n, 1.0, thetas)
    return A, np.array(xn), Cz, np.array(zs)


def outcomes(p):
    for bits in itertools.product([0, 1], repeat=len(p)):
        w = 1.0
        for b, q in zip(bits, p):
            w *= q if b else 1 - q
        yield bits, w


def radii(vs, p):
    maps = [(linear_maps(vs, bits), w) for bits, w in outcomes(p)]
    Abar = sum(w * m[0] for m, w in maps)
    L = sum(w * np.kron(m[0], m[0]) for m, w in maps)
    return max(abs(np.linalg.eigvals(Abar))), max(abs(np.linalg.eigvals(L)))


def moment_recursion(vs, p, y0):
    """Exact first and second moments of zeta along a deterministic leader series."""
    maps = [(linear_maps(vs, bits), w) for bits, w in outcomes(p)]
    n = maps[0][0][0].shape[0]
    mu, X = np.zeros(n), np.zeros((n, n))
    Cz, Dz = maps[0][0][2], maps[0][0][3]
    mus, vars_ = [], []
    for k, y in enumerate(y0):
        mz = Cz @ mu + Dz * y
        Ez2 = Cz @ X @ Cz.T + np.outer(Cz @ mu, Dz) * y + np.outer(Dz, Cz @ mu) * y + np.outer(Dz, Dz) * y * y
        mus.append(mz)
        vars_.append(Ez2 - np.outer(mz, mz))
        mu_n, X_n = np.zeros(n), np.zeros((n, n))
        for (A, B, _, _), w in maps:
            mu_n += w * (A @ mu + B * y)
            AX = A @ X @ A.T
            cross = np.outer(A @ mu, B) * y
            X_n += w * (AX + cross + cross.T + np.outer(B, B) * y * y)
        mu, X = mu_n, X_n
    return mus, vars_


def enumerate_paths(vs, p, y0, pmf=None):
    """Brute force over every erasure path of len(y0)-1 steps."""
    N, T = len(vs), len(y0) - 1
    n = sum(v.n for v in vs)
    m1 = np.zeros((T + 1, N))
    m2 = np.zeros((T + 1, N, N))
    per_step = list(pmf) if pmf else list(outcomes(p))
    for path in itertools.product(range(len(per_step)), repeat=T):
        w = 1.0
        for s in path:
            w *= per_step[s][1]
        x = [0.0] * n
        for k in range(T + 1):
            bits = per_step[path[k]][0] if k < T else (1,) * N
            xn, _, zs = platoon_step(vs, x, y0[k], bits)
            z = np.array(zs)
            m1[k] += w * z
            m2[k] += w * np.outer(z, z)
            x = xn
    return m1, m2 - np.einsum("ki,kj->kij", m1, m1)


def R(t):
    return sp.Rational(str(t))


def homogeneous_vehicle(strategy, exact=False):
    c = R if exact else float
    return Vehicle([c(1)], [c(1), c(-1)], from_roots(c("0.27"), [c(0), c("0.88")]),
                   from_roots(c(1), [c(1), c("-0.79"), c("0.8")]), c(4), strategy)


def exact_mean_tf(strategy, p):
    """M_a(z) of one follower in exact arithmetic: mean dynamics with theta replaced by p."""
    vr = homogeneous_vehicle(strategy, exact=True)
    pr = R(p)
    n = vr.n

    def lin(th):
        A = sp.zeros(n, n)
        Cz = sp.zeros(1, n)
        for j in range(n):
            e = [0] * n
            e[j] = 1
            xn, _, z = vr.step(e, 0, th)
            A[:, j] = sp.Matrix(xn)
            Cz[0, j] = z
        xn, _, z = vr.step([0] * n, 1, th)
        return A, sp.Matrix(xn), Cz, z

    A1, B1, Cz, Dz = lin(1)
    A0, B0, _, _ = lin(0)
    A = pr * A1 + (1 - pr) * A0
    B = pr * B1 + (1 - pr) * B0
    z = sp.symbols("z")
    den = (z * sp.eye(n) - A).det(method="berkowitz")
    ros = sp.Matrix(sp.BlockMatrix([[z * sp.eye(n) - A, -B], [Cz, sp.Matrix([[Dz]])]]))
    num = ros.det(method="berkowitz")
    tf = sp.cancel(num / den)
    nn, dd = sp.fraction(tf)
    nn, dd = sp.Poly(nn, z), sp.Poly(dd, z)
    mult = 0
    while nn.degree() > 0 and nn.eval(1) == 0:
        nn = sp.Poly(sp.quo(nn.as_expr(), z - 1), z)
        mult += 1
    lc = dd.LC()
    return {"multiplicity_at_one": mult,
            "num": [float(c / lc) for c in sp.Poly(tf.as_numer_denom()[0], z).all_coeffs()],
            "den": [float(c / lc) for c in dd.all_coeffs()],
            "zeros": sorted([complex(r) for r in sp.Poly(tf.as_numer_denom()[0], z).nroots()], key=lambda c: (c.real, c.imag)),
            "poles": sorted([complex(r) for r in dd.nroots()], key=lambda c: (c.real, c.imag))}


def exact_T(gnum, gden, knum, kden, h):
    """Coefficients are taken as exact decimals."""
    z = sp.symbols("z")
    G = sp.Poly([R(c) for c in gnum], z).as_expr() / sp.Poly([R(c) for c in gden], z).as_expr()
    K = sp.Poly([R(c) for c in knum], z).as_expr() / sp.Poly([R(c) for c in kden], z).as_expr()
    H = (1 + R(h)) - R(h) / z
    T = sp.cancel(G * K / (1 + G * K * H))
    nn, dd = sp.fraction(T)
    nn, dd = sp.Poly(nn, z), sp.Poly(dd, z)
    lc = dd.LC()
    return [float(c / lc) for c in nn.all_coeffs()], [float(c / lc) for c in dd.all_coeffs()], \
        max(abs(complex(r)) for r in dd.nroots())


def cplx(zs):
    return [[c.real, c.imag] for c in zs]


def main():
    out = {}

    # homogeneous single follower, every strategy
    for s in STRATEGIES:
        v = homogeneous_vehicle(s)
        out["radii_" + s] = {str(p): radii([v], [p]) for p in (0.47, 0.8, 0.9, 0.95, 0.98, 1.0)}

    v = homogeneous_vehicle("error_hold_control_hold")
    ma = exact_mean_tf("error_hold_control_hold", 0.9)
    out["Ma_ehch_0.9"] = {"multiplicity_at_one": ma["multiplicity_at_one"], "num": ma["num"], "den": ma["den"],
                          "zeros": cplx(ma["zeros"]), "poles": cplx(ma["poles"])}
    for s in ("measurement_to_zero", "measurement_hold", "error_to_zero", "measurement_estimate"):
        p = 0.98 if s == "measurement_to_zero" else 0.95
        ma = exact_mean_tf(s, p)
        out["Ma_" + s] = {"p": p, "multiplicity_at_one": ma["multiplicity_at_one"],
                          "zeros": cplx(ma["zeros"]), "poles": cplx(ma["poles"])}

    # brute force against the jump-linear recursion
    y0 = [0.0, 1.0, 3.0, 2.0, 5.0, 4.5]
    mb, vb = enumerate_paths([v], [0.5], y0)
    mr, vr = moment_recursion([v], [0.5], y0)
    out["enum_check_N1"] = float(max(np.max(abs(mb - np.array(mr))), np.max(abs(vb - np.array(vr)))))

    # correlated links, mixed strategies
    vm = homogeneous_vehicle("measurement_hold")
    y0 = [35.0 * k for k in range(7)]
    mj, vj = enumerate_paths([v, vm], None, y0, pmf=[((1, 1), 0.8), ((0, 0), 0.2)])
    out["enum_joint_N2"] = {"mu_zeta": mj.tolist(), "P_zeta": vj.tolist()}

    # short trajectories for the moment tests: N=2, p=(0.7, 0.6), ramp 35, T=6
    v2 = homogeneous_vehicle("error_hold_control_hold")
    y0 = [35.0 * k for k in range(7)]
    mu, var = moment_recursion([v2, v2], [0.7, 0.6], y0)
    out["traj_N2_ehch"] = {"mu_zeta": [m.tolist() for m in mu], "P_zeta": [c.tolist() for c in var]}

    # long recursion: stationary values under a ramp
    for p in (0.9,):
        mu, var = moment_recursion([v], [p], [35.0 * k for k in range(2001)])
        out["stationary_ehch_%s" % p] = {"mu_zeta": mu[-1].tolist(), "P_zeta": var[-1].tolist()}
    vh = homogeneous_vehicle("measurement_hold")
    mu, var = moment_recursion([vh], [0.95], [35.0 * k for k in range(2001)])
    out["stationary_mh_0.95"] = {"mu_zeta": mu[-1].tolist(), "P_zeta": var[-1].tolist()}
    vz = homogeneous_vehicle("measurement_to_zero")
    mu, var = moment_recursion([vz], [0.98], [35.0 * k for k in range(2001)])
    out["stationary_mtz_0.98"] = {"mu_zeta": mu[-1].tolist(), "P_zeta": var[-1].tolist()}

    # closed loops of single vehicles
    hv = homogeneous_vehicle("error_hold_control_hold", exact=True)
    out["T_homogeneous"] = exact_T(hv.gnum, hv.gden, hv.knum, hv.kden, hv.h)
    out["T_VA_printed"] = exact_T([1], [1, -1], [1, 0], from_roots(R(1), [R(1), R("0.7")]), "3.8")
    out["T_VB_printed"] = exact_T(["1.2"], [1, -1], ["1.33", 0], from_roots(R(1), [R(1), R("0.88")]), "3.8")
    h38 = 3.8 / 4.8
    VA = Vehicle([1.0], [1.0, -1.0], from_roots(1.4 / 4.8, [0.0, 0.86]), from_roots(1.0, [1.0, -0.78, h38]), 3.8,
                 "error_hold_control_hold")
    VB = Vehicle([1.2], [1.0, -1.0], from_roots(1.0 / 1.2 / 4.8, [0.0, 0.84]), from_roots(1.0, [1.0, -0.7, h38]),
                 3.8, "error_hold_control_hold")
    out["radii_VA"] = {str(p): radii([VA], [p]) for p in (0.83, 0.84, 0.87)}
    out["radii_VB"] = {str(p): radii([VB], [p]) for p in (0.68, 0.69, 0.87)}
    out["radii_AB_0.87"] = radii([VA, VB], [0.87, 0.87])
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
