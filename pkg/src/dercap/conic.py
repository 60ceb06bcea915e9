"""Dense second-order cone solver for linear objectives.

Problem form:

    minimize    c'x
    subject to  a_eq x = b_eq
                lower <= x <= upper        (+-inf allowed)
                ||x[u]|| <= x[t]           for each cone (t, u...)

Solved by a primal-dual interior-point method on the homogeneous self-dual
embedding with Nesterov-Todd scaling and Mehrotra correction, so infeasible
problems terminate with a Farkas-type certificate instead of an iteration
failure.  All linear algebra is dense; intended for problems up to a few
thousand variables.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve


class ConicError(Exception):
    pass


@dataclass(frozen=True)
class ConicProblem:
    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    cones: tuple[tuple[int, ...], ...]  # (t, u1, u2, ...) meaning ||u|| <= t
    names: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.c)
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "a_eq", np.atleast_2d(np.asarray(self.a_eq, dtype=float))
                           if np.size(self.a_eq) else np.zeros((0, n)))
        object.__setattr__(self, "b_eq", np.asarray(self.b_eq, dtype=float).ravel())
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "cones", tuple(tuple(int(i) for i in cn)
                                                for cn in self.cones))
        if self.a_eq.shape[1] != n or len(self.b_eq) != self.a_eq.shape[0]:
            raise ConicError("equality system dimensions inconsistent")
        if len(self.lower) != n or len(self.upper) != n:
            raise ConicError("box bound dimensions inconsistent")
        if np.any(self.lower > self.upper):
            raise ConicError("lower bound exceeds upper bound")
        for cn in self.cones:
            if len(cn) < 2:
                raise ConicError("a cone needs a radius index and one member")
            if any(i < 0 or i >= n for i in cn):
                raise ConicError("cone index out of range")
            if cn[0] in cn[1:]:
                raise ConicError("cone radius index repeated among members")
            if len(set(cn[1:])) != len(cn[1:]):
                raise ConicError("variable repeated inside one cone")
        if self.names and len(self.names) != n:
            raise ConicError("name map length mismatch")

    @property
    def n(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class SolverOptions:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 200


@dataclass(frozen=True)
class KktReport:
    primal: float
    dual: float
    gap: float


@dataclass(frozen=True)
class ConicSolution:
    status: str  # optimal | infeasible | unbounded | max-iterations
    x: np.ndarray
    duals: dict
    objective: float
    kkt_residuals: KktReport
    certificate: dict | None = None  # Farkas dual ray when infeasible
    ray: np.ndarray | None = None    # primal ray when unbounded
    iterations: int = 0


# ---------------------------------------------------------------------------
# cone algebra over the concatenated (nonneg, soc...) slack space


class _ConeSpace:
    """Nonnegative orthant of size l followed by SOC blocks of given dims."""

    def __init__(self, l: int, soc_dims: list[int]):
        self.l = l
        self.soc_dims = list(soc_dims)
        self.dim = l + sum(soc_dims)
        self.degree = l + len(soc_dims)
        self._starts = []
        ofs = l
        for d in soc_dims:
            self._starts.append(ofs)
            ofs += d

    def blocks(self, v: np.ndarray):
        for st, d in zip(self._starts, self.soc_dims):
            yield v[st:st + d]

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[:self.l] = 1.0
        for st in self._starts:
            e[st] = 1.0
        return e

    def inside(self, v: np.ndarray, margin: float = 0.0) -> bool:
        if self.l and np.min(v[:self.l]) <= margin:
            return False
        for b in self.blocks(v):
            if b[0] - np.linalg.norm(b[1:]) <= margin:
                return False
        return True

    def min_measure(self, v: np.ndarray) -> float:
        """Smallest cone margin; negative when outside the cone."""
        vals = [math.inf]
        if self.l:
            vals.append(float(np.min(v[:self.l])))
        for b in self.blocks(v):
            vals.append(float(b[0] - np.linalg.norm(b[1:])))
        return min(vals)

    def shift_inside(self, v: np.ndarray) -> np.ndarray:
        """v + (1 + alpha) e if v is not comfortably interior."""
        alpha = -self.min_measure(v)
        if alpha < -1e-8 * max(1.0, np.linalg.norm(v)):
            return v.copy()
        return v + (1.0 + max(alpha, 0.0)) * self.identity()

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Jordan product u o v."""
        out = np.empty(self.dim)
        out[:self.l] = u[:self.l] * v[:self.l]
        for st, d in zip(self._starts, self.soc_dims):
            ub, vb = u[st:st + d], v[st:st + d]
            out[st] = ub @ vb
            out[st + 1:st + d] = ub[0] * vb[1:] + vb[0] * ub[1:]
        return out

    def solve_product(self, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Solve lam o x = d for x (lam interior)."""
        out = np.empty(self.dim)
        out[:self.l] = d[:self.l] / lam[:self.l]
        for st, dd in zip(self._starts, self.soc_dims):
            lb, db = lam[st:st + dd], d[st:st + dd]
            a = lb[0]
            bn2 = lb[1:] @ lb[1:]
            x0 = (a * db[0] - lb[1:] @ db[1:]) / (a * a - bn2)
            out[st] = x0
            out[st + 1:st + dd] = (db[1:] - x0 * lb[1:]) / a
        return out

    def max_step(self, v: np.ndarray, dv: np.ndarray) -> float:
        """Largest alpha with v + alpha*dv in the closed cone."""
        alpha = math.inf
        if self.l:
            neg = dv[:self.l] < 0
            if neg.any():
                alpha = min(alpha, float(np.min(-v[:self.l][neg] / dv[:self.l][neg])))
        for st, d in zip(self._starts, self.soc_dims):
            vb, db = v[st:st + d], dv[st:st + d]
            a = db[0]**2 - db[1:] @ db[1:]
            b = 2.0 * (vb[0] * db[0] - vb[1:] @ db[1:])
            cc = vb[0]**2 - vb[1:] @ vb[1:]
            # roots of a t^2 + b t + c = 0; c > 0 at an interior point
            step = math.inf
            if abs(a) < 1e-16:
                if b < 0:
                    step = -cc / b
            else:
                disc = b * b - 4 * a * cc
                if disc >= 0:
                    sq = math.sqrt(disc)
                    roots = [(-b - sq) / (2 * a), (-b + sq) / (2 * a)]
                    pos = [r for r in roots if r > 0]
                    if a < 0:
                        step = min(pos) if pos else math.inf
                    elif b < 0 and pos:
                        step = min(pos)
            # also the apex constraint v0 + alpha d0 >= 0
            if db[0] < 0:
                step = min(step, -vb[0] / db[0])
            alpha = min(alpha, step)
        return alpha


class _Scaling:
    """Nesterov-Todd scaling W with lam = W z = W^{-1} s."""

    def __init__(self, space: _ConeSpace, s: np.ndarray, z: np.ndarray):
        self.space = space
        l = space.l
        self.w_lin = np.sqrt(s[:l] / z[:l]) if l else np.zeros(0)
        self.soc = []
        for st, d in zip(space._starts, space.soc_dims):
            sb, zb = s[st:st + d], z[st:st + d]
            a = math.sqrt(sb[0]**2 - sb[1:] @ sb[1:])
            b = math.sqrt(zb[0]**2 - zb[1:] @ zb[1:])
            sbar, zbar = sb / a, zb / b
            gamma = math.sqrt((1.0 + sbar @ zbar) / 2.0)
            wbar = np.empty(d)
            wbar[0] = (sbar[0] + zbar[0]) / (2 * gamma)
            wbar[1:] = (sbar[1:] - zbar[1:]) / (2 * gamma)
            self.soc.append((st, d, math.sqrt(a / b), wbar))
        self.lam = self.apply(z)

    def _soc_apply(self, eta, wbar, x, inverse):
        # W = eta * [[w0, w1^T], [w1, I + w1 w1^T / (1 + w0)]] is the square
        # root of the quadratic representation 2*wbar*wbar^T - J; its inverse
        # has the same form with w1 negated and 1/eta.
        w0, w1 = wbar[0], wbar[1:]
        if inverse:
            w1 = -w1
        out = np.empty_like(x)
        dot = w1 @ x[1:]
        out[0] = w0 * x[0] + dot
        out[1:] = x[0] * w1 + x[1:] + (dot / (1.0 + w0)) * w1
        return out * eta if not inverse else out / eta

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        l = self.space.l
        out[:l] = self.w_lin * v[:l]
        for st, d, eta, wbar in self.soc:
            out[st:st + d] = self._soc_apply(eta, wbar, v[st:st + d], False)
        return out

    def apply_inv(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        l = self.space.l
        out[:l] = v[:l] / self.w_lin
        for st, d, eta, wbar in self.soc:
            out[st:st + d] = self._soc_apply(eta, wbar, v[st:st + d], True)
        return out

    def apply_inv2_mat(self, mat: np.ndarray) -> np.ndarray:
        """W^{-2} applied to each column of mat."""
        out = np.empty_like(mat)
        l = self.space.l
        out[:l] = mat[:l] / (self.w_lin**2)[:, None]
        for st, d, eta, wbar in self.soc:
            blk = mat[st:st + d]
            jw = wbar.copy()
            jw[1:] = -jw[1:]
            j_blk = blk.copy()
            j_blk[1:] = -j_blk[1:]
            out[st:st + d] = (2.0 * np.outer(jw, jw @ blk) - j_blk) / eta**2
        return out


# ---------------------------------------------------------------------------
# conversion of the box/cone form to (A, b, G, h, K)


class _Conversion:
    def __init__(self, problem: ConicProblem):
        n = problem.n
        fixed = problem.lower == problem.upper
        a_rows = [problem.a_eq]
        b_parts = [problem.b_eq]
        self.n_orig_eq = problem.a_eq.shape[0]
        self.fixed_idx = np.flatnonzero(fixed)
        if len(self.fixed_idx):
            e = np.zeros((len(self.fixed_idx), n))
            e[np.arange(len(self.fixed_idx)), self.fixed_idx] = 1.0
            a_rows.append(e)
            b_parts.append(problem.lower[self.fixed_idx])
        a = np.vstack(a_rows)
        b = np.concatenate(b_parts)
        # drop empty equality rows (presolve); an empty row with nonzero rhs is
        # certified infeasible by the unit vector on that row
        norms = np.linalg.norm(a, axis=1)
        self.empty_bad = None
        keep = norms > 0
        for i in np.flatnonzero(~keep):
            if abs(b[i]) > 1e-12:
                self.empty_bad = i
        self.keep_eq = np.flatnonzero(keep)
        a = a[keep]
        b = b[keep]
        scale = np.maximum(np.linalg.norm(a, axis=1), 1e-12) if len(a) else np.zeros(0)
        self.eq_scale = scale
        self.a = a / scale[:, None] if len(a) else a
        self.b = b / scale if len(a) else b

        g_rows = []
        h_parts = []
        self.upper_rows = []  # (var, row) pairs
        self.lower_rows = []
        for i in range(n):
            if fixed[i]:
                continue
            if np.isfinite(problem.upper[i]):
                row = np.zeros(n)
                row[i] = 1.0
                self.upper_rows.append((i, len(g_rows)))
                g_rows.append(row)
                h_parts.append(problem.upper[i])
            if np.isfinite(problem.lower[i]):
                row = np.zeros(n)
                row[i] = -1.0
                self.lower_rows.append((i, len(g_rows)))
                g_rows.append(row)
                h_parts.append(-problem.lower[i])
        self.n_lin = len(g_rows)
        self.cone_starts = []
        soc_dims = []
        for cn in problem.cones:
            self.cone_starts.append(len(g_rows))
            for idx in cn:
                row = np.zeros(n)
                row[idx] = -1.0
                g_rows.append(row)
                h_parts.append(0.0)
            soc_dims.append(len(cn))
        self.g = np.array(g_rows) if g_rows else np.zeros((0, n))
        self.h = np.array(h_parts) if h_parts else np.zeros(0)
        # every G row holds a single +-1 entry; record its column so the
        # normal matrix G' W^-2 G can be scattered instead of multiplied
        self.g_idx = (np.argmax(np.abs(self.g), axis=1)
                      if g_rows else np.zeros(0, dtype=int))
        self.space = _ConeSpace(self.n_lin, soc_dims)
        self.problem = problem

    def duals_from(self, y: np.ndarray, z: np.ndarray) -> dict:
        n = self.problem.n
        y_full = np.zeros(self.n_orig_eq + len(self.fixed_idx))
        y_full[self.keep_eq] = y / self.eq_scale
        lower = np.zeros(n)
        upper = np.zeros(n)
        for i, row in self.upper_rows:
            upper[i] = z[row]
        for i, row in self.lower_rows:
            lower[i] = z[row]
        # equality multipliers for fixed variables split into box multipliers
        fv = y_full[self.n_orig_eq:]
        for k, i in enumerate(self.fixed_idx):
            upper[i] += max(fv[k], 0.0)
            lower[i] += max(-fv[k], 0.0)
        cones = []
        for st, cn in zip(self.cone_starts, self.problem.cones):
            cones.append(z[st:st + len(cn)].copy())
        return {"eq": y_full[:self.n_orig_eq], "lower": lower, "upper": upper,
                "cones": cones}


def _structured_h(n: int, g_idx: np.ndarray, scaling: _Scaling) -> np.ndarray:
    """G' W^-2 G assembled from single-entry G rows.

    Bound rows add 1/w^2 on the diagonal (the +-1 signs square away); each
    SOC block adds its dense d x d inverse-squared scaling on the cone's
    variable indices.
    """
    h_mat = np.zeros((n, n))
    l = scaling.space.l
    if l:
        lin = g_idx[:l]
        np.add.at(h_mat, (lin, lin), 1.0 / scaling.w_lin**2)
    for st, d, eta, wbar in scaling.soc:
        jw = wbar.copy()
        jw[1:] = -jw[1:]
        blk = 2.0 * np.outer(jw, jw)
        blk[np.arange(1, d), np.arange(1, d)] += 1.0
        blk[0, 0] -= 1.0
        v = g_idx[st:st + d]
        h_mat[np.ix_(v, v)] += blk / eta**2
    return h_mat


def _kkt_factor(a: np.ndarray, g: np.ndarray, scaling: _Scaling,
                g_idx: np.ndarray | None = None):
    n = g.shape[1] if g.size else a.shape[1]
    p = a.shape[0]
    if g.shape[0]:
        if g_idx is not None:
            h_mat = _structured_h(n, g_idx, scaling)
        else:
            h_mat = g.T @ scaling.apply_inv2_mat(g)
    else:
        h_mat = np.zeros((n, n))
    kkt = np.zeros((n + p, n + p))
    kkt[:n, :n] = h_mat
    kkt[:n, n:] = a.T
    kkt[n:, :n] = a
    return lu_factor(kkt)


def _kkt_solve(lu, a, g, scaling, rx, ry, rz):
    """Solve [0 A' G'; A 0 0; G 0 -W'W] (ux,uy,uz) = (rx,ry,rz).

    Eliminating uz = W^-2 (G ux - rz) leaves the symmetric quasi-definite
    system [H A'; A 0] with H = G' W^-2 G.
    """
    n = g.shape[1] if g.size else a.shape[1]
    if g.shape[0]:
        winv2_rz = scaling.apply_inv2_mat(rz[:, None])[:, 0]
        rhs = np.concatenate([rx + g.T @ winv2_rz, ry])
    else:
        rhs = np.concatenate([rx, ry])
    sol = lu_solve(lu, rhs)
    ux, uy = sol[:n], sol[n:]
    if g.shape[0]:
        uz = scaling.apply_inv2_mat((g @ ux)[:, None])[:, 0] - winv2_rz
    else:
        uz = np.zeros(0)
    return ux, uy, uz


def solve(problem: ConicProblem, opts: SolverOptions | None = None) -> ConicSolution:
    """Solve the conic problem; deterministic for identical inputs."""
    opts = opts or SolverOptions()
    conv = _Conversion(problem)
    if conv.empty_bad is not None:
        return _empty_row_infeasible(problem, conv)
    a, b, g, h = conv.a, conv.b, conv.g, conv.h
    space = conv.space
    n, p, m = problem.n, a.shape[0], g.shape[0]
    c = problem.c

    if m == 0:
        return _solve_equality_only(problem, conv, opts)

    # initial point: least-norm primal/dual guesses shifted into the cone
    ident = _Scaling(space, space.identity(), space.identity())
    lu0 = _kkt_factor(a, g, ident, conv.g_idx)
    x0, _, u0 = _kkt_solve(lu0, a, g, ident, np.zeros(n), b, h)
    s = space.shift_inside(h - g @ x0)
    _, y0, z0 = _kkt_solve(lu0, a, g, ident, -c, np.zeros(p), np.zeros(m))
    z = space.shift_inside(z0)
    x, y = x0, y0
    tau, kappa = 1.0, 1.0

    cnorm = max(1.0, np.linalg.norm(c))
    bnorm = max(1.0, np.linalg.norm(b))
    hnorm = max(1.0, np.linalg.norm(h))
    deg = space.degree + 1

    status = "max-iterations"
    n_iter = 0
    for n_iter in range(1, opts.max_iter + 1):
        r1 = a.T @ y + g.T @ z + c * tau
        r2 = a @ x - b * tau
        r3 = g @ x + s - h * tau
        r4 = c @ x + b @ y + h @ z + kappa
        mu = (s @ z + tau * kappa) / deg

        # convergence checks at the scaled point
        xs, ys, zs, ss = x / tau, y / tau, z / tau, s / tau
        pres = max(np.linalg.norm(a @ xs - b) / bnorm,
                   np.linalg.norm(g @ xs + ss - h) / hnorm)
        dres = np.linalg.norm(a.T @ ys + g.T @ zs + c) / cnorm
        pcost = c @ xs
        dcost = -(b @ ys + h @ zs)
        gap = ss @ zs
        relgap = gap / max(1.0, abs(pcost))
        if pres <= opts.tol_feas and dres <= opts.tol_feas and \
                (gap <= opts.tol_gap or relgap <= opts.tol_gap):
            status = "optimal"
            break

        # infeasibility / unboundedness certificates
        by_hz = b @ y + h @ z
        if by_hz < -1e-10:
            cert_res = np.linalg.norm(a.T @ y + g.T @ z) / cnorm / (-by_hz)
            if cert_res <= opts.tol_feas * 10 and mu <= 1e-8 * max(1.0, tau):
                return _infeasible_solution(problem, conv, y, z, n_iter)
        cx = c @ x
        if cx < -1e-10:
            ray_res = max(np.linalg.norm(a @ x), np.linalg.norm(g @ x + s)) / (-cx)
            if ray_res <= opts.tol_feas * 10 and mu <= 1e-8 * max(1.0, tau):
                return _unbounded_solution(problem, x / (-cx), n_iter)

        scaling = _Scaling(space, s, z)
        lam = scaling.lam
        try:
            lu = _kkt_factor(a, g, scaling, conv.g_idx)
        except Exception:
            break
        # direction of the (c, b, h) system, reused for tau elimination
        qx, qy, qz = _kkt_solve(lu, a, g, scaling, -c, b, h)

        def direction(res_fac, ds_rhs, dk_rhs):
            bx = -res_fac * r1
            by = -res_fac * r2
            dtil = space.solve_product(lam, ds_rhs)
            bz = -res_fac * r3 - scaling.apply(dtil)
            px, py, pz = _kkt_solve(lu, a, g, scaling, bx, by, bz)
            rhs_tau = -res_fac * r4 - dk_rhs / tau
            denom = c @ qx + b @ qy + h @ qz - kappa / tau  # strictly negative
            dtau = (rhs_tau - (c @ px + b @ py + h @ pz)) / denom
            dx = px + dtau * qx
            dy = py + dtau * qy
            dz = pz + dtau * qz
            # recover ds and dk from the residual equations rather than the
            # scaled complementarity, which loses accuracy as W blows up near
            # the boundary
            ds = -res_fac * r3 - g @ dx + h * dtau
            dk = -res_fac * r4 - (c @ dx + b @ dy + h @ dz)
            return dx, dy, dz, ds, dtau, dk

        # affine (predictor) direction
        ds_aff_rhs = -space.product(lam, lam)
        dk_aff_rhs = -tau * kappa
        dxa, dya, dza, dsa, dta, dka = direction(1.0, ds_aff_rhs, dk_aff_rhs)
        alpha_aff = _step_length(space, s, z, tau, kappa, dsa, dza, dta, dka)
        rho = ((s + alpha_aff * dsa) @ (z + alpha_aff * dza)
               + (tau + alpha_aff * dta) * (kappa + alpha_aff * dka)) / (s @ z + tau * kappa)
        sigma = min(1.0, max(0.0, rho))**3

        # combined (corrector) direction
        corr = space.product(scaling.apply_inv(dsa), scaling.apply(dza))
        ds_rhs = -space.product(lam, lam) + sigma * mu * space.identity() - corr
        dk_rhs = -tau * kappa + sigma * mu - dta * dka
        dx, dy, dz, ds, dtau, dk = direction(1.0 - sigma, ds_rhs, dk_rhs)
        alpha = 0.99 * _step_length(space, s, z, tau, kappa, ds, dz, dtau, dk)
        alpha = min(alpha, 1.0)
        if not np.isfinite(alpha) or alpha <= 1e-14:
            break  # stalled on a knife-edge problem; classify below
        x_n = x + alpha * dx
        y_n = y + alpha * dy
        z_n = z + alpha * dz
        s_n = s + alpha * ds
        tau_n = tau + alpha * dtau
        kappa_n = kappa + alpha * dk
        finite = (np.all(np.isfinite(x_n)) and np.all(np.isfinite(y_n))
                  and np.all(np.isfinite(z_n)) and np.all(np.isfinite(s_n))
                  and math.isfinite(tau_n) and math.isfinite(kappa_n))
        if not finite:
            break  # keep the last finite iterate for classification
        x, y, z, s, tau, kappa = x_n, y_n, z_n, s_n, tau_n, kappa_n

    # final classification for non-optimal exits
    if status != "optimal":
        by_hz = b @ y + h @ z
        cx = c @ x
        mu = (s @ z + tau * kappa) / deg
        if kappa / max(tau, 1e-300) > 1e6 or (tau < 1e-10 and kappa > 1e-10):
            if by_hz < 0 and np.linalg.norm(a.T @ y + g.T @ z) / cnorm / (-by_hz) < 1e-6:
                return _infeasible_solution(problem, conv, y, z, n_iter)
            if cx < 0 and max(np.linalg.norm(a @ x),
                              np.linalg.norm(g @ x + s)) / (-cx) < 1e-6:
                return _unbounded_solution(problem, x / (-cx), n_iter)

    xs = x / tau
    duals = conv.duals_from(y / tau, z / tau)
    report = check_kkt_point(problem, xs, duals)
    return ConicSolution(status, xs, duals, float(problem.c @ xs), report,
                         iterations=n_iter)


def _step_length(space, s, z, tau, kappa, ds, dz, dtau, dkappa) -> float:
    alpha = min(space.max_step(s, ds), space.max_step(z, dz))
    if dtau < 0:
        alpha = min(alpha, -tau / dtau)
    if dkappa < 0:
        alpha = min(alpha, -kappa / dkappa)
    return min(alpha, 1e8)


def _infeasible_solution(problem, conv, y, z, n_iter) -> ConicSolution:
    by_hz = conv.b @ y + conv.h @ z
    scale = -by_hz
    cert = conv.duals_from(y / scale, z / scale)
    cert["value"] = float(by_hz / scale)  # normalized to -1
    n = problem.n
    return ConicSolution("infeasible", np.full(n, np.nan), {}, math.nan,
                         KktReport(math.inf, math.inf, math.inf),
                         certificate=cert, iterations=n_iter)


def _unbounded_solution(problem, ray, n_iter) -> ConicSolution:
    return ConicSolution("unbounded", np.full(problem.n, np.nan), {}, -math.inf,
                         KktReport(math.inf, math.inf, math.inf),
                         ray=ray, iterations=n_iter)


def _empty_row_infeasible(problem, conv) -> ConicSolution:
    # an all-zero equality row with nonzero rhs is its own certificate
    i = conv.empty_bad
    n_eq_total = conv.n_orig_eq + len(conv.fixed_idx)
    y = np.zeros(n_eq_total)
    rhs = (np.concatenate([problem.b_eq, problem.lower[conv.fixed_idx]])
           if len(conv.fixed_idx) else problem.b_eq)
    y[i] = -1.0 / rhs[i]
    cert = {"eq": y[:conv.n_orig_eq], "lower": np.zeros(problem.n),
            "upper": np.zeros(problem.n),
            "cones": [np.zeros(len(cn)) for cn in problem.cones],
            "value": -1.0}
    return ConicSolution("infeasible", np.full(problem.n, np.nan), {}, math.nan,
                         KktReport(math.inf, math.inf, math.inf), certificate=cert)


def _solve_equality_only(problem, conv, opts) -> ConicSolution:
    # no boxes, no cones: stationarity c + A'y = 0 with Ax = b
    a, b, c = conv.a, conv.b, problem.c
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    y, *_ = np.linalg.lstsq(a.T, -c, rcond=None)
    duals = conv.duals_from(y, np.zeros(0))
    report = check_kkt_point(problem, x, duals)
    if report.primal > opts.tol_feas * 100:
        return _infeasible_solution(problem, conv, _farkas_from_lstsq(a, b), np.zeros(0), 0)
    status = "optimal" if report.dual <= opts.tol_feas * 100 else "unbounded"
    return ConicSolution(status, x, duals, float(c @ x), report)


def _farkas_from_lstsq(a, b):
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    r = a @ x - b
    return r / (r @ b) if abs(r @ b) > 0 else r


# ---------------------------------------------------------------------------
# independent KKT verification


def check_kkt_point(problem: ConicProblem, x: np.ndarray, duals: dict) -> KktReport:
    """Recompute KKT residuals from the original problem data only."""
    n = problem.n
    eq = duals.get("eq", np.zeros(problem.a_eq.shape[0]))
    lo = duals.get("lower", np.zeros(n))
    up = duals.get("upper", np.zeros(n))
    cones = duals.get("cones", [np.zeros(len(cn)) for cn in problem.cones])

    # primal feasibility
    primal = 0.0
    if problem.a_eq.shape[0]:
        primal = float(np.max(np.abs(problem.a_eq @ x - problem.b_eq)))
    lo_viol = np.where(np.isfinite(problem.lower), problem.lower - x, 0.0)
    up_viol = np.where(np.isfinite(problem.upper), x - problem.upper, 0.0)
    primal = max(primal, float(np.max(lo_viol, initial=0.0)),
                 float(np.max(up_viol, initial=0.0)))
    for cn in problem.cones:
        primal = max(primal, float(np.linalg.norm(x[list(cn[1:])]) - x[cn[0]]))

    # stationarity: c + A'nu + mu_up - mu_lo - sum E_k' z_k = 0
    grad = problem.c.copy()
    if problem.a_eq.shape[0]:
        grad += problem.a_eq.T @ eq
    grad += up - lo
    for cn, zk in zip(problem.cones, cones):
        grad[cn[0]] -= zk[0]
        for j, idx in enumerate(cn[1:]):
            grad[idx] -= zk[1 + j]
    dual = float(np.max(np.abs(grad)))
    # dual cone feasibility folded into the dual residual
    dual = max(dual, float(np.max(-lo, initial=0.0)), float(np.max(-up, initial=0.0)))
    for zk in cones:
        dual = max(dual, float(np.linalg.norm(zk[1:]) - zk[0]))

    # complementarity
    gap = 0.0
    fin_up = np.isfinite(problem.upper)
    fin_lo = np.isfinite(problem.lower)
    gap += float(np.abs(up[fin_up] @ (problem.upper[fin_up] - x[fin_up])))
    gap += float(np.abs(lo[fin_lo] @ (x[fin_lo] - problem.lower[fin_lo])))
    for cn, zk in zip(problem.cones, cones):
        sk = np.concatenate([[x[cn[0]]], x[list(cn[1:])]])
        gap += abs(float(sk @ zk))
    scale = max(1.0, abs(float(problem.c @ x)))
    return KktReport(primal, dual, gap / scale)


def check_kkt(problem: ConicProblem, solution: ConicSolution) -> KktReport:
    if solution.status != "optimal":
        raise ConicError("KKT check requires an optimal solution")
    return check_kkt_point(problem, solution.x, solution.duals)


def certificate_residual(problem: ConicProblem, cert: dict) -> tuple[float, float]:
    """Soundness of a Farkas certificate: (stationarity residual, objective value).

    A sound certificate has near-zero residual and strictly negative value
    b'y + sum of bound terms, proving that no feasible point exists.
    """
    n = problem.n
    grad = np.zeros(n)
    value = 0.0
    eq = cert.get("eq", np.zeros(problem.a_eq.shape[0]))
    if problem.a_eq.shape[0]:
        grad += problem.a_eq.T @ eq
        value += float(problem.b_eq @ eq)
    lo = cert.get("lower", np.zeros(n))
    up = cert.get("upper", np.zeros(n))
    grad += up - lo
    fin_up = np.isfinite(problem.upper)
    fin_lo = np.isfinite(problem.lower)
    value += float(problem.upper[fin_up] @ up[fin_up])
    value -= float(problem.lower[fin_lo] @ lo[fin_lo])
    for cn, zk in zip(problem.cones, cert.get("cones", [])):
        grad[cn[0]] -= zk[0]
        for j, idx in enumerate(cn[1:]):
            grad[idx] -= zk[1 + j]
    return float(np.max(np.abs(grad))), value


# ---------------------------------------------------------------------------
# debug dump


def dump_problem(problem: ConicProblem) -> str:
    """Plain-text listing of the problem data (versioned format)."""
    buf = io.StringIO()
    buf.write("CONIC-DUMP v1\n")
    buf.write(f"variables {problem.n}\n")
    if problem.names:
        buf.write("names " + " ".join(problem.names) + "\n")
    buf.write("c " + " ".join(repr(v) for v in problem.c) + "\n")
    buf.write(f"equalities {problem.a_eq.shape[0]}\n")
    for row, rhs in zip(problem.a_eq, problem.b_eq):
        buf.write("  " + " ".join(repr(v) for v in row) + " = " + repr(rhs) + "\n")
    buf.write("boxes\n")
    for i in range(problem.n):
        buf.write(f"  {i} {problem.lower[i]!r} {problem.upper[i]!r}\n")
    buf.write(f"cones {len(problem.cones)}\n")
    for cn in problem.cones:
        buf.write("  " + " ".join(str(i) for i in cn) + "\n")
    return buf.getvalue()
