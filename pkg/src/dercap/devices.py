"""Device-level and network-free aggregated DER var flexibility.

Each inverter can move on the disc p^2 + q^2 <= S^2 with its real output
capped by the available solar power.  Aggregation over units gives the
substation-level envelope; the unsaturated optimum splits total output in
proportion to the apparent-power ratings, giving the closed form
q = sqrt((sum S)^2 - p^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class DeviceError(Exception):
    pass


@dataclass(frozen=True)
class DerUnit:
    id: int
    node: int
    phase: str
    s_kva: float
    p_rated_kw: float
    p_avail_kw: float

    def __post_init__(self):
        if self.s_kva <= 0:
            raise DeviceError(f"unit {self.id}: s_kva must be positive")
        if not (0.0 <= self.p_avail_kw <= self.p_rated_kw + 1e-9):
            raise DeviceError(
                f"unit {self.id}: p_avail {self.p_avail_kw} outside [0, {self.p_rated_kw}]")

    def with_avail(self, p_avail_kw: float) -> "DerUnit":
        return replace(self, p_avail_kw=p_avail_kw)


@dataclass(frozen=True)
class EnvelopeBound:
    q_min: float
    q_max: float
    saturated: bool = False


@dataclass(frozen=True)
class AggregateEnvelope:
    samples: tuple[tuple[float, float, float], ...]  # (p_kw, q_min, q_max)


def device_q_bounds(unit: DerUnit, p_gen: float) -> tuple[float, float]:
    """Var headroom of one inverter at real output p_gen."""
    if p_gen < -1e-12 or p_gen > unit.p_avail_kw + 1e-9:
        raise DeviceError(
            f"unit {unit.id}: p_gen {p_gen} exceeds availability {unit.p_avail_kw}")
    head = math.sqrt(max(unit.s_kva**2 - min(p_gen, unit.s_kva)**2, 0.0))
    return -head, head


def proportional_allocation(units: list[DerUnit], p_sub: float) -> np.ndarray:
    """Split total output p_sub across units in ratio of S ratings.

    Units whose proportional share exceeds availability are clamped and the
    remainder is re-allocated among the rest, preserving the total.
    """
    avail = np.array([u.p_avail_kw for u in units])
    if p_sub < -1e-9 or p_sub > avail.sum() + 1e-9:
        raise DeviceError(f"p_sub {p_sub} outside [0, {avail.sum()}]")
    p_sub = min(max(p_sub, 0.0), float(avail.sum()))
    s = np.array([u.s_kva for u in units])
    out = np.zeros(len(units))
    free = np.ones(len(units), dtype=bool)
    remaining = p_sub
    for _ in range(len(units)):
        if remaining <= 1e-12 or not free.any():
            break
        share = remaining * s[free] / s[free].sum()
        over = share > avail[free] + 1e-12
        idx = np.flatnonzero(free)
        if not over.any():
            out[idx] = share
            remaining = 0.0
            break
        clamp = idx[over]
        out[clamp] = avail[clamp]
        remaining -= avail[clamp].sum()
        free[clamp] = False
    return out


def allocation_saturates(units: list[DerUnit], p_sub: float) -> bool:
    s = np.array([u.s_kva for u in units])
    avail = np.array([u.p_avail_kw for u in units])
    share = p_sub * s / s.sum()
    return bool((share > avail + 1e-12).any())


def analytic_envelope(units: list[DerUnit], p_sub: float) -> EnvelopeBound:
    """Closed-form envelope; falls back to the conic solve when clamping occurs."""
    if allocation_saturates(units, p_sub):
        bound = numeric_envelope(units, p_sub)
        return replace(bound, saturated=True)
    total_s = sum(u.s_kva for u in units)
    q = math.sqrt(max(total_s**2 - p_sub**2, 0.0))
    return EnvelopeBound(-q, q, saturated=False)


def numeric_envelope(units: list[DerUnit], p_sub: float) -> EnvelopeBound:
    """Envelope from the convex aggregation problem (min and max total q)."""
    from .conic import ConicProblem, solve

    n = len(units)
    avail = np.array([u.p_avail_kw for u in units])
    s = np.array([u.s_kva for u in units])
    if p_sub < -1e-9 or p_sub > avail.sum() + 1e-9:
        raise DeviceError(f"p_sub {p_sub} outside [0, {avail.sum()}]")
    # variables: q_i (n), p_i (n), t_i (n, fixed at S_i)
    nv = 3 * n
    a_eq = np.zeros((1, nv))
    a_eq[0, n:2 * n] = 1.0
    b_eq = np.array([p_sub])
    lower = np.full(nv, -np.inf)
    upper = np.full(nv, np.inf)
    lower[:n] = -s
    upper[:n] = s
    lower[n:2 * n] = 0.0
    upper[n:2 * n] = avail
    lower[2 * n:] = s
    upper[2 * n:] = s
    cones = [(2 * n + i, n + i, i) for i in range(n)]
    names = ([f"q[{i}]" for i in range(n)] + [f"p[{i}]" for i in range(n)]
             + [f"s[{i}]" for i in range(n)])
    vals = []
    for sign in (1.0, -1.0):
        c = np.zeros(nv)
        c[:n] = sign
        prob = ConicProblem(c, a_eq, b_eq, lower, upper, cones, names)
        sol = solve(prob)
        if sol.status != "optimal":
            raise DeviceError(f"envelope solve failed: {sol.status}")
        vals.append(float(np.sum(sol.x[:n])))
    q_min_attained, q_max_attained = vals
    return EnvelopeBound(q_min_attained, q_max_attained,
                         saturated=allocation_saturates(units, p_sub))


def aggregate_envelope(units: list[DerUnit], n_samples: int = 101) -> AggregateEnvelope:
    """Sampled (p, q_min, q_max) envelope over the feasible output range."""
    total = sum(u.p_avail_kw for u in units)
    samples = []
    for p_sub in np.linspace(0.0, total, n_samples):
        b = analytic_envelope(units, float(p_sub))
        samples.append((float(p_sub), b.q_min, b.q_max))
    return AggregateEnvelope(tuple(samples))
