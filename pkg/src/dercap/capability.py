"""Aggregated net var capability of a feeder versus DER curtailment.

The feeder-level optimization dispatches each inverter's var output and
curtailed real output subject to the linearized voltage model, ANSI voltage
limits, inverter apparent-power cones, and a total-curtailment equality.  The
capacitive bound minimizes net substation var demand and the inductive bound
maximizes it (solved lossless, with losses re-added at the optimum).  Bounds
are reported both at the nominal grid-side voltage and in the worst case over
a grid-voltage range, using the tap decoupling range to decide which re-solves
are needed.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .conic import ConicProblem, SolverOptions, solve
from .feeder import (FeederModel, FeederSensitivities, OperatingPoint,
                     SubstationParams, compute_sensitivities,
                     estimate_loss_constants, line_flows, net_injections_pu,
                     net_substation_var, solve_voltages)

ANSI_V_MIN = 0.95
ANSI_V_MAX = 1.05
V_TM_MIN_DEFAULT = 0.9
V_TM_MAX_DEFAULT = 1.1
DEFAULT_GRID = tuple(round(0.05 * k, 2) for k in range(21))


class CapabilityError(Exception):
    pass


# ---------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class OpfResult:
    """One capability solve: substation var bound and the achieving dispatch."""

    q_kvar: float
    dispatch_p_kw: np.ndarray
    dispatch_q_kvar: np.ndarray
    v0_star: float
    feasible: bool
    status: str
    certificate_norm: float = 0.0


@dataclass(frozen=True)
class DecouplingRange:
    lo: float
    hi: float

    def contains(self, v_tm: float) -> bool:
        return self.lo - 1e-12 <= v_tm <= self.hi + 1e-12

    def intersect(self, other: "DecouplingRange") -> "DecouplingRange":
        return DecouplingRange(max(self.lo, other.lo), min(self.hi, other.hi))


@dataclass(frozen=True)
class CapabilityInterval:
    nominal: tuple[float, float]
    eps_lower: float
    eps_upper: float
    d_lower: DecouplingRange
    d_upper: DecouplingRange
    worst_case: tuple[float, float]
    case_id: int
    wc_feasible_lower: bool = True
    wc_feasible_upper: bool = True


@dataclass(frozen=True)
class FlexibilityRange:
    a: float
    b: float
    q_base: float


@dataclass(frozen=True)
class CapabilityPoint:
    curtailment: float
    q_lower: float
    q_upper: float
    v0_star_lower: float
    v0_star_upper: float
    dispatch_lower: tuple[np.ndarray, np.ndarray] | None
    dispatch_upper: tuple[np.ndarray, np.ndarray] | None
    feasible_lower: bool
    feasible_upper: bool
    interval: CapabilityInterval | None = None
    flexibility: FlexibilityRange | None = None


@dataclass(frozen=True)
class CapabilityCurve:
    points: tuple[CapabilityPoint, ...]
    label: str
    v_tm: float
    q_base: float

    def __post_init__(self):
        grid = [pt.curtailment for pt in self.points]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise CapabilityError("curtailment grid must be strictly increasing")


@dataclass(frozen=True)
class DayAheadSurface:
    curves: tuple[tuple[CapabilityCurve, ...], ...]  # [hour][curtailment level]
    load_profile: tuple[float, ...]
    solar_profile: tuple[float, ...]
    curtailment_levels: tuple[float, ...]


@dataclass(frozen=True)
class Ieee1547Comparison:
    curtailed: DayAheadSurface   # rating-limited units with a curtailment floor
    oversized: DayAheadSurface   # inverters oversized, no curtailment
    rpfr_curtailed: tuple[FlexibilityRange, ...]
    rpfr_oversized: tuple[FlexibilityRange, ...]


# ---------------------------------------------------------------------------
# parallel map honouring the DERCAP_THREADS cap


def thread_count() -> int:
    env = os.environ.get("DERCAP_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def parallel_map(fn, items):
    """Order-preserving parallel map over independent solves."""
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# DER-OPF construction and the two bound solves


def build_der_opf(model: FeederModel, sens: FeederSensitivities,
                  op: OperatingPoint, curtailment: float, v_tm: float,
                  direction: str) -> ConicProblem:
    """Conic program for one capability bound.

    Decision variables (pu): per-DER var output q_j, per-DER real output
    u_j = p_avail_j (1 - cur_j), and the squared secondary voltage y0 (the
    tap enters through the box on y0).  Auxiliary: fixed cone radii t_j and
    linked squared node voltages yv.
    """
    if direction not in ("min", "max"):
        raise CapabilityError(f"direction must be 'min' or 'max', got {direction!r}")
    if not (0.0 <= curtailment <= 1.0):
        raise CapabilityError(f"curtailment {curtailment} outside [0, 1]")
    n = len(model.ders)
    d = model.index.dim
    base = model.base_kva
    avail = op.der_avail_kw / base
    s = np.array([u.s_kva for u in model.ders]) / base
    rows = model.der_row_indices()

    # variable layout: q (n), u (n), t (n), y0 (1), yv (d)
    nv = 3 * n + 1 + d
    i_q, i_u, i_t, i_y0, i_yv = 0, n, 2 * n, 3 * n, 3 * n + 1
    names = ([f"q[{k}]" for k in range(n)] + [f"u[{k}]" for k in range(n)]
             + [f"t[{k}]" for k in range(n)] + ["y0"]
             + [f"yv[{k}]" for k in range(d)])

    lower = np.full(nv, -np.inf)
    upper = np.full(nv, np.inf)
    lower[i_q:i_q + n] = -s
    upper[i_q:i_q + n] = s
    lower[i_u:i_u + n] = 0.0
    upper[i_u:i_u + n] = avail
    lower[i_t:i_t + n] = s
    upper[i_t:i_t + n] = s
    params = model.substation
    lower[i_y0] = (v_tm * params.r_min) ** 2
    upper[i_y0] = (v_tm * params.r_max) ** 2
    lower[i_yv:] = ANSI_V_MIN**2
    upper[i_yv:] = ANSI_V_MAX**2

    # voltage linking rows: yv - R E u - X E q - y0 = -R load_p - X load_q + l_c
    e = np.zeros((d, n))
    if n:
        e[rows, np.arange(n)] = 1.0
    load_p = op.load_p_kw / base
    load_q = op.load_q_kvar / base
    a_eq = np.zeros((d + 1, nv))
    b_eq = np.zeros(d + 1)
    a_eq[:d, i_yv:] = np.eye(d)
    a_eq[:d, i_u:i_u + n] = -sens.r_eq @ e
    a_eq[:d, i_q:i_q + n] = -sens.x_eq @ e
    a_eq[:d, i_y0] = -1.0
    b_eq[:d] = -sens.r_eq @ load_p - sens.x_eq @ load_q + sens.l_c
    # total-curtailment equality: sum u = (1 - C) sum avail
    a_eq[d, i_u:i_u + n] = 1.0
    b_eq[d] = (1.0 - curtailment) * float(avail.sum())

    cones = tuple((i_t + k, i_u + k, i_q + k) for k in range(n))
    c = np.zeros(nv)
    # net substation var = sum(load q) - sum(q_j) + frozen losses; min / max
    # over it reduces to -/+ max over sum(q_j)
    c[i_q:i_q + n] = -1.0 if direction == "min" else 1.0
    return ConicProblem(c, a_eq, b_eq, lower, upper, cones, names)


def decision_variable_count(problem: ConicProblem) -> int:
    """Number of free decision variables (per-DER q and u, plus y0)."""
    return sum(1 for nm in problem.names
               if nm.startswith(("q[", "u[")) or nm == "y0")


def _evaluate(model: FeederModel, sens: FeederSensitivities, op: OperatingPoint,
              sol, n: int) -> OpfResult:
    base = model.base_kva
    q_pu = sol.x[:n]
    u_pu = sol.x[n:2 * n]
    y0 = sol.x[3 * n]
    v0 = float(np.sqrt(max(y0, 1e-12)))
    der_p_kw = u_pu * base
    der_q_kvar = q_pu * base
    p, q = net_injections_pu(model, op, der_p_kw, der_q_kvar)
    y = solve_voltages(sens, p, q, v0)
    flows = line_flows(model, p, q, sens.l_p, sens.l_q)
    q_net = net_substation_var(model, op, der_q_kvar, y, flows)
    return OpfResult(q_net, der_p_kw, der_q_kvar, v0, True, sol.status)


def _solve_bound(model: FeederModel, sens: FeederSensitivities,
                 op: OperatingPoint, curtailment: float, v_tm: float,
                 direction: str, opts: SolverOptions | None = None) -> OpfResult:
    n = len(model.ders)
    if n == 0:
        # base demand exactly: no flexibility
        p, q = net_injections_pu(model, op, np.zeros(0), np.zeros(0))
        v0 = min(max(1.0, v_tm * model.substation.r_min),
                 v_tm * model.substation.r_max)
        y = solve_voltages(sens, p, q, v0)
        flows = line_flows(model, p, q, sens.l_p, sens.l_q)
        q_net = net_substation_var(model, op, np.zeros(0), y, flows)
        return OpfResult(q_net, np.zeros(0), np.zeros(0), v0, True, "optimal")
    avail_kw = np.asarray(op.der_avail_kw, dtype=float)
    s_kva = np.array([unit.s_kva for unit in model.ders])
    if curtailment == 0.0 and np.all(np.abs(s_kva - avail_kw) <= 1e-9):
        # degenerate point: no var headroom anywhere, so the dispatch is
        # fully determined (u = avail, q = 0) and solving reduces to finding
        # a feasible substation voltage.  Preferring v0 = 1 makes the bound
        # coincide exactly with the unity-power-factor base demand.
        params = model.substation
        base = model.base_kva
        p, q = net_injections_pu(model, op, avail_kw, np.zeros(n))
        y_unit = solve_voltages(sens, p, q, 1.0)
        drop = y_unit - 1.0
        y0_lo = max((v_tm * params.r_min) ** 2,
                    ANSI_V_MIN**2 - float(np.min(drop)))
        y0_hi = min((v_tm * params.r_max) ** 2,
                    ANSI_V_MAX**2 - float(np.max(drop)))
        if y0_lo <= y0_hi:
            y0 = min(max(1.0, y0_lo), y0_hi)
            y = y_unit if y0 == 1.0 else drop + y0
            flows = line_flows(model, p, q, sens.l_p, sens.l_q)
            q_net = net_substation_var(model, op, np.zeros(n), y, flows)
            return OpfResult(q_net, avail_kw.copy(), np.zeros(n),
                             float(np.sqrt(y0)), True, "optimal")
        # fall through so an infeasible verdict carries a solver certificate
    prob = build_der_opf(model, sens, op, curtailment, v_tm, direction)
    sol = solve(prob, opts)
    if sol.status == "optimal":
        return _evaluate(model, sens, op, sol, n)
    cert = float(np.linalg.norm(sol.x)) if sol.x is not None else 0.0
    return OpfResult(float("nan"), np.full(n, np.nan), np.full(n, np.nan),
                     float("nan"), False, sol.status, cert)


def capacitive_capability(model: FeederModel, sens: FeederSensitivities,
                          op: OperatingPoint, curtailment: float,
                          v_tm: float = 1.0,
                          opts: SolverOptions | None = None) -> OpfResult:
    """Lower (capacitive) net var bound: maximum aggregate var injection."""
    return _solve_bound(model, sens, op, curtailment, v_tm, "min", opts)


def inductive_capability(model: FeederModel, sens: FeederSensitivities,
                         op: OperatingPoint, curtailment: float,
                         v_tm: float = 1.0,
                         opts: SolverOptions | None = None) -> OpfResult:
    """Upper (inductive) net var bound via the lossless maximization.

    The solve drops the loss term (it is frozen, hence constant); the
    reported bound re-adds losses evaluated at the optimal dispatch.
    """
    return _solve_bound(model, sens, op, curtailment, v_tm, "max", opts)


def verify_dispatch(model: FeederModel, sens: FeederSensitivities,
                    op: OperatingPoint, result: OpfResult) -> float:
    """Max constraint violation of a dispatch under the forward model.

    Covers the ANSI voltage box (pu^2) and inverter cone margins; used to
    back the dispatch-feasibility invariant.
    """
    if not result.feasible:
        return 0.0
    p, q = net_injections_pu(model, op, result.dispatch_p_kw,
                             result.dispatch_q_kvar)
    y = solve_voltages(sens, p, q, result.v0_star)
    viol = max(float(np.max(ANSI_V_MIN**2 - y)), float(np.max(y - ANSI_V_MAX**2)), 0.0)
    for unit, pk, qk in zip(model.ders, result.dispatch_p_kw,
                            result.dispatch_q_kvar):
        viol = max(viol, float(np.hypot(pk, qk) - unit.s_kva) / model.base_kva)
    return viol


# ---------------------------------------------------------------------------
# base point, decoupling, worst case, interval, flexibility


def base_var_demand(model: FeederModel, sens: FeederSensitivities,
                    op: OperatingPoint) -> float:
    """Net substation var with all inverters at unity power factor.

    Real output is uncurtailed availability; the tap is set so v0 = 1
    (clamped to the tap range); losses are added at that point.
    """
    params = model.substation
    v0 = min(max(1.0, params.r_min), params.r_max)
    n = len(model.ders)
    p, q = net_injections_pu(model, op, op.der_avail_kw, np.zeros(n))
    y = solve_voltages(sens, p, q, v0)
    flows = line_flows(model, p, q, sens.l_p, sens.l_q)
    return net_substation_var(model, op, np.zeros(n), y, flows)


def decoupling_range(v0_star: float,
                     params: SubstationParams | None = None) -> DecouplingRange:
    """Grid-voltage range over which the tap can hold v0_star."""
    if v0_star <= 0:
        raise CapabilityError("v0_star must be positive")
    params = params or SubstationParams()
    return DecouplingRange(v0_star / params.r_max, v0_star / params.r_min)


def worst_case_bounds(model: FeederModel, sens: FeederSensitivities,
                      op: OperatingPoint, curtailment: float,
                      v_tm_min: float = V_TM_MIN_DEFAULT,
                      v_tm_max: float = V_TM_MAX_DEFAULT,
                      opts: SolverOptions | None = None
                      ) -> tuple[OpfResult, OpfResult]:
    """Re-solves at the adverse grid-voltage extremes.

    The capacitive (min) bound degrades at the highest grid voltage and the
    inductive (max, lossless) bound at the lowest; infeasible re-solves are
    carried as flags, not errors.
    """
    if not v_tm_min < v_tm_max:
        raise CapabilityError("v_tm_min must be below v_tm_max")
    wc_lower = capacitive_capability(model, sens, op, curtailment, v_tm_max, opts)
    wc_upper = inductive_capability(model, sens, op, curtailment, v_tm_min, opts)
    return wc_lower, wc_upper


def capability_interval(nominal_lower: OpfResult, nominal_upper: OpfResult,
                        wc_lower: OpfResult, wc_upper: OpfResult,
                        v_tm_min: float = V_TM_MIN_DEFAULT,
                        v_tm_max: float = V_TM_MAX_DEFAULT,
                        params: SubstationParams | None = None
                        ) -> CapabilityInterval:
    """Piecewise worst-case interval selection.

    If the tap can absorb the adverse voltage extreme (the extreme lies in
    the bound's decoupling range) the nominal bound stands; otherwise it is
    replaced by the adverse re-solve.  Four cases depending on which sides
    need replacement.
    """
    params = params or SubstationParams()
    d_lower = decoupling_range(nominal_lower.v0_star, params)
    d_upper = decoupling_range(nominal_upper.v0_star, params)
    lower_ok = d_lower.contains(v_tm_max)
    upper_ok = d_upper.contains(v_tm_min)
    if lower_ok and upper_ok:
        case_id = 1
    elif not lower_ok and upper_ok:
        case_id = 2
    elif lower_ok and not upper_ok:
        case_id = 3
    else:
        case_id = 4
    q_lo, q_hi = nominal_lower.q_kvar, nominal_upper.q_kvar
    # adverse re-solves can only shrink the interval; the small loss
    # re-addition noise that would widen it is clamped away
    wc_lo = q_lo if lower_ok else max(wc_lower.q_kvar, q_lo)
    wc_hi = q_hi if upper_ok else min(wc_upper.q_kvar, q_hi)
    eps_lower = q_lo - wc_lo
    eps_upper = q_hi - wc_hi
    return CapabilityInterval(
        (q_lo, q_hi), eps_lower, eps_upper, d_lower, d_upper,
        (wc_lo, wc_hi), case_id,
        wc_feasible_lower=lower_ok or wc_lower.feasible,
        wc_feasible_upper=upper_ok or wc_upper.feasible)


def rpfr(interval: CapabilityInterval, q_base: float) -> FlexibilityRange:
    """Relative var flexibility of the nominal interval around the base point."""
    if q_base == 0:
        raise CapabilityError("q_base must be nonzero for a relative range")
    q_lo, q_hi = interval.nominal
    return FlexibilityRange((q_lo - q_base) / q_base, (q_hi - q_base) / q_base,
                            q_base)


# ---------------------------------------------------------------------------
# sweeps


def capability_point(model: FeederModel, sens: FeederSensitivities,
                     op: OperatingPoint, curtailment: float,
                     v_tm: float = 1.0,
                     v_tm_min: float = V_TM_MIN_DEFAULT,
                     v_tm_max: float = V_TM_MAX_DEFAULT,
                     q_base: float | None = None,
                     opts: SolverOptions | None = None,
                     with_worst_case: bool = True) -> CapabilityPoint:
    """Nominal and worst-case bounds plus flexibility at one curtailment.

    ``with_worst_case=False`` skips the two adverse re-solves when only the
    nominal flexibility is wanted (the interval then reports the nominal
    bounds on both sides).
    """
    lo = capacitive_capability(model, sens, op, curtailment, v_tm, opts)
    hi = inductive_capability(model, sens, op, curtailment, v_tm, opts)
    interval = None
    flex = None
    if lo.feasible and hi.feasible:
        if with_worst_case:
            wc_lo, wc_hi = worst_case_bounds(model, sens, op, curtailment,
                                             v_tm_min, v_tm_max, opts)
        else:
            wc_lo, wc_hi = lo, hi
        interval = capability_interval(lo, hi, wc_lo, wc_hi,
                                       v_tm_min, v_tm_max, model.substation)
        if q_base is None:
            q_base = base_var_demand(model, sens, op)
        if q_base != 0:
            flex = rpfr(interval, q_base)
    return CapabilityPoint(
        curtailment, lo.q_kvar, hi.q_kvar, lo.v0_star, hi.v0_star,
        (lo.dispatch_p_kw, lo.dispatch_q_kvar) if lo.feasible else None,
        (hi.dispatch_p_kw, hi.dispatch_q_kvar) if hi.feasible else None,
        lo.feasible, hi.feasible, interval, flex)


def curtailment_sweep(model: FeederModel, op: OperatingPoint,
                      grid=DEFAULT_GRID, v_tm: float = 1.0,
                      sens: FeederSensitivities | None = None,
                      v_tm_min: float = V_TM_MIN_DEFAULT,
                      v_tm_max: float = V_TM_MAX_DEFAULT,
                      opts: SolverOptions | None = None) -> CapabilityCurve:
    """Independent capability solves over a curtailment grid."""
    grid = [float(g) for g in grid]
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise CapabilityError("curtailment grid must lie in [0, 1]")
    if sens is None:
        l_p, l_q = estimate_loss_constants(model, op)
        sens = compute_sensitivities(model, l_p, l_q)
    q_base = base_var_demand(model, sens, op)

    def solve_one(cur: float) -> CapabilityPoint:
        return capability_point(model, sens, op, cur, v_tm,
                                v_tm_min, v_tm_max, q_base, opts)

    points = parallel_map(solve_one, grid)
    return CapabilityCurve(tuple(points), op.label, v_tm, q_base)


def day_ahead_sweep(model: FeederModel, load_profile, solar_profile,
                    curtailment_levels=(0.0,), v_tm: float = 1.0,
                    opts: SolverOptions | None = None) -> DayAheadSurface:
    """Hourly capability curves from 24-sample load/solar multiplier profiles."""
    load_profile = tuple(float(v) for v in load_profile)
    solar_profile = tuple(float(v) for v in solar_profile)
    if len(load_profile) != 24 or len(solar_profile) != 24:
        raise CapabilityError("profiles must have 24 samples")
    for name, prof in (("load", load_profile), ("solar", solar_profile)):
        if any(not 0.0 <= v <= 1.0 for v in prof):
            raise CapabilityError(f"{name} profile values must lie in [0, 1]")
    levels = tuple(float(c) for c in curtailment_levels)

    def solve_hour(hour: int) -> tuple[CapabilityCurve, ...]:
        op = model.operating_point(f"hour-{hour:02d}", load_profile[hour],
                                   solar_profile[hour])
        curves = []
        l_p, l_q = estimate_loss_constants(model, op)
        sens = compute_sensitivities(model, l_p, l_q)
        for cur in levels:
            pt = capability_point(model, sens, op, cur, v_tm,
                                  q_base=base_var_demand(model, sens, op),
                                  opts=opts)
            curves.append(CapabilityCurve((pt,), op.label, v_tm,
                                          pt.flexibility.q_base
                                          if pt.flexibility else 0.0))
        return tuple(curves)

    curves = parallel_map(solve_hour, range(24))
    return DayAheadSurface(tuple(curves), load_profile, solar_profile, levels)


# ---------------------------------------------------------------------------
# interconnection-standard scenarios


VAR_HEADROOM_FRACTION = 0.44      # required var headroom as a share of kW rating
OVERSIZE_FACTOR = 1.113           # apparent-power oversize giving that headroom
_OUTPUT_CAP = float(np.sqrt(1.0 - VAR_HEADROOM_FRACTION**2))  # 0.898


def curtailment_floor(p_rated_kw: float, p_avail_kw: float) -> float:
    """Curtailment needed so a rating-limited inverter keeps var headroom.

    With s = p_rated, holding sqrt(s^2 - u^2) >= 0.44 p_rated caps the real
    output at 0.898 p_rated; at full availability that is a 10.2% cut.
    """
    if p_avail_kw <= 0:
        return 0.0
    return max(0.0, 1.0 - _OUTPUT_CAP * p_rated_kw / p_avail_kw)


def _with_oversize(model: FeederModel, factor: float) -> FeederModel:
    from dataclasses import replace
    ders = tuple(replace(u, s_kva=u.p_rated_kw * factor) for u in model.ders)
    return replace(model, ders=ders)


def ieee1547_scenarios(model: FeederModel, load_profile, solar_profile,
                       v_tm: float = 1.0,
                       opts: SolverOptions | None = None) -> Ieee1547Comparison:
    """Var-headroom comparison: curtailment floor versus inverter oversizing.

    Scenario one keeps s = p_rated and enforces the per-hour curtailment
    floor; scenario two oversizes every inverter and curtails nothing.
    """
    solar_profile = tuple(float(v) for v in solar_profile)
    tight = _with_oversize(model, 1.0)
    wide = _with_oversize(model, OVERSIZE_FACTOR)
    surfaces = []
    for m, levels in ((tight, None), (wide, (0.0,) * 24)):
        hourly_levels = []
        for hour in range(24):
            if levels is None:
                floors = [curtailment_floor(u.p_rated_kw,
                                            u.p_rated_kw * solar_profile[hour])
                          for u in m.ders]
                hourly_levels.append(max(floors) if floors else 0.0)
            else:
                hourly_levels.append(levels[hour])

        def solve_hour(hour: int, m=m, hourly=hourly_levels):
            op = m.operating_point(f"hour-{hour:02d}", load_profile[hour],
                                   solar_profile[hour])
            l_p, l_q = estimate_loss_constants(m, op)
            sens = compute_sensitivities(m, l_p, l_q)
            pt = capability_point(m, sens, op, hourly[hour], v_tm,
                                  q_base=base_var_demand(m, sens, op),
                                  opts=opts, with_worst_case=False)
            return (CapabilityCurve((pt,), op.label, v_tm,
                                    pt.flexibility.q_base
                                    if pt.flexibility else 0.0),)

        curves = parallel_map(solve_hour, range(24))
        surfaces.append(DayAheadSurface(tuple(curves),
                                        tuple(float(v) for v in load_profile),
                                        solar_profile, tuple(hourly_levels)))
    flat = FlexibilityRange(0.0, 0.0, 0.0)
    rpfr_a = tuple(cs[0].points[0].flexibility or flat
                   for cs in surfaces[0].curves)
    rpfr_b = tuple(cs[0].points[0].flexibility or flat
                   for cs in surfaces[1].curves)
    return Ieee1547Comparison(surfaces[0], surfaces[1], rpfr_a, rpfr_b)
