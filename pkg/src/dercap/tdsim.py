"""Quasi-static transmission-distribution cosimulation.

A Newton power flow on a small meshed transmission grid is coupled to one or
more radial feeders at boundary PQ buses.  The exchange is (net P, net Q)
from the feeder against the transmission bus voltage v_tm, resolved by a
relaxed Gauss-Seidel fixed point each step.  Events (branch outages, var
support requests) are keyed to abstract step indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .capability import (ANSI_V_MIN, CapabilityError, base_var_demand,
                         build_der_opf, capacitive_capability)
from .conic import ConicProblem, solve
from .feeder import (FeederModel, FeederSensitivities, OperatingPoint,
                     compute_sensitivities, estimate_loss_constants,
                     line_flows, load_feeder, net_injections_pu,
                     net_substation_var, net_substation_watt, solve_voltages)

PF_TOL = 1e-8
PF_MAX_ITER = 30
BOUNDARY_TOL = 1e-4
BOUNDARY_MAX_ITER = 50
RELAXATION = 0.5


class TransmissionError(Exception):
    pass


class IslandingError(TransmissionError):
    """Removing the branch would disconnect the network."""


# ---------------------------------------------------------------------------
# transmission network data


@dataclass(frozen=True)
class Bus:
    id: int
    type: str  # slack | pv | pq
    v_set: float
    p_load_mw: float
    q_load_mvar: float


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    r_pu: float
    x_pu: float
    b_pu: float
    status: int


@dataclass(frozen=True)
class Generator:
    bus: int
    p_mw: float
    q_min_mvar: float
    q_max_mvar: float


@dataclass(frozen=True)
class TransmissionNetwork:
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    gens: tuple[Generator, ...]

    def __post_init__(self):
        slacks = [b for b in self.buses if b.type == "slack"]
        if len(slacks) != 1:
            raise TransmissionError(f"exactly one slack bus required, got {len(slacks)}")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise TransmissionError("duplicate bus ids")
        for br in self.branches:
            for end in (br.from_bus, br.to_bus):
                if end not in set(ids):
                    raise TransmissionError(f"branch {br.id} references unknown bus {end}")
        if not _connected(self.buses, [b for b in self.branches if b.status]):
            raise TransmissionError("network is not connected")

    def bus_index(self) -> dict[int, int]:
        return {b.id: k for k, b in enumerate(self.buses)}


def _connected(buses, branches) -> bool:
    if not buses:
        return False
    adj: dict[int, list[int]] = {b.id: [] for b in buses}
    for br in branches:
        adj[br.from_bus].append(br.to_bus)
        adj[br.to_bus].append(br.from_bus)
    seen = {buses[0].id}
    stack = [buses[0].id]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(buses)


def load_transmission(document: str) -> TransmissionNetwork:
    """Parse and validate a transmission JSON document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise TransmissionError(f"invalid JSON: {exc}") from exc

    def need(obj, key, where):
        if key not in obj:
            raise TransmissionError(f"missing field {key!r} in {where}")
        return obj[key]

    base_mva = float(need(doc, "base_mva", "top level"))
    buses = []
    for k, bd in enumerate(need(doc, "buses", "top level")):
        btype = need(bd, "type", f"buses[{k}]").lower()
        if btype not in ("slack", "pv", "pq"):
            raise TransmissionError(f"buses[{k}]: unknown type {btype!r}")
        buses.append(Bus(int(need(bd, "id", f"buses[{k}]")), btype,
                         float(bd.get("v_set", 1.0)),
                         float(bd.get("p_load_mw", 0.0)),
                         float(bd.get("q_load_mvar", 0.0))))
    branches = []
    for k, rd in enumerate(need(doc, "branches", "top level")):
        branches.append(Branch(int(need(rd, "id", f"branches[{k}]")),
                               int(need(rd, "from", f"branches[{k}]")),
                               int(need(rd, "to", f"branches[{k}]")),
                               float(need(rd, "r_pu", f"branches[{k}]")),
                               float(need(rd, "x_pu", f"branches[{k}]")),
                               float(rd.get("b_pu", 0.0)),
                               int(rd.get("status", 1))))
    gens = []
    for k, gd in enumerate(doc.get("gens", [])):
        gens.append(Generator(int(need(gd, "bus", f"gens[{k}]")),
                              float(gd.get("p_mw", 0.0)),
                              float(gd.get("q_min_mvar", -1e9)),
                              float(gd.get("q_max_mvar", 1e9))))
    return TransmissionNetwork(base_mva, tuple(buses), tuple(branches), tuple(gens))


def apply_contingency(net: TransmissionNetwork, branch_id: int) -> TransmissionNetwork:
    """Take a branch out of service, rejecting outages that island the grid."""
    hit = [br for br in net.branches if br.id == branch_id]
    if not hit:
        raise TransmissionError(f"unknown branch {branch_id}")
    if not hit[0].status:
        raise TransmissionError(f"branch {branch_id} already out of service")
    new_branches = tuple(replace(br, status=0) if br.id == branch_id else br
                         for br in net.branches)
    if not _connected(net.buses, [b for b in new_branches if b.status]):
        raise IslandingError(f"removing branch {branch_id} islands the network")
    return replace(net, branches=new_branches)


# ---------------------------------------------------------------------------
# Newton AC power flow


@dataclass(frozen=True)
class PowerFlowResult:
    vm: np.ndarray
    va: np.ndarray   # radians
    converged: bool
    iterations: int
    p_slack_pu: float
    q_slack_pu: float
    gen_q_pu: dict[int, float]  # bus id -> generator reactive output


def _ybus(net: TransmissionNetwork) -> np.ndarray:
    idx = net.bus_index()
    n = len(net.buses)
    y = np.zeros((n, n), dtype=complex)
    for br in net.branches:
        if not br.status:
            continue
        f, t = idx[br.from_bus], idx[br.to_bus]
        ys = 1.0 / complex(br.r_pu, br.x_pu)
        sh = 1j * br.b_pu / 2.0
        y[f, f] += ys + sh
        y[t, t] += ys + sh
        y[f, t] -= ys
        y[t, f] -= ys
    return y


def ac_power_flow(net: TransmissionNetwork,
                  extra_load_mva: dict[int, complex] | None = None
                  ) -> PowerFlowResult:
    """Newton-Raphson power flow with generator Q-limit enforcement.

    extra_load_mva adds per-bus complex demand (MW + j Mvar) on top of the
    native bus loads; boundary feeders enter through it.
    """
    idx = net.bus_index()
    n = len(net.buses)
    y = _ybus(net)
    base = net.base_mva
    extra = extra_load_mva or {}

    p_spec = np.zeros(n)
    q_spec = np.zeros(n)
    for b in net.buses:
        k = idx[b.id]
        add = extra.get(b.id, 0j)
        p_spec[k] -= (b.p_load_mw + add.real) / base
        q_spec[k] -= (b.q_load_mvar + add.imag) / base
    for g in net.gens:
        p_spec[idx[g.bus]] += g.p_mw / base

    types = [b.type for b in net.buses]
    slack = types.index("slack")
    vm = np.array([b.v_set if b.type in ("slack", "pv") else 1.0
                   for b in net.buses])
    va = np.zeros(n)
    gen_at = {idx[g.bus]: g for g in net.gens}

    # Q-limit outer loop: PV buses whose generator hits a limit become PQ
    # with q pinned at the limit.
    pq_forced: dict[int, float] = {}
    n_iter = 0
    for _ in range(6):
        is_pq = np.array([t == "pq" for t in types])
        for k, qlim in pq_forced.items():
            is_pq[k] = True
        pvpq = [k for k in range(n) if k != slack]
        pq = [k for k in range(n) if is_pq[k] and k != slack]
        qs = q_spec.copy()
        for k, qlim in pq_forced.items():
            qs[k] = q_spec[k] + qlim

        converged = False
        for n_iter in range(1, PF_MAX_ITER + 1):
            v = vm * np.exp(1j * va)
            ibus = y @ v
            s = v * np.conj(ibus)
            dp = p_spec[pvpq] - s.real[pvpq]
            dq = qs[pq] - s.imag[pq]
            mism = np.concatenate([dp, dq])
            if np.max(np.abs(mism)) <= PF_TOL:
                converged = True
                break
            diag_v = np.diag(v)
            diag_i = np.diag(ibus)
            diag_vn = np.diag(v / np.abs(v))
            ds_dva = 1j * diag_v @ np.conj(diag_i - y @ diag_v)
            ds_dvm = diag_v @ np.conj(y @ diag_vn) + np.conj(diag_i) @ diag_vn
            j11 = ds_dva[np.ix_(pvpq, pvpq)].real
            j12 = ds_dvm[np.ix_(pvpq, pq)].real
            j21 = ds_dva[np.ix_(pq, pvpq)].imag
            j22 = ds_dvm[np.ix_(pq, pq)].imag
            jac = np.block([[j11, j12], [j21, j22]])
            try:
                dx = np.linalg.solve(jac, mism)
            except np.linalg.LinAlgError:
                converged = False
                break
            va[pvpq] += dx[:len(pvpq)]
            vm[pq] += dx[len(pvpq):]

        if not converged:
            break
        # generator Q check at PV buses still holding voltage
        v = vm * np.exp(1j * va)
        s = v * np.conj(y @ v)
        violated = False
        for k, g in gen_at.items():
            if k == slack or types[k] != "pv" or k in pq_forced:
                continue
            q_gen = (s.imag[k] - q_spec[k]) * base  # Mvar
            if q_gen > g.q_max_mvar + 1e-9:
                pq_forced[k] = g.q_max_mvar / base
                violated = True
            elif q_gen < g.q_min_mvar - 1e-9:
                pq_forced[k] = g.q_min_mvar / base
                violated = True
        if not violated:
            break
        vm = np.array([b.v_set if (b.type in ("slack", "pv")
                                   and idx[b.id] not in pq_forced)
                       else vm[idx[b.id]] for b in net.buses])

    v = vm * np.exp(1j * va)
    s = v * np.conj(y @ v)
    gen_q = {}
    for k, g in gen_at.items():
        if k == slack:
            continue
        gen_q[g.bus] = float(s.imag[k] - q_spec[k])
    return PowerFlowResult(vm, va, converged, n_iter,
                           float(s.real[slack] - p_spec[slack]),
                           float(s.imag[slack] - q_spec[slack]), gen_q)


def power_balance_residual(net: TransmissionNetwork, result: PowerFlowResult,
                           extra_load_mva: dict[int, complex] | None = None
                           ) -> float:
    """|slack P − (loads + losses − other generation)| in pu; test helper."""
    idx = net.bus_index()
    y = _ybus(net)
    v = result.vm * np.exp(1j * result.va)
    s = v * np.conj(y @ v)
    losses = float(np.sum(s.real))
    extra = extra_load_mva or {}
    load = sum(b.p_load_mw + extra.get(b.id, 0j).real
               for b in net.buses) / net.base_mva
    slack = next(b for b in net.buses if b.type == "slack")
    gen = sum(g.p_mw for g in net.gens if g.bus != slack.id) / net.base_mva
    return abs(result.p_slack_pu - (load + losses - gen))


# ---------------------------------------------------------------------------
# feeder boundary contexts


@dataclass(frozen=True)
class FeederDispatch:
    """A fixed DER dispatch the feeder holds during the fixed point."""

    der_p_kw: np.ndarray
    der_q_kvar: np.ndarray
    v0_target: float = 1.0


@dataclass(frozen=True)
class BoundaryBus:
    bus: int
    model: FeederModel
    sens: FeederSensitivities
    op: OperatingPoint
    multiplicity: int = 1

    def __post_init__(self):
        if self.multiplicity < 1:
            raise TransmissionError("multiplicity must be >= 1")


def unity_dispatch(boundary: BoundaryBus) -> FeederDispatch:
    n = len(boundary.model.ders)
    return FeederDispatch(np.asarray(boundary.op.der_avail_kw, dtype=float),
                          np.zeros(n), 1.0)


def feeder_exchange(boundary: BoundaryBus, dispatch: FeederDispatch,
                    v_tm: float) -> tuple[complex, np.ndarray]:
    """Net boundary demand (MW + j Mvar) and feeder squared voltages at v_tm.

    The tap moves toward the dispatch's target secondary voltage within its
    range; multiplicity scales one feeder's net demand.
    """
    model, sens, op = boundary.model, boundary.sens, boundary.op
    params = model.substation
    ratio = min(max(dispatch.v0_target / v_tm, params.r_min), params.r_max)
    v0 = v_tm * ratio
    p, q = net_injections_pu(model, op, dispatch.der_p_kw, dispatch.der_q_kvar)
    y = solve_voltages(sens, p, q, v0)
    flows = line_flows(model, p, q, sens.l_p, sens.l_q)
    p_kw = net_substation_watt(model, op, dispatch.der_p_kw, y, flows)
    q_kvar = net_substation_var(model, op, dispatch.der_q_kvar, y, flows)
    demand = complex(p_kw, q_kvar) * boundary.multiplicity / 1000.0
    return demand, y


@dataclass(frozen=True)
class BoundaryState:
    v_tm: dict[int, float]
    demand_mva: dict[int, complex]
    feeder_y: dict[int, np.ndarray]
    flow: PowerFlowResult
    converged: bool
    iterations: int


def boundary_iterate(net: TransmissionNetwork, boundaries: list[BoundaryBus],
                     dispatches: dict[int, FeederDispatch]) -> BoundaryState:
    """Relaxed Gauss-Seidel fixed point between grid and feeders."""
    v_tm = {b.bus: 1.0 for b in boundaries}
    flow = None
    demands: dict[int, complex] = {}
    ys: dict[int, np.ndarray] = {}
    converged = False
    n_outer = 0
    for n_outer in range(1, BOUNDARY_MAX_ITER + 1):
        demands = {}
        ys = {}
        for b in boundaries:
            d, y = feeder_exchange(b, dispatches[b.bus], v_tm[b.bus])
            demands[b.bus] = d
            ys[b.bus] = y
        flow = ac_power_flow(net, demands)
        if not flow.converged:
            break
        idx = net.bus_index()
        delta = 0.0
        for b in boundaries:
            raw = float(flow.vm[idx[b.bus]])
            delta = max(delta, abs(raw - v_tm[b.bus]))
            v_tm[b.bus] += RELAXATION * (raw - v_tm[b.bus])
        if delta <= BOUNDARY_TOL:
            converged = True
            break
    if flow is None:
        flow = ac_power_flow(net, {})
    return BoundaryState(v_tm, demands, ys, flow, converged, n_outer)


# ---------------------------------------------------------------------------
# var support dispatch


@dataclass(frozen=True)
class SupportDispatch:
    dispatch: FeederDispatch
    q_net_kvar: float
    curtailment: float
    accepted: bool
    nearest_q_kvar: float


def var_support_dispatch(boundary: BoundaryBus, requested_q: float,
                         curtailment_cap: float = 1.0,
                         v_tm: float = 1.0) -> SupportDispatch:
    """Dispatch achieving a requested net substation var at minimum curtailment.

    The dispatch is planned against the grid-side voltage v_tm so the tap
    box in the OPF matches what the substation will actually see.  Requests
    beyond the capability interval are rejected with the nearest achievable
    value (the capacitive bound at the curtailment cap).
    """
    model, sens, op = boundary.model, boundary.sens, boundary.op
    bound = capacitive_capability(model, sens, op, curtailment_cap, v_tm)
    if not bound.feasible:
        raise CapabilityError("capability solve infeasible at the curtailment cap")
    if requested_q < bound.q_kvar - 1e-6:
        return SupportDispatch(
            FeederDispatch(bound.dispatch_p_kw, bound.dispatch_q_kvar,
                           bound.v0_star),
            bound.q_kvar, curtailment_cap, False, bound.q_kvar)

    # re-use the OPF structure with a target-q equality in place of the
    # objective: maximize retained output (minimum curtailment)
    n = len(model.ders)
    prob = build_der_opf(model, sens, op, 0.0, v_tm, "min")
    base = model.base_kva
    frozen_loss_kvar = float(np.sum(sens.l_q)) * base
    target_sum_q = (float(np.sum(op.load_q_kvar)) + frozen_loss_kvar
                    - requested_q) / base
    row = np.zeros(prob.n)
    row[:n] = 1.0
    a_eq = np.vstack([prob.a_eq[:-1], row])  # drop total-curtailment equality
    b_eq = np.concatenate([prob.b_eq[:-1], [target_sum_q]])
    c = np.zeros(prob.n)
    c[n:2 * n] = -1.0  # maximize sum of real output
    prob2 = ConicProblem(c, a_eq, b_eq, prob.lower, prob.upper, prob.cones,
                         prob.names)
    sol = solve(prob2)
    if sol.status != "optimal":
        return SupportDispatch(
            FeederDispatch(bound.dispatch_p_kw, bound.dispatch_q_kvar,
                           bound.v0_star),
            bound.q_kvar, curtailment_cap, False, bound.q_kvar)
    der_p = sol.x[n:2 * n] * base
    der_q = sol.x[:n] * base
    v0 = float(np.sqrt(max(sol.x[3 * n], 1e-12)))
    p, q = net_injections_pu(model, op, der_p, der_q)
    y = solve_voltages(sens, p, q, v0)
    flows = line_flows(model, p, q, sens.l_p, sens.l_q)
    q_net = net_substation_var(model, op, der_q, y, flows)
    total_avail = float(np.sum(op.der_avail_kw))
    cur = 1.0 - float(np.sum(der_p)) / total_avail if total_avail > 0 else 0.0
    return SupportDispatch(FeederDispatch(der_p, der_q, v0), q_net,
                           max(cur, 0.0), True, q_net)


def just_enough_support(net: TransmissionNetwork, boundaries: list[BoundaryBus],
                        dispatches: dict[int, FeederDispatch],
                        support_bus: int, curtailment_cap: float,
                        v_target: float = ANSI_V_MIN,
                        target_bus: int | None = None,
                        n_bisect: int = 14,
                        ieee1547_cap: bool = False) -> SupportDispatch:
    """Minimal capacitive var request lifting a bus to the target voltage.

    Bisection over the requested net q between the no-support demand and the
    capacitive bound at the curtailment cap; if even full support falls
    short, the full-support dispatch is returned (capped request).  The
    monitored bus defaults to the supporting bus itself.  With ieee1547_cap
    the request is floored so the var swing relative to the unity-pf base
    demand never exceeds the mandated 44% of aggregate nameplate.
    """
    boundary = next(b for b in boundaries if b.bus == support_bus)
    idx = net.bus_index()
    watch = support_bus if target_bus is None else target_bus

    def bus_v(disp: SupportDispatch) -> float:
        trial = dict(dispatches)
        trial[support_bus] = disp.dispatch
        state = boundary_iterate(net, boundaries, trial)
        return float(state.flow.vm[idx[watch]])

    # plan against the pre-support boundary voltage so the tap box is right
    pre = boundary_iterate(net, boundaries, dispatches)
    v_tm = pre.v_tm[support_bus]
    q_hi = pre.demand_mva[support_bus].imag * 1000.0 / boundary.multiplicity
    bound = capacitive_capability(boundary.model, boundary.sens, boundary.op,
                                  curtailment_cap, v_tm)
    q_lo = bound.q_kvar
    if ieee1547_cap:
        rated = sum(u.p_rated_kw for u in boundary.model.ders)
        floor = (base_var_demand(boundary.model, boundary.sens, boundary.op)
                 - 0.44 * rated)
        q_lo = max(q_lo, floor)
    full = var_support_dispatch(boundary, q_lo, curtailment_cap, v_tm)
    if bus_v(full) < v_target:
        return full
    lo, hi = q_lo, q_hi
    best = full
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        cand = var_support_dispatch(boundary, mid, curtailment_cap, v_tm)
        if bus_v(cand) >= v_target:
            best = cand
            lo = mid
        else:
            hi = mid
    return best


# ---------------------------------------------------------------------------
# cosimulation driver


@dataclass(frozen=True)
class CosimEvent:
    t: int
    kind: str  # branch-outage | var-request
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t < 0:
            raise TransmissionError("event time must be non-negative")
        if self.kind not in ("branch-outage", "var-request"):
            raise TransmissionError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class CosimStep:
    t: int
    bus_vm: dict[int, float]
    boundary_p_mw: dict[int, float]
    boundary_q_mvar: dict[int, float]
    feeder_v_min: dict[int, float]
    feeder_v_max: dict[int, float]
    iterations: int
    converged: bool


@dataclass(frozen=True)
class CosimResult:
    steps: tuple[CosimStep, ...]

    def series(self, name: str, bus: int) -> list[float]:
        table = {
            "vm": lambda st: st.bus_vm[bus],
            "p": lambda st: st.boundary_p_mw[bus],
            "q": lambda st: st.boundary_q_mvar[bus],
            "feeder_v_min": lambda st: st.feeder_v_min[bus],
            "feeder_v_max": lambda st: st.feeder_v_max[bus],
        }
        return [table[name](st) for st in self.steps]


def cosimulate(net: TransmissionNetwork, boundaries: list[BoundaryBus],
               events: list[CosimEvent], horizon: int) -> CosimResult:
    """Step the event schedule, resolving the boundary fixed point each step."""
    if any(ev.t >= horizon for ev in events):
        raise TransmissionError("event beyond horizon")
    events = sorted(events, key=lambda e: e.t)
    dispatches = {b.bus: unity_dispatch(b) for b in boundaries}
    steps = []
    for t in range(horizon):
        for ev in events:
            if ev.t != t:
                continue
            if ev.kind == "branch-outage":
                net = apply_contingency(net, int(ev.payload["branch"]))
            else:
                bus = int(ev.payload["bus"])
                cap = float(ev.payload.get("curtailment_cap", 1.0))
                if "requested_q" in ev.payload:
                    boundary = next(b for b in boundaries if b.bus == bus)
                    pre = boundary_iterate(net, boundaries, dispatches)
                    disp = var_support_dispatch(
                        boundary, float(ev.payload["requested_q"]), cap,
                        pre.v_tm[bus])
                else:
                    target = ev.payload.get("target_bus")
                    disp = just_enough_support(
                        net, boundaries, dispatches, bus, cap,
                        target_bus=int(target) if target is not None else None,
                        ieee1547_cap=bool(ev.payload.get("ieee1547_cap",
                                                         False)))
                dispatches[bus] = disp.dispatch
        state = boundary_iterate(net, boundaries, dispatches)
        idx = net.bus_index()
        steps.append(CosimStep(
            t,
            {b.id: float(state.flow.vm[idx[b.id]]) for b in net.buses},
            {b.bus: state.demand_mva[b.bus].real for b in boundaries},
            {b.bus: state.demand_mva[b.bus].imag for b in boundaries},
            {b.bus: float(np.sqrt(np.min(state.feeder_y[b.bus])))
             for b in boundaries},
            {b.bus: float(np.sqrt(np.max(state.feeder_y[b.bus])))
             for b in boundaries},
            state.iterations, state.converged))
    return CosimResult(tuple(steps))


def load_scenario(document: str, read_feeder) -> tuple[list[BoundaryBus],
                                                       list[CosimEvent], int]:
    """Parse a scenario file into boundaries, events, and the horizon.

    ``read_feeder(name)`` must return the feeder JSON text for the file name
    referenced by a boundary entry.  Boundary entries accept optional
    ``load_mult``/``solar_mult`` multipliers (default 1.0) applied to the
    feeder's base operating point.
    """
    doc = json.loads(document)
    horizon = int(doc["horizon"])
    if horizon <= 0:
        raise TransmissionError("horizon must be positive")
    models: dict[str, FeederModel] = {}
    boundaries = []
    for entry in doc["boundaries"]:
        fname = entry["feeder_file"]
        if fname not in models:
            models[fname] = load_feeder(read_feeder(fname))
        model = models[fname]
        op = model.operating_point(f"bus-{entry['bus']}",
                                   float(entry.get("load_mult", 1.0)),
                                   float(entry.get("solar_mult", 1.0)))
        l_p, l_q = estimate_loss_constants(model, op)
        sens = compute_sensitivities(model, l_p, l_q)
        boundaries.append(BoundaryBus(int(entry["bus"]), model, sens, op,
                                      int(entry.get("multiplicity", 1))))
    events = []
    for ev in doc.get("events", []):
        payload = {k: v for k, v in ev.items() if k not in ("t", "kind")}
        events.append(CosimEvent(int(ev["t"]), str(ev["kind"]), payload))
    return boundaries, events, horizon
