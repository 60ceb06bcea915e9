"""Unbalanced three-phase radial feeder model with linearized branch-flow equations.

Builds the linear voltage model Y = R_eq p + X_eq q + v0^2*1 + L_c on a tree,
where Y collects squared voltage magnitudes per node-phase and (p, q) are net
injections (generation minus load, injection positive).  Line flows are
demand-positive (power flowing away from the substation).  Loss constants are
frozen from a lossless solve of a base operating point and reused in all
subsequent optimizations at that operating point.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_triangular

from .devices import DerUnit

PHASES = "abc"

# alpha_a = 1, alpha_b = exp(-j2pi/3), alpha_c = exp(+j2pi/3)
_ALPHA = np.array([1.0, cmath.exp(-2j * math.pi / 3), cmath.exp(2j * math.pi / 3)])
_GAMMA = np.outer(_ALPHA, _ALPHA.conj())


class FeederError(Exception):
    """Base class for feeder input and model errors."""


class FeederFormatError(FeederError):
    """Document does not conform to the feeder schema."""


class CycleError(FeederError):
    """A line closes a loop; the feeder must be a tree."""


class DanglingNodeError(FeederError):
    """A node is unreachable from the substation."""


@dataclass(frozen=True)
class PhaseMask:
    present: tuple[bool, bool, bool]

    def __post_init__(self):
        if not any(self.present):
            raise FeederFormatError("at least one phase must be present")

    @classmethod
    def from_string(cls, s: str) -> "PhaseMask":
        s = s.lower()
        if not s or any(c not in PHASES for c in s):
            raise FeederFormatError(f"invalid phase string {s!r}")
        return cls(tuple(c in s for c in PHASES))

    def phases(self) -> list[str]:
        return [PHASES[k] for k in range(3) if self.present[k]]


@dataclass(frozen=True)
class BusNode:
    id: int
    phases: PhaseMask
    name: str = ""


@dataclass(frozen=True)
class LineSegment:
    from_node: int
    to_node: int
    r_matrix: np.ndarray  # 3x3, ohm
    x_matrix: np.ndarray  # 3x3, ohm

    def __post_init__(self):
        for name, m in (("r_ohm", self.r_matrix), ("x_ohm", self.x_matrix)):
            if m.shape != (3, 3):
                raise FeederFormatError(f"{name} must be 3x3")
            if not np.allclose(m, m.T, atol=1e-9):
                raise FeederFormatError(f"{name} must be symmetric")


@dataclass(frozen=True)
class FeederGraph:
    nodes: tuple[BusNode, ...]
    lines: tuple[LineSegment, ...]
    children: dict[int, tuple[int, ...]]
    topo_order: tuple[int, ...]  # node ids, downstream-last, root first

    @property
    def n(self) -> int:
        """Number of non-root nodes (= number of lines)."""
        return len(self.nodes) - 1


@dataclass(frozen=True)
class NodePhaseIndex:
    """Flat indexing of (node, phase) pairs over non-root nodes.

    Lines are identified with their downstream node, so the same flat index
    serves both node-phase quantities (voltages, injections) and line-phase
    quantities (flows, losses).
    """

    rows: tuple[tuple[int, str], ...]
    pos: dict[tuple[int, str], int]
    line_of_node: dict[int, int]  # downstream node id -> line list position

    @property
    def dim(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class IncidenceMatrices:
    m: np.ndarray   # dim x dim, +1 at upstream node-phase row, -1 at downstream
    m0: np.ndarray  # dim x n_root_phases, +1 for root-incident lines


@dataclass(frozen=True)
class FeederSensitivities:
    r_eq: np.ndarray
    x_eq: np.ndarray
    l_p: np.ndarray
    l_q: np.ndarray
    l_c: np.ndarray


@dataclass(frozen=True)
class SubstationParams:
    tap_step: float = 0.0063
    max_taps: int = 16

    @property
    def r_min(self) -> float:
        return 1.0 - self.max_taps * self.tap_step

    @property
    def r_max(self) -> float:
        return 1.0 + self.max_taps * self.tap_step


@dataclass(frozen=True)
class SubstationState:
    v_tm: float
    tap_ratio: float
    params: SubstationParams = field(default_factory=SubstationParams)

    def __post_init__(self):
        lo, hi = self.params.r_min, self.params.r_max
        if not (lo - 1e-12 <= self.tap_ratio <= hi + 1e-12):
            raise FeederError(f"tap ratio {self.tap_ratio} outside [{lo}, {hi}]")

    @property
    def v0(self) -> float:
        return self.v_tm * self.tap_ratio


@dataclass(frozen=True)
class OperatingPoint:
    """Loads per node-phase (kW / kvar) and available DER generation (kW)."""

    load_p_kw: np.ndarray
    load_q_kvar: np.ndarray
    der_avail_kw: np.ndarray
    label: str = ""


@dataclass(frozen=True)
class FeederModel:
    base_kva: float
    base_kv: float
    substation: SubstationParams
    graph: FeederGraph
    index: NodePhaseIndex
    lines_r_pu: tuple[np.ndarray, ...]  # 3x3 per line, pu
    lines_x_pu: tuple[np.ndarray, ...]
    loads_p_kw: np.ndarray  # node-phase vectors, file values
    loads_q_kvar: np.ndarray
    ders: tuple[DerUnit, ...]

    @property
    def z_base_ohm(self) -> float:
        return self.base_kv**2 * 1000.0 / self.base_kva

    def operating_point(self, label: str = "", load_mult: float = 1.0,
                        solar_mult: float = 1.0) -> OperatingPoint:
        avail = np.array([u.p_rated_kw * solar_mult for u in self.ders])
        return OperatingPoint(self.loads_p_kw * load_mult,
                              self.loads_q_kvar * load_mult, avail, label)

    def der_row_indices(self) -> np.ndarray:
        """Node-phase row index of each DER unit."""
        return np.array([self.index.pos[(u.node, u.phase)] for u in self.ders],
                        dtype=int)

    def line_x_diag_pu(self) -> np.ndarray:
        """Per-row (downstream node-phase) diagonal reactance of the feeding line."""
        return self._line_diag(self.lines_x_pu)

    def line_r_diag_pu(self) -> np.ndarray:
        return self._line_diag(self.lines_r_pu)

    def _line_diag(self, mats) -> np.ndarray:
        out = np.zeros(self.index.dim)
        for k, (node, ph) in enumerate(self.index.rows):
            line_pos = self.index.line_of_node[node]
            out[k] = mats[line_pos][PHASES.index(ph), PHASES.index(ph)]
        return out


def _build_graph(nodes: list[BusNode], lines: list[LineSegment]) -> FeederGraph:
    by_id = {n.id: n for n in nodes}
    ids = sorted(by_id)
    if ids != list(range(len(nodes))):
        raise FeederFormatError("node ids must be unique and contiguous from 0")
    parent: dict[int, int] = {}
    children: dict[int, list[int]] = {i: [] for i in ids}
    for ln in lines:
        for end in (ln.from_node, ln.to_node):
            if end not in by_id:
                raise FeederFormatError(f"line references unknown node {end}")
        if ln.to_node in parent or ln.to_node == 0:
            raise CycleError(
                f"node {ln.to_node} has more than one feeding line (or feeds node 0)")
        parent[ln.to_node] = ln.from_node
        children[ln.from_node].append(ln.to_node)
    if len(lines) != len(nodes) - 1:
        raise FeederFormatError(
            f"{len(lines)} lines for {len(nodes)} nodes; a radial feeder needs n-1")
    # BFS from the root checks reachability (no cycles can survive given the
    # in-degree check plus the line count, so any shortfall is a dangling node).
    order = [0]
    seen = {0}
    qi = 0
    while qi < len(order):
        cur = order[qi]
        qi += 1
        for ch in children[cur]:
            if ch in seen:
                raise CycleError(f"cycle detected at node {ch}")
            seen.add(ch)
            order.append(ch)
    if len(seen) != len(nodes):
        missing = sorted(set(ids) - seen)
        raise DanglingNodeError(f"nodes unreachable from substation: {missing}")
    # phase consistency: a child cannot carry a phase its line/parent lacks
    for ln in lines:
        up, dn = by_id[ln.from_node], by_id[ln.to_node]
        for k in range(3):
            if dn.phases.present[k] and not up.phases.present[k]:
                raise FeederFormatError(
                    f"node {dn.id} has phase {PHASES[k]} absent at parent {up.id}")
    return FeederGraph(tuple(nodes), tuple(lines),
                       {k: tuple(v) for k, v in children.items()}, tuple(order))


def _build_index(graph: FeederGraph) -> NodePhaseIndex:
    rows = []
    for nid in graph.topo_order[1:]:
        node = graph.nodes[nid]
        for ph in node.phases.phases():
            rows.append((nid, ph))
    pos = {rp: k for k, rp in enumerate(rows)}
    line_of_node = {ln.to_node: i for i, ln in enumerate(graph.lines)}
    return NodePhaseIndex(tuple(rows), pos, line_of_node)


def load_feeder(document: str) -> FeederModel:
    """Parse and validate a feeder JSON document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise FeederFormatError(f"invalid JSON: {exc}") from exc

    def need(obj, key, where):
        if key not in obj:
            raise FeederFormatError(f"missing field {key!r} in {where}")
        return obj[key]

    base_kva = float(need(doc, "base_kva", "top level"))
    base_kv = float(need(doc, "base_kv", "top level"))
    if base_kva <= 0 or base_kv <= 0:
        raise FeederFormatError("base_kva and base_kv must be positive")
    sub = doc.get("substation", {})
    params = SubstationParams(float(sub.get("tap_step", 0.0063)),
                              int(sub.get("max_taps", 16)))
    nodes = []
    for k, nd in enumerate(need(doc, "nodes", "top level")):
        nodes.append(BusNode(int(need(nd, "id", f"nodes[{k}]")),
                             PhaseMask.from_string(need(nd, "phases", f"nodes[{k}]")),
                             str(nd.get("name", ""))))
    lines = []
    for k, ld in enumerate(need(doc, "lines", "top level")):
        lines.append(LineSegment(
            int(need(ld, "from", f"lines[{k}]")),
            int(need(ld, "to", f"lines[{k}]")),
            np.array(need(ld, "r_ohm", f"lines[{k}]"), dtype=float),
            np.array(need(ld, "x_ohm", f"lines[{k}]"), dtype=float)))
    graph = _build_graph(nodes, lines)
    index = _build_index(graph)

    # diagonal entries of present phases must be positive
    by_id = {n.id: n for n in nodes}
    for ln in graph.lines:
        dn = by_id[ln.to_node]
        for k in range(3):
            if dn.phases.present[k] and ln.r_matrix[k, k] <= 0:
                raise FeederFormatError(
                    f"line {ln.from_node}-{ln.to_node}: nonpositive r on phase {PHASES[k]}")

    z_base = base_kv**2 * 1000.0 / base_kva
    lines_r = tuple(ln.r_matrix / z_base for ln in graph.lines)
    lines_x = tuple(ln.x_matrix / z_base for ln in graph.lines)

    load_p = np.zeros(index.dim)
    load_q = np.zeros(index.dim)
    for k, lo in enumerate(doc.get("loads", [])):
        node = int(need(lo, "node", f"loads[{k}]"))
        ph = need(lo, "phase", f"loads[{k}]")
        if (node, ph) not in index.pos:
            raise FeederFormatError(
                f"loads[{k}]: node {node} phase {ph!r} not present in feeder")
        load_p[index.pos[(node, ph)]] += float(need(lo, "p_kw", f"loads[{k}]"))
        load_q[index.pos[(node, ph)]] += float(need(lo, "q_kvar", f"loads[{k}]"))

    ders = []
    for k, dd in enumerate(doc.get("ders", [])):
        node = int(need(dd, "node", f"ders[{k}]"))
        ph = need(dd, "phase", f"ders[{k}]")
        if (node, ph) not in index.pos:
            raise FeederFormatError(
                f"ders[{k}]: node {node} phase {ph!r} not present in feeder")
        p_rated = float(need(dd, "p_rated_kw", f"ders[{k}]"))
        s_kva = float(need(dd, "s_kva", f"ders[{k}]"))
        if s_kva <= 0 or p_rated < 0:
            raise FeederFormatError(f"ders[{k}]: invalid ratings")
        ders.append(DerUnit(int(need(dd, "id", f"ders[{k}]")), node, ph,
                            s_kva, p_rated, p_rated))

    return FeederModel(base_kva, base_kv, params, graph, index,
                       lines_r, lines_x, load_p, load_q, tuple(ders))


def build_incidence(graph: FeederGraph) -> IncidenceMatrices:
    """Per-phase incidence blocks: +1 at the upstream row, -1 at the downstream.

    Rows span non-root node-phases only; the root column contribution is in m0.
    Columns are ordered by downstream node in topological order, making m upper
    triangular with -1 diagonal (hence trivially invertible for a tree).
    """
    index = _build_index(graph)
    d = index.dim
    by_id = {n.id: n for n in graph.nodes}
    root_phases = by_id[0].phases.phases()
    m = np.zeros((d, d))
    m0 = np.zeros((d, len(root_phases)))
    for nid in graph.topo_order[1:]:
        line = graph.lines[index.line_of_node[nid]]
        up = line.from_node
        for ph in by_id[nid].phases.phases():
            col = index.pos[(nid, ph)]
            m[col, col] = -1.0
            if up == 0:
                m0[col, root_phases.index(ph)] = 1.0
            elif (up, ph) in index.pos:
                m[index.pos[(up, ph)], col] = 1.0
    return IncidenceMatrices(m, m0)


def _path_lines(graph: FeederGraph) -> dict[int, list[int]]:
    """Node id -> list of line positions on the path from the root."""
    parent_line: dict[int, int] = {}
    for i, ln in enumerate(graph.lines):
        parent_line[ln.to_node] = i
    paths: dict[int, list[int]] = {0: []}
    for nid in graph.topo_order[1:]:
        ln = graph.lines[parent_line[nid]]
        paths[nid] = paths[ln.from_node] + [parent_line[nid]]
    return paths


def _phase_block(mat: np.ndarray, row_ph: str, col_ph: str) -> float:
    return mat[PHASES.index(row_ph), PHASES.index(col_ph)]


def lindist_impedance(r_pu: np.ndarray, x_pu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Multiphase linearization matrices Zp = 2 Re(G . conj(Z)), Zq = -2 Im(G . conj(Z))."""
    z = r_pu + 1j * x_pu
    zp = 2.0 * np.real(_GAMMA * np.conj(z))
    zq = -2.0 * np.imag(_GAMMA * np.conj(z))
    return zp, zq


def compute_sensitivities(model: FeederModel,
                          l_p: np.ndarray | None = None,
                          l_q: np.ndarray | None = None) -> FeederSensitivities:
    """Voltage sensitivity matrices and constant loss offset.

    R_eq[j,k] accumulates the linearized impedance of lines shared by the
    root paths of j and k; this is the triangular-solve form of
    M^-T Zd M^-1 and no dense inverse is formed.
    """
    index = model.index
    d = index.dim
    paths = _path_lines(model.graph)
    zp_lines = []
    zq_lines = []
    for r_pu, x_pu in zip(model.lines_r_pu, model.lines_x_pu):
        zp, zq = lindist_impedance(r_pu, x_pu)
        zp_lines.append(zp)
        zq_lines.append(zq)

    # deepest-common-line accumulation over shared root paths
    r_eq = np.zeros((d, d))
    x_eq = np.zeros((d, d))
    path_sets = {nid: set(p) for nid, p in paths.items()}
    downstream = {ln.to_node: i for i, ln in enumerate(model.graph.lines)}
    for a, (na, pha) in enumerate(index.rows):
        for b in range(a, d):
            nb, phb = index.rows[b]
            common = path_sets[na] & path_sets[nb] if na != nb else path_sets[na]
            rs = xs = 0.0
            for lpos in common:
                rs += _phase_block(zp_lines[lpos], pha, phb)
                xs += _phase_block(zq_lines[lpos], pha, phb)
            r_eq[a, b] = rs
            x_eq[a, b] = xs
            if b != a:
                r_eq[b, a] = _sym_entry(zp_lines, common, phb, pha)
                x_eq[b, a] = _sym_entry(zq_lines, common, phb, pha)

    if l_p is None:
        l_p = np.zeros(d)
    if l_q is None:
        l_q = np.zeros(d)
    l_c = -(r_eq @ l_p + x_eq @ l_q)
    return FeederSensitivities(r_eq, x_eq, np.asarray(l_p, dtype=float),
                               np.asarray(l_q, dtype=float), l_c)


def _sym_entry(mats, common, row_ph, col_ph) -> float:
    return sum(_phase_block(mats[lpos], row_ph, col_ph) for lpos in common)


def solve_voltages(sens: FeederSensitivities, p: np.ndarray, q: np.ndarray,
                   v0: float) -> np.ndarray:
    """Squared voltage magnitudes for net injections (p, q) in pu at secondary v0."""
    if v0 <= 0:
        raise FeederError("v0 must be positive")
    return sens.r_eq @ p + sens.x_eq @ q + v0**2 + sens.l_c


def line_flows(model: FeederModel, p: np.ndarray, q: np.ndarray,
               l_p: np.ndarray | None = None,
               l_q: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Demand-positive line flows by downstream-to-upstream accumulation.

    Returns (P, Q) indexed by the downstream node-phase of each line, so that
    -M P = -p + L_p holds exactly.
    """
    index = model.index
    d = index.dim
    if l_p is None:
        l_p = np.zeros(d)
    if l_q is None:
        l_q = np.zeros(d)
    flow_p = np.zeros(d)
    flow_q = np.zeros(d)
    # downstream-last topo order reversed: children are final before parents
    for nid in reversed(model.graph.topo_order[1:]):
        node = model.graph.nodes[nid]
        for ph in node.phases.phases():
            k = index.pos[(nid, ph)]
            acc_p = -p[k] + l_p[k]
            acc_q = -q[k] + l_q[k]
            for ch in model.graph.children[nid]:
                kc = index.pos.get((ch, ph))
                if kc is not None:
                    acc_p += flow_p[kc]
                    acc_q += flow_q[kc]
            flow_p[k] = acc_p
            flow_q[k] = acc_q
    return flow_p, flow_q


def reactive_loss(p_flow: float, q_flow: float, y: float, x_phase: float) -> float:
    """Per line-phase reactive loss (P^2 + Q^2)/y * x."""
    if y <= 0:
        raise FeederError("nonpositive squared voltage in loss evaluation")
    return (p_flow**2 + q_flow**2) / y * x_phase


def estimate_loss_constants(model: FeederModel, base: OperatingPoint,
                            v0: float = 1.0,
                            sens: FeederSensitivities | None = None
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Frozen per-line loss terms from a lossless solve of the base point.

    DERs are assumed at unity power factor and full availability for the
    offline study.
    """
    if sens is None:
        sens = compute_sensitivities(model)
    p_pu, q_pu = net_injections_pu(model, base, der_p_kw=base.der_avail_kw,
                                   der_q_kvar=np.zeros(len(model.ders)))
    y = solve_voltages(sens, p_pu, q_pu, v0)
    fp, fq = line_flows(model, p_pu, q_pu)
    xd = model.line_x_diag_pu()
    rd = model.line_r_diag_pu()
    sq = (fp**2 + fq**2) / np.maximum(y, 1e-9)
    return sq * rd, sq * xd


def net_injections_pu(model: FeederModel, op: OperatingPoint,
                      der_p_kw: np.ndarray, der_q_kvar: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Node-phase net injection vectors (generation minus load), per-unit."""
    p = -op.load_p_kw.copy()
    q = -op.load_q_kvar.copy()
    rows = model.der_row_indices()
    if len(rows):
        np.add.at(p, rows, np.asarray(der_p_kw, dtype=float))
        np.add.at(q, rows, np.asarray(der_q_kvar, dtype=float))
    return p / model.base_kva, q / model.base_kva


def net_substation_var(model: FeederModel, op: OperatingPoint,
                       der_q_kvar: np.ndarray, y: np.ndarray,
                       flows: tuple[np.ndarray, np.ndarray]) -> float:
    """Net substation var demand in kvar (positive = drawn from the grid)."""
    fp, fq = flows
    xd = model.line_x_diag_pu()
    loss_pu = float(np.sum((fp**2 + fq**2) / np.maximum(y, 1e-9) * xd))
    total_load = float(np.sum(op.load_q_kvar))
    total_der = float(np.sum(der_q_kvar))
    return total_load - total_der + loss_pu * model.base_kva


def net_substation_watt(model: FeederModel, op: OperatingPoint,
                        der_p_kw: np.ndarray, y: np.ndarray,
                        flows: tuple[np.ndarray, np.ndarray]) -> float:
    """Net substation real-power demand in kW (positive = drawn from the grid)."""
    fp, fq = flows
    rd = model.line_r_diag_pu()
    loss_pu = float(np.sum((fp**2 + fq**2) / np.maximum(y, 1e-9) * rd))
    total_load = float(np.sum(op.load_p_kw))
    total_der = float(np.sum(der_p_kw))
    return total_load - total_der + loss_pu * model.base_kva


def incidence_residual(model: FeederModel, p: np.ndarray, q: np.ndarray,
                       flows: tuple[np.ndarray, np.ndarray],
                       l_p: np.ndarray | None = None,
                       l_q: np.ndarray | None = None) -> float:
    """Max violation of -M P = -p + L_p (and the q twin); used by tests."""
    inc = build_incidence(model.graph)
    d = model.index.dim
    if l_p is None:
        l_p = np.zeros(d)
    if l_q is None:
        l_q = np.zeros(d)
    fp, fq = flows
    rp = -inc.m @ fp - (-p + l_p)
    rq = -inc.m @ fq - (-q + l_q)
    return max(float(np.max(np.abs(rp))), float(np.max(np.abs(rq))))


def triangular_inverse_check(inc: IncidenceMatrices) -> bool:
    """Invertibility probe by triangular solve success (tree invariant)."""
    try:
        solve_triangular(inc.m, np.eye(inc.m.shape[0]), lower=False)
        return True
    except Exception:
        return False
