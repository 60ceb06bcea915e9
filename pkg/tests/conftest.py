"""Shared fixtures: packaged data paths and small synthetic feeders."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from dercap import feeder

DATA = Path(__file__).resolve().parent.parent / "src" / "dercap" / "data"


def phase_a_matrix(value: float) -> list[list[float]]:
    m = np.zeros((3, 3))
    m[0, 0] = value
    return m.tolist()


def single_phase_doc(lines, loads=(), ders=(), base_kva=1000.0, base_kv=1.0,
                     tap_step=0.0063, max_taps=16) -> str:
    """Single-phase (phase a) feeder document; base 1000 kVA / 1 kV makes
    z_base = 1 ohm, so line values are per-unit directly."""
    n_nodes = max(max(f, t) for f, t, _, _ in lines) + 1
    doc = {
        "base_kva": base_kva,
        "base_kv": base_kv,
        "substation": {"tap_step": tap_step, "max_taps": max_taps},
        "nodes": [{"id": k, "phases": "a"} for k in range(n_nodes)],
        "lines": [{"from": f, "to": t, "r_ohm": phase_a_matrix(r),
                   "x_ohm": phase_a_matrix(x)} for f, t, r, x in lines],
        "loads": [{"node": n, "phase": "a", "p_kw": p, "q_kvar": q}
                  for n, p, q in loads],
        "ders": [{"id": k, "node": n, "phase": "a", "p_rated_kw": pr,
                  "s_kva": s} for k, (n, s, pr) in enumerate(ders)],
    }
    return json.dumps(doc)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def model37() -> feeder.FeederModel:
    return feeder.load_feeder((DATA / "ieee37.json").read_text())


@pytest.fixture(scope="session")
def two_node_model() -> feeder.FeederModel:
    doc = single_phase_doc([(0, 1, 0.1, 0.1)], loads=[(1, 100.0, 50.0)])
    return feeder.load_feeder(doc)


@pytest.fixture(scope="session")
def four_node_model() -> feeder.FeederModel:
    """Single-phase chain 0-1-2-3 with two DERs; the brute-force OPF fixture."""
    doc = single_phase_doc(
        [(0, 1, 0.02, 0.04), (1, 2, 0.02, 0.04), (2, 3, 0.02, 0.04)],
        loads=[(1, 150.0, 80.0), (2, 100.0, 50.0), (3, 120.0, 60.0)],
        ders=[(2, 220.0, 200.0), (3, 220.0, 200.0)])
    return feeder.load_feeder(doc)


def sens_for(model: feeder.FeederModel, op=None):
    if op is None:
        op = model.operating_point()
    l_p, l_q = feeder.estimate_loss_constants(model, op)
    return feeder.compute_sensitivities(model, l_p, l_q)
