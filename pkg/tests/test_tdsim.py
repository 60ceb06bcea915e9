"""Transmission power flow, boundary coupling, and the cosimulation driver."""

import json

import numpy as np
import pytest
from scipy.optimize import fsolve

from dercap import capability, feeder, tdsim
from conftest import single_phase_doc


def grid_doc(buses, branches, gens=(), base_mva=100.0) -> str:
    return json.dumps({"base_mva": base_mva, "buses": buses,
                       "branches": branches, "gens": list(gens)})


def two_bus_net(p_mw=50.0, q_mvar=20.0, r=0.01, x=0.1):
    return tdsim.load_transmission(grid_doc(
        [{"id": 1, "type": "slack", "v_set": 1.0},
         {"id": 2, "type": "pq", "p_load_mw": p_mw, "q_load_mvar": q_mvar}],
        [{"id": 1, "from": 1, "to": 2, "r_pu": r, "x_pu": x}]))


def der_boundary(bus=2, multiplicity=1, load=(100.0, 50.0),
                 s_kva=200.0, p_rated=150.0):
    doc = single_phase_doc([(0, 1, 0.05, 0.05)],
                           loads=[(1, load[0], load[1])],
                           ders=[(1, s_kva, p_rated)])
    model = feeder.load_feeder(doc)
    op = model.operating_point()
    l_p, l_q = feeder.estimate_loss_constants(model, op)
    sens = feeder.compute_sensitivities(model, l_p, l_q)
    return tdsim.BoundaryBus(bus, model, sens, op, multiplicity)


class TestLoadTransmission:
    def test_nine_bus_counts(self, data_dir):
        net = tdsim.load_transmission((data_dir / "ieee9.json").read_text())
        assert len(net.buses) == 9
        assert len(net.branches) == 9
        assert sum(1 for b in net.buses if b.type == "slack") == 1
        assert net.bus_index()[net.buses[0].id] == 0

    def test_invalid_json(self):
        with pytest.raises(tdsim.TransmissionError):
            tdsim.load_transmission("{not json")

    def test_missing_field(self):
        with pytest.raises(tdsim.TransmissionError):
            tdsim.load_transmission(json.dumps({"buses": [], "branches": []}))

    def test_two_slacks_rejected(self):
        with pytest.raises(tdsim.TransmissionError):
            tdsim.load_transmission(grid_doc(
                [{"id": 1, "type": "slack"}, {"id": 2, "type": "slack"}],
                [{"id": 1, "from": 1, "to": 2, "r_pu": 0.01, "x_pu": 0.1}]))

    def test_unknown_bus_reference(self):
        with pytest.raises(tdsim.TransmissionError):
            tdsim.load_transmission(grid_doc(
                [{"id": 1, "type": "slack"}, {"id": 2, "type": "pq"}],
                [{"id": 1, "from": 1, "to": 3, "r_pu": 0.01, "x_pu": 0.1}]))

    def test_disconnected_rejected(self):
        with pytest.raises(tdsim.TransmissionError):
            tdsim.load_transmission(grid_doc(
                [{"id": 1, "type": "slack"}, {"id": 2, "type": "pq"},
                 {"id": 3, "type": "pq"}],
                [{"id": 1, "from": 1, "to": 2, "r_pu": 0.01, "x_pu": 0.1}]))


class TestPowerFlow:
    def test_no_load_flat(self):
        net = two_bus_net(p_mw=0.0, q_mvar=0.0)
        res = tdsim.ac_power_flow(net)
        assert res.converged
        assert np.allclose(res.vm, 1.0, atol=1e-10)
        assert np.allclose(res.va, 0.0, atol=1e-10)
        assert abs(res.p_slack_pu) < 1e-10

    def test_two_bus_against_fsolve(self):
        net = two_bus_net()
        res = tdsim.ac_power_flow(net)
        assert res.converged
        y = 1.0 / complex(0.01, 0.1)
        s2 = -complex(50.0, 20.0) / 100.0

        def mismatch(z):
            v2 = z[0] * np.exp(1j * z[1])
            s = v2 * np.conj(y * (v2 - 1.0))
            return [s.real - s2.real, s.imag - s2.imag]

        vm2, va2 = fsolve(mismatch, [1.0, 0.0], xtol=1e-12)
        assert res.vm[1] == pytest.approx(vm2, abs=1e-8)
        assert res.va[1] == pytest.approx(va2, abs=1e-8)

    def test_nine_bus_base_case(self, data_dir):
        net = tdsim.load_transmission((data_dir / "ieee9.json").read_text())
        res = tdsim.ac_power_flow(net)
        assert res.converged
        assert np.all(res.vm >= 0.95) and np.all(res.vm <= 1.05)
        assert tdsim.power_balance_residual(net, res) <= 1e-6

    def test_extra_load_lowers_voltage(self, data_dir):
        net = tdsim.load_transmission((data_dir / "ieee9.json").read_text())
        base = tdsim.ac_power_flow(net)
        loaded = tdsim.ac_power_flow(net, {5: complex(50.0, 20.0)})
        k = net.bus_index()[5]
        assert loaded.vm[k] < base.vm[k]
        assert tdsim.power_balance_residual(
            net, loaded, {5: complex(50.0, 20.0)}) <= 1e-6

    def test_generator_q_limit_enforced(self):
        net = tdsim.load_transmission(grid_doc(
            [{"id": 1, "type": "slack", "v_set": 1.0},
             {"id": 2, "type": "pv", "v_set": 1.05},
             {"id": 3, "type": "pq", "p_load_mw": 80.0, "q_load_mvar": 60.0}],
            [{"id": 1, "from": 1, "to": 2, "r_pu": 0.01, "x_pu": 0.1},
             {"id": 2, "from": 2, "to": 3, "r_pu": 0.01, "x_pu": 0.1},
             {"id": 3, "from": 1, "to": 3, "r_pu": 0.01, "x_pu": 0.1}],
            gens=[{"bus": 2, "p_mw": 40.0, "q_min_mvar": -5.0,
                   "q_max_mvar": 5.0}]))
        res = tdsim.ac_power_flow(net)
        assert res.converged
        # the PV bus cannot hold 1.05 with only 5 Mvar of headroom
        assert res.vm[1] < 1.05 - 1e-6
        assert res.gen_q_pu[2] == pytest.approx(5.0 / 100.0, abs=1e-6)


class TestContingency:
    def test_unknown_branch(self, data_dir):
        net = tdsim.load_transmission((data_dir / "ieee9.json").read_text())
        with pytest.raises(tdsim.TransmissionError):
            tdsim.apply_contingency(net, 99)

    def test_double_outage_rejected(self, data_dir):
        net = tdsim.load_transmission((data_dir / "ieee9.json").read_text())
        out = tdsim.apply_contingency(net, 3)
        with pytest.raises(tdsim.TransmissionError):
            tdsim.apply_contingency(out, 3)

    def test_islanding_rejected(self):
        net = two_bus_net()
        with pytest.raises(tdsim.IslandingError):
            tdsim.apply_contingency(net, 1)

    def test_outage_depresses_nearby_buses(self, data_dir):
        net = tdsim.load_transmission(
            (data_dir / "ieee9_boundary.json").read_text())
        base = tdsim.ac_power_flow(net)
        out = tdsim.ac_power_flow(tdsim.apply_contingency(net, 3))
        idx = net.bus_index()
        assert out.converged
        assert out.vm[idx[5]] < base.vm[idx[5]]
        assert out.vm[idx[9]] < base.vm[idx[9]]


class TestBoundary:
    def test_multiplicity_validated(self):
        with pytest.raises(tdsim.TransmissionError):
            der_boundary(multiplicity=0)

    def test_unity_dispatch(self):
        b = der_boundary()
        d = tdsim.unity_dispatch(b)
        assert np.array_equal(d.der_p_kw, b.op.der_avail_kw)
        assert np.all(d.der_q_kvar == 0.0)

    def test_exchange_demand_and_multiplicity(self):
        b1 = der_boundary(multiplicity=1)
        b4 = der_boundary(multiplicity=4)
        d1, y1 = tdsim.feeder_exchange(b1, tdsim.unity_dispatch(b1), 1.0)
        d4, _ = tdsim.feeder_exchange(b4, tdsim.unity_dispatch(b4), 1.0)
        # load 100 kW minus 150 kW of generation: net export, small losses
        assert d1.real == pytest.approx(-0.05, abs=0.005)
        assert d1.imag == pytest.approx(0.05, abs=0.005)
        assert d4 == pytest.approx(4 * d1, rel=1e-12)
        assert y1.shape == (1,)

    def test_tap_absorbs_grid_voltage(self):
        b = der_boundary()
        disp = tdsim.unity_dispatch(b)
        d_ref, y_ref = tdsim.feeder_exchange(b, disp, 1.0)
        d_low, y_low = tdsim.feeder_exchange(b, disp, 0.97)
        # 0.97 is inside the tap range for a v0 target of 1.0
        assert np.allclose(y_low, y_ref, atol=1e-12)
        assert d_low == pytest.approx(d_ref, rel=1e-12)

    def test_boundary_iterate_converges(self):
        net = two_bus_net(p_mw=0.0, q_mvar=0.0)
        b = der_boundary(bus=2)
        state = tdsim.boundary_iterate(net, [b],
                                       {2: tdsim.unity_dispatch(b)})
        assert state.converged
        assert state.flow.converged
        # a < 0.1 MVA exchange barely moves a 100 MVA-base grid
        assert state.v_tm[2] == pytest.approx(1.0, abs=1e-3)
        assert 2 in state.demand_mva and 2 in state.feeder_y


class TestVarSupport:
    def setup_method(self):
        self.b = der_boundary()
        self.base_q = capability.base_var_demand(self.b.model, self.b.sens,
                                                 self.b.op)
        self.bound = capability.capacitive_capability(
            self.b.model, self.b.sens, self.b.op, 1.0)

    def test_request_base_demand_costs_nothing(self):
        disp = tdsim.var_support_dispatch(self.b, self.base_q)
        assert disp.accepted
        assert disp.curtailment == pytest.approx(0.0, abs=1e-6)
        # loss re-addition at the achieved dispatch leaves ~kvar-scale slack
        assert disp.q_net_kvar == pytest.approx(self.base_q, abs=0.01)

    def test_request_beyond_bound_rejected(self):
        disp = tdsim.var_support_dispatch(self.b, self.bound.q_kvar - 100.0)
        assert not disp.accepted
        assert disp.nearest_q_kvar == pytest.approx(self.bound.q_kvar,
                                                    abs=1e-6)

    def test_request_at_bound_accepted(self):
        disp = tdsim.var_support_dispatch(self.b, self.bound.q_kvar)
        assert disp.accepted
        assert disp.q_net_kvar == pytest.approx(self.bound.q_kvar, abs=2.0)

    def test_deeper_request_needs_more_curtailment(self):
        mid = 0.5 * (self.base_q + self.bound.q_kvar)
        shallow = tdsim.var_support_dispatch(self.b, mid)
        deep = tdsim.var_support_dispatch(self.b, self.bound.q_kvar)
        assert shallow.accepted and deep.accepted
        assert deep.curtailment >= shallow.curtailment - 1e-9


class TestCosim:
    def test_event_validation(self):
        with pytest.raises(tdsim.TransmissionError):
            tdsim.CosimEvent(-1, "branch-outage")
        with pytest.raises(tdsim.TransmissionError):
            tdsim.CosimEvent(0, "frequency-ride-through")

    def test_event_beyond_horizon(self):
        net = two_bus_net(p_mw=0.0, q_mvar=0.0)
        b = der_boundary(bus=2)
        with pytest.raises(tdsim.TransmissionError):
            tdsim.cosimulate(net, [b],
                             [tdsim.CosimEvent(5, "branch-outage",
                                               {"branch": 1})], 5)

    def test_no_events_steady(self):
        net = two_bus_net(p_mw=10.0, q_mvar=5.0)
        b = der_boundary(bus=2)
        res = tdsim.cosimulate(net, [b], [], 3)
        assert len(res.steps) == 3
        vm = res.series("vm", 2)
        assert vm[0] == pytest.approx(vm[1], abs=1e-9)
        assert vm[1] == pytest.approx(vm[2], abs=1e-9)
        assert all(st.converged for st in res.steps)

    def test_var_request_changes_exchange(self):
        net = two_bus_net(p_mw=40.0, q_mvar=25.0)
        b = der_boundary(bus=2, multiplicity=20)
        bound = capability.capacitive_capability(b.model, b.sens, b.op, 1.0)
        ev = tdsim.CosimEvent(2, "var-request",
                              {"bus": 2, "requested_q": bound.q_kvar + 5.0})
        res = tdsim.cosimulate(net, [b], [ev], 4)
        q = res.series("q", 2)
        vm = res.series("vm", 2)
        assert q[2] < q[1] - 0.5
        assert vm[2] > vm[1]
        assert q[2] == pytest.approx(q[3], abs=1e-6)

    def test_load_scenario_shipped(self, data_dir):
        text = (data_dir / "scenarios" / "case_b.json").read_text()
        boundaries, events, horizon = tdsim.load_scenario(
            text, lambda name: (data_dir / name).read_text())
        assert horizon == 15
        assert sorted(b.bus for b in boundaries) == [5, 7, 9]
        assert {b.bus: b.multiplicity for b in boundaries} \
            == {5: 10, 7: 8, 9: 18}
        kinds = [ev.kind for ev in events]
        assert kinds == ["branch-outage", "var-request"]

    def test_load_scenario_bad_horizon(self):
        doc = json.dumps({"horizon": 0, "boundaries": [], "events": []})
        with pytest.raises(tdsim.TransmissionError):
            tdsim.load_scenario(doc, lambda name: "")
