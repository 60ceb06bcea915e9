"""CLI contract: exit codes, CSV shapes, manifests, and determinism."""

import hashlib
import json

import pytest

from dercap import cli
from conftest import single_phase_doc


@pytest.fixture()
def feeder_file(tmp_path):
    doc = single_phase_doc([(0, 1, 0.05, 0.05)], loads=[(1, 100.0, 50.0)],
                           ders=[(1, 200.0, 150.0)])
    path = tmp_path / "feeder.json"
    path.write_text(doc)
    return path


@pytest.fixture()
def infeasible_feeder_file(tmp_path):
    # the voltage drop of this load cannot be compensated by tap or DER
    doc = single_phase_doc([(0, 1, 0.3, 0.3)], loads=[(1, 800.0, 400.0)],
                           ders=[(1, 10.0, 5.0)])
    path = tmp_path / "heavy.json"
    path.write_text(doc)
    return path


class TestCapabilityCommand:
    def test_happy_path(self, feeder_file, tmp_path):
        out = tmp_path / "out"
        code = cli.main(["capability", "--feeder", str(feeder_file),
                         "--curtailment-grid", "0", "0.5", "1.0",
                         "--out", str(out)])
        assert code == 0
        lines = (out / "capability.csv").read_text().splitlines()
        assert lines[0] == cli.CAPABILITY_HEADER
        assert len(lines) == 4
        first = lines[1].split(",")
        assert first[0] == "0"
        assert first[-2:] == ["true", "true"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "capability"
        digest = hashlib.sha256(feeder_file.read_bytes()).hexdigest()
        assert manifest["inputs"][str(feeder_file)] == digest
        assert manifest["status_counts"]["optimal"] == 6

    def test_byte_identical_reruns(self, feeder_file, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert cli.main(["capability", "--feeder", str(feeder_file),
                             "--worst-case", "--out", str(out)]) == 0
            outs.append((out / "capability.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_infeasible_exits_2_but_writes(self, infeasible_feeder_file,
                                           tmp_path):
        out = tmp_path / "out"
        code = cli.main(["capability", "--feeder",
                         str(infeasible_feeder_file),
                         "--curtailment-grid", "0",
                         "--out", str(out)])
        assert code == 2
        lines = (out / "capability.csv").read_text().splitlines()
        assert len(lines) == 2
        row = lines[1].split(",")
        assert "inf" in row
        assert row[-2:] == ["false", "false"]

    def test_missing_feeder(self, tmp_path):
        code = cli.main(["capability", "--feeder",
                         str(tmp_path / "nope.json"),
                         "--out", str(tmp_path / "out")])
        assert code == 1

    def test_malformed_feeder(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not valid json")
        out = tmp_path / "out"
        assert cli.main(["capability", "--feeder", str(bad),
                         "--out", str(out)]) == 1
        # the manifest is still emitted for failed runs
        assert (out / "manifest.json").is_file()


class TestDayaheadCommand:
    def test_wrong_profile_length(self, feeder_file, tmp_path):
        prof = tmp_path / "profiles.csv"
        rows = ["hour,load_mult,solar_mult"]
        rows += [f"{h},0.5,0.5" for h in range(23)]
        prof.write_text("\n".join(rows) + "\n")
        assert cli.main(["dayahead", "--feeder", str(feeder_file),
                         "--profiles", str(prof),
                         "--out", str(tmp_path / "out")]) == 1

    def test_happy_path(self, feeder_file, tmp_path):
        prof = tmp_path / "profiles.csv"
        rows = ["hour,load_mult,solar_mult"]
        rows += [f"{h},0.5,0.5" for h in range(24)]
        prof.write_text("\n".join(rows) + "\n")
        out = tmp_path / "out"
        code = cli.main(["dayahead", "--feeder", str(feeder_file),
                         "--profiles", str(prof), "--out", str(out)])
        assert code == 0
        index = (out / "index.csv").read_text().splitlines()
        assert index[0] == "hour,file,load_mult,solar_mult,curtailment"
        assert len(index) == 25
        for hour in range(24):
            hour_lines = (out / f"hour_{hour:02d}.csv").read_text().splitlines()
            assert hour_lines[0] == cli.CAPABILITY_HEADER
            assert len(hour_lines) == 2


class TestSweepCommand:
    def test_vtm_sweep(self, feeder_file, tmp_path):
        out = tmp_path / "out"
        code = cli.main(["sweep", "--feeder", str(feeder_file),
                         "--vary", "vtm", "--values", "0.98", "1.0", "1.02",
                         "--out", str(out)])
        assert code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == ("value,a,b,q_lower_kvar,q_upper_kvar,"
                            "q_base_kvar,feasible_lower,feasible_upper")
        assert len(lines) == 4
        assert lines[2].split(",")[0] == "1"

    def test_unknown_vary(self, feeder_file, tmp_path):
        assert cli.main(["sweep", "--feeder", str(feeder_file),
                         "--vary", "frequency", "--values", "1.0",
                         "--out", str(tmp_path / "out")]) == 1

    def test_values_required(self, feeder_file, tmp_path):
        assert cli.main(["sweep", "--feeder", str(feeder_file),
                         "--vary", "penetration",
                         "--out", str(tmp_path / "out")]) == 1

    def test_unknown_placement_value(self, feeder_file, tmp_path):
        assert cli.main(["sweep", "--feeder", str(feeder_file),
                         "--vary", "placement", "--values", "middle",
                         "--out", str(tmp_path / "out")]) == 1


class TestCosimCommand:
    def write_inputs(self, tmp_path, feeder_file, scenario=None):
        net = tmp_path / "grid.json"
        net.write_text(json.dumps({
            "base_mva": 100.0,
            "buses": [{"id": 1, "type": "slack", "v_set": 1.0},
                      {"id": 2, "type": "pq", "p_load_mw": 10.0,
                       "q_load_mvar": 5.0}],
            "branches": [{"id": 1, "from": 1, "to": 2,
                          "r_pu": 0.01, "x_pu": 0.1}]}))
        scen = tmp_path / "scenario.json"
        scen.write_text(json.dumps(scenario or {
            "horizon": 2,
            "boundaries": [{"bus": 2, "feeder_file": feeder_file.name,
                            "multiplicity": 2}],
            "events": []}))
        return net, scen

    def test_happy_path(self, feeder_file, tmp_path):
        net, scen = self.write_inputs(tmp_path, feeder_file)
        out = tmp_path / "out"
        assert cli.main(["cosim", "--transmission", str(net),
                         "--scenario", str(scen), "--out", str(out)]) == 0
        for name in ("vm_bus1", "vm_bus2", "p_bus2", "q_bus2",
                     "feeder_vmin_bus2", "feeder_vmax_bus2"):
            lines = (out / f"{name}.csv").read_text().splitlines()
            assert lines[0] == "t,series,value"
            assert len(lines) == 3
            assert lines[1].startswith(f"0,{name},")
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status_counts"]["converged"] == 2

    def test_missing_feeder_reference(self, feeder_file, tmp_path):
        net, scen = self.write_inputs(tmp_path, feeder_file, scenario={
            "horizon": 2,
            "boundaries": [{"bus": 2, "feeder_file": "absent.json"}],
            "events": []})
        assert cli.main(["cosim", "--transmission", str(net),
                         "--scenario", str(scen),
                         "--out", str(tmp_path / "out")]) == 1

    def test_malformed_scenario(self, feeder_file, tmp_path):
        net, scen = self.write_inputs(tmp_path, feeder_file)
        scen.write_text("{broken")
        assert cli.main(["cosim", "--transmission", str(net),
                         "--scenario", str(scen),
                         "--out", str(tmp_path / "out")]) == 1
