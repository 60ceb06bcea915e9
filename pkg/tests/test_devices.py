"""Device-level var envelopes and the proportional aggregate allocation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dercap import devices


def unit(s, p_rated=None, p_avail=None, uid=0):
    p_rated = s if p_rated is None else p_rated
    p_avail = p_rated if p_avail is None else p_avail
    return devices.DerUnit(uid, 1, "a", s, p_rated, p_avail)


class TestDeviceBounds:
    def test_on_the_circle(self):
        assert devices.device_q_bounds(unit(10.0), 10.0) == (0.0, 0.0)

    def test_full_headroom(self):
        assert devices.device_q_bounds(unit(10.0), 0.0) == (-10.0, 10.0)

    def test_three_four_five(self):
        lo, hi = devices.device_q_bounds(unit(5.0), 3.0)
        assert hi == pytest.approx(4.0) and lo == pytest.approx(-4.0)

    def test_exceeding_availability_rejected(self):
        with pytest.raises(devices.DeviceError):
            devices.device_q_bounds(unit(10.0, p_avail=5.0), 6.0)

    def test_invalid_unit_rejected(self):
        with pytest.raises(devices.DeviceError):
            unit(0.0)
        with pytest.raises(devices.DeviceError):
            devices.DerUnit(0, 1, "a", 10.0, 5.0, 6.0)


class TestAllocation:
    def test_direct_formula(self):
        units = [unit(6.0, uid=0), unit(4.0, uid=1)]
        assert np.allclose(devices.proportional_allocation(units, 5.0),
                           [3.0, 2.0])

    def test_clamp_and_reallocate(self):
        units = [unit(6.0, p_avail=2.0, uid=0), unit(4.0, uid=1)]
        assert np.allclose(devices.proportional_allocation(units, 5.0),
                           [2.0, 3.0])
        assert devices.allocation_saturates(units, 5.0)

    def test_zero_target(self):
        units = [unit(6.0, uid=0), unit(4.0, uid=1)]
        assert np.allclose(devices.proportional_allocation(units, 0.0), 0.0)
        assert not devices.allocation_saturates(units, 0.0)

    def test_infeasible_total(self):
        with pytest.raises(devices.DeviceError):
            devices.proportional_allocation([unit(6.0)], 7.0)

    @given(p_frac=st.floats(0.0, 1.0), seed=st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_allocation_sums_to_target(self, p_frac, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 8))
        units = [unit(float(s), p_avail=float(s * a), uid=k)
                 for k, (s, a) in enumerate(zip(rng.uniform(1, 10, n),
                                                rng.uniform(0.2, 1.0, n)))]
        target = p_frac * sum(u.p_avail_kw for u in units)
        alloc = devices.proportional_allocation(units, target)
        assert np.all(alloc >= -1e-9)
        assert np.all(alloc <= [u.p_avail_kw + 1e-9 for u in units])
        assert float(np.sum(alloc)) == pytest.approx(target, abs=1e-8)


class TestEnvelopes:
    def test_analytic_values(self):
        units = [unit(60.0), unit(40.0)]
        b = devices.analytic_envelope(units, 60.0)
        assert b.q_max == pytest.approx(80.0) and b.q_min == pytest.approx(-80.0)
        assert devices.analytic_envelope(units, 0.0).q_max == pytest.approx(100.0)
        assert devices.analytic_envelope(units, 100.0).q_max \
            == pytest.approx(0.0, abs=1e-6)

    def test_numeric_matches_analytic_unsaturated(self):
        units = [unit(6.0, uid=0), unit(4.0, uid=1)]
        b = devices.numeric_envelope(units, 5.0)
        assert b.q_max == pytest.approx(np.sqrt(100 - 25), rel=1e-6)
        assert b.q_min == pytest.approx(-np.sqrt(100 - 25), rel=1e-6)

    def test_numeric_saturated_value(self):
        # availability clamp forces [2, 3]: bound = sqrt(36-4) + sqrt(16-9)
        units = [unit(6.0, p_avail=2.0, uid=0), unit(4.0, uid=1)]
        b = devices.numeric_envelope(units, 5.0)
        expect = np.sqrt(36 - 4) + np.sqrt(16 - 9)
        assert b.q_max == pytest.approx(expect, rel=1e-6)
        assert b.saturated

    def test_symmetric_trio(self):
        units = [unit(5.0, uid=k) for k in range(3)]
        b = devices.numeric_envelope(units, 0.0)
        assert b.q_max == pytest.approx(15.0, rel=1e-6)
        assert b.q_min == pytest.approx(-15.0, rel=1e-6)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_envelope_symmetry_and_monotonicity(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        units = [unit(float(s), uid=k)
                 for k, s in enumerate(rng.uniform(1, 10, n))]
        total = sum(u.p_avail_kw for u in units)
        prev = None
        for frac in (0.0, 0.3, 0.6, 0.9):
            b = devices.numeric_envelope(units, frac * total)
            assert b.q_min == pytest.approx(-b.q_max, abs=1e-6)
            if prev is not None:
                assert b.q_max <= prev + 1e-6
            prev = b.q_max

    def test_aggregate_envelope_samples(self):
        units = [unit(6.0, uid=0), unit(4.0, uid=1)]
        env = devices.aggregate_envelope(units, n_samples=11)
        assert len(env.samples) == 11
        for p, q_min, q_max in env.samples:
            assert q_min <= q_max + 1e-9

    def test_allocation_optimality_sampling(self):
        # no feasible alternative split beats the returned bound
        rng = np.random.default_rng(3)
        units = [unit(6.0, uid=0), unit(4.0, uid=1), unit(3.0, uid=2)]
        target = 7.0
        best = devices.numeric_envelope(units, target).q_max
        for _ in range(200):
            w = rng.dirichlet(np.ones(3))
            alloc = w * target
            if np.any(alloc > [u.p_avail_kw for u in units]):
                continue
            q = sum(np.sqrt(max(u.s_kva**2 - a**2, 0.0))
                    for u, a in zip(units, alloc))
            assert q <= best + 1e-6
