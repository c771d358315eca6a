from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from helpers import bundled_text, small_peel

from thermodelam.errors import ConfigurationError, QuadratureError
from thermodelam.grid import GeometrySpec
from thermodelam.material import HeatCapacityLaw, MaterialSet
from thermodelam.mixity import MixityLaw
from thermodelam.scenario import parse_scenario, reference_scenario
from thermodelam.solvers import SolverSettings
from thermodelam.stepper import (InitialData, LoadCase, Runtime, Scenario, advance, initialize,
                                 local_means, run)


class TestLocalMeans:
    def test_constant(self):
        np.testing.assert_allclose(local_means(lambda t: 3.5, 0.1, 4), 3.5, rtol=1e-15)

    def test_linear(self):
        assert local_means(lambda t: t, 1.0, 1)[0] == pytest.approx(0.5, abs=1e-15)

    def test_sine(self):
        # (cos 0 - cos 0.1) / 0.1
        assert local_means(np.sin, 0.1, 1)[0] == pytest.approx(0.04995834722, abs=1e-11)

    def test_kink_resolved(self):
        means = local_means(lambda t: max(t - 0.25, 0.0), 0.5, 2)
        # int_0^0.5 = 0.25^2 / 2, int_0.5^1 = (0.75^2 - 0.25^2) / 2
        np.testing.assert_allclose(means, [0.0625, 0.5], atol=1e-10)

    def test_pathological_data(self):
        with pytest.raises(QuadratureError):
            local_means(lambda t: np.sin(1.0 / (t - 0.05 + 1e-300)), 0.1, 1, max_depth=3)


def _scenario(**kw):
    geo = GeometrySpec(2, (1.0,), (0.5, 0.5), (6,), (4, 4), ("plus.left", "minus.left"))
    m = MaterialSet.isotropic(2, heat_capacity=HeatCapacityLaw("constant", 2.0), thermal_coupling=0.0)
    base = dict(geometry=geo, material=m, mixity=MixityLaw(a_I=1.0), horizon=0.3, tau=0.1)
    base.update(kw)
    return Scenario(**base)


class TestInitialize:
    def test_basic_fields(self):
        s = _scenario(initial=InitialData(theta=1.0, z=1.0))
        st = initialize(s)
        np.testing.assert_array_equal(st.w, 2.0)
        np.testing.assert_array_equal(st.z, 1.0)
        np.testing.assert_array_equal(st.u_prev, st.u)
        assert st.k == 0 and st.t == 0.0

    def test_initial_velocity(self):
        geo = GeometrySpec(2, (1.0,), (0.5, 0.5), (6,), (4, 4), ("plus.left", "minus.left"), "subspace")
        s = _scenario(geometry=geo, material=dataclasses.replace(
            _scenario().material, density=1.0),
            initial=InitialData(velocity=lambda x: np.column_stack([0 * x[:, 0], x[:, 0]])))
        st = initialize(s)
        np.testing.assert_allclose(st.u_prev[:, 1], -0.1 * Runtime(s).grid.coords[:, 0])

    @pytest.mark.parametrize("init", [InitialData(z=1.5), InitialData(theta=-1.0),
                                      InitialData(displacement=[0.1, 0.0]),
                                      InitialData(z=np.ones(3))])
    def test_rejects(self, init):
        with pytest.raises(ConfigurationError):
            initialize(_scenario(initial=init))

    def test_rejects_penetration(self):
        g = Runtime(_scenario()).grid
        u0 = np.zeros((g.n_nodes, 2))
        u0[g.plus_nodes, 1] = -0.01 * g.coords[g.plus_nodes, 0]
        with pytest.raises(ConfigurationError, match="cone"):
            initialize(_scenario(initial=InitialData(displacement=u0)))


class TestScenarioValidation:
    @pytest.mark.parametrize("kw", [dict(horizon=0.25), dict(tau=0.0), dict(coupling="monolithic"),
                                    dict(snapshot_stride=0)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            _scenario(**kw).validate()

    def test_traction_on_dirichlet_face(self):
        s = _scenario(loads=LoadCase(traction=[("plus.left", (lambda t: 1.0, lambda t: 0.0))]))
        with pytest.raises(ConfigurationError):
            Runtime(s)

    def test_negative_heat_flux(self):
        s = _scenario(loads=LoadCase(heat_flux=[("plus.top", lambda t: -1.0)]))
        with pytest.raises(ConfigurationError, match="g >= 0"):
            Runtime(s)

    def test_component_count(self):
        s = _scenario(loads=LoadCase(body=[("both", (lambda t: 1.0,))]))
        with pytest.raises(ConfigurationError):
            Runtime(s)


class TestAdvance:
    def test_equilibrium_is_fixed_point(self):
        s = reference_scenario("static")
        rt = Runtime(s)
        st0 = initialize(s, rt)
        st1, rec = advance(st0, s, 1, rt)
        np.testing.assert_allclose(st1.u, 0.0, atol=1e-15)
        np.testing.assert_array_equal(st1.z, st0.z)
        np.testing.assert_allclose(st1.w, st0.w, atol=1e-15)

    def test_fixed_point_converges(self):
        s = small_peel(tau=0.1)
        rt = Runtime(s)
        st, rec = advance(initialize(s, rt), s, 1, rt)
        assert 1 < rec.outer_iterations < s.fixed_point_max

    def test_lagged_single_pass(self):
        s = small_peel(tau=0.1, coupling="lagged")
        rt = Runtime(s)
        st, rec = advance(initialize(s, rt), s, 1, rt)
        assert rec.outer_iterations == 1


class TestRun:
    def test_zero_steps(self):
        tr = run(reference_scenario("static"), steps=0)
        assert len(tr.ledger) == 1 and len(tr.snapshots) == 1

    def test_static_residuals_vanish(self):
        tr = run(reference_scenario("static"))
        assert len(tr.ledger) == 11
        assert np.abs(tr.column("mechanical_residual")).max() <= 1e-8 * tr.scale
        assert np.abs(tr.column("total_residual")).max() <= 1e-8 * tr.scale

    def test_unidirectional_and_bounded(self):
        tr = run(small_peel())
        Z = np.array(tr.z_history)
        assert np.all(np.diff(Z, axis=0) <= 0)
        assert Z.min() >= 0 and Z.max() <= 1
        assert Z[-1].sum() < Z[0].sum()
        assert np.all(np.diff(tr.times) > 0)

    def test_failure_gives_partial_trajectory(self):
        s = dataclasses.replace(small_peel(tau=0.1),
                                settings=SolverSettings(max_iter_u=1, fallback_iter=1))
        tr = run(s)
        assert tr.failure is not None and tr.failure.step == 1
        assert len(tr.ledger) == 1

    def test_snapshot_stride(self):
        s = dataclasses.replace(reference_scenario("static"), snapshot_stride=3)
        tr = run(s)
        assert [st.k for st in tr.snapshots] == [0, 3, 6, 9, 10]

    def test_stop_when_debonded(self):
        tr = run(reference_scenario("opening"))
        assert tr.info["stopped_debonded"] == len(tr.ledger) - 1
        assert tr.final.z.max() == 0

    def test_coupling_modes_agree_to_first_order(self):
        """Lagged and fixed-point coupling differ by O(tau) in u on the thermal scenario."""
        base = parse_scenario(bundled_text("thermal").replace("horizon = 1.0", "horizon = 0.4"))
        taus = [0.04, 0.02, 0.01]
        diffs = []
        for tau in taus:
            a = run(base.with_tau(tau).with_coupling("lagged")).final.u
            b = run(base.with_tau(tau).with_coupling("fixed_point")).final.u
            diffs.append(np.abs(a - b).max())
        order = np.polyfit(np.log(taus), np.log(diffs), 1)[0]
        assert order >= 0.9, (diffs, order)
