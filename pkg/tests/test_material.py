from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermodelam.material import (ConductivityLaw, HeatCapacityLaw, MaterialSet, TransmissionLaw,
                                  _restricted_eigs, enthalpy_growth_constants,
                                  enthalpy_of_temperature, isotropic_elastic_tensor,
                                  rescaled_conductivity, temperature_of_enthalpy,
                                  validate_material)

CONST2 = HeatCapacityLaw("constant", c0=2.0)
POWER2 = HeatCapacityLaw("power", c0=1.0, omega=2.0)


class TestEnthalpy:
    def test_constant_law_is_linear(self):
        assert enthalpy_of_temperature(CONST2, 1.0) == pytest.approx(2.0, abs=1e-15)

    def test_power_law_closed_form(self):
        # primitive of 1 + theta is theta + theta^2 / 2
        assert enthalpy_of_temperature(POWER2, 1.0) == pytest.approx(1.5, abs=1e-14)

    @pytest.mark.parametrize("law", [CONST2, POWER2, HeatCapacityLaw("power", 3.0, 1.7)])
    def test_zero_normalization(self, law):
        assert enthalpy_of_temperature(law, 0.0) == 0.0

    def test_negative_temperature_rejected(self):
        with pytest.raises(ValueError):
            enthalpy_of_temperature(POWER2, -0.1)

    def test_inverse_examples(self):
        assert temperature_of_enthalpy(CONST2, 2.0) == pytest.approx(1.0, abs=1e-15)
        assert temperature_of_enthalpy(POWER2, 1.5) == pytest.approx(1.0, abs=1e-14)
        assert temperature_of_enthalpy(POWER2, -1.0) == 0.0
        assert temperature_of_enthalpy(CONST2, -1.0) == 0.0

    @pytest.mark.parametrize("law", [CONST2, POWER2, HeatCapacityLaw("power", 0.5, 1.3),
                                     HeatCapacityLaw("power", 2.0, 3.5)])
    def test_round_trip(self, law):
        theta = np.random.default_rng(1).uniform(0.0, 100.0, 1000)
        back = temperature_of_enthalpy(law, enthalpy_of_temperature(law, theta))
        assert np.all(np.abs(back - theta) <= 1e-10 * (1 + theta))

    @pytest.mark.parametrize("law", [POWER2, HeatCapacityLaw("power", 0.5, 1.3),
                                     HeatCapacityLaw("power", 4.0, 2.5), CONST2])
    def test_growth_sandwich(self, law):
        c1, c2 = enthalpy_growth_constants(law)
        om = law.exponent
        w = np.concatenate([[0.0], np.logspace(-6, 8, 2000)])
        th = temperature_of_enthalpy(law, w)
        s = w ** (1.0 / om)
        assert np.all(c1 * (s - 1) <= th * (1 + 1e-12) + 1e-12)
        assert np.all(th <= c2 * (s + 1))

    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50))
    def test_theta_nondecreasing_on_real_line(self, ws):
        w = np.sort(np.asarray(ws))
        th = temperature_of_enthalpy(POWER2, w)
        assert np.all(np.diff(th) >= 0)

    def test_capacity_positive(self):
        theta = np.linspace(0, 1e3, 100)
        for law in (CONST2, POWER2, HeatCapacityLaw("power", 1.0, 1.25)):
            assert np.all(law.capacity(theta) > 0)

    def test_invalid_laws(self):
        with pytest.raises(ValueError):
            HeatCapacityLaw("cubic")
        with pytest.raises(ValueError):
            HeatCapacityLaw("constant", c0=0.0)


class TestRescaledConductivity:
    def _material(self, hc, cond=None):
        return MaterialSet.isotropic(2, heat_capacity=hc, conductivity=cond or ConductivityLaw())

    def test_constant_capacity(self):
        K = rescaled_conductivity(self._material(CONST2), np.zeros((2, 2)), 3.0)
        np.testing.assert_allclose(K, 0.5 * np.eye(2), atol=1e-15)

    def test_zero_enthalpy(self):
        K = rescaled_conductivity(self._material(POWER2), np.zeros((2, 2)), 0.0)
        np.testing.assert_allclose(K, np.eye(2), atol=1e-15)

    def test_through_inversion(self):
        K = rescaled_conductivity(self._material(POWER2), np.zeros((2, 2)), 1.5)
        np.testing.assert_allclose(K, 0.5 * np.eye(2), atol=1e-14)

    @given(st.floats(0, 1e4), st.floats(0, 5), st.floats(-1, 1))
    def test_spd_on_samples(self, w, k1, estrain):
        m = self._material(POWER2, ConductivityLaw("affine", (1.0, 2.0), k1=k1))
        e = estrain * np.array([[1.0, 0.3], [0.3, -0.5]])
        K = rescaled_conductivity(m, e, w)
        np.testing.assert_allclose(K, K.T)
        assert np.linalg.eigvalsh(K).min() > 0


class TestTensors:
    def test_isotropic_eigenvalues(self):
        # on symmetric 2x2 matrices: 2 mu (deviatoric, twice) and 2 mu + 2 lambda (volumetric)
        ev = np.sort(_restricted_eigs(isotropic_elastic_tensor(2, 1.0, 1.0), 2, 2))
        np.testing.assert_allclose(ev, [2.0, 2.0, 4.0], atol=1e-13)

    def test_isotropic_eigenvalues_3d(self):
        ev = np.sort(_restricted_eigs(isotropic_elastic_tensor(3, 2.0, 0.5), 2, 3))
        np.testing.assert_allclose(ev, [1.0] * 5 + [1.0 + 3 * 2.0], atol=1e-13)

    def test_transmission_rejects_negative(self):
        with pytest.raises(ValueError):
            TransmissionLaw(eta0=-1.0)

    def test_transmission_decay(self):
        law = TransmissionLaw(eta0=1.0, eta1=2.0, gap_length=0.1)
        eta = law.eta(np.array([[0.0, 0.1]]), np.array([1.0]))
        assert eta[0] == pytest.approx(3.0 * np.exp(-1.0))


class TestValidation:
    def test_reference_material_passes(self):
        m = MaterialSet.isotropic(2, lame=(1.0, 1.0), viscous_ratio=0.1,
                                  heat_capacity=POWER2)
        report = validate_material(m, 5.0)
        assert report.ok, report.summary()

    def test_omega_too_small(self):
        m = MaterialSet.isotropic(2, heat_capacity=HeatCapacityLaw("power", 1.0, 1.1))
        report = validate_material(m, 50.0)
        assert not report["heat capacity growth exponent omega > 6/5"].passed

    def test_gamma_boundary(self):
        m = MaterialSet.isotropic(2, heat_capacity=POWER2)
        report = validate_material(m, 4.0)
        assert not report["regularization exponent gamma > max(4, 2 omega/(omega-1))"].passed
        assert validate_material(m, 4.0001).ok

    def test_constant_capacity_fails_growth(self):
        m = MaterialSet.isotropic(2, heat_capacity=CONST2)
        report = validate_material(m, 5.0)
        names = {f.name for f in report.failures}
        assert "heat capacity growth exponent omega > 6/5" in names

    def test_indefinite_tensor_reported(self):
        m = MaterialSet.isotropic(2, heat_capacity=POWER2)
        m.viscous = -m.viscous
        report = validate_material(m, 5.0)
        assert not report["viscous tensor symmetric positive definite"].passed

    def test_never_raises_on_bad_shapes(self):
        m = MaterialSet.isotropic(2, heat_capacity=POWER2)
        m.hyper_elastic = np.zeros((2, 2))
        report = validate_material(m, 5.0)
        assert not report.ok
