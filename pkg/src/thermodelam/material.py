"""Bulk and interface constitutive laws.

Tensors are stored as full dense arrays (``C[a, b, c, d]``,
``H[a, b, c, a', b', c']`` with the last index of each triple being the
derivative index of the strain gradient).  Definiteness is checked on the
symmetric subspace through an orthonormal Mandel-type basis.

Two heat-capacity families are supported, both with closed-form enthalpy
and inverse:

* ``constant``: ``c_v(theta) = c0``
* ``power``:    ``c_v(theta) = c0 * (1 + theta)**(omega - 1)``
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class HeatCapacityLaw:
    kind: str = "power"
    c0: float = 1.0
    omega: float = 2.0

    def __post_init__(self):
        if self.kind not in ("constant", "power"):
            raise ValueError(f"unknown heat capacity law {self.kind!r}")
        if not self.c0 > 0:
            raise ValueError("heat capacity scale c0 must be positive")
        if self.kind == "power" and not self.omega > 0:
            raise ValueError("power-law exponent omega must be positive")

    @property
    def exponent(self) -> float:
        """Growth exponent ``omega`` of ``c_v`` (1 for the constant law)."""
        return 1.0 if self.kind == "constant" else float(self.omega)

    def capacity(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return np.full_like(theta, self.c0)
        return self.c0 * (1.0 + theta) ** (self.omega - 1.0)

    def capacity_slope(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(theta)
        return self.c0 * (self.omega - 1.0) * (1.0 + theta) ** (self.omega - 2.0)

    def enthalpy(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return self.c0 * theta
        om = self.omega
        return self.c0 * np.expm1(om * np.log1p(theta)) / om

    def inverse(self, w):
        """``h^{-1}(w)`` for ``w >= 0`` (no clipping)."""
        w = np.asarray(w, dtype=float)
        if self.kind == "constant":
            return w / self.c0
        om = self.omega
        return np.expm1(np.log1p(om * w / self.c0) / om)


def enthalpy_of_temperature(law: HeatCapacityLaw, theta):
    """Enthalpy ``w = int_0^theta c_v(r) dr``.

    Raises
    ------
    ValueError
        If any temperature is negative.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise ValueError("temperature must be nonnegative")
    out = law.enthalpy(theta)
    return float(out) if out.ndim == 0 else out


def temperature_of_enthalpy(law: HeatCapacityLaw, w):
    """Temperature ``Theta(w)``: inverse enthalpy for ``w >= 0``, zero below."""
    w = np.asarray(w, dtype=float)
    out = np.where(w > 0, law.inverse(np.maximum(w, 0.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def temperature_slope(law: HeatCapacityLaw, w):
    """Derivative of ``Theta`` (right derivative at 0, zero for ``w < 0``)."""
    w = np.asarray(w, dtype=float)
    theta = temperature_of_enthalpy(law, w)
    return np.where(w >= 0, 1.0 / law.capacity(theta), 0.0)


def enthalpy_growth_constants(law: HeatCapacityLaw) -> tuple[float, float]:
    """Constants ``(C1, C2)`` with ``C1 (w^(1/om) - 1) <= Theta(w) <= C2 (w^(1/om) + 1)``.

    For ``c_v = c0 (1+theta)^(om-1)`` the inverse is
    ``Theta = (1 + (a s)^om)^(1/om) - 1`` with ``s = w^(1/om)``,
    ``a = (om/c0)^(1/om)``.  The upper constant follows from subadditivity;
    the lower one is the infimum of ``Theta / (s - 1)`` over ``s > 1``,
    evaluated on a dense logarithmic grid.
    """
    om = law.exponent
    a = (om / law.c0) ** (1.0 / om)
    c2 = max(a, 1.0)
    if a >= 1.0:
        return 1.0, c2
    s = 1.0 + np.logspace(-8, 14, 4000)
    phi = np.expm1(np.log1p((a * s) ** om) / om)
    c1 = float(np.min(phi / (s - 1.0))) * (1.0 - 1e-9)
    return min(c1, 1.0), c2


@dataclass(frozen=True)
class ConductivityLaw:
    """Diagonal heat conductivity ``K(e, theta)``.

    ``constant``: ``K = diag(k0)``; ``affine``: ``K = diag(k0) * (1 + k1 * min(theta, theta_cap))``.
    The cap keeps ``K`` bounded.
    """

    kind: str = "constant"
    k0: tuple = (1.0,)
    k1: float = 0.0
    theta_cap: float = 10.0

    def __post_init__(self):
        if self.kind not in ("constant", "affine"):
            raise ValueError(f"unknown conductivity law {self.kind!r}")
        k0 = tuple(float(v) for v in np.atleast_1d(self.k0))
        object.__setattr__(self, "k0", k0)

    def _k0(self, dim):
        k0 = np.asarray(self.k0, dtype=float)
        return np.full(dim, k0[0]) if k0.size == 1 else k0

    def diagonal(self, theta, dim: int):
        """Per-axis conductivities, shape ``theta.shape + (dim,)``."""
        theta = np.asarray(theta, dtype=float)
        k0 = self._k0(dim)
        if self.kind == "constant":
            return np.broadcast_to(k0, theta.shape + (dim,)).copy()
        factor = 1.0 + self.k1 * np.clip(theta, 0.0, self.theta_cap)
        return factor[..., None] * k0

    def diagonal_slope(self, theta, dim: int):
        theta = np.asarray(theta, dtype=float)
        k0 = self._k0(dim)
        if self.kind == "constant":
            return np.zeros(theta.shape + (dim,))
        inside = ((theta >= 0) & (theta < self.theta_cap)).astype(float)
        return (self.k1 * inside)[..., None] * k0

    def tensor(self, e, theta, dim: int):
        diag = self.diagonal(theta, dim)
        return diag[..., :, None] * np.eye(dim)


@dataclass(frozen=True)
class TransmissionLaw:
    """Heat transfer coefficient across the contact surface, ``eta = eta1(v) z + eta0(v)``.

    With ``gap_length > 0`` both coefficients decay like ``exp(-|v|/gap_length)``
    in the displacement jump ``v``, modelling the slot of an opened interface.
    """

    eta0: float = 0.0
    eta1: float = 1.0
    gap_length: float = 0.0

    def __post_init__(self):
        if self.eta0 < 0 or self.eta1 < 0:
            raise ValueError("transmission coefficients must be nonnegative")

    def coefficients(self, jump):
        jump = np.atleast_2d(np.asarray(jump, dtype=float))
        if self.gap_length > 0:
            decay = np.exp(-np.linalg.norm(jump, axis=-1) / self.gap_length)
        else:
            decay = np.ones(jump.shape[0])
        return self.eta0 * decay, self.eta1 * decay

    def eta(self, jump, z):
        e0, e1 = self.coefficients(jump)
        return e1 * np.asarray(z, dtype=float) + e0


def isotropic_elastic_tensor(dim: int, lam: float, mu: float) -> np.ndarray:
    """Isotropic 4th-order tensor; in 2D this is the plane-strain reduction."""
    eye = np.eye(dim)
    return (lam * np.einsum("ab,cd->abcd", eye, eye)
            + mu * (np.einsum("ac,bd->abcd", eye, eye)
                    + np.einsum("ad,bc->abcd", eye, eye)))


def gradient_tensor(C: np.ndarray, ell: float) -> np.ndarray:
    """6th-order tensor ``ell^2 C_{abde} delta_{cf}`` acting on strain gradients."""
    dim = C.shape[0]
    return ell ** 2 * np.einsum("abde,cf->abcdef", C, np.eye(dim))


def adhesive_tensor(normal, kappa_n: float, kappa_t: float) -> np.ndarray:
    normal = np.asarray(normal, dtype=float)
    nn = np.outer(normal, normal)
    return kappa_n * nn + kappa_t * (np.eye(normal.size) - nn)


@dataclass
class MaterialSet:
    elastic: np.ndarray
    viscous: np.ndarray
    hyper_elastic: np.ndarray
    hyper_viscous: np.ndarray
    thermal_coupling: np.ndarray
    adhesive: np.ndarray
    density: float = 0.0
    heat_capacity: HeatCapacityLaw = field(default_factory=HeatCapacityLaw)
    conductivity: ConductivityLaw = field(default_factory=ConductivityLaw)
    transmission: TransmissionLaw = field(default_factory=TransmissionLaw)

    @property
    def dim(self) -> int:
        return self.elastic.shape[0]

    @classmethod
    def isotropic(cls, dim=2, lame=(1.0, 1.0), viscous_ratio=0.1,
                  length_scale=0.02, hyper_viscous_ratio=0.1,
                  thermal_coupling=0.0, kappa_n=1.0, kappa_t=1.0,
                  normal=None, density=0.0, heat_capacity=None,
                  conductivity=None, transmission=None) -> "MaterialSet":
        """Proportionally damped isotropic material with a single length scale."""
        C = isotropic_elastic_tensor(dim, *lame)
        H = gradient_tensor(C, length_scale)
        if normal is None:
            normal = -np.eye(dim)[dim - 1]
        B = np.asarray(thermal_coupling, dtype=float)
        if B.ndim == 0:
            B = float(B) * np.eye(dim)
        return cls(
            elastic=C,
            viscous=viscous_ratio * C,
            hyper_elastic=H,
            hyper_viscous=hyper_viscous_ratio * H,
            thermal_coupling=B,
            adhesive=adhesive_tensor(normal, kappa_n, kappa_t),
            density=float(density),
            heat_capacity=heat_capacity or HeatCapacityLaw(),
            conductivity=conductivity or ConductivityLaw(),
            transmission=transmission or TransmissionLaw(),
        )


def rescaled_conductivity(m: MaterialSet, e, w) -> np.ndarray:
    """Rescaled conductivity ``K(e, Theta(w)) / c_v(Theta(w))``."""
    theta = np.asarray(temperature_of_enthalpy(m.heat_capacity, w))
    K = m.conductivity.tensor(e, theta, m.dim)
    return K / np.asarray(m.heat_capacity.capacity(theta))[..., None, None]


# ---------------------------------------------------------------------------
# validation

def sym_basis(dim: int) -> np.ndarray:
    """Orthonormal basis of symmetric ``dim x dim`` matrices, shape ``(dim*dim, m)``."""
    cols = []
    for a in range(dim):
        for b in range(a, dim):
            E = np.zeros((dim, dim))
            if a == b:
                E[a, a] = 1.0
            else:
                E[a, b] = E[b, a] = np.sqrt(0.5)
            cols.append(E.ravel())
    return np.array(cols).T


def _restricted_eigs(T: np.ndarray, order: int, dim: int) -> np.ndarray:
    n = dim ** order
    M = T.reshape(n, n)
    P = sym_basis(dim)
    if order == 3:
        P = np.kron(P, np.eye(dim))
    R = P.T @ M @ P
    return np.linalg.eigvalsh(0.5 * (R + R.T))


def _is_symmetric(T: np.ndarray, order: int, dim: int) -> bool:
    n = dim ** order
    M = T.reshape(n, n)
    major = np.allclose(M, M.T, atol=1e-12 * max(1.0, np.abs(M).max()))
    if order == 2:
        minor = np.allclose(T, np.swapaxes(T, 0, 1)) and np.allclose(T, np.swapaxes(T, 2, 3))
    else:
        minor = np.allclose(T, np.swapaxes(T, 0, 1)) and np.allclose(T, np.swapaxes(T, 3, 4))
    return bool(major and minor)


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> str:
        return "\n".join(f"[{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}"
                         for c in self.checks)


def validate_material(m: MaterialSet, gamma: float, theta_max: float = 100.0,
                      samples: int = 200, seed: int = 0) -> ValidationReport:
    """Check the standing assumptions on ``m`` and the regularization exponent.

    Never raises; every check is reported with pass/fail and a short reason.
    """
    d = m.dim
    checks = []

    def tensor_check(name, T, order, allow_zero=False):
        try:
            sym = _is_symmetric(T, order, d)
            ev = _restricted_eigs(T, order, d)
        except Exception as exc:  # malformed shapes
            checks.append(AssumptionCheck(name, False, f"malformed tensor: {exc}"))
            return
        ok = sym and (ev.min() > 0 or (allow_zero and ev.min() >= 0))
        checks.append(AssumptionCheck(
            name, bool(ok), f"symmetric={sym}, min eigenvalue={ev.min():.4g}"))

    tensor_check("elastic tensor symmetric positive definite", m.elastic, 2)
    tensor_check("viscous tensor symmetric positive definite", m.viscous, 2)
    tensor_check("hyperelastic tensor symmetric positive definite", m.hyper_elastic, 3)
    tensor_check("hyperviscous tensor symmetric positive definite", m.hyper_viscous, 3)

    A = np.asarray(m.adhesive)
    evA = np.linalg.eigvalsh(0.5 * (A + A.T))
    checks.append(AssumptionCheck(
        "adhesive tensor symmetric positive definite",
        bool(np.allclose(A, A.T) and evA.min() > 0), f"min eigenvalue={evA.min():.4g}"))
    checks.append(AssumptionCheck("density nonnegative", m.density >= 0,
                                  f"density={m.density}"))

    om = m.heat_capacity.exponent
    checks.append(AssumptionCheck(
        "heat capacity growth exponent omega > 6/5", om > 1.2, f"omega={om}"))
    bound = max(4.0, 2 * om / (om - 1)) if om > 1 else np.inf
    checks.append(AssumptionCheck(
        "regularization exponent gamma > max(4, 2 omega/(omega-1))",
        bool(gamma > bound), f"gamma={gamma}, bound={bound:.4g}"))

    rng = np.random.default_rng(seed)
    v = rng.normal(size=(samples, d)) * np.logspace(-3, 3, samples)[:, None]
    e0, e1 = m.transmission.coefficients(v)
    nonneg = bool(np.all(e0 >= 0) and np.all(e1 >= 0))
    ratio = (np.abs(e0) + np.abs(e1)) / (np.linalg.norm(v, axis=1) ** (4 / 3) + 1)
    tail_bounded = bool(ratio[-samples // 4:].max() <= ratio[: samples // 4].max() * 10 + 1e-12)
    checks.append(AssumptionCheck(
        "transmission coefficients nonnegative with |v|^(4/3) growth",
        nonneg and tail_bounded, f"max ratio={ratio.max():.4g}"))

    theta = np.concatenate([[0.0], np.linspace(0, theta_max, samples)])
    w = m.heat_capacity.enthalpy(theta)
    strains = rng.normal(scale=0.1, size=(theta.size, d, d))
    strains = 0.5 * (strains + np.swapaxes(strains, 1, 2))
    Kr = rescaled_conductivity(m, strains, w)
    kmin = float(np.linalg.eigvalsh(0.5 * (Kr + np.swapaxes(Kr, 1, 2))).min())
    Kraw = m.conductivity.tensor(strains, theta, d)
    kmax = float(np.abs(Kraw).max())
    checks.append(AssumptionCheck(
        "rescaled conductivity uniformly elliptic on sampled range",
        kmin > 0, f"k={kmin:.4g} on theta in [0, {theta_max}]"))
    checks.append(AssumptionCheck(
        "conductivity bounded", bool(np.isfinite(kmax)), f"max={kmax:.4g}"))
    return ValidationReport(checks)
