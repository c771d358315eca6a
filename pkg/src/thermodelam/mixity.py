"""Mode-mixity dependent activation energy of the adhesive.

The angle measures the ratio of tangential to normal adhesive stored energy
at a displacement jump.  The activation energy is split into a part ``a0``
stored on the newly created surface and a part ``a1`` dissipated as heat;
only the mode-II excess of the activation energy is dissipated, with a
positive floor on ``a1``.

Angles are radians internally; ``degrees=True`` converts at the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class MixityLaw:
    a_I: float
    sensitivity: float = 0.2
    epsilon: float = 0.0
    a1_floor: Optional[float] = None
    kappa_n: float = 1.0
    kappa_t: float = 1.0

    def __post_init__(self):
        if not self.a_I > 0:
            raise ValueError("mode-I activation energy a_I must be positive")
        if not 0 < self.sensitivity <= 1:
            raise ValueError("mode sensitivity must lie in (0, 1]")
        if self.epsilon < 0:
            raise ValueError("angle regularization epsilon must be nonnegative")
        if self.a1_floor is None:
            object.__setattr__(self, "a1_floor", 1e-3 * self.a_I)
        if not self.a1_floor > 0:
            raise ValueError("a1_floor must be positive")
        if not (self.kappa_n > 0 and self.kappa_t > 0):
            raise ValueError("adhesive stiffnesses must be positive")

    @classmethod
    def from_adhesive(cls, A, normal, a_I, sensitivity=0.2, epsilon=None,
                      a1_floor=None, reference_length=1.0) -> "MixityLaw":
        """Read ``kappa_n``, ``kappa_t`` off an adhesive tensor diagonal in the interface frame."""
        A = np.asarray(A, dtype=float)
        normal = np.asarray(normal, dtype=float)
        kn = float(normal @ A @ normal)
        P = np.eye(normal.size) - np.outer(normal, normal)
        At = P @ A @ P
        tang = np.linalg.eigvalsh(At)[1:]
        if not (np.allclose(A @ normal, kn * normal) and np.allclose(tang, tang[0])):
            raise ValueError("adhesive tensor is not diagonal in the interface frame; "
                             "give kappa_n and kappa_t explicitly")
        kt = float(tang[0])
        if epsilon is None:
            epsilon = 1e-8 * kn * reference_length ** 2
        return cls(a_I=a_I, sensitivity=sensitivity, epsilon=epsilon,
                   a1_floor=a1_floor, kappa_n=kn, kappa_t=kt)


def decompose(jump, normal):
    """Normal component and tangential vector of the jump(s)."""
    jump = np.asarray(jump, dtype=float)
    normal = np.asarray(normal, dtype=float)
    vn = jump @ normal
    vt = jump - vn[..., None] * normal if jump.ndim > 1 else jump - vn * normal
    return vn, vt


def mixity_angle(law: MixityLaw, jump, normal, degrees: bool = False):
    """Mode-mixity angle in ``[0, pi/2]`` (0 at zero jump when ``epsilon == 0``)."""
    vn, vt = decompose(jump, normal)
    tang = law.kappa_t * np.sum(np.asarray(vt) ** 2, axis=-1)
    norm = law.kappa_n * np.asarray(vn) ** 2 + law.epsilon
    psi = np.arctan2(np.sqrt(tang), np.sqrt(norm))
    if degrees:
        psi = np.degrees(psi)
    return float(psi) if np.ndim(psi) == 0 else psi


def activation_energy(law: MixityLaw, psi, degrees: bool = False):
    """``a(psi) = a_I (1 + tan^2((1 - lambda) psi))``."""
    psi = np.radians(psi) if degrees else np.asarray(psi, dtype=float)
    arg = (1.0 - law.sensitivity) * psi
    if np.any(arg >= np.pi / 2):
        raise ValueError("activation energy has a pole at (1 - lambda) psi = 90 degrees")
    out = law.a_I * (1.0 + np.tan(arg) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def split_a0_a1(law: MixityLaw, jump, normal):
    """Stored part ``a0 = a_I`` and floored dissipated part ``a1``."""
    psi = np.asarray(mixity_angle(law, jump, normal))
    a1 = np.maximum(law.a_I * np.tan((1.0 - law.sensitivity) * psi) ** 2, law.a1_floor)
    a0 = np.full_like(a1, law.a_I, dtype=float)
    if a1.ndim == 0:
        return float(a0), float(a1)
    return a0, a1


def dissipated_energy(law: MixityLaw, jump, normal):
    return split_a0_a1(law, jump, normal)[1]


A0Func = Callable[[np.ndarray], tuple]


def alpha0(law: MixityLaw, A, jump, a0: Optional[A0Func] = None):
    """``alpha0(v) = A v.v / 2 - a0(v)``; ``a0`` defaults to the constant ``a_I``.

    A custom ``a0`` is a callable returning ``(value, gradient)`` for an
    array of jumps of shape ``(n, d)``.
    """
    jump = np.asarray(jump, dtype=float)
    quad = 0.5 * np.einsum("...i,ij,...j->...", jump, A, jump)
    if a0 is None:
        out = quad - law.a_I
    else:
        out = quad - a0(np.atleast_2d(jump))[0].reshape(quad.shape)
    return float(out) if np.ndim(out) == 0 else out


def alpha0_grad(law: MixityLaw, A, jump, a0: Optional[A0Func] = None):
    jump = np.asarray(jump, dtype=float)
    g = jump @ np.asarray(A).T
    if a0 is not None:
        g = g - a0(np.atleast_2d(jump))[1].reshape(g.shape)
    return g


@dataclass
class ConvexityReport:
    passed: bool
    worst_gap: float
    violation: Optional[tuple] = None


def check_alpha0_convexity(law: MixityLaw, A, samples: int = 1000,
                           a0: Optional[A0Func] = None, scale: float = 1.0,
                           seed: int = 0) -> ConvexityReport:
    """Midpoint convexity test of ``alpha0`` on random segments.

    Reports the worst value of ``(f(x) + f(y))/2 - f((x+y)/2)``; a negative
    value beyond round-off is a violation and is returned with its triple.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.normal(scale=scale, size=(samples, d))
    y = rng.normal(scale=scale, size=(samples, d))
    mid = 0.5 * (x + y)
    fx, fy, fm = (np.atleast_1d(alpha0(law, A, p, a0)) for p in (x, y, mid))
    gap = 0.5 * (fx + fy) - fm
    tol = 1e-12 * max(1.0, np.abs(fx).max(), np.abs(fy).max())
    i = int(np.argmin(gap))
    if gap[i] < -tol:
        return ConvexityReport(False, float(gap[i]), (x[i], y[i], mid[i]))
    return ConvexityReport(True, float(gap[i]))
