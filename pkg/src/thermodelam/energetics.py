"""Energy functionals, the per-step ledger and audits of the discrete inequalities.

The audited inequalities are the ones the time-discrete scheme satisfies by
construction when each sub-problem is solved exactly:

mechanical::

    T(k) + Phi(k) + sum_j [viscous_j + dissipation_j]
        <= T(0) + Phi(0) + sum_j [coupling_work_j + work_mechanical_j]

total::

    T(k) + Phi(k) + W(k) <= T(0) + Phi(0) + W(0) + sum_j [work_mechanical_j + work_heat_j]

Residuals are RHS - LHS; nonnegative means the inequality holds.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .grid import TwoBlockGrid
from .material import MaterialSet, temperature_of_enthalpy
from .mixity import MixityLaw, alpha0, split_a0_a1


@dataclass
class EnergyLedger:
    step: int
    kinetic: float
    stored: float
    thermal: float
    dissipation: float = 0.0
    viscous: float = 0.0
    work_mechanical: float = 0.0
    work_heat: float = 0.0
    coupling_work: float = 0.0
    regularization: float = 0.0
    mechanical_residual: float = 0.0
    total_residual: float = 0.0
    min_theta: float = 0.0
    min_enthalpy: float = 0.0
    max_cone_violation: float = 0.0
    entropy_production: float = float("nan")
    bonded_fraction: float = 1.0

    @classmethod
    def columns(cls) -> list:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)


def kinetic_energy(grid: TwoBlockGrid, rho: float, v) -> float:
    """``(rho/2) sum_n V_n |v_n|^2``."""
    if rho == 0:
        return 0.0
    v = np.asarray(v, dtype=float)
    return 0.5 * rho * float(np.sum(grid.volume_weights * np.sum(v * v, axis=1)))


def dissipation_variation(grid: TwoBlockGrid, law: MixityLaw, jump_k, z_k, z_prev) -> float:
    """``sum_c A_c a1([u^k]_c) (z^{k-1} - z^k)``; ``inf`` if any node healed."""
    z_k, z_prev = np.asarray(z_k, dtype=float), np.asarray(z_prev, dtype=float)
    if np.any(z_k > z_prev):
        return float("inf")
    _, a1 = split_a0_a1(law, np.atleast_2d(jump_k), grid.normal)
    return float(np.sum(grid.interface_weights * np.atleast_1d(a1) * (z_prev - z_k)))


def _column(rows, name):
    return np.array([getattr(r, name) for r in rows], dtype=float)


def check_mechanical_inequality(rows) -> np.ndarray:
    """Residual RHS - LHS of the mechanical inequality for every row (row 0 initial)."""
    T, P = _column(rows, "kinetic"), _column(rows, "stored")
    spent = np.cumsum(_column(rows, "viscous") + _column(rows, "dissipation"))
    gained = np.cumsum(_column(rows, "coupling_work") + _column(rows, "work_mechanical"))
    return (T[0] + P[0] + gained) - (T + P + spent)


def check_total_inequality(rows) -> np.ndarray:
    """Residual RHS - LHS of the total energy inequality for every row."""
    E = _column(rows, "kinetic") + _column(rows, "stored") + _column(rows, "thermal")
    gained = np.cumsum(_column(rows, "work_mechanical") + _column(rows, "work_heat"))
    return (E[0] + gained) - E


def energy_scale(rows) -> float:
    """``max(initial total energy, peak cumulative work)`` guarding zero-energy runs."""
    r0 = rows[0]
    initial = abs(r0.kinetic) + abs(r0.stored) + abs(r0.thermal)
    work = np.cumsum(np.abs(_column(rows, "work_mechanical")) + np.abs(_column(rows, "work_heat"))
                     + np.abs(_column(rows, "coupling_work")))
    peak = float(work.max()) if work.size else 0.0
    return max(initial, peak, 1e-300)


def semistability_residual(grid: TwoBlockGrid, law: MixityLaw, A, u, z,
                           trials: int = 100, seed: int = 0, candidates=None) -> float:
    """Worst ``Phi(u,z) - Phi(u,zt) - R(zt - z)`` over admissible ``zt <= z``.

    Without ``candidates`` the trials mix per-node uniform samples in
    ``[0, z]``, all-zero and random on/off patterns.  Explicit candidates
    must satisfy ``0 <= zt <= z``.
    """
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    j = u[grid.plus_nodes] - u[grid.minus_nodes]
    _, a1 = split_a0_a1(law, j, grid.normal)
    g = np.atleast_1d(alpha0(law, A, j)) - np.atleast_1d(a1)
    wA = grid.interface_weights
    if candidates is not None:
        worst = -np.inf
        for zt in candidates:
            zt = np.asarray(zt, dtype=float)
            if np.any(zt < 0) or np.any(zt > z):
                raise ValueError("candidate bonding fields must satisfy 0 <= zt <= z")
            worst = max(worst, float(np.sum(wA * (z - zt) * g)))
        return worst
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for k in range(trials):
        if k == 0:
            zt = np.zeros_like(z)
        elif k % 3 == 1:
            zt = z * (rng.random(z.size) < 0.5)
        else:
            zt = z * rng.random(z.size)
        worst = max(worst, float(np.sum(wA * (z - zt) * g)))
    return worst


def entropy_production(grid: TwoBlockGrid, m: MaterialSet, w, g_nodal=None):
    """Discrete ``int K grad(theta).grad(theta)/theta^2 + int_{boundary} g/theta``.

    Written in enthalpy variables the bulk integrand is
    ``Kr grad w . grad w / (c_v theta^2)`` with ``Kr`` the rescaled conductivity.
    Returns ``(value, ok)``; ``ok`` is False (value NaN) when some temperature
    is not positive.
    """
    hc = m.heat_capacity
    w = np.asarray(w, dtype=float)
    theta = np.asarray(temperature_of_enthalpy(hc, w), dtype=float)
    if np.any(theta <= 0):
        return float("nan"), False
    I, J, AX, C = grid.conduction_edges
    K = m.conductivity.diagonal(theta, grid.dim)
    cv = hc.capacity(theta)
    kap = K / cv[:, None]
    kf = 0.5 * (kap[I, AX] + kap[J, AX])
    weight = 0.5 * (1.0 / (cv[I] * theta[I] ** 2) + 1.0 / (cv[J] * theta[J] ** 2))
    value = float(np.sum(C * kf * (w[I] - w[J]) ** 2 * weight))
    if g_nodal is not None:
        value += float(np.sum(np.asarray(g_nodal) / theta))
    return value, True


def clausius_duhem_monitor(trajectory) -> np.ndarray:
    """Per-step entropy-production proxy (NaN where skipped)."""
    return _column(trajectory.ledger, "entropy_production")


def cone_violation(grid: TwoBlockGrid, u) -> float:
    """Largest violation of the contact cone by the jump of ``u``."""
    u = np.asarray(u, dtype=float)
    vn = (u[grid.plus_nodes] - u[grid.minus_nodes]) @ grid.normal
    viol = np.where(grid.halfspace, np.maximum(vn, 0.0), np.abs(vn))
    return float(viol.max()) if viol.size else 0.0
