"""The three sub-problems of one time step.

* ``solve_u_step``: convex incremental minimization for the displacement,
  subject to per-node contact cones at the interface and ``u = 0`` on the
  Dirichlet boundary.  Dirichlet nodes and subspace cones are removed by a
  sparse substitution ``u = T x``; the halfspace cones become simple upper
  bounds on one reduced coordinate per interface pair.  The bound-constrained
  problem is solved by projected Newton with an epsilon-active set, with a
  spectral projected-gradient fallback.
* ``solve_z_step``: closed-form pointwise threshold rule.
* ``solve_w_step``: implicit vertex-centred finite-volume enthalpy equation,
  damped Newton with a Picard fallback.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, StepFailure
from .grid import Assembled, TwoBlockGrid, nodal_dissipation_density, regularization, strain
from .material import (MaterialSet, temperature_of_enthalpy, temperature_slope)
from .mixity import MixityLaw, split_a0_a1

log = logging.getLogger(__name__)


@dataclass
class SolverSettings:
    tol_u: float = 1e-10
    tol_w: float = 1e-12
    max_iter_u: int = 200
    max_iter_w: int = 60
    newton_damping: float = 1.0
    active_set_max_sweeps: int = 60
    armijo: float = 1e-4
    fallback_iter: int = 20000

    def __post_init__(self):
        if not (self.tol_u > 0 and self.tol_w > 0):
            raise ConfigurationError("solver tolerances must be positive")
        if min(self.max_iter_u, self.max_iter_w, self.active_set_max_sweeps) < 1:
            raise ConfigurationError("iteration caps must be at least 1")
        if not 0 < self.newton_damping <= 1:
            raise ConfigurationError("newton_damping must lie in (0, 1]")


# ---------------------------------------------------------------------------
# reduced coordinates

class ReducedMap:
    """Sparse parametrization ``u = T x`` of the Dirichlet/cone-compatible fields.

    Per interface pair the dependent node is the plus node (or the minus node
    when the plus node is clamped); its displacement is the partner's plus the
    jump expressed in the interface frame ``(nu, t_1, ...)``.  For halfspace
    cones the normal jump coordinate has upper bound 0.
    """

    def __init__(self, grid: TwoBlockGrid):
        N, d = grid.n_nodes, grid.dim
        D = grid.dirichlet
        self.frame = np.vstack([grid.normal, grid.tangents])
        dependent = np.zeros(N, dtype=bool)
        for p, q in zip(grid.plus_nodes, grid.minus_nodes):
            if not D[p]:
                dependent[p] = True
            elif not D[q]:
                dependent[q] = True
        indep = np.flatnonzero(~D & ~dependent)
        node_var = -np.ones((N, d), dtype=int)
        node_var[indep] = np.arange(indep.size * d).reshape(-1, d)
        nvar = indep.size * d
        jump_var = -np.ones((grid.n_interface, d), dtype=int)
        upper = [np.full(nvar, np.inf)]
        for c in range(grid.n_interface):
            if D[grid.plus_nodes[c]] and D[grid.minus_nodes[c]]:
                continue
            for b in range(d):
                if b == 0 and not grid.halfspace[c]:
                    continue
                jump_var[c, b] = nvar
                upper.append([0.0 if b == 0 else np.inf])
                nvar += 1
        self.upper = np.concatenate([np.asarray(u, dtype=float) for u in upper])
        self.bounded = np.isfinite(self.upper)
        self.n_vars = nvar
        self.node_var, self.jump_var = node_var, jump_var

        rows, cols, vals = [], [], []
        for i in range(d):
            rows.append(i * N + indep)
            cols.append(node_var[indep, i])
            vals.append(np.ones(indep.size))
        for c in range(grid.n_interface):
            p, q = grid.plus_nodes[c], grid.minus_nodes[c]
            if D[p] and D[q]:
                continue
            dep, sign = (p, 1.0) if not D[p] else (q, -1.0)
            for i in range(d):
                if dep == p and not D[q]:
                    rows.append([i * N + p])
                    cols.append([node_var[q, i]])
                    vals.append([1.0])
                for b in range(d):
                    if jump_var[c, b] >= 0 and self.frame[b, i] != 0:
                        rows.append([i * N + dep])
                        cols.append([jump_var[c, b]])
                        vals.append([sign * self.frame[b, i]])
        self.T = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(d * N, nvar))
        self.grid = grid

    def restrict(self, u) -> np.ndarray:
        """Reduced coordinates of a feasible field (inverse of ``T`` on its range)."""
        g = self.grid
        u = np.asarray(u, dtype=float)
        x = np.zeros(self.n_vars)
        mask = self.node_var >= 0
        x[self.node_var[mask]] = u[mask]
        jmp = u[g.plus_nodes] - u[g.minus_nodes]
        coords = jmp @ self.frame.T
        mask = self.jump_var >= 0
        x[self.jump_var[mask]] = coords[mask]
        return x


class UStepContext:
    """Per-(grid, material, tau, gamma) data reused across steps."""

    def __init__(self, grid, m: MaterialSet, tau: float, gamma: float,
                 ops: Assembled | None = None):
        self.grid, self.m, self.tau, self.gamma = grid, m, float(tau), float(gamma)
        self.ops = ops or Assembled.build(grid, m)
        self.map = ReducedMap(grid)
        rho = m.density
        self.mass_coef = rho / tau ** 2
        base = self.ops.viscous / tau + self.ops.elastic
        if rho > 0:
            base = base + sp.diags(self.mass_coef * self.ops.mass)
        self.Q_base = base.tocsr()
        self._hess_key = None
        self._Qx = None
        self._lu = None
        self._columns: dict = {}

    def hessian(self, z) -> sp.csc_matrix:
        key = np.asarray(z, dtype=float).tobytes()
        if key != self._hess_key:
            Q = self.Q_base + self.ops.interface_form(self.grid, z)
            T = self.map.T
            self._Qx = (T.T @ Q @ T).tocsc()
            self._hess_key = key
            self._lu = None
            self._columns = {}
        return self._Qx

    def solve(self, rhs) -> np.ndarray:
        if self._lu is None:
            self._lu = spla.splu(self._Qx, permc_spec="MMD_AT_PLUS_A",
                                 options=dict(SymmetricMode=True))
        return self._lu.solve(rhs)

    def column(self, i: int) -> np.ndarray:
        """``Q^{-1} e_i``, cached per Hessian."""
        if i not in self._columns:
            e = np.zeros(self._Qx.shape[0])
            e[i] = 1.0
            self._columns[i] = self.solve(e)
        return self._columns[i]

    def exact_hessian(self, x) -> sp.csc_matrix:
        """``Q`` plus the Hessian of the power regularization at ``x``."""
        T = self.map.T
        _, _, R = regularization(self.grid, T @ x, self.tau, self.gamma, hessian=True)
        return (self._Qx + T.T @ R @ T).tocsc()

    def newton_direction(self, g, active, delta, hessian=None) -> np.ndarray:
        """Solve ``H d = -g`` subject to ``d_A = delta`` by a Schur complement.

        ``H`` is the cached ``Q`` unless an explicit ``hessian`` is given; that
        one is handled by preconditioned CG, with a direct factorization as the
        fallback.
        """
        idx = np.flatnonzero(active)
        if hessian is None:
            d = -self.solve(g)
            cols = [self.column(i) for i in idx]
        else:
            d = self._pcg_direction(hessian, g, active, delta)
            if d is not None:
                return d
            lu = spla.splu(hessian, permc_spec="MMD_AT_PLUS_A",
                           options=dict(SymmetricMode=True))
            d = -lu.solve(g)
            E = np.zeros((g.size, idx.size))
            E[idx, np.arange(idx.size)] = 1.0
            cols = list(lu.solve(E).T) if idx.size else []
        if idx.size:
            W = np.column_stack(cols)
            S = W[idx]
            mu = np.linalg.solve(S, d[idx] - delta)
            d = d - W @ mu
        return d

    def _pcg_direction(self, H, g, active, delta, rtol=1e-10, max_iter=200):
        """Constrained Newton direction by CG on the free variables.

        Preconditioned by the cached factorization of ``Q`` (the regularization
        Hessian is PSD, so ``Q`` is a spectrally close lower bound).  Returns
        None when CG does not converge.
        """
        d0 = np.zeros_like(g)
        d0[active] = delta
        r = -(g + H @ d0)
        r[active] = 0.0

        def precond(v):
            return self.newton_direction(-v, active, np.zeros(int(active.sum())))

        rnorm0 = float(np.linalg.norm(r))
        if rnorm0 == 0.0:
            return d0
        y = np.zeros_like(g)
        s = precond(r)
        p = s.copy()
        rs = float(r @ s)
        for _ in range(max_iter):
            Hp = H @ p
            Hp[active] = 0.0
            pHp = float(p @ Hp)
            if pHp <= 0:
                return None
            a = rs / pHp
            y += a * p
            r -= a * Hp
            if np.linalg.norm(r) <= rtol * rnorm0:
                return y + d0
            s = precond(r)
            rs_new = float(r @ s)
            p = s + (rs_new / rs) * p
            rs = rs_new
        return None

    def rhs(self, u1, u2, theta, loads) -> np.ndarray:
        g = self.grid
        x1, x2 = g.flat(u1), g.flat(u2)
        b = self.ops.viscous @ x1 / self.tau
        if self.m.density > 0:
            b = b + self.mass_coef * self.ops.mass * (2 * x1 - x2)
        if theta is not None and np.any(self.ops.coupling):
            b = b + self.ops.thermal_load(g, theta)
        for f in loads:
            if f is not None:
                b = b + g.flat(f)
        return b


@dataclass
class UStepResult:
    u: np.ndarray
    iterations: int
    residual: float
    scale: float
    active: int
    method: str = "projected-newton"


def _objective(ctx: UStepContext, Qx, bx, x):
    T = ctx.map.T
    Qxx = Qx @ x
    rv, rg = regularization(ctx.grid, T @ x, ctx.tau, ctx.gamma)
    val = 0.5 * float(x @ Qxx) - float(bx @ x) + rv
    grad = Qxx - bx + T.T @ rg
    return val, grad


def _proj(x, upper):
    return np.minimum(x, upper)


def _pg_norm(x, g, upper):
    return float(np.linalg.norm(x - _proj(x - g, upper), np.inf))


def solve_u_step(grid: TwoBlockGrid, m: MaterialSet, law: MixityLaw, state, z_prev,
                 theta, loads, tau: float, gamma: float,
                 settings: SolverSettings | None = None,
                 context: UStepContext | None = None, step=None) -> UStepResult:
    """Minimize the incremental functional for ``u^k``.

    Parameters
    ----------
    state : tuple
        ``(u^{k-1}, u^{k-2})``, arrays of shape ``(N, d)``.
    z_prev : array
        Bonding field ``z^{k-1}`` on the interface pairs.
    theta : array or None
        Nodal temperature entering the thermal-expansion load.
    loads : tuple
        Nodal force arrays ``(N, d)`` (body and surface, already integrated).

    Raises
    ------
    StepFailure
        If no iterate meets ``tol_u`` within ``max_iter_u``.
    """
    settings = settings or SolverSettings()
    ctx = context or UStepContext(grid, m, tau, gamma)
    u1, u2 = state
    M = ctx.map
    Qx = ctx.hessian(z_prev)
    bx = M.T.T @ ctx.rhs(u1, u2, theta, loads)
    upper = M.upper
    bnorm = float(np.linalg.norm(bx, np.inf))
    Qabs = abs(Qx)

    def tolerance(x):
        # |Q||x| bounds the round-off of the gradient evaluation
        return settings.tol_u * max(bnorm, float(np.max(Qabs @ np.abs(x))), 1e-300)

    x0 = _proj(M.restrict(u1), upper)
    x, it, res, tol, _ = _projected_newton(ctx, Qx, bx, x0, upper, tolerance, settings)
    method = "projected-newton"
    if not res <= tol:
        x, J, g, extra = _spg(ctx, Qx, bx, x, upper, tol, settings.fallback_iter)
        it += extra
        res = _pg_norm(x, g, upper)
        tol = tolerance(x)
        method = "spectral-projected-gradient"
        if not res <= tol:
            raise StepFailure("u-step did not converge", step=step, residual=res,
                              tolerance=tol)
    u = grid.unflat(M.T @ x)
    active = int(np.sum(M.bounded & (x >= upper)))
    return UStepResult(u, it, res, tol / settings.tol_u, active, method)


def _projected_newton(ctx, Qx, bx, x, upper, tolerance, settings):
    """Projected Newton with Armijo search along the projection arc.

    The direction solves the Newton system on the free variables (active
    bounds held at their value by a Schur complement).  The Hessian is the
    cached quadratic part ``Q`` until contraction slows down, then the exact
    Hessian including the power regularization.
    """
    M = ctx.map
    x = _proj(x, upper)
    J, g = _objective(ctx, Qx, bx, x)
    res, tol = _pg_norm(x, g, upper), tolerance(x)
    it = 0
    stalled = False
    exact = False
    while res > tol and it < settings.max_iter_u:
        it += 1
        eps = min(1e-8 * (1.0 + np.abs(x).max()), res)
        active = M.bounded & (x >= upper - eps) & (g < 0)
        H = ctx.exact_hessian(x) if exact else None
        gap = upper[active] - x[active]
        # snapping nearly active bounds can overshoot the Newton scale; then hold them
        found = None
        for delta in ((gap, np.zeros_like(gap)) if np.any(gap > 0) else (gap,)):
            d = ctx.newton_direction(g, active, delta, H)
            trial = _arc_search(ctx, Qx, bx, x, J, g, d, upper, res, settings)
            if trial[1] and (found is None or trial[0] > found[0]):
                found = trial
            if found is not None and found[0] >= 1e-3:
                break
        alpha, accepted, xn, Jn, gn = found or trial
        if not accepted:
            if not exact:
                exact = True
                continue
            stalled = True
            break
        x, J, g = xn, Jn, gn
        new_res = _pg_norm(x, g, upper)
        if it >= 2 and (alpha < 1 or new_res > 0.05 * res):
            exact = True
        res, tol = new_res, tolerance(x)
    return x, it, res, tol, stalled


def _arc_search(ctx, Qx, bx, x, J, g, d, upper, res, settings):
    """Armijo backtracking along the projection arc ``P(x + alpha d)``."""
    alpha = settings.newton_damping
    for trial in range(50):
        xn = _proj(x + alpha * d, upper)
        Jn, gn = _objective(ctx, Qx, bx, xn)
        if not np.isfinite(Jn):
            alpha *= 0.5
            continue
        # near the minimizer J cannot resolve the decrease; use the gradient
        if trial == 0 and _pg_norm(xn, gn, upper) <= 0.5 * res and Jn <= J + 1e-12 * abs(J):
            return alpha, True, xn, Jn, gn
        if Jn <= J + settings.armijo * float(g @ (xn - x)):
            return alpha, True, xn, Jn, gn
        alpha *= 0.5
    return alpha, False, x, J, g


def _spg(ctx, Qx, bx, x, upper, tol, max_iter):
    """Monotone spectral projected gradient with Barzilai-Borwein steps."""
    J, g = _objective(ctx, Qx, bx, x)
    lam = 1.0 / max(float(np.linalg.norm(g, np.inf)), 1e-300)
    for it in range(1, max_iter + 1):
        if _pg_norm(x, g, upper) <= tol:
            return x, J, g, it
        d = _proj(x - lam * g, upper) - x
        gd = float(g @ d)
        alpha = 1.0
        while True:
            xn = x + alpha * d
            Jn, gn = _objective(ctx, Qx, bx, xn)
            if Jn <= J + 1e-4 * alpha * gd or alpha < 1e-12:
                break
            alpha *= 0.5
        s, y = xn - x, gn - g
        sy = float(s @ y)
        lam = float(s @ s) / sy if sy > 0 else 1e3 * lam
        x, J, g = xn, Jn, gn
    return x, J, g, max_iter


# ---------------------------------------------------------------------------
# delamination

def solve_z_step(grid: TwoBlockGrid, A, law: MixityLaw, jumps, z_prev) -> np.ndarray:
    """Debond (``z = 0``) where ``A j.j / 2 - a0 - a1 > 0``, else keep ``z_prev``."""
    jumps = np.atleast_2d(np.asarray(jumps, dtype=float))
    a0, a1 = split_a0_a1(law, jumps, grid.normal)
    g = 0.5 * np.einsum("ni,ij,nj->n", jumps, np.asarray(A), jumps) - a0 - a1
    z_prev = np.asarray(z_prev, dtype=float)
    return np.where(g > 0, 0.0, z_prev)


# ---------------------------------------------------------------------------
# heat

@dataclass
class WStepResult:
    w: np.ndarray
    iterations: int
    residual: float
    scale: float
    method: str
    history: list = field(default_factory=list)


def _conductivities(m: MaterialSet, w, dim):
    """Nodal rescaled conductivity per axis and its w-derivative."""
    hc, kl = m.heat_capacity, m.conductivity
    theta = np.asarray(temperature_of_enthalpy(hc, w), dtype=float)
    cv = hc.capacity(theta)
    k = kl.diagonal(theta, dim)
    kap = k / cv[:, None]
    dtheta = temperature_slope(hc, w)
    dk = kl.diagonal_slope(theta, dim)
    dcv = hc.capacity_slope(theta)
    dkap = dtheta[:, None] * (dk * cv[:, None] - k * dcv[:, None]) / cv[:, None] ** 2
    return kap, dkap


class HeatSystem:
    """Residual and Jacobian of the implicit enthalpy equation at one step."""

    def __init__(self, grid, m, law, u_k, u_prev, z_k, z_prev, jump_prev, w_prev,
                 g_nodal, tau):
        self.grid, self.m, self.tau = grid, m, tau
        V = grid.volume_weights
        v = (np.asarray(u_k) - np.asarray(u_prev)) / tau
        self.q = nodal_dissipation_density(grid, m, v)
        self.beta = np.einsum("nab,ab->n", strain(grid, v), m.thermal_coupling)
        jk = np.asarray(u_k)[grid.plus_nodes] - np.asarray(u_k)[grid.minus_nodes]
        _, a1 = split_a0_a1(law, jk, grid.normal)
        heat = 0.5 * grid.interface_weights * np.atleast_1d(a1) * (
            np.asarray(z_prev) - np.asarray(z_k)) / tau
        src = V * self.q
        if g_nodal is not None:
            src = src + np.asarray(g_nodal, dtype=float)
        src = src.copy()
        np.add.at(src, grid.plus_nodes, heat)
        np.add.at(src, grid.minus_nodes, heat)
        self.source = src
        self.interface_heat = 2.0 * heat
        self.eta = grid.interface_weights * m.transmission.eta(jump_prev, z_k)
        self.w_prev = np.asarray(w_prev, dtype=float)
        self.mass = V / tau
        self.edges = grid.conduction_edges

    def residual(self, w, jacobian=False, picard_at=None):
        g, m = self.grid, self.m
        N = g.n_nodes
        I, J, AX, C = self.edges
        hc = m.heat_capacity
        wk = w if picard_at is None else picard_at
        kap, dkap = _conductivities(m, wk, g.dim)
        kf = 0.5 * (kap[I, AX] + kap[J, AX])
        dw = w[I] - w[J]
        flux = C * kf * dw
        th = np.asarray(temperature_of_enthalpy(hc, w), dtype=float)
        dth = temperature_slope(hc, w)
        V = g.volume_weights
        r = self.mass * (w - self.w_prev) - self.source + V * th * self.beta
        np.add.at(r, I, flux)
        np.subtract.at(r, J, flux)
        p, q = g.plus_nodes, g.minus_nodes
        tr = self.eta * (th[p] - th[q])
        np.add.at(r, p, tr)
        np.subtract.at(r, q, tr)
        if not jacobian:
            return r
        if picard_at is None:
            a = C * (kf + 0.5 * dw * dkap[I, AX])
            b = C * (-kf + 0.5 * dw * dkap[J, AX])
        else:
            a, b = C * kf, -C * kf
        rows = np.concatenate([I, I, J, J, p, p, q, q, np.arange(N)])
        cols = np.concatenate([I, J, I, J, p, q, p, q, np.arange(N)])
        vals = np.concatenate([a, b, -a, -b,
                               self.eta * dth[p], -self.eta * dth[p],
                               -self.eta * dth[q], self.eta * dth[q],
                               self.mass + V * dth * self.beta])
        Jm = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
        return r, Jm

    def scale(self):
        return max(float(np.abs(self.mass * self.w_prev).max()),
                   float(np.abs(self.source).max()), 1e-300)


def solve_w_step(grid: TwoBlockGrid, m: MaterialSet, law: MixityLaw, u_k, u_prev,
                 z_k, z_prev, jump_prev, w_prev, g_nodal, tau: float,
                 settings: SolverSettings | None = None, step=None) -> WStepResult:
    """Solve the implicit enthalpy equation for ``w^k``.

    ``g_nodal`` is the boundary heat input already integrated against the
    face weights (shape ``(N,)``) or None.

    Raises
    ------
    StepFailure
        When neither damped Newton nor the Picard fallback reaches ``tol_w``.
    """
    settings = settings or SolverSettings()
    sysm = HeatSystem(grid, m, law, u_k, u_prev, z_k, z_prev, jump_prev, w_prev,
                      g_nodal, tau)
    scale = sysm.scale()
    tol = settings.tol_w * scale
    w = np.asarray(w_prev, dtype=float).copy()
    r = sysm.residual(w)
    res = float(np.abs(r).max())
    history = [res]
    it = 0
    while res > tol and it < settings.max_iter_w:
        it += 1
        r, Jm = sysm.residual(w, jacobian=True)
        dw = spla.spsolve(Jm.tocsc(), -r)
        alpha = settings.newton_damping
        while True:
            wn = w + alpha * dw
            rn = sysm.residual(wn)
            resn = float(np.abs(rn).max())
            if resn < (1 - 1e-4 * alpha) * res or alpha < 1e-6:
                break
            alpha *= 0.5
        if resn >= res:
            break
        w, res = wn, resn
        history.append(res)
    method = "newton"
    if res > tol:
        method = "picard"
        for _ in range(settings.max_iter_w * 4):
            it += 1
            r, Jm = sysm.residual(w, jacobian=True, picard_at=w)
            w = w + spla.spsolve(Jm.tocsc(), -r)
            res = float(np.abs(sysm.residual(w)).max())
            history.append(res)
            if res <= tol:
                break
        if res > tol:
            raise StepFailure("w-step did not converge", step=step, residual=res,
                              tolerance=tol, history=history)
    return WStepResult(w, it, res, scale, method, history)
