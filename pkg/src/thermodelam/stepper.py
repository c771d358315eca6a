"""Time stepping of the semi-implicit scheme.

Each step solves, in order, the displacement minimization (with the bonding
field of the previous step), the pointwise delamination rule at the new jump
and the implicit enthalpy equation.  The temperature entering the
thermal-expansion load of the displacement step is either lagged (one pass,
``Theta(w^{k-1})``) or iterated to a fixed point (``Theta(w^k)``).
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .energetics import (EnergyLedger, check_mechanical_inequality, check_total_inequality,
                         cone_violation, dissipation_variation, energy_scale,
                         entropy_production, kinetic_energy)
from .errors import ConfigurationError, QuadratureError, StepFailure
from .grid import (Assembled, GeometrySpec, TwoBlockGrid, build_two_block_grid, bulk_energy,
                   contact_faces, interface_energy, jump, regularization)
from .material import MaterialSet, enthalpy_of_temperature, temperature_of_enthalpy
from .mixity import MixityLaw
from .solvers import (SolverSettings, UStepContext, solve_u_step, solve_w_step, solve_z_step)

log = logging.getLogger(__name__)

TimeFunction = Callable[[float], float]
_GAUSS_X = np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GAUSS_W = np.array([5.0, 8.0, 5.0]) / 9.0


def _gauss(f, a, b):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * sum(wi * float(f(mid + half * xi)) for xi, wi in zip(_GAUSS_X, _GAUSS_W))


def _adaptive(f, a, b, whole, tol, depth):
    c = 0.5 * (a + b)
    left, right = _gauss(f, a, c), _gauss(f, c, b)
    if abs(left + right - whole) <= tol:
        return left + right
    if depth == 0:
        raise QuadratureError(f"local mean did not converge on [{a}, {b}]")
    return (_adaptive(f, a, c, left, 0.5 * tol, depth - 1)
            + _adaptive(f, c, b, right, 0.5 * tol, depth - 1))


def local_means(data: TimeFunction, tau: float, steps: int, tol: float = 1e-10,
                max_depth: int = 30) -> np.ndarray:
    """Step averages ``(1/tau) int_{t_{k-1}}^{t_k} data`` for ``k = 1..steps``.

    Three-point Gauss on each step, compared against its once-refined value
    and bisected until both agree to ``tol * (1 + |mean|)``.
    """
    out = np.empty(steps)
    for k in range(steps):
        a, b = k * tau, (k + 1) * tau
        whole = _gauss(data, a, b)
        val = _adaptive(data, a, b, whole, tol * tau * (1.0 + abs(whole) / tau), max_depth)
        out[k] = val / tau
    return out


@dataclass
class LoadCase:
    """Spatially uniform loads; each component is a function of time.

    ``body``: ``(block, components)`` with block in {plus, minus, both};
    ``traction``: ``(face, components)``; ``heat_flux``: ``(face, function)``.
    """

    body: list = field(default_factory=list)
    traction: list = field(default_factory=list)
    heat_flux: list = field(default_factory=list)


FieldSpec = Union[None, float, Sequence, Callable]


@dataclass
class InitialData:
    displacement: FieldSpec = None
    velocity: FieldSpec = None
    z: FieldSpec = 1.0
    theta: FieldSpec = 0.0


@dataclass
class Scenario:
    geometry: GeometrySpec
    material: MaterialSet
    mixity: MixityLaw
    horizon: float
    tau: float
    gamma: float = 5.0
    loads: LoadCase = field(default_factory=LoadCase)
    initial: InitialData = field(default_factory=InitialData)
    coupling: str = "lagged"
    fixed_point_tol: float = 1e-12
    fixed_point_max: int = 50
    settings: SolverSettings = field(default_factory=SolverSettings)
    allow_floating: bool = False
    stop_when_debonded: bool = False
    snapshot_stride: int = 1
    theta_floor: float = 0.0
    name: str = "scenario"

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.tau))

    def with_tau(self, tau: float) -> "Scenario":
        return dataclasses.replace(self, tau=float(tau))

    def with_coupling(self, coupling: str) -> "Scenario":
        return dataclasses.replace(self, coupling=coupling)

    def validate(self):
        if not (self.horizon > 0 and self.tau > 0):
            raise ConfigurationError("time horizon and step must be positive")
        K = self.horizon / self.tau
        if abs(K - round(K)) > 1e-9 * max(K, 1.0):
            raise ConfigurationError(f"horizon/tau = {K} is not an integer")
        if self.coupling not in ("lagged", "fixed_point"):
            raise ConfigurationError(f"unknown coupling mode {self.coupling!r}")
        if self.snapshot_stride < 1:
            raise ConfigurationError("snapshot stride must be at least 1")


@dataclass
class SimState:
    k: int
    t: float
    u: np.ndarray
    u_prev: np.ndarray
    z: np.ndarray
    w: np.ndarray

    def copy(self) -> "SimState":
        return SimState(self.k, self.t, self.u.copy(), self.u_prev.copy(), self.z.copy(),
                        self.w.copy())


@dataclass
class Trajectory:
    scenario: Scenario
    grid: TwoBlockGrid
    ledger: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    z_history: list = field(default_factory=list)
    final: Optional[SimState] = None
    failure: Optional[StepFailure] = None
    info: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.ledger)) * self.scenario.tau

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.ledger], dtype=float)

    @property
    def scale(self) -> float:
        return energy_scale(self.ledger)


def _field(spec, coords, shape, what):
    if spec is None:
        return np.zeros(shape)
    if callable(spec):
        out = np.asarray(spec(coords), dtype=float)
    else:
        out = np.asarray(spec, dtype=float)
    try:
        return np.broadcast_to(out, shape).astype(float).copy()
    except ValueError:
        raise ConfigurationError(f"initial {what} has shape {out.shape}, expected {shape}")


class Runtime:
    """Everything derived from a scenario that stays fixed along the run."""

    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.scenario = s = scenario
        m = s.material
        self.grid = g = build_two_block_grid(s.geometry, density=m.density,
                                             allow_floating=s.allow_floating)
        self.ops = Assembled.build(g, m)
        self.uctx = UStepContext(g, m, s.tau, s.gamma, ops=self.ops)
        K, N, d = s.steps, g.n_nodes, g.dim
        self.forces = np.zeros((K, N, d))
        self.heat = np.zeros((K, N))
        banned = set(contact_faces(d)) | set(s.geometry.dirichlet)
        for block, comps in s.loads.body:
            if block not in ("plus", "minus", "both"):
                raise ConfigurationError(f"unknown block {block!r} for body force")
            sel = np.ones(N, dtype=bool) if block == "both" else (g.block == (0 if block == "plus" else 1))
            Vb = np.where(sel, g.volume_weights, 0.0)
            for i, f in enumerate(self._components(comps, d)):
                self.forces[:, :, i] += np.outer(local_means(f, s.tau, K), Vb)
        for face, comps in s.loads.traction:
            nodes, wts = self._face(face, banned, "traction")
            for i, f in enumerate(self._components(comps, d)):
                self.forces[:, nodes, i] += np.outer(local_means(f, s.tau, K), wts)
        for face, f in s.loads.heat_flux:
            nodes, wts = self._face(face, set(contact_faces(d)), "heat flux")
            means = local_means(f, s.tau, K)
            if np.any(means < 0):
                raise ConfigurationError(
                    f"boundary heat flux on {face} is negative; g >= 0 is required "
                    "for temperature positivity")
            self.heat[:, nodes] += np.outer(means, wts)

    def _components(self, comps, d):
        comps = list(comps)
        if len(comps) != d:
            raise ConfigurationError(f"vector load needs {d} components, got {len(comps)}")
        return comps

    def _face(self, face, banned, what):
        if face not in self.grid.faces or face in banned:
            raise ConfigurationError(f"{what} cannot act on face {face!r}")
        return self.grid.faces[face]


def initialize(scenario: Scenario, runtime: Optional[Runtime] = None) -> SimState:
    """State at ``k = 0``: ``u^0 = u0``, ``u^{-1} = u0 - tau v0``, ``z^0 = z0``, ``w^0 = h(theta0)``."""
    rt = runtime or Runtime(scenario)
    g, s = rt.grid, scenario
    N, d = g.n_nodes, g.dim
    u0 = _field(s.initial.displacement, g.coords, (N, d), "displacement")
    v0 = _field(s.initial.velocity, g.coords, (N, d), "velocity")
    z0 = _field(s.initial.z, g.interface_coords, (g.n_interface,), "bonding field")
    th0 = _field(s.initial.theta, g.coords, (N,), "temperature")
    if np.any(z0 < 0) or np.any(z0 > 1):
        raise ConfigurationError("initial bonding field must lie in [0, 1]")
    if np.any(th0 < 0):
        raise ConfigurationError("initial temperature must be nonnegative")
    if np.any(u0[g.dirichlet] != 0) or np.any(v0[g.dirichlet] != 0):
        raise ConfigurationError("initial displacement and velocity must vanish on the Dirichlet boundary")
    if cone_violation(g, u0) > 1e-14 * (1.0 + np.abs(u0).max()):
        raise ConfigurationError("initial displacement jump violates the contact cone")
    w0 = enthalpy_of_temperature(s.material.heat_capacity, th0)
    return SimState(0, 0.0, u0, u0 - s.tau * v0, z0, np.asarray(w0, dtype=float))


@dataclass
class StepRecord:
    theta_used: np.ndarray
    outer_iterations: int
    u_iterations: int
    w_iterations: int
    u_residual: float
    w_residual: float


def advance(state: SimState, scenario: Scenario, k: Optional[int] = None,
            runtime: Optional[Runtime] = None) -> tuple:
    """One step ``k-1 -> k``; returns ``(new_state, StepRecord)``.

    Raises
    ------
    StepFailure
        Propagated from the sub-solvers, or a non-converged fixed point.
    """
    rt = runtime or Runtime(scenario)
    s, g, m, law = scenario, rt.grid, scenario.material, scenario.mixity
    k = state.k + 1 if k is None else k
    tau = s.tau
    F = rt.forces[k - 1]
    gN = rt.heat[k - 1]
    hc = m.heat_capacity
    coupled = s.coupling == "fixed_point" and np.any(m.thermal_coupling)
    w_iter = state.w
    jump_prev = jump(g, state.u)
    outer = 0
    iters_u = iters_w = 0
    while True:
        outer += 1
        theta_used = np.asarray(temperature_of_enthalpy(hc, w_iter), dtype=float)
        ures = solve_u_step(g, m, law, (state.u, state.u_prev), state.z, theta_used, (F,),
                            tau, s.gamma, s.settings, context=rt.uctx, step=k)
        z_new = solve_z_step(g, m.adhesive, law, jump(g, ures.u), state.z)
        wres = solve_w_step(g, m, law, ures.u, state.u, z_new, state.z, jump_prev, state.w,
                            gN, tau, s.settings, step=k)
        iters_u += ures.iterations
        iters_w += wres.iterations
        if not coupled:
            break
        diff = float(np.abs(wres.w - w_iter).max())
        if diff <= s.fixed_point_tol * max(1.0, float(np.abs(wres.w).max())):
            break
        if outer >= s.fixed_point_max:
            raise StepFailure("fixed-point coupling did not converge", step=k, difference=diff)
        w_iter = wres.w
    new = SimState(k, k * tau, ures.u, state.u, z_new, wres.w)
    rec = StepRecord(theta_used, outer, iters_u, iters_w, ures.residual, wres.residual)
    return new, rec


def ledger_row(rt: Runtime, state: SimState, prev: Optional[SimState] = None,
               rec: Optional[StepRecord] = None) -> EnergyLedger:
    s, g, m = rt.scenario, rt.grid, rt.scenario.material
    tau = s.tau
    v = (state.u - state.u_prev) / tau
    x = g.flat(state.u)
    stored = bulk_energy(g, rt.ops, state.u, (tau, s.gamma))
    stored += interface_energy(g, m, s.mixity, state.u, state.z)[0]
    theta = np.asarray(temperature_of_enthalpy(m.heat_capacity, state.w), dtype=float)
    gN = rt.heat[state.k - 1] if state.k > 0 else None
    ent, _ = entropy_production(g, m, state.w, gN)
    row = EnergyLedger(
        step=state.k,
        kinetic=kinetic_energy(g, m.density, v),
        stored=stored,
        thermal=float(np.sum(g.volume_weights * state.w)),
        regularization=regularization(g, x, tau, s.gamma)[0],
        min_theta=float(theta.min()),
        min_enthalpy=float(state.w.min()),
        max_cone_violation=cone_violation(g, state.u),
        entropy_production=ent,
        bonded_fraction=float(np.sum(g.interface_weights * state.z) / np.sum(g.interface_weights)),
    )
    if prev is not None:
        du = g.flat(state.u - prev.u)
        row.dissipation = dissipation_variation(g, s.mixity, jump(g, state.u), state.z, prev.z)
        row.viscous = float(du @ (rt.ops.viscous @ du)) / tau
        row.work_mechanical = float(g.flat(rt.forces[state.k - 1]) @ du)
        row.work_heat = tau * float(np.sum(rt.heat[state.k - 1]))
        row.coupling_work = float(rt.ops.thermal_load(g, rec.theta_used) @ du)
    return row


def run(scenario: Scenario, progress: Optional[Callable] = None,
        steps: Optional[int] = None) -> Trajectory:
    """Run the scenario, recording the ledger; stops at the first failure.

    ``steps`` truncates the run (``0`` returns only the initial state).
    """
    rt = Runtime(scenario)
    g = rt.grid
    state = initialize(scenario, rt)
    traj = Trajectory(scenario, g)
    traj.ledger.append(ledger_row(rt, state))
    traj.snapshots.append(state.copy())
    traj.z_history.append(state.z.copy())
    ge = regularization(g, g.flat(state.u), 1.0, scenario.gamma)[0]
    traj.info["initial_regularization"] = scenario.tau * ge
    stats = {"outer": [], "u_iterations": [], "w_iterations": []}
    last = scenario.steps if steps is None else min(int(steps), scenario.steps)
    for k in range(1, last + 1):
        try:
            new, rec = advance(state, scenario, k, rt)
        except StepFailure as exc:
            traj.failure = exc
            log.warning("run %s stopped: %s", scenario.name, exc)
            break
        traj.ledger.append(ledger_row(rt, new, state, rec))
        traj.z_history.append(new.z.copy())
        stats["outer"].append(rec.outer_iterations)
        stats["u_iterations"].append(rec.u_iterations)
        stats["w_iterations"].append(rec.w_iterations)
        state = new
        if k % scenario.snapshot_stride == 0 or k == last:
            traj.snapshots.append(state.copy())
        if progress is not None:
            progress(k, state)
        if scenario.stop_when_debonded and not np.any(state.z > 0):
            traj.info["stopped_debonded"] = k
            if traj.snapshots[-1].k != k:
                traj.snapshots.append(state.copy())
            break
    traj.final = state
    mech = check_mechanical_inequality(traj.ledger)
    tot = check_total_inequality(traj.ledger)
    for row, a, b in zip(traj.ledger, mech, tot):
        row.mechanical_residual = float(a)
        row.total_residual = float(b)
    traj.info.update({k: np.asarray(v) for k, v in stats.items()})
    return traj
