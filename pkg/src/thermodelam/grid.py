"""Structured two-block grid glued along a flat contact surface.

The plus block sits on top of the minus block along the last axis; the
contact normal points from the plus into the minus block.  Displacements and
enthalpy live at nodes.  Derivatives use ``numpy.gradient`` stencils
(centered inside, first-order one-sided at block boundaries, never across the
contact surface), assembled as sparse matrices so every discrete energy is an
explicit function of the nodal values with an exact gradient.

Bulk integrals use the nodal rule, i.e. the midpoint rule on the dual cells
around each node (half cells on the boundary); interface and boundary-face
integrals use the nodal trapezoid rule.

Flat vectors are component-major: ``x[i * N + n]`` is component ``i`` at node ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .material import MaterialSet
from .mixity import MixityLaw, alpha0, alpha0_grad

PLUS, MINUS = 0, 1
BLOCK_NAMES = ("plus", "minus")
_AXIS_FACES = {
    2: (("left", "right"), ("bottom", "top")),
    3: (("left", "right"), ("front", "back"), ("bottom", "top")),
}


def face_names(dim: int) -> list:
    return [f"{b}.{f}" for b in BLOCK_NAMES for pair in _AXIS_FACES[dim] for f in pair]


def contact_faces(dim: int) -> tuple:
    lo, hi = _AXIS_FACES[dim][-1]
    return (f"plus.{lo}", f"minus.{hi}")


@dataclass
class GeometrySpec:
    dim: int = 2
    extent: tuple = (1.0,)
    heights: tuple = (0.5, 0.5)
    nodes: tuple = (8,)
    nodes_normal: tuple = (4, 4)
    dirichlet: tuple = ("plus.left", "minus.left")
    cone: object = "halfspace"

    def __post_init__(self):
        self.extent = tuple(float(v) for v in np.atleast_1d(self.extent))
        self.nodes = tuple(int(v) for v in np.atleast_1d(self.nodes))
        self.heights = tuple(float(v) for v in self.heights)
        self.nodes_normal = tuple(int(v) for v in self.nodes_normal)
        self.dirichlet = tuple(self.dirichlet)


def _derivative_1d(n: int, h: float) -> sp.csr_matrix:
    rows, cols, vals = [0, 0], [0, 1], [-1.0 / h, 1.0 / h]
    for i in range(1, n - 1):
        rows += [i, i]
        cols += [i - 1, i + 1]
        vals += [-0.5 / h, 0.5 / h]
    rows += [n - 1, n - 1]
    cols += [n - 2, n - 1]
    vals += [-1.0 / h, 1.0 / h]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _trapezoid(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _outer_weights(weights: list) -> np.ndarray:
    out = weights[0]
    for w in weights[1:]:
        out = np.multiply.outer(out, w)
    return np.asarray(out).ravel()


class TwoBlockGrid:
    """Immutable two-block grid with precomputed sparse operators."""

    def __init__(self, dim, shapes, spacings, origins, dirichlet_faces, halfspace):
        self.dim = dim
        self.shapes = [tuple(s) for s in shapes]
        self.spacings = [np.asarray(h, dtype=float) for h in spacings]
        self.sizes = [int(np.prod(s)) for s in self.shapes]
        self.offsets = [0, self.sizes[0]]
        self.n_nodes = sum(self.sizes)
        self.dirichlet_faces = tuple(dirichlet_faces)
        self.normal = -np.eye(dim)[dim - 1]
        self.tangents = np.eye(dim)[: dim - 1]

        coords, vols, blocks = [], [], []
        for b in (PLUS, MINUS):
            axes = [origins[b][a] + self.spacings[b][a] * np.arange(self.shapes[b][a])
                    for a in range(dim)]
            mesh = np.meshgrid(*axes, indexing="ij")
            coords.append(np.stack([m.ravel() for m in mesh], axis=1))
            vols.append(_outer_weights([_trapezoid(n, h) for n, h in
                                        zip(self.shapes[b], self.spacings[b])]))
            blocks.append(np.full(self.sizes[b], b))
        self.coords = np.concatenate(coords)
        self.volume_weights = np.concatenate(vols)
        self.block = np.concatenate(blocks)

        # interface pairs: plus bottom layer / minus top layer, same in-plane index
        inplane = self.shapes[PLUS][:-1]
        idx = np.indices(inplane).reshape(dim - 1, -1)
        self.plus_nodes = self.node_index(PLUS, *idx, np.zeros(idx.shape[1], dtype=int))
        top = self.shapes[MINUS][-1] - 1
        self.minus_nodes = self.node_index(MINUS, *idx, np.full(idx.shape[1], top))
        self.n_interface = self.plus_nodes.size
        self.interface_weights = _outer_weights(
            [_trapezoid(n, h) for n, h in zip(inplane, self.spacings[PLUS][:-1])])
        self.halfspace = np.broadcast_to(np.asarray(halfspace, dtype=bool),
                                         (self.n_interface,)).copy()

        self.faces = {}
        for b in (PLUS, MINUS):
            for a in range(dim):
                for side, name in enumerate(_AXIS_FACES[dim][a]):
                    self.faces[f"{BLOCK_NAMES[b]}.{name}"] = self._face(b, a, side)
        self.dirichlet = np.zeros(self.n_nodes, dtype=bool)
        for name in self.dirichlet_faces:
            self.dirichlet[self.faces[name][0]] = True

    # -- indexing ---------------------------------------------------------
    def node_index(self, block, *multi):
        return self.offsets[block] + np.ravel_multi_index(tuple(multi), self.shapes[block])

    def _face(self, b, axis, side):
        shape = self.shapes[b]
        idx = np.indices(shape).reshape(self.dim, -1)
        sel = idx[axis] == (0 if side == 0 else shape[axis] - 1)
        nodes = self.offsets[b] + np.flatnonzero(sel)
        w = np.ones(nodes.size)
        for a in range(self.dim):
            if a == axis:
                continue
            tw = _trapezoid(shape[a], self.spacings[b][a])
            w *= tw[idx[a][sel]]
        return nodes, w

    @property
    def interface_coords(self):
        return self.coords[self.plus_nodes]

    @property
    def boundary_faces(self):
        """Faces of the outer boundary (contact faces excluded)."""
        skip = contact_faces(self.dim)
        return {k: v for k, v in self.faces.items() if k not in skip}

    # -- operators --------------------------------------------------------
    @cached_property
    def derivatives(self) -> list:
        """Block-diagonal nodal derivative matrices, one per axis."""
        out = []
        for a in range(self.dim):
            mats = []
            for b in (PLUS, MINUS):
                ops = [sp.identity(n, format="csr") for n in self.shapes[b]]
                ops[a] = _derivative_1d(self.shapes[b][a], self.spacings[b][a])
                M = ops[0]
                for o in ops[1:]:
                    M = sp.kron(M, o, format="csr")
                mats.append(M)
            out.append(sp.block_diag(mats, format="csr"))
        return out

    @cached_property
    def strain_operator(self) -> sp.csr_matrix:
        d, D = self.dim, self.derivatives
        blocks = [[None] * d for _ in range(d * d)]
        for a in range(d):
            for b in range(d):
                r = a * d + b
                if a == b:
                    blocks[r][a] = D[a]
                else:
                    blocks[r][a] = 0.5 * D[b]
                    blocks[r][b] = 0.5 * D[a]
        return sp.bmat(blocks, format="csr")

    @cached_property
    def strain_gradient_operator(self) -> sp.csr_matrix:
        stack = sp.vstack(self.derivatives, format="csr")
        return (sp.kron(sp.identity(self.dim ** 2), stack, format="csr")
                @ self.strain_operator).tocsr()

    @cached_property
    def jump_operator(self) -> sp.csr_matrix:
        N, Nc, d = self.n_nodes, self.n_interface, self.dim
        rows = np.concatenate([np.arange(Nc) + i * Nc for i in range(d)] * 2)
        cols = np.concatenate([self.plus_nodes + i * N for i in range(d)]
                              + [self.minus_nodes + i * N for i in range(d)])
        vals = np.concatenate([np.ones(d * Nc), -np.ones(d * Nc)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(d * Nc, d * N))

    @cached_property
    def conduction_edges(self):
        """Nearest-neighbour pairs ``(i, j, axis, area/h)`` of the dual-cell scheme."""
        I, J, AX, C = [], [], [], []
        for b in (PLUS, MINUS):
            shape, h = self.shapes[b], self.spacings[b]
            idx = np.indices(shape).reshape(self.dim, -1)
            for a in range(self.dim):
                sel = idx[a] < shape[a] - 1
                i = self.offsets[b] + np.flatnonzero(sel)
                step = int(np.prod(shape[a + 1:]))
                area = np.ones(i.size)
                for c in range(self.dim):
                    if c != a:
                        area *= _trapezoid(shape[c], h[c])[idx[c][sel]]
                I.append(i)
                J.append(i + step)
                AX.append(np.full(i.size, a))
                C.append(area / h[a])
        return (np.concatenate(I), np.concatenate(J), np.concatenate(AX),
                np.concatenate(C))

    def flat(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float).T.reshape(-1)

    def unflat(self, x) -> np.ndarray:
        return np.asarray(x).reshape(self.dim, self.n_nodes).T.copy()


def build_two_block_grid(spec: GeometrySpec, density: float = 0.0,
                         allow_floating: bool = False) -> TwoBlockGrid:
    """Build the grid, enforcing the geometric hypotheses of the existence theory.

    Raises
    ------
    ConfigurationError
        On bad extents/resolutions/tags, halfspace cones with inertia, or a
        quasistatic block not clamped anywhere.
    """
    d = spec.dim
    if d not in (2, 3):
        raise ConfigurationError("dimension must be 2 or 3")
    if len(spec.extent) != d - 1 or len(spec.nodes) != d - 1:
        raise ConfigurationError(f"extent and nodes need {d - 1} in-plane entries")
    if min(spec.extent) <= 0 or min(spec.heights) <= 0:
        raise ConfigurationError("block extents must be positive")
    if min(spec.nodes) < 2 or min(spec.nodes_normal) < 2:
        raise ConfigurationError("at least 2 nodes per axis are required")
    valid = set(face_names(d)) - set(contact_faces(d))
    bad = [f for f in spec.dirichlet if f not in valid]
    if bad:
        raise ConfigurationError(f"invalid Dirichlet faces {bad}; choose from {sorted(valid)}")

    cone = spec.cone
    if isinstance(cone, str):
        if cone not in ("halfspace", "subspace"):
            raise ConfigurationError(f"unknown contact cone {cone!r}")
        halfspace = cone == "halfspace"
    else:
        halfspace = np.asarray([c == "halfspace" for c in cone])
    if density > 0 and np.any(halfspace):
        raise ConfigurationError(
            "with inertia (density > 0) every contact cone must be a linear subspace; "
            "the halfspace (Signorini) cone is only admissible quasistatically")
    if density == 0 and not allow_floating:
        for name in BLOCK_NAMES:
            if not any(f.startswith(name + ".") for f in spec.dirichlet):
                raise ConfigurationError(
                    f"quasistatic problem: block {name!r} must touch the Dirichlet "
                    "boundary on a set of positive measure")

    shapes, spacings, origins = [], [], []
    for b, (H, nn) in enumerate(zip(spec.heights, spec.nodes_normal)):
        shape = tuple(spec.nodes) + (nn,)
        h = [L / (n - 1) for L, n in zip(spec.extent, spec.nodes)] + [H / (nn - 1)]
        origin = [0.0] * (d - 1) + ([0.0] if b == PLUS else [-H])
        shapes.append(shape)
        spacings.append(h)
        origins.append(origin)
    return TwoBlockGrid(d, shapes, spacings, origins, spec.dirichlet, halfspace)


# ---------------------------------------------------------------------------
# fields and discrete differential operators

def strain(grid: TwoBlockGrid, u) -> np.ndarray:
    """Nodal symmetric strain, shape ``(N, d, d)``."""
    d, N = grid.dim, grid.n_nodes
    e = grid.strain_operator @ grid.flat(u)
    return e.reshape(d, d, N).transpose(2, 0, 1)


def strain_gradient(grid: TwoBlockGrid, u) -> np.ndarray:
    """Nodal strain gradient ``g[n, a, b, c] = d_c e_ab``."""
    d, N = grid.dim, grid.n_nodes
    g = grid.strain_gradient_operator @ grid.flat(u)
    return g.reshape(d, d, d, N).transpose(3, 0, 1, 2)


def jump(grid: TwoBlockGrid, u) -> np.ndarray:
    """Displacement jump ``u+ - u-`` at interface pairs, shape ``(Nc, d)``."""
    u = np.asarray(u, dtype=float)
    return u[grid.plus_nodes] - u[grid.minus_nodes]


def _tensor_matrix(T, order, dim):
    n = dim ** order
    return np.asarray(T).reshape(n, n)


@dataclass
class Assembled:
    """Sparse quadratic forms of one (grid, material) pair."""

    elastic: sp.csr_matrix      # 1/2 x.K x = bulk elastic + hyperelastic energy
    viscous: sp.csr_matrix      # x.K x = 2 zeta_2 (dissipation rate)
    mass: np.ndarray            # lumped nodal volume, tiled per component
    coupling: np.ndarray        # B:e(u) = coupling.T-weighted, see thermal_load
    adhesive: np.ndarray

    @classmethod
    def build(cls, grid: TwoBlockGrid, m: MaterialSet) -> "Assembled":
        d = grid.dim
        V = sp.diags(grid.volume_weights)
        E, G = grid.strain_operator, grid.strain_gradient_operator

        def form(C2, C3):
            K = E.T @ sp.kron(_tensor_matrix(C2, 2, d), V) @ E
            K = K + G.T @ sp.kron(_tensor_matrix(C3, 3, d), V) @ G
            K = 0.5 * (K + K.T)
            return K.tocsr()

        return cls(
            elastic=form(m.elastic, m.hyper_elastic),
            viscous=form(m.viscous, m.hyper_viscous),
            mass=np.tile(grid.volume_weights, d),
            coupling=np.asarray(m.thermal_coupling, dtype=float),
            adhesive=np.asarray(m.adhesive, dtype=float),
        )

    def interface_form(self, grid: TwoBlockGrid, z) -> sp.csr_matrix:
        """``x.K x = sum_c A_c z_c A[u]_c.[u]_c`` over the contact surface."""
        Jop = grid.jump_operator
        W = sp.diags(grid.interface_weights * np.asarray(z, dtype=float))
        return (Jop.T @ sp.kron(self.adhesive, W) @ Jop).tocsr()

    def thermal_load(self, grid: TwoBlockGrid, theta) -> np.ndarray:
        """Gradient of ``u -> sum_n V_n theta_n B:e_n(u)``."""
        vt = grid.volume_weights * np.asarray(theta, dtype=float)
        rhs = np.concatenate([self.coupling.ravel()[k] * vt
                              for k in range(grid.dim ** 2)])
        return grid.strain_operator.T @ rhs


def regularization(grid: TwoBlockGrid, x, tau, gamma, hessian=False):
    """``(tau/gamma) sum_n V_n (|e_n|^gamma + |grad e_n|^gamma)`` with gradient."""
    d, N, V = grid.dim, grid.n_nodes, grid.volume_weights
    value, grad = 0.0, np.zeros_like(x)
    hess = None
    if tau == 0:
        return (value, grad, sp.csr_matrix((x.size, x.size))) if hessian else (value, grad)
    mats = []
    for op, ncomp in ((grid.strain_operator, d * d), (grid.strain_gradient_operator, d ** 3)):
        f = (op @ x).reshape(ncomp, N)
        nrm = np.sqrt(np.sum(f * f, axis=0))
        value += tau / gamma * float(np.sum(V * nrm ** gamma))
        coef = tau * V * nrm ** (gamma - 2)
        grad += op.T @ (coef * f).ravel()
        if hessian:
            # tau V (|f|^{g-2} I + (g-2) |f|^{g-4} f f^T), block by node
            c2 = tau * V * (gamma - 2) * nrm ** (gamma - 4) if gamma >= 4 else \
                tau * V * (gamma - 2) * np.where(nrm > 0, nrm, 1.0) ** (gamma - 4)
            diag = sp.kron(sp.identity(ncomp), sp.diags(coef))
            rows, cols, vals = [], [], []
            for i in range(ncomp):
                for j in range(ncomp):
                    rows.append(i * N + np.arange(N))
                    cols.append(j * N + np.arange(N))
                    vals.append(c2 * f[i] * f[j])
            outer = sp.csr_matrix((np.concatenate(vals),
                                   (np.concatenate(rows), np.concatenate(cols))),
                                  shape=(ncomp * N, ncomp * N))
            mats.append(op.T @ (diag + outer) @ op)
    if hessian:
        hess = (mats[0] + mats[1]).tocsr()
        return value, grad, hess
    return value, grad


def regularization_magnitude(grid, u, tau, gamma) -> float:
    return regularization(grid, grid.flat(u), tau, gamma)[0]


def interface_energy(grid, m, law, u, z, a0=None):
    """``sum_c A_c z_c alpha0([u]_c)`` and its gradient (flat)."""
    j = jump(grid, u)
    wz = grid.interface_weights * np.asarray(z, dtype=float)
    value = float(np.sum(wz * np.atleast_1d(alpha0(law, m.adhesive, j, a0))))
    gj = wz[:, None] * alpha0_grad(law, m.adhesive, j, a0)
    return value, grid.jump_operator.T @ gj.T.reshape(-1)


def stored_energy(grid: TwoBlockGrid, m: MaterialSet, law: MixityLaw, u, z,
                  tau_gamma=(0.0, 5.0), ops: Optional[Assembled] = None, a0=None):
    """Regularized stored energy and its exact gradient w.r.t. ``u``.

    Returns ``(value, gradient)`` with the gradient shaped like ``u``.  The
    cone indicator is not included (feasibility is the solver's business).
    """
    ops = ops or Assembled.build(grid, m)
    x = grid.flat(u)
    tau, gamma = tau_gamma
    Kx = ops.elastic @ x
    value = 0.5 * float(x @ Kx)
    grad = Kx
    rv, rg = regularization(grid, x, tau, gamma)
    iv, ig = interface_energy(grid, m, law, u, z, a0)
    return value + rv + iv, grid.unflat(grad + rg + ig)


def bulk_energy(grid, ops: Assembled, u, tau_gamma) -> float:
    x = grid.flat(u)
    return 0.5 * float(x @ (ops.elastic @ x)) + regularization(grid, x, *tau_gamma)[0]


def viscous_energy_rate(grid: TwoBlockGrid, m: MaterialSet, v,
                        ops: Optional[Assembled] = None):
    """``sum V (D e(v):e(v) + G grad e(v) : grad e(v))`` and its gradient."""
    ops = ops or Assembled.build(grid, m)
    x = grid.flat(v)
    Kx = ops.viscous @ x
    return float(x @ Kx), grid.unflat(2.0 * Kx)


def nodal_dissipation_density(grid: TwoBlockGrid, m: MaterialSet, v) -> np.ndarray:
    """Pointwise ``D e(v):e(v) + G grad e(v) : grad e(v)`` at nodes."""
    e = strain(grid, v)
    ge = strain_gradient(grid, v)
    q = np.einsum("nab,abcd,ncd->n", e, m.viscous, e)
    q += np.einsum("nabc,abcdef,ndef->n", ge, m.hyper_viscous, ge)
    return q
