"""Discrete Perron-Bremermann envelopes on the symmetry-reduced grid.

The unknown lives on nodes ``(t, u, v)`` with ``t = |z|`` and ``w = u + iv``.
A node value is lowered to the smallest average over the circles of every
complex disc through it that fits inside the problem's mask; iterating this
(Jacobi style, from the constraint cap downwards) converges monotonically to
the largest discrete sub-mean function below the upper bound and obstacle.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from . import _kernels
from .hartogs_domain import (
    DEFAULT_PROFILE,
    DomainPoint,
    RadialProfile,
    distance_to_K_reduced,
    in_V_reduced,
    rho_reduced,
    tangent_plane_distance,
)
from .psh_construction import disc_directions, eval_g_reduced

OMEGA1_ROOF = 8.0
GRID_TOL = 1e-9
ACTIVE_FRACTION = 0.05


class InvalidRange(ValueError):
    pass


class NoNodesInRegion(ValueError):
    pass


def _configure_threads():
    cap = os.environ.get("PLUREX_THREADS")
    if cap:
        import numba

        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class Axis:
    start: float
    stop: float
    step: float

    @property
    def n(self) -> int:
        return int(round((self.stop - self.start) / self.step)) + 1

    @property
    def coords(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n)

    def index(self, x: float) -> int:
        q = (x - self.start) / self.step
        i = int(round(q))
        if abs(q - i) > 1e-6 or not 0 <= i < self.n:
            raise KeyError(f"{x} is not a node of {self}")
        return i


@dataclass
class Grid3:
    """Reduced-coordinate grid with the masks of Omega, its closure and Omega_delta."""

    t_axis: Axis
    u_axis: Axis
    v_axis: Axis
    interior_mask: np.ndarray
    closure_mask: np.ndarray
    enlarged_mask: np.ndarray
    k_distance: np.ndarray
    delta: float
    profile: RadialProfile = DEFAULT_PROFILE

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.t_axis.n, self.u_axis.n, self.v_axis.n)

    @property
    def axes(self) -> tuple[Axis, Axis, Axis]:
        return (self.t_axis, self.u_axis, self.v_axis)

    @property
    def spacing(self) -> float:
        return max(self.t_axis.step, self.u_axis.step, self.v_axis.step)

    @property
    def diagonal(self) -> float:
        return math.sqrt(self.t_axis.step**2 + self.u_axis.step**2 + self.v_axis.step**2)

    def mesh(self):
        return np.meshgrid(self.t_axis.coords, self.u_axis.coords, self.v_axis.coords, indexing="ij")

    def node_index(self, t: float, w: complex) -> tuple[int, int, int]:
        return (self.t_axis.index(t), self.u_axis.index(w.real), self.v_axis.index(w.imag))

    def constraint_mask(self, eta: float, mask: np.ndarray | None = None) -> np.ndarray:
        """Nodes of ``mask`` within ``eta`` of K."""
        base = self.interior_mask if mask is None else mask
        return base & (self.k_distance <= eta)

    def v_mask(self, delta: float | None = None) -> np.ndarray:
        T, U, V = self.mesh()
        d = self.delta if delta is None else delta
        return in_V_reduced(T, U, V, d, self.profile) & self.interior_mask


def build_grid(
    t_range: tuple[float, float] = (0.0, 18.0),
    w_range: tuple[float, float] = (-2.6, 2.6),
    spacing_t: float = 0.2,
    spacing_w: float = 0.04,
    delta: float = 0.05,
    profile: RadialProfile = DEFAULT_PROFILE,
) -> Grid3:
    """Masks from the sign of rho at the nodes; Omega_delta from a distance transform.

    The distance transform measures distance to closure nodes with the true
    axis spacings, which is the ambient C^2 distance on the (t, w) chart.
    """
    if spacing_t <= 0 or spacing_w <= 0:
        raise InvalidRange("spacings must be positive")
    if not (t_range[0] <= 0.0 and t_range[1] >= 18.0 and w_range[0] <= -2.6 and w_range[1] >= 2.6):
        raise InvalidRange("ranges must cover [0, 18] x [-2.6, 2.6]^2")
    if t_range[0] < 0:
        raise InvalidRange("t = |z| is nonnegative")
    if not 0 < delta <= 0.1:
        raise InvalidRange("delta must lie in (0, 0.1]")
    ta = Axis(t_range[0], t_range[0] + spacing_t * math.ceil((t_range[1] - t_range[0]) / spacing_t - 1e-9), spacing_t)
    half = spacing_w * math.ceil(max(-w_range[0], w_range[1]) / spacing_w - 1e-9)
    ua = Axis(-half, half, spacing_w)
    va = Axis(-half, half, spacing_w)
    T, U, V = np.meshgrid(ta.coords, ua.coords, va.coords, indexing="ij")
    rho = rho_reduced(T, U, V, profile)
    interior = rho < -GRID_TOL
    closure = rho <= GRID_TOL
    dist = ndimage.distance_transform_edt(~closure, sampling=(spacing_t, spacing_w, spacing_w))
    enlarged = closure | (dist < delta)
    kd = distance_to_K_reduced(T, U, V, profile)
    for m in (interior, closure, enlarged):
        if m[:, 0].any() or m[:, -1].any() or m[:, :, 0].any() or m[:, :, -1].any():
            raise InvalidRange("domain touches the w-range border; widen w_range")
    return Grid3(ta, ua, va, interior, closure, enlarged, kd, delta, profile)


# ---------------------------------------------------------------------------
# fields and problems


def reduced_coordinates(z, w):
    """The chart (z, w) -> (|z|, Re w, Im w) every field lives on."""
    w = np.asarray(w, dtype=complex)
    return np.abs(z), w.real, w.imag


@dataclass
class GridField:
    """Node values; only entries on ``mask`` are meaningful (``+inf`` elsewhere)."""

    values: np.ndarray
    mask: np.ndarray

    def at(self, idx: tuple[int, int, int]) -> float:
        return float(self.values[idx])

    def masked(self) -> np.ndarray:
        return self.values[self.mask]

    def sample(self, grid: "Grid3", z, w) -> np.ndarray:
        """Trilinear interpolation at full-space points; ``nan`` where a
        stencil corner is off the mask.
        """
        t, u, v = reduced_coordinates(z, w)
        q = [(np.asarray(x, dtype=float) - a.start) / a.step for x, a in zip((t, u, v), grid.axes)]
        i0 = [np.clip(np.floor(x).astype(int), 0, a.n - 2 if a.n > 1 else 0) for x, a in zip(q, grid.axes)]
        fr = [x - i for x, i in zip(q, i0)]
        acc = np.zeros(np.shape(t))
        ok = np.ones(np.shape(t), bool)
        for corner in np.ndindex(2, 2, 2):
            wt = np.ones(np.shape(t))
            ix = []
            for c, i, f, a in zip(corner, i0, fr, grid.axes):
                wt = wt * (f if c else 1 - f)
                ix.append(np.minimum(i + c, a.n - 1))
            ix = tuple(ix)
            used = wt > 1e-12
            ok &= ~used | self.mask[ix]
            acc = acc + np.where(used, wt * np.where(self.mask[ix], self.values[ix], 0.0), 0.0)
        return np.where(ok, acc, np.nan)


default_directions = disc_directions


def _dir_table(dirs: np.ndarray) -> np.ndarray:
    return np.column_stack([dirs[:, 0].real, dirs[:, 0].imag, dirs[:, 1].real, dirs[:, 1].imag]).astype(float)


@dataclass
class EnvelopeProblem:
    """Largest discrete sub-mean function on ``domain_mask`` below both bounds.

    ``disc_radii`` apply to every direction; ``axis_radii`` are additional,
    larger radii used only along the two coordinate complex lines.
    ``boundary_values`` (finite entries, off ``domain_mask``) are fixed
    Dirichlet data that discs may sample but the sweep never updates.
    """

    grid: Grid3
    domain_mask: np.ndarray
    upper_bound: np.ndarray
    obstacle: np.ndarray
    disc_radii: Sequence[float]
    axis_radii: Sequence[float] = ()
    directions: np.ndarray = field(default_factory=default_directions)
    n_circle_samples: int = 16
    tol: float = 1e-7
    max_iters: int = 5000
    local_sweeps: int = 20
    ordering: str = "redblack"
    boundary_values: np.ndarray | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        both = self.domain_mask & np.isfinite(self.obstacle)
        if np.any(self.obstacle[both] > self.upper_bound[both]):
            raise ValueError("obstacle exceeds upper bound")
        radii = list(self.disc_radii) + list(self.axis_radii)
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be increasing")
        if self.ordering not in ("redblack", "jacobi"):
            raise ValueError("ordering must be 'redblack' or 'jacobi'")
        if self.boundary_values is not None and np.any(np.isfinite(self.boundary_values[self.domain_mask])):
            raise ValueError("boundary values must lie off the domain mask")

    @property
    def readable_mask(self) -> np.ndarray:
        """Nodes a disc may sample: the domain plus any fixed boundary nodes."""
        if self.boundary_values is None:
            return self.domain_mask
        return self.domain_mask | np.isfinite(self.boundary_values)

    @property
    def cap(self) -> np.ndarray:
        return np.minimum(self.upper_bound, self.obstacle)


@dataclass
class EnvelopeResult:
    field: GridField
    iterations: int
    final_residual: float
    converged: bool
    residual_history: list[float] = field(default_factory=list)


class _Operator:
    """Tabulated discs and validity bits for one problem."""

    def __init__(self, problem: EnvelopeProblem):
        _configure_threads()
        g = problem.grid
        mask = np.ascontiguousarray(problem.readable_mask)
        dirs = np.asarray(problem.directions)
        radii = np.array(list(problem.disc_radii) + list(problem.axis_radii), dtype=float)
        axis_line = (np.abs(dirs[:, 0]) == 0) | (np.abs(dirs[:, 1]) == 0)
        nrad = np.where(axis_line, radii.size, len(problem.disc_radii)).astype(np.int64)
        self.nodes = np.argwhere(problem.domain_mask).astype(np.int64)
        self.tables = _kernels.sample_tables(
            g.t_axis.n, g.t_axis.start, g.t_axis.step, g.u_axis.step, g.v_axis.step,
            _dir_table(dirs), radii, nrad, problem.n_circle_samples,
        )
        self.nrad = nrad
        bits = _kernels.samples_valid(mask, self.nodes, *self.tables, nrad)
        bits = self._footprints(mask, bits, dirs, radii, nrad, g)
        which = ~axis_line
        if which.any():
            bits = _kernels.dense_valid(
                mask, self.nodes, bits, which, g.t_axis.start, g.t_axis.step, g.u_axis.start,
                g.u_axis.step, g.v_axis.start, g.v_axis.step, _dir_table(dirs), radii, nrad,
                min(g.t_axis.step, g.u_axis.step, g.v_axis.step) if g.t_axis.n > 1 else g.u_axis.step,
            )
        self.bits = bits

    def _footprints(self, mask, bits, dirs, radii, nrad, g):
        """Exact containment tests for discs along the coordinate lines."""
        nr = radii.size
        i, j, k = self.nodes.T
        t = g.t_axis.start + i * g.t_axis.step
        csum = None
        edt = None
        for d, (a, b) in enumerate(dirs):
            if abs(b) == 0:
                if csum is None:
                    csum = np.concatenate([np.zeros((1,) + mask.shape[1:], int), np.cumsum(mask, axis=0)])
                for q in range(nrad[d]):
                    rad = radii[q] * abs(a)
                    lo = np.abs(t - rad)
                    lo = np.where(rad >= t, 0.0, lo)
                    hi = t + rad
                    ilo = np.floor((lo - g.t_axis.start) / g.t_axis.step + 1e-9).astype(int)
                    ihi = np.ceil((hi - g.t_axis.start) / g.t_axis.step - 1e-9).astype(int)
                    inside = (ilo >= 0) & (ihi <= g.t_axis.n - 1)
                    ilo_c = np.clip(ilo, 0, g.t_axis.n - 1)
                    ihi_c = np.clip(ihi, 0, g.t_axis.n - 1)
                    full = (csum[ihi_c + 1, j, k] - csum[ilo_c, j, k]) == (ihi_c - ilo_c + 1)
                    self._clear(bits, ~(inside & full), d * nr + q)
            elif abs(a) == 0:
                if edt is None:
                    edt = ndimage.distance_transform_edt(
                        mask, sampling=(1e6, g.u_axis.step, g.v_axis.step)
                    )[i, j, k]
                slack = math.hypot(g.u_axis.step, g.v_axis.step)
                for q in range(nrad[d]):
                    self._clear(bits, ~(edt > radii[q] * abs(b) + slack), d * nr + q)
        # larger discs contain smaller ones: keep only the valid prefix
        for d in range(len(dirs)):
            alive = np.ones(bits.shape, bool)
            for q in range(nrad[d]):
                bit = np.uint64(1) << np.uint64(d * nr + q)
                alive &= (bits & bit) != 0
                bits[~alive] &= ~bit
        return bits

    @staticmethod
    def _clear(bits, where, pos):
        bits[where] &= ~(np.uint64(1) << np.uint64(pos))

    def step(self, values: np.ndarray, out: np.ndarray, cap: np.ndarray, dec: np.ndarray | None = None) -> float:
        if dec is None:
            dec = np.empty(self.nodes.shape[0])
        return float(_kernels.projection_step(values, out, self.nodes, self.bits, cap, dec, *self.tables, self.nrad))

    def colored_step(self, values: np.ndarray, scratch: np.ndarray, cap: np.ndarray, dec: np.ndarray) -> float:
        """Red-black pass: each colour class (parity of i + j + k) is updated
        Jacobi-style from the current values, then written back in place.
        """
        if not hasattr(self, "_colors"):
            parity = self.nodes.sum(axis=1) % 2
            self._colors = []
            for c in (0, 1):
                sel = np.flatnonzero(parity == c)
                self._colors.append((sel, np.ascontiguousarray(self.nodes[sel]), self.bits[sel],
                                     np.ascontiguousarray(cap[sel]), np.empty(sel.size)))
        res = 0.0
        for sel, nodes, bits, c, d in self._colors:
            r = _kernels.projection_step(values, scratch, nodes, bits, c, d, *self.tables, self.nrad)
            ix = tuple(nodes.T)
            values[ix] = scratch[ix]
            dec[sel] = d
            res = max(res, float(r))
        return res

    def relax_subset(self, values: np.ndarray, cap: np.ndarray, sel: np.ndarray, sweeps: int) -> None:
        """Jacobi passes over the nodes ``sel`` only, in place on ``values``.

        Every pass maps a function above the envelope to one that is still
        above it, so these passes only speed up the global iteration.
        """
        nodes, bits, c = self.nodes[sel], self.bits[sel], cap[sel]
        ix = tuple(nodes.T)
        for _ in range(sweeps):
            new = np.minimum(np.minimum(values[ix], c),
                             _kernels.min_circle_average(values, nodes, bits, *self.tables, self.nrad))
            values[ix] = new

    def min_average(self, values: np.ndarray) -> np.ndarray:
        return _kernels.min_circle_average(values, self.nodes, self.bits, *self.tables, self.nrad)

    def valid_disc_count(self) -> np.ndarray:
        return np.array([bin(int(b)).count("1") for b in self.bits])


def _initial(problem: EnvelopeProblem) -> np.ndarray:
    # off-mask entries only meet zero interpolation weights; keep them finite
    values = np.zeros(problem.grid.shape)
    if problem.boundary_values is not None:
        fixed = np.isfinite(problem.boundary_values)
        values[fixed] = problem.boundary_values[fixed]
    values[problem.domain_mask] = problem.cap[problem.domain_mask]
    return values


def psh_projection_step(field_: GridField, problem: EnvelopeProblem, _op: _Operator | None = None):
    """One Jacobi pass of the sub-mean projection; returns (new field, residual)."""
    op = _op or _Operator(problem)
    cap = problem.cap[problem.domain_mask]
    cur = _initial(problem)
    cur[problem.domain_mask] = field_.values[problem.domain_mask]
    out = cur.copy()
    res = op.step(cur, out, cap)
    out[~problem.domain_mask] = np.inf
    return GridField(out, problem.domain_mask), res


def perron_sweep(problem: EnvelopeProblem, progress=None) -> EnvelopeResult:
    """Iterate the projection from ``min(upper_bound, obstacle)`` until the
    largest per-sweep decrease drops below ``tol``.
    """
    op = _Operator(problem)
    cap = np.ascontiguousarray(problem.cap[problem.domain_mask])
    cur = _initial(problem)
    nxt = cur.copy()
    dec = np.empty(op.nodes.shape[0])
    history = []
    res = math.inf
    it = 0
    while it < problem.max_iters:
        if problem.ordering == "redblack":
            res = op.colored_step(cur, nxt, cap, dec)
        else:
            res = op.step(cur, nxt, cap, dec)
            cur, nxt = nxt, cur
        it += 1
        history.append(res)
        if res < 0:
            raise AssertionError("projection increased a node value")
        if problem.local_sweeps and res >= problem.tol:
            # slow modes live on few nodes; relax them between global passes
            active = dec > ACTIVE_FRACTION * res
            if active.sum() * 4 < active.size:
                op.relax_subset(cur, cap, active, problem.local_sweeps)
        if progress is not None:
            progress(it, res)
        if res < problem.tol:
            break
    cur[~problem.domain_mask] = np.inf
    return EnvelopeResult(GridField(cur, problem.domain_mask), it, res, res < problem.tol, history)


# ---------------------------------------------------------------------------
# the two relative extremal problems


def default_radii(grid: Grid3) -> tuple[list[float], list[float]]:
    h = grid.spacing
    return [h, 2 * h, 4 * h], [8 * h, 16 * h, 32 * h, 64 * h]


def default_eta(grid: Grid3) -> float:
    return 2.0 * grid.diagonal


def omega2_problem(grid: Grid3, eta: float | None = None, **opts) -> EnvelopeProblem:
    eta = default_eta(grid) if eta is None else eta
    if eta < grid.diagonal:
        raise ValueError("eta must be at least one grid diagonal")
    mask = grid.interior_mask
    upper = np.zeros(grid.shape)
    obstacle = np.where(grid.constraint_mask(eta, mask), -1.0, np.inf)
    disc, axis = default_radii(grid)
    opts.setdefault("disc_radii", disc)
    opts.setdefault("axis_radii", axis)
    return EnvelopeProblem(grid, mask, upper, obstacle, **opts)


def solve_omega2(grid: Grid3, eta: float | None = None, progress=None, **opts) -> EnvelopeResult:
    """Discrete omega_2: sub-mean functions on Omega, <= 0, = -1 near K."""
    return perron_sweep(omega2_problem(grid, eta, **opts), progress)


def omega1_problem(grid: Grid3, epsilon: float, delta: float | None = None,
                   eta: float | None = None, **opts) -> EnvelopeProblem:
    if not 0 < epsilon < 5 / 11:
        raise ValueError("epsilon must lie in (0, 5/11)")
    if delta is not None and abs(delta - grid.delta) > 1e-15:
        raise ValueError("delta does not match the grid's enlarged mask")
    eta = default_eta(grid) if eta is None else eta
    if eta < grid.diagonal:
        raise ValueError("eta must be at least one grid diagonal")
    mask = grid.enlarged_mask
    upper = np.where(grid.closure_mask, epsilon, OMEGA1_ROOF)
    obstacle = np.where(grid.constraint_mask(eta, mask), -1.0 + epsilon, np.inf)
    disc, axis = default_radii(grid)
    opts.setdefault("disc_radii", disc)
    opts.setdefault("axis_radii", axis)
    return EnvelopeProblem(grid, mask, upper, obstacle, **opts)


def solve_omega1_proxy(grid: Grid3, epsilon: float = 0.1, delta: float | None = None,
                       eta: float | None = None, progress=None, **opts) -> EnvelopeResult:
    """Envelope on Omega_delta of functions <= epsilon on the closure and
    <= -1 + epsilon near K; it dominates every uniform epsilon-approximant
    of a member of the omega_1 family.
    """
    return perron_sweep(omega1_problem(grid, epsilon, delta, eta, **opts), progress)


# ---------------------------------------------------------------------------
# diagnostics


def usc_regularize(field_: GridField, radius: int = 1) -> GridField:
    """Node-wise max over the (2 radius + 1)^3 neighbourhood, within the mask."""
    vals = np.where(field_.mask, field_.values, -np.inf)
    out = ndimage.maximum_filter(vals, size=2 * radius + 1, mode="constant", cval=-np.inf)
    return GridField(np.where(field_.mask, out, field_.values), field_.mask)


def nontangential_limsup(
    field_: GridField,
    grid: Grid3,
    xi: DomainPoint,
    alphas: Sequence[float],
    shells: int = 12,
) -> float:
    """Estimate of the nontangential boundary value at ``xi``.

    For each alpha, the approach region is intersected with balls around
    ``xi`` whose radii halve from 16 grid diagonals; the max over the
    smallest ball that still holds a node stands in for the limsup.
    """
    if not alphas:
        raise ValueError("alphas must be nonempty")
    if any(a < 1 for a in alphas):
        raise ValueError("alphas must be >= 1")
    T, U, V = grid.mesh()
    sel = field_.mask & (np.hypot(T - xi.t, np.hypot(U - xi.w.real, V - xi.w.imag)) < 16 * grid.diagonal)
    idx = np.argwhere(sel)
    if idx.size == 0:
        raise NoNodesInRegion("no mask nodes near xi")
    phase = xi.z / xi.t if xi.t > 0 else 1.0
    pts = [DomainPoint(T[tuple(ix)] * phase, complex(U[tuple(ix)], V[tuple(ix)])) for ix in idx]
    xr = xi.as_real()
    dist = np.array([np.linalg.norm(p.as_real() - xr) for p in pts])
    tpd = np.array([tangent_plane_distance(xi, p, grid.profile) for p in pts])
    vals = field_.values[tuple(idx.T)]
    best = -math.inf
    found = False
    for alpha in alphas:
        inside = (dist < alpha * tpd) & (dist > 0)
        if not inside.any():
            continue
        radius = 16 * grid.diagonal
        last = None
        for _ in range(shells):
            ball = inside & (dist < radius)
            if not ball.any():
                break
            last = float(vals[ball].max())
            radius /= 2
        if last is not None:
            best = max(best, last)
            found = True
    if not found:
        raise NoNodesInRegion("no grid node in any approach region")
    return best


def disc_oracle_harmonic_measure(z0: complex, arc: tuple[float, float], n_quad: int = 4096) -> float:
    """Minus the harmonic measure of the arc ``[theta1, theta2]`` of the unit
    circle at ``z0``, by the trapezoid rule on the Poisson integral.
    """
    if abs(z0) >= 1:
        raise ValueError("z0 must lie in the open unit disc")
    if n_quad < 256:
        raise ValueError("n_quad must be at least 256")
    th = np.linspace(arc[0], arc[1], n_quad + 1)
    kern = (1 - abs(z0) ** 2) / np.abs(np.exp(1j * th) - z0) ** 2
    h = (arc[1] - arc[0]) / n_quad
    integral = h * (kern.sum() - 0.5 * (kern[0] + kern[-1]))
    return -integral / (2 * math.pi)


def disc_analogue_problem(n: int = 201, arc: tuple[float, float] = (0.0, math.pi / 2),
                          ghost_layers: int = 3, **opts) -> EnvelopeProblem:
    """One-variable test problem: the unit disc on an ``n x n`` grid of
    [-1, 1]^2 (padded by the ghost layer).

    Nodes outside the disc within ``ghost_layers`` spacings of the circle
    carry fixed boundary data: -1 when their polar angle lies on ``arc``,
    0 otherwise.  The envelope is then minus the harmonic measure of the arc.
    """
    if n < 11:
        raise ValueError("n must be at least 11")
    h = 2.0 / (n - 1)
    pad = h * (ghost_layers + 1)
    ax = Axis(-1.0 - pad, 1.0 + pad, h)
    ta = Axis(1.0, 1.0, 1.0)
    U, V = np.meshgrid(ax.coords, ax.coords, indexing="ij")
    r = np.hypot(U, V)
    inside = (r < 1.0)[None]
    ghost = ((r >= 1.0) & (r < 1.0 + ghost_layers * h))[None]
    ang = np.mod(np.arctan2(V, U) - arc[0], 2 * np.pi)
    on_arc = (ang <= arc[1] - arc[0])[None]
    bv = np.where(ghost, np.where(on_arc, -1.0, 0.0), np.nan)
    d_arc = np.where(on_arc, np.abs(1 - r)[None], np.inf)
    grid = Grid3(ta, ax, ax, inside, inside | ghost, inside | ghost, d_arc, delta=h)
    opts.setdefault("disc_radii", [h, 2 * h, 4 * h])
    # 16-point circle means alias near the jumps of the boundary data, and
    # the min over discs keeps the worst alias; radii stay <= 16 h
    opts.setdefault("axis_radii", [8 * h, 16 * h])
    opts.setdefault("directions", np.array([(0j, 1 + 0j)]))
    return EnvelopeProblem(grid, inside, np.zeros(inside.shape), np.full(inside.shape, np.inf),
                           boundary_values=bv, **opts)


# ---------------------------------------------------------------------------
# reports


def witness_field(grid: Grid3) -> np.ndarray:
    """g sampled at the interior nodes (``nan`` elsewhere)."""
    T, U, V = grid.mesh()
    m = grid.interior_mask
    out = np.full(grid.shape, np.nan)
    out[m] = eval_g_reduced(T[m], U[m] + 1j * V[m], grid.profile)
    return out


def gap_report(r1: EnvelopeResult, r2: EnvelopeResult, grid: Grid3, delta: float | None = None,
               epsilon: float = 0.1, min_margin: float = 0.0) -> dict:
    """Compare the omega_1 proxy (``r1``) and omega_2 (``r2``) on the V nodes.

    ``r1 + epsilon`` bounds omega_1 from above, so separation is certified
    where ``r2 - r1 - epsilon > 0``; ``min_gap`` is the raw ``r2 - r1``.
    """
    vm = grid.v_mask(delta)
    T, U, V = grid.mesh()
    theory = {
        "omega1_upper_bound": -1 + 2 * epsilon,
        "omega2_witness_bound": -1 / 11,
        "omega2_bound_as_printed": -10 / 11,
        "theoretical_margin": -1 / 11 - (-1 + 2 * epsilon),
    }
    if not vm.any():
        return {"NoNodesInV": True, "n_v_nodes": 0, "pass": False, "epsilon": epsilon, **theory}
    a = r1.field.values[vm]
    b = r2.field.values[vm]
    gap = b - a
    k = int(np.argmin(gap))
    min_gap = float(gap[k])
    adjusted = float(np.min(gap - epsilon))
    return {
        "NoNodesInV": False,
        "n_v_nodes": int(vm.sum()),
        "epsilon": epsilon,
        "delta": grid.delta if delta is None else delta,
        "omega1_proxy_max_on_V": float(a.max()),
        "omega2_min_on_V": float(b.min()),
        "min_gap": min_gap,
        "min_gap_at": [float(T[vm][k]), float(U[vm][k]), float(V[vm][k])],
        "adjusted_gap": adjusted,
        "required_margin": min_margin,
        **theory,
        "pass": bool(adjusted > 0 and min_gap >= min_margin),
    }


def result_summary(result: EnvelopeResult, grid: Grid3) -> dict:
    vm = grid.v_mask()
    vals = result.field.values
    try:
        at9 = float(vals[grid.node_index(9.0, 0j)])
    except KeyError:
        at9 = None
    return {
        "iterations": result.iterations,
        "residual": result.final_residual,
        "converged": result.converged,
        "value_at_t9_w0": at9,
        "min_over_V": float(vals[vm].min()) if vm.any() else None,
        "max_over_V": float(vals[vm].max()) if vm.any() else None,
    }
