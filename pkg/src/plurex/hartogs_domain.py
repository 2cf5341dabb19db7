"""Geometry of the Hartogs domain Omega = {|w - exp(i phi(|z|))|^2 < r(|z|)}.

Everything here works in reduced coordinates ``(t, u, v) = (|z|, Re w, Im w)``;
the domain and every set built on it are invariant under ``z -> exp(i theta) z``.
Scalar entry points take :class:`DomainPoint`; the ``*_reduced`` variants
accept broadcastable numpy arrays and are what the grid code uses.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

EXACT_TOL = 1e-12

# (t, value) anchors; consecutive anchors are joined by psi-ramps, values are
# held constant outside the table.
R_NODES: tuple[tuple[float, float], ...] = (
    (0.5, -1.0), (2.0, 2.0), (3.0, 1.0), (8.0, 1.0), (9.0, 2.0),
    (10.0, 1.0), (15.0, 1.0), (16.0, 2.0), (17.5, -1.0),
)
PHI_NODES: tuple[tuple[float, float], ...] = (
    (4.0, -2.0), (5.0, 102.0), (6.0, 102.0), (7.0, 98.0),
    (11.0, 98.0), (12.0, 102.0), (13.0, 102.0), (14.0, -2.0),
)

K_RADII = (2.0, 16.0)


class DegenerateBoundaryPoint(ValueError):
    """The gradient of the defining function vanishes at a boundary point."""


# ---------------------------------------------------------------------------
# smooth transition


def _s(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_transition(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, strictly increasing between.

    ``psi(x) = s(x) / (s(x) + s(1 - x))`` with ``s(x) = exp(-1/x)`` for x > 0.
    Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    a = _s(x)
    b = _s(1.0 - x)
    out = a / (a + b)
    return out if out.ndim else float(out)


def smooth_transition_deriv(x):
    """Closed-form derivative of :func:`smooth_transition`."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    a = np.exp(-1.0 / xi)
    b = np.exp(-1.0 / (1.0 - xi))
    da = a / xi**2
    db = b / (1.0 - xi) ** 2
    out[inside] = (da * b + a * db) / (a + b) ** 2
    return out if out.ndim else float(out)


def transition_logit(x):
    """``log(psi / (1 - psi)) = 1/(1-x) - 1/x`` on (0, 1).

    Strictly increasing, and finite everywhere inside the ramp, so it can
    certify monotonicity where ``psi`` itself is flat to machine precision.
    """
    x = np.asarray(x, dtype=float)
    return 1.0 / (1.0 - x) - 1.0 / x


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class RampProfile:
    """Piecewise psi-ramp interpolation of an anchor table."""

    nodes: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ts = [t for t, _ in self.nodes]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("anchor abscissae must be strictly increasing")

    def _segments(self):
        return zip(self.nodes, self.nodes[1:])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.nodes[0][1])
        for (a, va), (b, vb) in self._segments():
            sel = (t > a) & (t <= b)
            if va == vb:
                out[sel] = va
            else:
                out[sel] = va + (vb - va) * smooth_transition((t[sel] - a) / (b - a))
        out[t > self.nodes[-1][0]] = self.nodes[-1][1]
        return out if out.ndim else float(out)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for (a, va), (b, vb) in self._segments():
            sel = (t > a) & (t < b)
            if va != vb:
                out[sel] = (vb - va) / (b - a) * smooth_transition_deriv((t[sel] - a) / (b - a))
        return out if out.ndim else float(out)

    def ramps(self):
        """Non-constant segments as ``(a, b, va, vb)``."""
        return [(a, b, va, vb) for (a, va), (b, vb) in self._segments() if va != vb]


@dataclass(frozen=True)
class RadialProfile:
    """The pair (r, phi) defining Omega, together with its anchor tables."""

    r: RampProfile = field(default_factory=lambda: RampProfile(R_NODES))
    phi: RampProfile = field(default_factory=lambda: RampProfile(PHI_NODES))

    @property
    def node_table(self) -> dict[str, list[list[float]]]:
        return {"r": [list(n) for n in self.r.nodes], "phi": [list(n) for n in self.phi.nodes]}

    def to_json(self) -> str:
        return json.dumps(self.node_table, indent=2)

    @classmethod
    def from_node_table(cls, table: dict) -> "RadialProfile":
        return cls(
            r=RampProfile(tuple((float(t), float(v)) for t, v in table["r"])),
            phi=RampProfile(tuple((float(t), float(v)) for t, v in table["phi"])),
        )

    @classmethod
    def from_json(cls, text: str) -> "RadialProfile":
        return cls.from_node_table(json.loads(text))


DEFAULT_PROFILE = RadialProfile()


def eval_r(t, profile: RadialProfile = DEFAULT_PROFILE):
    return profile.r(t)


def eval_phi(t, profile: RadialProfile = DEFAULT_PROFILE):
    return profile.phi(t)


# ---------------------------------------------------------------------------
# points and regions


@dataclass(frozen=True)
class DomainPoint:
    """A point (z, w) of C^2; ``t`` caches ``|z|``."""

    z: complex
    w: complex
    t: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "w", complex(self.w))
        object.__setattr__(self, "t", abs(self.z))

    @classmethod
    def from_reduced(cls, t: float, w: complex) -> "DomainPoint":
        return cls(complex(t, 0.0), w)

    def as_real(self) -> np.ndarray:
        return np.array([self.z.real, self.z.imag, self.w.real, self.w.imag])

    @classmethod
    def from_real(cls, x: Sequence[float]) -> "DomainPoint":
        return cls(complex(x[0], x[1]), complex(x[2], x[3]))


class Region(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


@dataclass(frozen=True)
class RegionTag:
    region: Region
    tol: float

    def __eq__(self, other):
        if isinstance(other, Region):
            return self.region is other
        if isinstance(other, RegionTag):
            return self.region is other.region
        return NotImplemented

    def __hash__(self):
        return hash(self.region)


def rho_reduced(t, u, v, profile: RadialProfile = DEFAULT_PROFILE):
    """Defining function in reduced coordinates; negative exactly on Omega."""
    ph = profile.phi(t)
    return (u - np.cos(ph)) ** 2 + (v - np.sin(ph)) ** 2 - profile.r(t)


def rho(p: DomainPoint, profile: RadialProfile = DEFAULT_PROFILE) -> float:
    ph = profile.phi(p.t)
    return abs(p.w - complex(math.cos(ph), math.sin(ph))) ** 2 - profile.r(p.t)


def rho_gradient(p: DomainPoint, profile: RadialProfile = DEFAULT_PROFILE) -> np.ndarray:
    """Real gradient of rho in (Re z, Im z, Re w, Im w), from closed-form r', phi'."""
    t = p.t
    ph = profile.phi(t)
    dph = profile.phi.deriv(t)
    dr = profile.r.deriv(t)
    u, v = p.w.real, p.w.imag
    drho_dt = 2.0 * dph * (u * math.sin(ph) - v * math.cos(ph)) - dr
    if t > 0:
        gx, gy = drho_dt * p.z.real / t, drho_dt * p.z.imag / t
    else:
        # r and phi are flat near t = 0, so the z-gradient vanishes there
        gx = gy = 0.0
    return np.array([gx, gy, 2.0 * (u - math.cos(ph)), 2.0 * (v - math.sin(ph))])


def classify(p: DomainPoint, tol: float, profile: RadialProfile = DEFAULT_PROFILE) -> RegionTag:
    if tol <= 0:
        raise ValueError("tol must be positive")
    val = rho(p, profile)
    if val < -tol:
        region = Region.INTERIOR
    elif abs(val) <= tol:
        region = Region.BOUNDARY
    else:
        region = Region.EXTERIOR
    return RegionTag(region, tol)


def distance_to_K_reduced(t, u, v, profile: RadialProfile = DEFAULT_PROFILE):
    """Euclidean distance in C^2 to K = dOmega intersected with {|z| = 2 or 16}.

    Each fibre of K is the circle ``|w - exp(i phi(tk))| = sqrt(r(tk))``; by
    rotation invariance the ambient distance reduces to the (t, w) chart.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(u, dtype=float) + 1j * np.asarray(v, dtype=float)
    best = np.full(np.broadcast(t, w).shape, np.inf)
    for tk in K_RADII:
        ph = profile.phi(tk)
        rad = math.sqrt(max(profile.r(tk), 0.0))
        radial = np.abs(np.abs(w - complex(math.cos(ph), math.sin(ph))) - rad)
        best = np.minimum(best, np.hypot(t - tk, radial))
    return best if best.ndim else float(best)


def in_K(p: DomainPoint, eta: float, profile: RadialProfile = DEFAULT_PROFILE) -> bool:
    """Membership in the closed eta-neighbourhood of K (eta = 0 means K itself)."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    d = distance_to_K_reduced(p.t, p.w.real, p.w.imag, profile)
    return bool(d <= eta + EXACT_TOL)


def in_V_reduced(t, u, v, delta: float, profile: RadialProfile = DEFAULT_PROFILE):
    t = np.asarray(t, dtype=float)
    modw = np.hypot(u, v)
    root = np.sqrt(np.clip(profile.r(t), 0.0, None))
    return (t > 8.0) & (t < 10.0) & (modw < delta) & (modw < root - 1.0)


def in_V(p: DomainPoint, delta: float, profile: RadialProfile = DEFAULT_PROFILE) -> bool:
    """The open set V, with ``|w| < sqrt(r(|z|)) - 1`` so that V lies in Omega."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return bool(in_V_reduced(p.t, p.w.real, p.w.imag, delta, profile))


def in_annulus_Aw(p: DomainPoint, w0: complex) -> bool:
    return abs(p.w - w0) <= EXACT_TOL and 2.0 <= p.t <= 16.0


def tangent_plane_distance(
    xi: DomainPoint, z: DomainPoint, profile: RadialProfile = DEFAULT_PROFILE
) -> float:
    """Distance from ``z`` to the real tangent hyperplane of dOmega at ``xi``."""
    grad = rho_gradient(xi, profile)
    norm = float(np.linalg.norm(grad))
    if norm < 1e-12:
        raise DegenerateBoundaryPoint(f"|grad rho| = {norm:.3e} at {xi}")
    return abs(float(grad @ (z.as_real() - xi.as_real()))) / norm


def inward_normal(xi: DomainPoint, profile: RadialProfile = DEFAULT_PROFILE) -> np.ndarray:
    grad = rho_gradient(xi, profile)
    norm = float(np.linalg.norm(grad))
    if norm < 1e-12:
        raise DegenerateBoundaryPoint(f"|grad rho| = {norm:.3e} at {xi}")
    return -grad / norm


def in_approach_region(
    z: DomainPoint, xi: DomainPoint, alpha: float, profile: RadialProfile = DEFAULT_PROFILE
) -> bool:
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    dist = float(np.linalg.norm(z.as_real() - xi.as_real()))
    return dist < alpha * tangent_plane_distance(xi, z, profile)


# ---------------------------------------------------------------------------
# certification


@dataclass
class ConstraintCheck:
    constraint_id: str
    margin: float
    worst_t: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "constraint_id": self.constraint_id,
            "margin": self.margin,
            "worst_t": self.worst_t,
            "pass": self.passed,
        }


@dataclass
class ConstraintReport:
    checks: list[ConstraintCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def min_margin(self) -> float:
        return min(c.margin for c in self.checks)

    def __getitem__(self, constraint_id: str) -> ConstraintCheck:
        for c in self.checks:
            if c.constraint_id == constraint_id:
                return c
        raise KeyError(constraint_id)

    def add(self, constraint_id: str, margins: np.ndarray, ts: np.ndarray, strict: bool = True):
        """Record the worst (smallest) of ``margins``; empty input passes vacuously."""
        margins = np.asarray(margins, dtype=float)
        if margins.size == 0:
            self.checks.append(ConstraintCheck(constraint_id, math.inf, math.nan, True))
            return
        k = int(np.argmin(margins))
        m = float(margins[k])
        ok = m > 0 if strict else m >= 0
        self.checks.append(ConstraintCheck(constraint_id, m, float(np.asarray(ts)[k]), bool(ok)))

    def to_dict(self) -> dict:
        return {"pass": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _ramp_logit_increase(prof: RampProfile, t: np.ndarray, lo: float, hi: float, sign: int):
    """Sampled increments of the ramp logit on (lo, hi), oriented by ``sign``.

    Positive increments certify strict monotonicity of ``sign * prof`` there.
    Returns ``(increments, left_t)``; a missing or wrongly-oriented ramp yields
    a nonpositive increment.
    """
    ts = t[(t > lo) & (t < hi)]
    if ts.size < 2:
        return np.array([]), np.array([])
    vals = np.full(ts.shape, -np.inf)
    for a, b, va, vb in prof.ramps():
        sel = (ts > a) & (ts < b)
        orient = np.sign(vb - va) * sign
        vals[sel] = orient * transition_logit((ts[sel] - a) / (b - a))
    covered = np.isfinite(vals)
    inc = np.diff(vals)
    both = covered[1:] & covered[:-1]
    inc = np.where(both, inc, -1.0)
    # logit jumps between adjacent ramps are not monotonicity evidence
    return inc, ts[:-1]


def certify_profiles(step: float = 1e-3, profile: RadialProfile = DEFAULT_PROFILE) -> ConstraintReport:
    """Check every stated constraint on (r, phi) on a grid of [0, 18].

    Strict monotonicity is measured in the ramp logit coordinate because the
    ramps are flat to all orders at their ends.
    """
    if not 0 < step <= 1e-3:
        raise ValueError("step must lie in (0, 1e-3]")
    n = int(round(18.0 / step))
    t = np.linspace(0.0, 18.0, n + 1)
    r = profile.r(t)
    ph = profile.phi(t)
    rep = ConstraintReport()
    half_pi = math.pi / 2

    rep.add("r_lower_bound", r + 1.0, t, strict=False)
    rep.add("r_upper_bound", 2.0 - r, t, strict=False)
    tails = (t <= 1.0) | (t >= 17.0)
    rep.add("r_nonpositive_tails", -r[tails], t[tails], strict=False)
    flat = ((t >= 3) & (t <= 8)) | ((t >= 10) & (t <= 15))
    rep.add("r_equals_one", EXACT_TOL - np.abs(r[flat] - 1.0), t[flat])
    peaks = np.array([2.0, 9.0, 16.0])
    rep.add("r_peak_values", EXACT_TOL - np.abs(profile.r(peaks) - 2.0), peaks)
    # off the monotone intervals adjoining the peaks, r must stay below 2
    near = np.zeros_like(t, dtype=bool)
    for p in peaks:
        near |= np.abs(t - p) < 1.0
    rep.add("r_below_two_elsewhere", 2.0 - r[~near], t[~near])
    for lo, hi, sign, name in (
        (1, 2, 1, "r_increasing_1_2"), (8, 9, 1, "r_increasing_8_9"), (15, 16, 1, "r_increasing_15_16"),
        (2, 3, -1, "r_decreasing_2_3"), (9, 10, -1, "r_decreasing_9_10"), (16, 17, -1, "r_decreasing_16_17"),
    ):
        inc, tl = _ramp_logit_increase(profile.r, t, lo, hi, sign)
        rep.add(name, inc, tl)

    sel = (t <= 4) | (t >= 14)
    rep.add("phi_below_minus_half_pi", -half_pi - ph[sel], t[sel])
    sel = ((t >= 5) & (t <= 6)) | ((t >= 12) & (t <= 13))
    rep.add("phi_above_half_pi_plus_100", ph[sel] - (half_pi + 100), t[sel])
    sel = (t > 7) & (t < 11)
    rep.add("phi_below_100_minus_half_pi_7_11", (100 - half_pi) - ph[sel], t[sel])
    rep.add("phi_at_most_108", 108.0 - ph, t, strict=False)

    for name, prof in (("r", profile.r), ("phi", profile.phi)):
        vals = prof(t)
        for order in (1, 2, 3):
            d = np.abs(np.diff(vals, n=order)) / step**order
            rep.add(f"{name}_smooth_d{order}", _DERIV_BOUND - d, t[: d.size])
    return rep


# generous bound on sampled derivatives up to order three
_DERIV_BOUND = 1e5


# ---------------------------------------------------------------------------
# sampling helpers


def fiber_point(t: float, angle: float, frac: float, profile: RadialProfile = DEFAULT_PROFILE) -> complex:
    """w-coordinate at relative radius ``frac`` and ``angle`` in the fibre over ``t``."""
    ph = profile.phi(t)
    rad = math.sqrt(max(profile.r(t), 0.0))
    return complex(math.cos(ph), math.sin(ph)) + frac * rad * complex(math.cos(angle), math.sin(angle))


def sample_interior(
    rng: np.random.Generator,
    n: int,
    t_range: tuple[float, float] = (1.0, 17.0),
    profile: RadialProfile = DEFAULT_PROFILE,
    max_frac: float = 1.0,
):
    """Uniform samples (in fibre area) of Omega restricted to a t-range.

    Returns arrays ``(t, w)`` with ``t`` the modulus of z (the z-argument is
    irrelevant by symmetry).
    """
    ts, ws = [], []
    lo, hi = t_range
    while sum(len(x) for x in ts) < n:
        m = 2 * n
        t = rng.uniform(lo, hi, m)
        r = profile.r(t)
        keep = r > 0
        t, r = t[keep], r[keep]
        ang = rng.uniform(0, 2 * np.pi, t.size)
        frac = max_frac * np.sqrt(rng.uniform(0, 1, t.size))
        ph = profile.phi(t)
        w = np.exp(1j * ph) + frac * np.sqrt(r) * np.exp(1j * ang)
        ok = rho_reduced(t, w.real, w.imag, profile) < 0
        ts.append(t[ok])
        ws.append(w[ok])
    return np.concatenate(ts)[:n], np.concatenate(ws)[:n]
