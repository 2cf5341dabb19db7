"""The piecewise plurisubharmonic function f, the witness g, and numerical
plurisubharmonicity tests (Levi form and disc sub-mean values).

f is built from a branch h of arg w that stays within pi/2 of phi(|z|):

    0              if |z| < 4 or |z| >= 14
    max(0, h)      if 3 < |z| < 6 or 12 < |z| < 14
    max(100, h)    if 5 < |z| < 8 or 10 < |z| < 13
    100            if 7 < |z| < 11

and g = (f - 110) / 110.  Overlapping pieces must agree, which is what makes
f well defined; every piece is a max of pluriharmonic functions.

Vectorized evaluators take reduced coordinates ``(t, w)`` with ``t = |z|``
and return ``nan`` outside Omega.  Test functions ``fun(z, w)`` take complex
arrays of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .hartogs_domain import (
    DEFAULT_PROFILE,
    ConstraintReport,
    DomainPoint,
    RadialProfile,
    rho_reduced,
    sample_interior,
)

AGREE_TOL = 1e-9
FD_TOL = 1e-6
V_VALUE = (100.0 - 110.0) / 110.0  # -1/11
V_VALUE_AS_PRINTED = -10.0 / 11.0

Fun = Callable[[np.ndarray, np.ndarray], np.ndarray]


class OutsideBranchRegion(ValueError):
    pass


class NoRepresentative(ValueError):
    pass


class PieceMismatch(ArithmeticError):
    pass


class OutsideDomain(ValueError):
    pass


class StencilOutsideDomain(ValueError):
    pass


class DiscOutsideDomain(ValueError):
    pass


# ---------------------------------------------------------------------------
# branch of the argument


@dataclass(frozen=True)
class BranchValue:
    theta: float


def _in_branch_region(t):
    return ((t > 3) & (t < 8)) | ((t > 10) & (t < 15))


def h_reduced(t, w, profile: RadialProfile = DEFAULT_PROFILE):
    """phi(t) + principal angle of w e^{-i phi(t)}; no region checks."""
    ph = profile.phi(t)
    return ph + np.angle(np.asarray(w) * np.exp(-1j * ph))


def branch_arg(p: DomainPoint, profile: RadialProfile = DEFAULT_PROFILE) -> BranchValue:
    """The representative of arg w within pi/2 of phi(|z|)."""
    if not _in_branch_region(p.t):
        raise OutsideBranchRegion(f"|z| = {p.t} is outside 3<|z|<8 and 10<|z|<15")
    if p.w == 0:
        raise NoRepresentative("w = 0 has no argument")
    ph = float(profile.phi(p.t))
    off = float(np.angle(p.w * complex(math.cos(ph), -math.sin(ph))))
    if abs(off) > math.pi / 2:
        raise NoRepresentative(f"arg w is more than pi/2 from phi(|z|) = {ph}")
    return BranchValue(ph + off)


# ---------------------------------------------------------------------------
# f and g


def _pieces(t):
    """(mask, evaluator) for each piece of f."""
    return [
        ((t < 4) | (t >= 14), lambda tt, ww, p: np.zeros(tt.shape)),
        (((t > 3) & (t < 6)) | ((t > 12) & (t < 14)), lambda tt, ww, p: np.maximum(0.0, h_reduced(tt, ww, p))),
        (((t > 5) & (t < 8)) | ((t > 10) & (t < 13)), lambda tt, ww, p: np.maximum(100.0, h_reduced(tt, ww, p))),
        ((t > 7) & (t < 11), lambda tt, ww, p: np.full(tt.shape, 100.0)),
    ]


def eval_f_reduced(t, w, profile: RadialProfile = DEFAULT_PROFILE, check: bool = True):
    """f at reduced coordinates; ``nan`` off Omega.

    Where two pieces apply, both are evaluated and compared (``PieceMismatch``
    beyond 1e-9).
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=complex)
    t, w = np.broadcast_arrays(t, w)
    scalar = t.ndim == 0
    shape = t.shape
    t, w = np.atleast_1d(t).ravel(), np.atleast_1d(w).ravel()
    inside = rho_reduced(t, w.real, w.imag, profile) < 0
    out = np.full(t.shape, np.nan)
    seen = np.zeros(t.shape, bool)
    for sel, piece in _pieces(t):
        sel = sel & inside
        if not sel.any():
            continue
        val = piece(t[sel], w[sel], profile)
        both = seen[sel]
        if check and both.any():
            gap = np.abs(val[both] - out[sel][both])
            if gap.max() > AGREE_TOL:
                k = int(np.argmax(gap))
                raise PieceMismatch(f"pieces disagree by {gap[k]:.3g} at |z| = {t[sel][both][k]}")
        out[sel] = val
        seen |= sel
    return float(out[0]) if scalar else out.reshape(shape)


def eval_g_reduced(t, w, profile: RadialProfile = DEFAULT_PROFILE, check: bool = True):
    return (eval_f_reduced(t, w, profile, check) - 110.0) / 110.0


def _require_inside(p: DomainPoint, profile):
    if not rho_reduced(p.t, p.w.real, p.w.imag, profile) < 0:
        raise OutsideDomain(f"{p} is not in Omega")


def eval_f(p: DomainPoint, profile: RadialProfile = DEFAULT_PROFILE) -> float:
    _require_inside(p, profile)
    return float(eval_f_reduced(p.t, p.w, profile))


def eval_g(p: DomainPoint, profile: RadialProfile = DEFAULT_PROFILE) -> float:
    _require_inside(p, profile)
    return float(eval_g_reduced(p.t, p.w, profile))


def f_function(profile: RadialProfile = DEFAULT_PROFILE) -> Fun:
    return lambda z, w: eval_f_reduced(np.abs(z), w, profile)


def g_function(profile: RadialProfile = DEFAULT_PROFILE) -> Fun:
    return lambda z, w: eval_g_reduced(np.abs(z), w, profile)


# ---------------------------------------------------------------------------
# consistency of the piecewise definition

OVERLAPS = ((3.0, 4.0), (5.0, 6.0), (7.0, 8.0), (10.0, 11.0), (12.0, 13.0))


def seam_start(profile: RadialProfile = DEFAULT_PROFILE) -> float:
    """Where phi + pi/2 turns negative on the ramp down to |z| = 14."""
    return brentq(lambda t: profile.phi(t) + math.pi / 2, 13.0, 14.0, xtol=1e-14)


def overlap_consistency(n_samples: int = 10_000, seed: int = 42,
                        profile: RadialProfile = DEFAULT_PROFILE) -> ConstraintReport:
    """Max disagreement of the applicable pieces on each overlap annulus.

    The two pieces meeting at |z| = 14 (0 and max(0, h)) are compared on
    the part of 13 < |z| < 15 where h < 0 is forced, which shows f is
    continuous across |z| = 14.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    rng = np.random.default_rng(seed)
    report = ConstraintReport()
    pieces = [p for _, p in _pieces(np.zeros(1))]
    intervals = [(lo, hi, f"overlap_{lo:g}_{hi:g}") for lo, hi in OVERLAPS]
    intervals.append((seam_start(profile), 15.0, "seam_14"))
    for lo, hi, cid in intervals:
        t, w = sample_interior(rng, n_samples, (lo, hi), profile)
        t = np.clip(t, np.nextafter(lo, hi), np.nextafter(hi, lo))
        vals = []
        for (sel, _), piece in zip(_pieces(t), pieces):
            if cid == "seam_14":
                use = piece in (pieces[0], pieces[1])
            else:
                use = bool(sel.all())
            if use:
                vals.append(piece(t, w, profile))
        if len(vals) != 2:
            raise AssertionError(f"expected two pieces on {cid}")
        gap = np.abs(vals[0] - vals[1])
        report.add(cid, AGREE_TOL - gap, t, strict=False)
    return report


# ---------------------------------------------------------------------------
# plurisubharmonicity tests


def disc_directions() -> np.ndarray:
    """Two coordinate complex lines plus six fixed mixed unit vectors.

    The mixed directions take their angles from golden-ratio and sqrt(2)
    Weyl sequences, so the set is deterministic and evenly spread.
    """
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    dirs = [(1.0 + 0j, 0j), (0j, 1.0 + 0j)]
    for k in range(1, 7):
        alpha = (math.pi / 2) * (0.15 + 0.7 * ((k * golden) % 1.0))
        beta = 2 * math.pi * ((k * math.sqrt(2.0)) % 1.0)
        dirs.append((complex(math.cos(alpha)), math.sin(alpha) * complex(math.cos(beta), math.sin(beta))))
    return np.array(dirs)


def _inside(z, w, profile):
    return rho_reduced(np.abs(z), w.real, w.imag, profile) < 0


def _circle_mean(fun: Fun, z, w, a, b, radius, n):
    ang = np.exp(2j * np.pi * np.arange(n) / n)
    zz = np.asarray(z)[..., None] + radius * ang * a
    ww = np.asarray(w)[..., None] + radius * ang * b
    return fun(zz, ww).mean(axis=-1)


def disc_fits(z, w, direction, radius, profile: RadialProfile = DEFAULT_PROFILE,
              margin: float = 1.25, n_angles: int = 64, n_rings: int = 5) -> np.ndarray:
    """Sampled test that the disc of radius ``margin * radius`` lies in Omega."""
    a, b = direction
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    ok = _inside(z, w, profile)
    ang = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    for k in range(1, n_rings + 1):
        s = margin * radius * k / n_rings
        ok &= _inside(z[:, None] + s * ang * a, w[:, None] + s * ang * b, profile).all(axis=1)
    return ok


def submean_defect(fun: Fun, p: DomainPoint, direction, radius: float, n_samples: int = 128,
                   profile: RadialProfile = DEFAULT_PROFILE, check_domain: bool = True) -> float:
    """``fun(p)`` minus its mean over the circle ``p + radius e^{i theta} direction``.

    Positive values violate the sub-mean inequality.  The disc (enlarged by
    25%, which keeps trapezoid aliasing of analytic pieces below 1e-12 at the
    default 128 samples) must lie in Omega.
    """
    if n_samples < 16:
        raise ValueError("n_samples must be at least 16")
    a, b = (complex(x) for x in direction)
    if check_domain and not disc_fits(p.z, p.w, (a, b), radius, profile)[0]:
        raise DiscOutsideDomain(f"disc of radius {radius} at {p} leaves Omega")
    centre = fun(np.array([p.z]), np.array([p.w]))[0]
    return float(centre - _circle_mean(fun, np.array([p.z]), np.array([p.w]), a, b, radius, n_samples)[0])


def submean_defects(fun: Fun, z, w, direction, radius: float, n_samples: int = 128) -> np.ndarray:
    """Vectorized :func:`submean_defect` without the containment check."""
    a, b = (complex(x) for x in direction)
    return fun(z, w) - _circle_mean(fun, z, w, a, b, radius, n_samples)


_POLAR = np.array([(1, 0), (0, 1), (1 / math.sqrt(2), 1 / math.sqrt(2)), (1 / math.sqrt(2), 1j / math.sqrt(2))],
                  dtype=complex)


def levi_matrices(fun: Fun, z, w, step: float) -> np.ndarray:
    """Complex Hessians [d^2 u / dz_j dzbar_k] at each point, shape (..., 2, 2).

    The restriction to a complex line v has Laplacian 4 v* H v, and the mean
    over a circle of radius ``step`` exceeds the centre value by
    ``step^2 v* H v`` up to O(step^4); 16 symmetric samples make this exact
    for quadratics.  H is assembled by polarization from four lines.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    centre = fun(z, w)
    q = [(_circle_mean(fun, z, w, a, b, step, 16) - centre) / step**2 for a, b in _POLAR]
    h11, h22 = q[0], q[1]
    re12 = q[2] - (h11 + h22) / 2
    im12 = q[3] - (h11 + h22) / 2
    H = np.empty(z.shape + (2, 2), dtype=complex)
    H[..., 0, 0] = h11
    H[..., 1, 1] = h22
    H[..., 0, 1] = re12 + 1j * im12
    H[..., 1, 0] = re12 - 1j * im12
    return H


def levi_min_eig(fun: Fun, p: DomainPoint, step: float = 1e-3,
                 profile: RadialProfile = DEFAULT_PROFILE, check_domain: bool = True) -> float:
    """Smallest eigenvalue of the complex Hessian of ``fun`` at ``p``."""
    if step <= 0:
        raise ValueError("step must be positive")
    if check_domain:
        for a, b in _POLAR:
            if not disc_fits(p.z, p.w, (a, b), step, profile, margin=1.0, n_angles=16, n_rings=1)[0]:
                raise StencilOutsideDomain(f"stencil at {p} leaves Omega")
    H = levi_matrices(fun, np.array([p.z]), np.array([p.w]), step)
    return float(np.linalg.eigvalsh(H)[0, 0])


@dataclass
class PshTestReport:
    point: DomainPoint
    levi_min_eig: float
    worst_submean_defect: float
    test_radius: float
    n_directions: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["point"] = {"z": [self.point.z.real, self.point.z.imag], "w": [self.point.w.real, self.point.w.imag]}
        return d


def psh_test(fun: Fun, p: DomainPoint, radius: float, step: float = 1e-3,
             profile: RadialProfile = DEFAULT_PROFILE) -> PshTestReport:
    dirs = disc_directions()
    worst = max(submean_defect(fun, p, d, radius, profile=profile) for d in dirs)
    return PshTestReport(p, levi_min_eig(fun, p, step, profile), worst, radius, len(dirs))


def kink_distance(t, w, profile: RadialProfile = DEFAULT_PROFILE):
    """Approximate distance to the loci h = 0 and h = 100 (inf off the branch region)."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=complex)
    h = h_reduced(t, w, profile)
    # |grad arg w| = 1/|w|
    d = np.minimum(np.abs(h), np.abs(h - 100.0)) * np.abs(w)
    return np.where(_in_branch_region(t), d, np.inf)


# ---------------------------------------------------------------------------
# witness checks


def sample_V(rng: np.random.Generator, n: int, delta: float, profile: RadialProfile = DEFAULT_PROFILE):
    """Uniform samples of V = {8 < t < 10, |w| < delta, |w| < sqrt(r) - 1}."""
    ts, ws = [], []
    while sum(x.size for x in ts) < n:
        t = rng.uniform(8.0, 10.0, 2 * n)
        cap = np.minimum(delta, np.sqrt(np.maximum(profile.r(t), 0)) - 1)
        w = delta * np.sqrt(rng.uniform(0, 1, t.size)) * np.exp(2j * np.pi * rng.uniform(0, 1, t.size))
        ok = np.abs(w) < cap
        ts.append(t[ok])
        ws.append(w[ok])
    return np.concatenate(ts)[:n], np.concatenate(ws)[:n]


def submean_survey(fun: Fun, t, w, radii, profile: RadialProfile = DEFAULT_PROFILE,
                   n_samples: int = 128) -> dict:
    """Worst sub-mean defect over the disc directions and radii, at points
    ``(t, w)`` (z taken real), skipping discs that do not fit.
    """
    z = np.asarray(t, dtype=complex)
    w = np.asarray(w, dtype=complex)
    worst = -math.inf
    tested = skipped = 0
    for d in disc_directions():
        for rad in radii:
            ok = disc_fits(z, w, d, rad, profile)
            tested += int(ok.sum())
            skipped += int((~ok).sum())
            if ok.any():
                worst = max(worst, float(submean_defects(fun, z[ok], w[ok], d, rad, n_samples).max()))
    return {"worst_defect": worst, "discs_tested": tested, "discs_skipped": skipped}


def levi_survey(fun: Fun, t, w, step: float = 1e-3, profile: RadialProfile = DEFAULT_PROFILE) -> dict:
    """Min Levi eigenvalue at points whose stencil fits and that are more than
    ``10 step`` from a kink locus of f.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=complex)
    smooth = kink_distance(t, w, profile) > 10 * step
    for a, b in _POLAR:
        smooth &= disc_fits(t.astype(complex), w, (a, b), step, profile, margin=1.0, n_angles=16, n_rings=1)
    if not smooth.any():
        return {"min_eig": math.nan, "points": 0}
    H = levi_matrices(fun, t[smooth].astype(complex), w[smooth], step)
    return {"min_eig": float(np.linalg.eigvalsh(H)[:, 0].min()), "points": int(smooth.sum())}


def witness_report(delta: float = 0.05, n_samples: int = 10_000, seed: int = 42, h_grid: float = 0.1,
                   profile: RadialProfile = DEFAULT_PROFILE, levi_step: float = 1e-3) -> dict:
    """Sampled evidence that g belongs to the omega_2 family and equals -1/11 on V."""
    if not 0 < delta <= 0.1:
        raise ValueError("delta must lie in (0, 0.1]")
    rng = np.random.default_rng(seed)
    t, w = sample_interior(rng, n_samples, (0.0, 18.0), profile)
    g = eval_g_reduced(t, w, profile)
    ends = (t <= 3) | (t >= 14)
    tv, wv = sample_V(rng, n_samples, delta, profile)
    gv = eval_g_reduced(tv, wv, profile)
    fun = g_function(profile)
    sub = submean_survey(fun, t, w, [h_grid, 2 * h_grid, 4 * h_grid], profile)
    levi = levi_survey(fun, t, w, levi_step, profile)
    checks = {
        "g_max": float(g.max()),
        "g_min": float(g.min()),
        "g_ends_max_error": float(np.abs(g[ends] + 1).max()) if ends.any() else 0.0,
        "g_V_max_error": float(np.abs(gv - V_VALUE).max()),
        "submean_worst_defect": sub["worst_defect"],
        "levi_min_eig": levi["min_eig"],
    }
    passed = {
        "g_nonpositive": checks["g_max"] <= 0.0,
        "g_at_least_minus_one": checks["g_min"] >= -1.0,
        "g_minus_one_near_K": checks["g_ends_max_error"] <= 1e-12,
        "g_on_V": checks["g_V_max_error"] <= 1e-12,
        "submean": sub["worst_defect"] <= AGREE_TOL,
        "levi": not levi["points"] or levi["min_eig"] >= -FD_TOL,
    }
    return {
        "delta": delta,
        "seed": seed,
        "n_samples": n_samples,
        "n_V_samples": int(tv.size),
        "n_end_samples": int(ends.sum()),
        "g_on_V": V_VALUE,
        "g_on_V_as_printed": V_VALUE_AS_PRINTED,
        "g_on_V_discrepancy": abs(V_VALUE - V_VALUE_AS_PRINTED),
        "discs_tested": sub["discs_tested"],
        "discs_skipped": sub["discs_skipped"],
        "levi_points": levi["points"],
        **checks,
        "checks": passed,
        "pass": all(passed.values()),
    }
