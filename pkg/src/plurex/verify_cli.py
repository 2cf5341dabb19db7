"""End-to-end pipeline: certify the profiles, test the witness, solve both
envelopes and compare them on V.

Every stage writes a JSON report (and the solves a w = 0 slice as CSV) into
the output directory.  Wall-clock times go to ``timings.json`` only, so all
other outputs are bit-identical across runs with the same configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import envelope_solver as es
from .hartogs_domain import DEFAULT_PROFILE, DomainPoint, RadialProfile, certify_profiles
from .psh_construction import (
    FD_TOL,
    AGREE_TOL,
    V_VALUE,
    V_VALUE_AS_PRINTED,
    g_function,
    overlap_consistency,
    psh_test,
    witness_report,
)

log = logging.getLogger("plurex")

STAGES = ("certify", "psh", "witness", "omega2", "omega1", "gap")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CERTIFY = 2
EXIT_NOT_CONVERGED = 3
EXIT_GAP = 4

# slack allowed on the two envelope bounds at (t=9, w=0)
BOUND_SLACK = 0.05


class UnknownResult(KeyError):
    pass


@dataclass
class PipelineConfig:
    delta: float = 0.05
    epsilon: float = 0.1
    spacing_t: float = 0.2
    spacing_w: float = 0.04
    seed: int = 42
    output_dir: str = "plurex_out"
    stages: tuple[str, ...] = STAGES
    eta: float | None = None
    tol: float = 1e-7
    max_iters: int = 5000
    n_samples: int = 10_000
    gap_margin: float = 0.5
    certify_step: float = 1e-3
    profile_file: str | None = None

    def __post_init__(self):
        self.stages = tuple(self.stages)
        if not 0 < self.delta <= 0.1:
            raise ValueError("delta must lie in (0, 0.1]")
        if not 0 < self.epsilon < 5 / 11:
            raise ValueError("epsilon must lie in (0, 5/11)")
        if self.spacing_t <= 0 or self.spacing_w <= 0:
            raise ValueError("spacings must be positive")
        unknown = set(self.stages) - set(STAGES)
        if unknown:
            raise ValueError(f"unknown stages {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        names = {f.name for f in fields(cls)}
        extra = set(data) - names
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stages"] = list(self.stages)
        return d


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _fmt(x: float) -> str:
    return repr(float(x))


SCHEMA_FOR = {
    "certify.json": "certify",
    "psh.json": "psh",
    "witness.json": "witness",
    "omega1.json": "envelope",
    "omega2.json": "envelope",
    "gap.json": "gap",
    "grid.json": "grid",
    "timings.json": "timings",
    "config.json": "config",
}


def load_schema(name: str) -> dict:
    """A JSON schema shipped with the package (``certify``, ``gap``, ...)."""
    from importlib.resources import files

    return json.loads(files("plurex").joinpath("schemas", f"{name}.schema.json").read_text())


RESULT_FILES = {"omega1": "omega1_field.npy", "omega1_proxy": "omega1_field.npy", "omega2": "omega2_field.npy"}


def _load_grid_meta(out: Path) -> dict:
    p = out / "grid.json"
    if not p.exists():
        raise UnknownResult("no grid.json in output directory")
    return json.loads(p.read_text())


def export_slice(output_dir: str | os.PathLike, result_id: str, plane: str = "w=0", fmt: str = "csv") -> Path:
    """Write a w = 0 (1-D) or t = const (2-D) slice of a stored result."""
    out = Path(output_dir)
    if result_id not in RESULT_FILES or not (out / RESULT_FILES[result_id]).exists():
        raise UnknownResult(result_id)
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    meta = _load_grid_meta(out)
    values = np.load(out / RESULT_FILES[result_id])
    axes = [es.Axis(*meta[name]) for name in ("t_axis", "u_axis", "v_axis")]
    key, _, val = plane.partition("=")
    tag = result_id.replace("_proxy", "")
    if key.strip() == "w" and float(val) == 0.0:
        j, k = axes[1].index(0.0), axes[2].index(0.0)
        t = axes[0].coords
        vals = values[:, j, k]
        path = out / f"{tag}_slice_w0.{fmt}"
        if fmt == "csv":
            lines = ["# columns: t = |z|, value at w = 0 (inf off the problem's mask)", "t,value"]
            lines += [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(t, vals)]
            path.write_text("\n".join(lines) + "\n")
        else:
            write_json(path, {"plane": "w=0", "t": t.tolist(), "value": vals.tolist()})
        return path
    if key.strip() == "t":
        i = axes[0].index(float(val))
        plane_vals = values[i]
        path = out / f"{tag}_slice_t{float(val):g}.{fmt}"
        if fmt == "csv":
            lines = ["# columns: Re w, Im w, value at fixed t (inf off the problem's mask)", "u,v,value"]
            for j, u in enumerate(axes[1].coords):
                for k, v in enumerate(axes[2].coords):
                    lines.append(f"{_fmt(u)},{_fmt(v)},{_fmt(plane_vals[j, k])}")
            path.write_text("\n".join(lines) + "\n")
        else:
            write_json(path, {"plane": f"t={float(val):g}", "u": axes[1].coords.tolist(),
                              "v": axes[2].coords.tolist(), "value": plane_vals.tolist()})
        return path
    raise ValueError(f"unsupported plane {plane!r}")


# ---------------------------------------------------------------------------
# stages


class _Run:
    def __init__(self, config: PipelineConfig):
        self.cfg = config
        self.out = Path(config.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.profile = DEFAULT_PROFILE
        self._grid = None
        self.results: dict[str, es.EnvelopeResult] = {}
        self.timings: dict[str, float] = {}
        self.codes: list[int] = []

    @property
    def grid(self) -> es.Grid3:
        if self._grid is None:
            c = self.cfg
            self._grid = es.build_grid(spacing_t=c.spacing_t, spacing_w=c.spacing_w, delta=c.delta,
                                       profile=self.profile)
            g = self._grid
            write_json(self.out / "grid.json", {
                "t_axis": [g.t_axis.start, g.t_axis.stop, g.t_axis.step],
                "u_axis": [g.u_axis.start, g.u_axis.stop, g.u_axis.step],
                "v_axis": [g.v_axis.start, g.v_axis.stop, g.v_axis.step],
                "delta": g.delta,
                "n_interior": int(g.interior_mask.sum()),
                "n_closure": int(g.closure_mask.sum()),
                "n_enlarged": int(g.enlarged_mask.sum()),
                "n_V": int(g.v_mask().sum()),
            })
        return self._grid

    def certify(self) -> bool:
        c = self.cfg
        try:
            if c.profile_file:
                self.profile = RadialProfile.from_json(Path(c.profile_file).read_text())
            report = certify_profiles(c.certify_step, self.profile)
            payload = {"step": c.certify_step, "profile": self.profile.node_table, **report.to_dict(),
                       "min_margin": report.min_margin}
            ok = report.passed
        except Exception as exc:  # unreadable or malformed profile
            payload = {"step": c.certify_step, "pass": False, "checks": [], "error": f"{type(exc).__name__}: {exc}"}
            ok = False
        write_json(self.out / "certify.json", payload)
        return ok

    def psh(self) -> bool:
        c = self.cfg
        overlap = overlap_consistency(c.n_samples, c.seed, self.profile)
        g = g_function(self.profile)
        probes = []
        for t, off in ((2.5, 0.3), (5.5, 0.3), (9.0, 0.02), (12.5, 0.3), (15.5, 0.3)):
            ph = self.profile.phi(t)
            w = complex(math.cos(ph), math.sin(ph)) * (1 - off)
            probes.append(psh_test(g, DomainPoint.from_reduced(t, w), radius=0.05, profile=self.profile))
        probe_ok = all(p.worst_submean_defect <= AGREE_TOL and p.levi_min_eig >= -FD_TOL for p in probes)
        write_json(self.out / "psh.json", {
            "overlap": overlap.to_dict(),
            "max_disagreement": max(AGREE_TOL - ch.margin for ch in overlap.checks),
            "probes": [p.to_dict() for p in probes],
            "pass": overlap.passed and probe_ok,
        })
        return overlap.passed and probe_ok

    def witness(self) -> bool:
        c = self.cfg
        rep = witness_report(c.delta, c.n_samples, c.seed, max(c.spacing_t, c.spacing_w), self.profile)
        write_json(self.out / "witness.json", rep)
        return rep["pass"]

    def _solve(self, which: str) -> es.EnvelopeResult:
        c = self.cfg
        opts = dict(tol=c.tol, max_iters=c.max_iters)

        def progress(it, res):
            if it % 100 == 0:
                log.info("%s sweep %d residual %.3g", which, it, res)

        if which == "omega2":
            r = es.solve_omega2(self.grid, c.eta, progress=progress, **opts)
        else:
            r = es.solve_omega1_proxy(self.grid, c.epsilon, c.delta, c.eta, progress=progress, **opts)
        self.results[which] = r
        np.save(self.out / f"{which}_field.npy", r.field.values)
        export_slice(self.out, which, "w=0", "csv")
        return r

    def omega2(self) -> bool:
        r = self._solve("omega2")
        g = self.grid
        summary = es.result_summary(r, g)
        wit = es.witness_field(g)
        h = g.spacing
        m = g.interior_mask
        domination = float(np.min(r.field.values[m] - (wit[m] - 10 * h * h)))
        summary.update({
            "witness_bound_on_V": V_VALUE,
            "witness_bound_as_printed": V_VALUE_AS_PRINTED,
            "required_at_t9_w0": V_VALUE - BOUND_SLACK,
            "witness_domination_margin": domination,
        })
        ok = r.converged and summary["value_at_t9_w0"] is not None \
            and summary["value_at_t9_w0"] >= V_VALUE - BOUND_SLACK and domination >= 0
        summary["pass"] = ok
        write_json(self.out / "omega2.json", summary)
        if not r.converged:
            self.codes.append(EXIT_NOT_CONVERGED)
        return ok

    def omega1(self) -> bool:
        r = self._solve("omega1")
        summary = es.result_summary(r, self.grid)
        bound = -1 + 2 * self.cfg.epsilon + BOUND_SLACK
        summary.update({"epsilon": self.cfg.epsilon, "required_max_on_V": bound})
        ok = r.converged and summary["max_over_V"] is not None and summary["max_over_V"] <= bound \
            and summary["value_at_t9_w0"] is not None and summary["value_at_t9_w0"] <= bound
        summary["pass"] = ok
        write_json(self.out / "omega1.json", summary)
        if not r.converged:
            self.codes.append(EXIT_NOT_CONVERGED)
        return ok

    def _result(self, which: str) -> es.EnvelopeResult:
        if which in self.results:
            return self.results[which]
        path = self.out / f"{which}_field.npy"
        summary = self.out / f"{which}.json"
        if path.exists() and summary.exists():
            s = json.loads(summary.read_text())
            vals = np.load(path)
            mask = self.grid.interior_mask if which == "omega2" else self.grid.enlarged_mask
            if vals.shape == self.grid.shape:
                return es.EnvelopeResult(es.GridField(vals, mask), s["iterations"], s["residual"] or 0.0,
                                         s["converged"])
        getattr(self, which)()
        return self.results[which]

    def gap(self) -> bool:
        r2 = self._result("omega2")
        r1 = self._result("omega1")
        rep = es.gap_report(r1, r2, self.grid, self.cfg.delta, self.cfg.epsilon, self.cfg.gap_margin)
        idx = self.grid.node_index(9.0, 0j)
        rep["omega1_proxy_at_t9_w0"] = float(r1.field.values[idx])
        rep["omega2_at_t9_w0"] = float(r2.field.values[idx])
        write_json(self.out / "gap.json", rep)
        if not rep["pass"]:
            self.codes.append(EXIT_GAP)
        return rep["pass"]


def run_pipeline(config: PipelineConfig) -> int:
    """Run the configured stages in dependency order; return the exit code.

    2: certification failed (later stages are skipped); 3: an envelope solve
    did not converge; 4: the gap report failed; 1: any other check failed.
    """
    run = _Run(config)
    # the output location is left out so that runs elsewhere compare equal
    write_json(run.out / "config.json", {k: v for k, v in config.to_dict().items() if k != "output_dir"})
    stages = [s for s in STAGES if s in config.stages or s == "certify"]
    failed = False
    for stage in stages:
        t0 = time.perf_counter()
        ok = getattr(run, stage)()
        run.timings[stage] = time.perf_counter() - t0
        log.info("%s: %s (%.1f s)", stage, "pass" if ok else "FAIL", run.timings[stage])
        write_json(run.out / "timings.json", run.timings)
        if stage == "certify" and not ok:
            return EXIT_CERTIFY
        failed |= not ok
    for code in (EXIT_NOT_CONVERGED, EXIT_GAP):
        if code in run.codes:
            return code
    return EXIT_CHECK_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# summary table


def _row(stage: str, data: dict) -> str:
    ok = "pass" if data.get("pass") else "FAIL"
    if stage == "certify":
        key = f"min margin {data.get('min_margin')}" if "min_margin" in data else data.get("error", "")
    elif stage == "psh":
        key = f"max piece disagreement {data.get('max_disagreement'):.3g}"
    elif stage == "witness":
        key = f"g on V {data.get('g_on_V'):.6f} (printed {data.get('g_on_V_as_printed'):.6f}), " \
              f"worst sub-mean defect {data.get('submean_worst_defect'):.3g}"
    elif stage in ("omega1", "omega2"):
        key = f"value at (9,0) {data.get('value_at_t9_w0')}, sweeps {data.get('iterations')}, " \
              f"residual {data.get('residual'):.3g}"
    else:
        key = f"min gap on V {data.get('min_gap')}, adjusted {data.get('adjusted_gap')}"
    return f"{stage:<8} {ok:<5} {key}"


def summarize(output_dir: str | os.PathLike) -> str:
    out = Path(output_dir)
    timings = {}
    if (out / "timings.json").exists():
        timings = json.loads((out / "timings.json").read_text())
    rows = []
    for stage in STAGES:
        p = out / f"{stage}.json"
        if p.exists():
            row = _row(stage, json.loads(p.read_text()))
            if stage in timings:
                row += f"  [{timings[stage]:.1f} s]"
            rows.append(row)
    return "\n".join(rows) if rows else f"no results in {out}"


# ---------------------------------------------------------------------------
# command line


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with PipelineConfig fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--delta", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--spacing-t", type=float)
    common.add_argument("--spacing-w", type=float)
    common.add_argument("--max-iters", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("-q", "--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="plurex", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("certify", parents=[common], help="certify the radial profiles")
    sub.add_parser("psh", parents=[common], help="piece consistency and psh probes of g")
    sub.add_parser("witness", parents=[common], help="sampled witness checks for g")
    env = sub.add_parser("envelope", parents=[common], help="envelope solves and gap report")
    env.add_argument("--which", choices=("omega1", "omega2", "gap", "all"), default="all")
    sub.add_parser("run", parents=[common], help="all stages")
    s = sub.add_parser("summarize", parents=[common], help="print the results table")
    e = sub.add_parser("export", parents=[common], help="export a slice of a stored envelope")
    e.add_argument("--result", required=True)
    e.add_argument("--plane", default="w=0", help="'w=0' or 't=<value>'")
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    del s
    return p


def _config(args) -> PipelineConfig:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    for name in ("seed", "delta", "epsilon", "spacing_t", "spacing_w", "max_iters", "tol"):
        v = getattr(args, name)
        if v is not None:
            data[name] = v
    if args.out:
        data["output_dir"] = args.out
    return PipelineConfig.from_dict(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    cfg = _config(args)
    if args.command == "summarize":
        print(summarize(cfg.output_dir))
        return 0
    if args.command == "export":
        try:
            print(export_slice(cfg.output_dir, args.result, args.plane, args.format))
        except UnknownResult as exc:
            print(f"unknown result: {exc}", file=sys.stderr)
            return EXIT_CHECK_FAILED
        return 0
    if args.command in ("certify", "psh", "witness"):
        stages = (args.command,)
    elif args.command == "envelope":
        stages = {"all": ("omega2", "omega1", "gap")}.get(args.which, (args.which,))
    else:
        stages = STAGES
    cfg.stages = tuple(stages)
    code = run_pipeline(cfg)
    if not args.quiet:
        print(summarize(cfg.output_dir))
    return code


if __name__ == "__main__":
    sys.exit(main())
