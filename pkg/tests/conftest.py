import os

import pytest

os.environ.setdefault("PLUREX_THREADS", "1")

from plurex import envelope_solver as es  # noqa: E402

# criterion number -> (description, passed); filled by test_acceptance
CRITERIA: dict[int, tuple[str, bool]] = {}


def record(number: int, text: str, passed: bool) -> None:
    CRITERIA[number] = (text, bool(passed))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        text, ok = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def coarse_grid():
    """Small grid that keeps the envelope unit tests quick."""
    return es.build_grid(spacing_t=0.2, spacing_w=0.08, delta=0.1)


@pytest.fixture(scope="session")
def coarse_omega2(coarse_grid):
    return es.solve_omega2(coarse_grid)


@pytest.fixture(scope="session")
def coarse_omega1(coarse_grid):
    return es.solve_omega1_proxy(coarse_grid, epsilon=0.1)


class PipelineRun:
    def __init__(self, out, code, elapsed, log):
        self.out = out
        self.code = code
        self.elapsed = elapsed
        self.log = log


def run_cli(args, env=None, cwd=None):
    """Run the command-line entry point in a fresh interpreter."""
    import subprocess
    import sys

    full_env = dict(os.environ)
    full_env.update(env or {})
    return subprocess.run([sys.executable, "-m", "plurex.verify_cli", *args],
                          env=full_env, cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="session")
def default_runs(tmp_path_factory):
    """Two full pipeline runs with the default configuration, under
    different worker caps (2 and 1).
    """
    import json
    import time

    from plurex.verify_cli import PipelineConfig

    cfg_dir = tmp_path_factory.mktemp("config")
    cfg = PipelineConfig().to_dict()
    cfg.pop("output_dir")
    (cfg_dir / "default.json").write_text(json.dumps(cfg))
    runs = []
    for threads in ("2", "1"):
        out = tmp_path_factory.mktemp(f"default_threads{threads}")
        t0 = time.perf_counter()
        proc = run_cli(["run", "--config", str(cfg_dir / "default.json"), "--out", str(out)],
                       env={"PLUREX_THREADS": threads})
        runs.append(PipelineRun(out, proc.returncode, time.perf_counter() - t0, proc.stdout + proc.stderr))
    return runs
