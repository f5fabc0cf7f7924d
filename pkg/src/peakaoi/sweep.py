"""Figure-style parameter sweeps: re-optimise all six schemes at every point."""

from __future__ import annotations

import csv
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InvalidParam
from .model import ScDistribution, SystemParams
from .optimizer import best_prob, best_threshold_sim, best_window
from .simulator import simulate_parallel

SCHEME_ORDER = (
    "threshold-fb", "window-fb", "prob-fb",
    "threshold-nofb", "window-nofb", "prob-nofb",
)

CSV_COLUMNS = (
    "sweep_var", "sweep_value", "scheme", "W", "B", "pTx",
    "analytic", "sim", "stderr", "n_cycles", "seed", "verdict",
)

# swept variable, default grid, fixed values of the other two (D = 1 throughout)
FIGURES = {
    "lambda": ("lambda", (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0), {"pe": 0.2, "theta": 10.0}),
    "pe": ("pe", tuple(round(0.05 * k, 2) for k in range(1, 17)), {"lambda": 1.0, "theta": 10.0}),
    "varc": ("theta", (0.0, 5.0, 10.0, 20.0, 45.0), {"lambda": 1.0, "pe": 0.2}),
}

REL_AGREEMENT = 0.005


@dataclass(frozen=True)
class SweepResult:
    sweep_var: str
    sweep_value: float
    scheme: str
    best_params: object
    analytic_value: Optional[float]
    sim_value: float
    sim_stderr: float
    n_cycles: int
    seed: int

    @property
    def agrees(self) -> Optional[bool]:
        if self.analytic_value is None:
            return None
        return agreement(self.sim_value, self.sim_stderr, self.analytic_value)

    @property
    def verdict(self) -> str:
        ok = self.agrees
        if ok is None:
            return "SIM-ONLY"
        return "OK" if ok else "MISMATCH"

    def row(self) -> dict:
        p = self.best_params
        return {
            "sweep_var": self.sweep_var,
            "sweep_value": _fmt(self.sweep_value),
            "scheme": self.scheme,
            "W": _fmt(p.W),
            "B": str(p.B) if hasattr(p, "B") else "",
            "pTx": _fmt(p.pTx) if hasattr(p, "pTx") else "",
            "analytic": "" if self.analytic_value is None else _fmt(self.analytic_value),
            "sim": _fmt(self.sim_value),
            "stderr": _fmt(self.sim_stderr),
            "n_cycles": str(self.n_cycles),
            "seed": str(self.seed),
            "verdict": self.verdict,
        }


def _fmt(x: float) -> str:
    # repr is locale-independent and round-trips exactly
    return repr(float(x))


def agreement(sim: float, stderr: float, exact: float) -> bool:
    return abs(sim - exact) <= max(3.0 * stderr, REL_AGREEMENT * abs(exact))


def optimize_scheme(scheme: str, params: SystemParams, dist, n_cycles: int, seed: int,
                    n_workers: int = 1):
    """Optimise one scheme; returns ``(OptResult, analytic value or None)``."""
    if scheme == "threshold-fb":
        return best_threshold_sim(params, dist, True, n_cycles=n_cycles, seed=seed,
                                  n_workers=n_workers), None
    if scheme == "threshold-nofb":
        return best_threshold_sim(params, dist, False, n_cycles=n_cycles, seed=seed,
                                  n_workers=n_workers), None
    kind, _, fb = scheme.partition("-")
    if kind == "window":
        res = best_window(params, dist, fb)
    elif kind == "prob":
        res = best_prob(params, dist, fb)
    else:
        raise InvalidParam(f"unknown scheme {scheme!r}")
    return res, res.value


def run_point(var: str, value: float, scheme: str, params: SystemParams, dist,
              n_cycles: int, seed: int, n_workers: int = 1) -> SweepResult:
    opt, exact = optimize_scheme(scheme, params, dist, n_cycles, seed, n_workers)
    if exact is None:
        sim, se = opt.value, opt.stderr
    else:
        est = simulate_parallel(opt.best_params, params, dist, n_cycles, seed, n_workers)
        sim, se = est.mean, est.stderr
    return SweepResult(var, value, scheme, opt.best_params, exact, sim, se, n_cycles, seed)


def point_setup(figure: str, value: float, D: float = 1.0):
    var, _, fixed = FIGURES[figure]
    setting = {**fixed, var: value}
    params = SystemParams(lam=setting["lambda"], pe=setting["pe"], D=D)
    return params, ScDistribution.from_theta(setting["theta"])


def run_sweep(figure: str, grid: Optional[Sequence[float]] = None, n_cycles: int = 10**6,
              seed: int = 42, n_workers: int = 1, schemes: Sequence[str] = SCHEME_ORDER,
              D: float = 1.0):
    """Optimise every scheme at every grid value; rows come back in sweep order."""
    if figure not in FIGURES:
        raise InvalidParam(f"unknown figure {figure!r}; expected one of {', '.join(FIGURES)}")
    var, default_grid, _ = FIGURES[figure]
    grid = tuple(default_grid if grid is None else grid)
    jobs = []
    for value in grid:
        params, dist = point_setup(figure, value, D)
        for scheme in schemes:
            jobs.append((var, value, scheme, params, dist, n_cycles, seed))
    if n_workers <= 1:
        return [run_point(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(lambda job: run_point(*job), jobs))


def write_csv(rows: Sequence[SweepResult], path) -> None:
    """Write rows atomically: a partial file never replaces ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".sweep-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for r in rows:
                writer.writerow(r.row())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
