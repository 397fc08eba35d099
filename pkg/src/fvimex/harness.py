"""Convergence ladders, scheme comparison, Greeks and report I/O."""

from __future__ import annotations

import csv
import io
import json
import math
import subprocess
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .analytics import GreekSet, down_and_out_call, xva_call
from .errors import ConfigurationError, NumericalBlowupError
from .mesh import Grid, State, build_grid, l1_error, project_initial
from .models import (
    ConservativeModel,
    MarketData,
    barrier_market,
    black_scholes_barrier_model,
    xva_market,
    xva_model,
)
from .timestepping import IntegrationResult, StepPlan, estimate_stability, integrate, select_dt

CSV_HEADER = ("scheme", "n_cells", "l1_error", "observed_order", "dt", "wall_time_s", "status")
DEFAULT_EXPLICIT_MAX_N = 3200
DT_RULE = {
    "imex": "dt = cfl * ds / max|f_u|, rounded down to T / ceil(T / dt)",
    "explicit": "dt = cfl * min(ds / max|f_u|, ds^2 / (2 max eta)), rounded down to T / ceil(T / dt)",
}


@dataclass(frozen=True)
class ModelSpec:
    """Everything the harness needs to know about a benchmark problem."""

    name: str
    default_market: Callable[[], MarketData]
    build: Callable[[MarketData], ConservativeModel]
    # analytic(s, t, market) -> GreekSet
    analytic: Callable[[np.ndarray, float, MarketData], GreekSet]

    def exact(self, s, t: float, market: MarketData) -> np.ndarray:
        return self.analytic(s, t, market).price


def _barrier_analytic(s, t, m):
    return down_and_out_call(s, m.K, t, m)


def _xva_analytic(s, t, m):
    return xva_call(s, m.K, t, m)


MODELS: dict[str, ModelSpec] = {
    "barrier_call": ModelSpec("barrier_call", barrier_market, black_scholes_barrier_model, _barrier_analytic),
    "xva_call": ModelSpec("xva_call", xva_market, xva_model, _xva_analytic),
}


def get_model(model_id: str) -> ModelSpec:
    try:
        return MODELS[model_id]
    except KeyError:
        raise ConfigurationError(f"unknown model {model_id!r}; expected one of {sorted(MODELS)}") from None


def resolve_market(model_id: str, market: Optional[MarketData] = None, **overrides) -> MarketData:
    m = market if market is not None else get_model(model_id).default_market()
    return m.with_updates(**overrides) if overrides else m


@dataclass(frozen=True)
class ConvergenceRow:
    scheme: str
    n_cells: int
    l1_error: Optional[float]
    observed_order: Optional[float]
    dt: Optional[float]
    wall_time: Optional[float]
    status: str = "ok"


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def for_scheme(self, scheme: str) -> list[ConvergenceRow]:
        return [r for r in self.rows if r.scheme == scheme]

    def row(self, scheme: str, n_cells: int) -> ConvergenceRow:
        for r in self.rows:
            if r.scheme == scheme and r.n_cells == n_cells:
                return r
        raise KeyError((scheme, n_cells))

    def speedups(self) -> dict[int, float]:
        """wall_explicit / wall_imex for every N where both runs finished."""
        out = {}
        for r in self.for_scheme("imex"):
            try:
                e = self.row("explicit", r.n_cells)
            except KeyError:
                continue
            if r.status == e.status == "ok" and r.wall_time and e.wall_time:
                out[r.n_cells] = e.wall_time / r.wall_time
        return out

    @property
    def ok(self) -> bool:
        return all(r.status in ("ok", "skipped") for r in self.rows)


@dataclass(frozen=True, eq=False)
class PricingResult:
    grid: Grid
    state: State
    exact: np.ndarray
    plan: StepPlan
    wall_time: float

    @property
    def l1(self) -> float:
        exact = self.exact
        return l1_error(self.grid, self.state, lambda s: exact)


def observed_order(e_prev: float, e: float, n_prev: int, n: int) -> float:
    """log(e_prev / e) / log(n / n_prev); log2 of the ratio when n doubles."""
    return math.log(e_prev / e) / math.log(n / n_prev)


def observed_orders(ns: Sequence[int], errors: Sequence[float]) -> list[Optional[float]]:
    """Orders along a ladder; the first entry has no predecessor."""
    out: list[Optional[float]] = [None]
    for i in range(1, len(ns)):
        out.append(observed_order(errors[i - 1], errors[i], ns[i - 1], ns[i]))
    return out


def _check_ladder(resolutions: Sequence[int]) -> list[int]:
    ns = [int(n) for n in resolutions]
    if not ns:
        raise ConfigurationError("resolutions must be nonempty")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigurationError(f"resolutions must be strictly increasing, got {ns}")
    if ns[0] < 3:
        raise ConfigurationError("need at least 3 cells")
    return ns


def setup(model_id: str, n_cells: int, market: Optional[MarketData] = None):
    spec = get_model(model_id)
    m = market if market is not None else spec.default_market()
    model = spec.build(m)
    grid = build_grid(model.s_min, model.s_max, n_cells)
    state = project_initial(grid, model.payoff, model.breakpoints)
    return spec, m, model, grid, state


def plan_for(model: ConservativeModel, grid: Grid, state: State, T: float, scheme: str, cfl: float) -> StepPlan:
    return select_dt(estimate_stability(model, grid, state), grid, T, cfl, scheme)


def solve(model_id: str, scheme: str, n_cells: int, cfl: float = 0.5,
          market: Optional[MarketData] = None) -> PricingResult:
    """One run to t = T; returns the numerical and exact solutions."""
    spec, m, model, grid, state = setup(model_id, n_cells, market)
    plan = plan_for(model, grid, state, m.T, scheme, cfl)
    res: IntegrationResult = integrate(model, grid, state, plan)
    exact = spec.exact(grid.centers, res.state.time, m)
    return PricingResult(grid, res.state, exact, plan, res.wall_time)


def _metadata(model_id: str, m: MarketData, cfl: float, schemes: Sequence[str], **extra) -> dict:
    model = get_model(model_id).build(m)
    meta = {
        "model": model_id,
        "market": asdict(m),
        "domain": [model.s_min, model.s_max],
        "boundaries": {k: model.metadata[k] for k in ("left_bc", "right_bc") if k in model.metadata},
        "cfl": cfl,
        "dt_rule": {s: DT_RULE[s] for s in schemes},
        "error_norm": "sum_i |u_i - exact(s_i)| ds at t = T",
        "version": version_string(),
    }
    meta.update(extra)
    return meta


def _ladder(model_id, scheme, ns, cfl, m, max_n=None) -> list[ConvergenceRow]:
    rows = []
    prev = None
    for n in ns:
        if max_n is not None and n > max_n:
            _, _, model, grid, state = setup(model_id, n, m)
            dt = plan_for(model, grid, state, m.T, scheme, cfl).dt
            rows.append(ConvergenceRow(scheme, n, None, None, dt, None, "skipped"))
            continue
        try:
            res = solve(model_id, scheme, n, cfl, m)
        except NumericalBlowupError:
            rows.append(ConvergenceRow(scheme, n, None, None, None, None, "blowup"))
            prev = None
            continue
        err = res.l1
        order = None if prev is None else observed_order(prev[1], err, prev[0], n)
        rows.append(ConvergenceRow(scheme, n, err, order, res.plan.dt, res.wall_time))
        prev = (n, err)
    return rows


def run_convergence(model_id: str, scheme: str, resolutions: Sequence[int], cfl: float = 0.5,
                    market: Optional[MarketData] = None, max_n: Optional[int] = None) -> ConvergenceReport:
    """L1 errors at t = T against the closed form over a resolution ladder.

    A blowup is recorded as a row with ``status="blowup"``; rows above
    ``max_n`` are recorded as ``"skipped"``.
    """
    if scheme not in DT_RULE:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    ns = _check_ladder(resolutions)
    m = resolve_market(model_id, market)
    rows = _ladder(model_id, scheme, ns, cfl, m, max_n)
    return ConvergenceReport(rows, _metadata(model_id, m, cfl, [scheme]))


def compare_schemes(model_id: str, resolutions: Sequence[int], cfl: float = 0.5,
                    market: Optional[MarketData] = None,
                    explicit_max_n: Optional[int] = DEFAULT_EXPLICIT_MAX_N) -> ConvergenceReport:
    """IMEX and explicit ladders on identical grids, with speedups in the metadata."""
    ns = _check_ladder(resolutions)
    m = resolve_market(model_id, market)
    rows = _ladder(model_id, "imex", ns, cfl, m) + _ladder(model_id, "explicit", ns, cfl, m, explicit_max_n)
    report = ConvergenceReport(rows, _metadata(model_id, m, cfl, ["imex", "explicit"],
                                               explicit_max_n=explicit_max_n))
    report.metadata["speedup"] = {str(n): v for n, v in report.speedups().items()}
    return report


@dataclass(frozen=True, eq=False)
class GreeksCurve:
    s: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self) -> None:
        if not (self.s.shape == self.delta.shape == self.gamma.shape):
            raise ValueError("Greeks arrays must have equal length")


def extract_greeks(grid: Grid, state: State) -> GreeksCurve:
    """Central differences of cell averages; second-order one-sided at the ends."""
    u = np.asarray(state.values, dtype=float)
    n = u.size
    if n < 3:
        raise ValueError("need at least 3 cells")
    ds = grid.ds
    delta = np.empty(n)
    gamma = np.empty(n)
    delta[1:-1] = (u[2:] - u[:-2]) / (2 * ds)
    gamma[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / ds**2
    delta[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * ds)
    delta[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * ds)
    if n >= 4:
        gamma[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / ds**2
        gamma[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / ds**2
    else:
        # three cells only admit one second difference
        gamma[0] = gamma[-1] = gamma[1]
    return GreeksCurve(grid.centers.copy(), delta, gamma)


def sign_changes(values: np.ndarray, rel_floor: float = 1e-4) -> int:
    """Sign changes of ``values`` ignoring entries below ``rel_floor * max|values|``.

    Far from the strike the exact gamma is ~1e-9 and the discrete one is
    round-off (second differences of O(1e3) prices over ds ~ 1), so raw
    sign flips there say nothing about oscillation.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0
    kept = v[np.abs(v) > rel_floor * np.max(np.abs(v))]
    return int(np.count_nonzero(np.diff(np.sign(kept))))


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def format_csv(report: ConvergenceReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.rows:
        w.writerow([r.scheme, r.n_cells, _fmt(r.l1_error), _fmt(r.observed_order),
                    _fmt(r.dt), _fmt(r.wall_time), r.status])
    return buf.getvalue()


def sidecar_path(path) -> Path:
    """``table.csv`` -> ``table.csv.json``; never collides with a config file."""
    path = Path(path)
    return path.with_name(path.name + ".json")


def emit_report(report: ConvergenceReport, path) -> Path:
    """Write the CSV and its JSON metadata sidecar; returns the CSV path."""
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(report))
        with open(sidecar_path(path), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def _opt(text: str, kind=float):
    return None if text == "" else kind(text)


def parse_csv(text: str) -> list[ConvergenceRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for rec in reader:
        scheme, n, err, order, dt, wall, status = rec
        rows.append(ConvergenceRow(scheme, int(n), _opt(err), _opt(order), _opt(dt), _opt(wall), status))
    return rows


def parse_report(path) -> ConvergenceReport:
    path = Path(path)
    rows = parse_csv(path.read_text(encoding="utf-8"))
    side = sidecar_path(path)
    meta = json.loads(side.read_text(encoding="utf-8")) if side.exists() else {}
    return ConvergenceReport(rows, meta)
