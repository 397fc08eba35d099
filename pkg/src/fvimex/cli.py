"""Command-line front end: ``fvimex {price,converge,greeks} --config run.json``.

Exit codes: 0 success, 2 configuration or usage error, 3 solver blowup,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import harness
from .errors import ConfigurationError, DomainError, NumericalBlowupError
from .models import MarketData

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4

MARKET_KEYS = ("sigma", "r", "q", "T", "K", "B", "R_B", "R_C", "lambda_B", "lambda_C", "s_F")
NULLABLE_MARKET = ("B", "s_F")
SCHEMES = ("imex", "explicit", "both")
DEFAULT_RESOLUTIONS = (50, 100, 200, 400, 800, 1600)


@dataclass
class RunConfig:
    model: str = "barrier_call"
    scheme: str = "both"
    resolutions: list = field(default_factory=lambda: list(DEFAULT_RESOLUTIONS))
    cfl: float = 0.5
    out: Optional[str] = None
    explicit_max_n: Optional[int] = harness.DEFAULT_EXPLICIT_MAX_N
    # market-data overrides on top of the model defaults
    market: dict = field(default_factory=dict)

    def market_data(self) -> MarketData:
        return harness.resolve_market(self.model, **self.market)

    def to_dict(self) -> dict:
        d = {
            "model": self.model,
            "scheme": self.scheme,
            "resolutions": list(self.resolutions),
            "cfl": self.cfl,
            "out": self.out,
            "explicit_max_n": self.explicit_max_n,
        }
        d.update(self.market)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _number(key, value, *, nullable=False):
    if value is None and nullable:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _int(key, value, *, nullable=False):
    if value is None and nullable:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{key}: expected an integer, got {value!r}")
    return value


def parse_config(text: str) -> RunConfig:
    """Strict JSON config parser; unknown keys and bad values name the field."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    known = {"model", "scheme", "resolutions", "cfl", "out", "explicit_max_n", *MARKET_KEYS}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")

    cfg = RunConfig()
    if "model" in raw:
        if raw["model"] not in harness.MODELS:
            raise ConfigurationError(f"model: expected one of {sorted(harness.MODELS)}, got {raw['model']!r}")
        cfg.model = raw["model"]
    if "scheme" in raw:
        if raw["scheme"] not in SCHEMES:
            raise ConfigurationError(f"scheme: expected one of {list(SCHEMES)}, got {raw['scheme']!r}")
        cfg.scheme = raw["scheme"]
    if "cfl" in raw:
        cfg.cfl = _number("cfl", raw["cfl"])
    if not 0.0 < cfg.cfl <= 1.0:
        raise ConfigurationError(f"cfl: must lie in (0, 1], got {cfg.cfl}")
    if "resolutions" in raw:
        res = raw["resolutions"]
        if not isinstance(res, list) or not res:
            raise ConfigurationError("resolutions: expected a nonempty list of integers")
        cfg.resolutions = [_int("resolutions", n) for n in res]
    if any(b <= a for a, b in zip(cfg.resolutions, cfg.resolutions[1:])):
        raise ConfigurationError(f"resolutions: must be strictly increasing, got {cfg.resolutions}")
    if cfg.resolutions[0] < 3:
        raise ConfigurationError("resolutions: need at least 3 cells")
    if "out" in raw:
        if raw["out"] is not None and not isinstance(raw["out"], str):
            raise ConfigurationError("out: expected a path string or null")
        cfg.out = raw["out"]
    if "explicit_max_n" in raw:
        cfg.explicit_max_n = _int("explicit_max_n", raw["explicit_max_n"], nullable=True)

    cfg.market = {
        k: _number(k, raw[k], nullable=k in NULLABLE_MARKET) for k in MARKET_KEYS if k in raw
    }
    try:
        cfg.market_data()
    except (ConfigurationError, TypeError) as exc:
        raise ConfigurationError(f"market data: {exc}") from exc
    return cfg


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _table(header: Sequence[str], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for rec in zip(*columns):
        w.writerow([repr(float(x)) for x in rec])
    return buf.getvalue()


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc}") from exc


def _single_scheme(cfg: RunConfig) -> str:
    return "imex" if cfg.scheme == "both" else cfg.scheme


def cmd_price(cfg: RunConfig, out: Optional[str]) -> int:
    res = harness.solve(cfg.model, _single_scheme(cfg), cfg.resolutions[-1], cfg.cfl, cfg.market_data())
    u = res.state.values
    _write(_table(("s", "numeric", "exact", "abs_error"),
                  (res.grid.centers, u, res.exact, abs(u - res.exact))), out)
    return EXIT_OK


def cmd_greeks(cfg: RunConfig, out: Optional[str]) -> int:
    m = cfg.market_data()
    res = harness.solve(cfg.model, _single_scheme(cfg), cfg.resolutions[-1], cfg.cfl, m)
    curve = harness.extract_greeks(res.grid, res.state)
    exact = harness.get_model(cfg.model).analytic(curve.s, res.state.time, m)
    _write(_table(("s", "delta", "gamma", "delta_exact", "gamma_exact"),
                  (curve.s, curve.delta, curve.gamma, exact.delta, exact.gamma)), out)
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out: Optional[str]) -> int:
    m = cfg.market_data()
    if cfg.scheme == "both":
        report = harness.compare_schemes(cfg.model, cfg.resolutions, cfg.cfl, m, cfg.explicit_max_n)
    else:
        max_n = cfg.explicit_max_n if cfg.scheme == "explicit" else None
        report = harness.run_convergence(cfg.model, cfg.scheme, cfg.resolutions, cfg.cfl, m, max_n)
    sys.stdout.write(harness.format_csv(report))
    if out is not None:
        harness.emit_report(report, out)
    if any(r.status == "blowup" for r in report.rows):
        print("error: solver blowup in at least one row", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


COMMANDS = {"price": cmd_price, "converge": cmd_converge, "greeks": cmd_greeks}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fvimex", description="Finite-volume IMEX option pricing runs.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name, help_ in (("price", "solution CSV at t = T"),
                        ("converge", "convergence table CSV"),
                        ("greeks", "numerical and analytic delta/gamma CSV")):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--config", help="run configuration JSON (defaults if omitted)")
        c.add_argument("--out", help="output path (overrides the config)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        out = args.out if args.out is not None else cfg.out
        return COMMANDS[args.command](cfg, out)
    except (ConfigurationError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowupError as exc:
        print(f"solver blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
