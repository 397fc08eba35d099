import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fvimex import harness
from fvimex.errors import ConfigurationError, NumericalBlowupError
from fvimex.harness import (
    CSV_HEADER,
    ConvergenceReport,
    ConvergenceRow,
    compare_schemes,
    emit_report,
    extract_greeks,
    format_csv,
    observed_orders,
    parse_report,
    run_convergence,
    sign_changes,
)
from fvimex.mesh import State, build_grid


def test_synthetic_orders_exact():
    assert observed_orders([50, 100, 200], [1.0, 0.25, 0.0625]) == [None, 2.0, 2.0]


@given(st.floats(1e-8, 1e8), st.floats(0.5, 4.0))
def test_orders_recover_rate(e0, p):
    errs = [e0, e0 / 2**p, e0 / 4**p]
    orders = observed_orders([10, 20, 40], errs)
    assert orders[1] == pytest.approx(p, rel=1e-9)
    assert orders[2] == pytest.approx(p, rel=1e-9)


def test_barrier_imex_ladder():
    rep = run_convergence("barrier_call", "imex", [50, 100, 200, 400, 800])
    rows = rep.for_scheme("imex")
    assert rows[0].observed_order is None
    for r in rows:
        assert r.status == "ok" and r.dt > 0 and r.wall_time > 0
    for r in rows[2:]:
        assert 1.8 <= r.observed_order <= 2.3


def test_deterministic_errors():
    a = run_convergence("xva_call", "imex", [50, 100])
    b = run_convergence("xva_call", "imex", [50, 100])
    assert [r.l1_error for r in a.rows] == [r.l1_error for r in b.rows]
    assert [r.dt for r in a.rows] == [r.dt for r in b.rows]


def test_short_horizon_sanity():
    m = harness.resolve_market("barrier_call")
    full = harness.solve("barrier_call", "imex", 100, market=m)
    short = harness.solve("barrier_call", "imex", 100, market=m.with_updates(T=1e-3))
    assert short.plan.n_steps == 1
    assert short.l1 < full.l1


def test_ladder_must_increase():
    with pytest.raises(ConfigurationError):
        run_convergence("barrier_call", "imex", [100, 50])
    with pytest.raises(ConfigurationError):
        run_convergence("barrier_call", "imex", [])
    with pytest.raises(ConfigurationError):
        run_convergence("nope", "imex", [50])


def test_compare_smoke_and_table_layout():
    ns = [50 * 2**k for k in range(8)]
    rep = compare_schemes("barrier_call", ns, explicit_max_n=50)
    assert len(rep.for_scheme("imex")) == 8
    assert len(rep.for_scheme("explicit")) == 8
    first = rep.row("explicit", 50)
    assert first.status == "ok" and np.isfinite(first.l1_error)
    assert np.isfinite(rep.row("imex", 50).l1_error)
    skipped = [r for r in rep.for_scheme("explicit") if r.n_cells > 50]
    assert all(r.status == "skipped" and r.l1_error is None and r.dt > 0 for r in skipped)
    assert set(rep.speedups()) == {50}
    assert rep.metadata["speedup"]["50"] > 0


def test_blowup_recorded_per_row(monkeypatch):
    real = harness.solve

    def flaky(model_id, scheme, n, *a, **k):
        if n == 100:
            raise NumericalBlowupError("boom", cell=3, stage=1)
        return real(model_id, scheme, n, *a, **k)

    monkeypatch.setattr(harness, "solve", flaky)
    rep = run_convergence("barrier_call", "imex", [50, 100, 200])
    assert [r.status for r in rep.rows] == ["ok", "blowup", "ok"]
    assert rep.rows[2].observed_order is None
    assert not rep.ok


def test_greeks_linear_and_quadratic():
    g = build_grid(1.0, 3.0, 10)
    lin = extract_greeks(g, State(2.5 * g.centers - 1.0))
    np.testing.assert_allclose(lin.delta, 2.5, rtol=1e-12)
    np.testing.assert_allclose(lin.gamma, 0.0, atol=1e-10)
    quad = extract_greeks(g, State(g.centers**2))
    np.testing.assert_allclose(quad.gamma, 2.0, rtol=1e-9)
    np.testing.assert_allclose(quad.delta, 2 * g.centers, rtol=1e-12)


def test_greeks_three_cells():
    g = build_grid(0.0, 3.0, 3)
    c = extract_greeks(g, State(g.centers**2))
    assert c.s.shape == c.delta.shape == c.gamma.shape == (3,)
    np.testing.assert_allclose(c.gamma, 2.0)


def test_barrier_greeks_quality():
    m = harness.resolve_market("barrier_call")
    res = harness.solve("barrier_call", "imex", 800)
    curve = extract_greeks(res.grid, res.state)
    exact = harness.get_model("barrier_call").analytic(curve.s, m.T, m)
    away = curve.s >= m.B + 5 * res.grid.ds
    for num, ref in ((curve.delta, exact.delta), (curve.gamma, exact.gamma)):
        assert np.max(np.abs(num - ref)[away]) <= 1e-2 * np.max(np.abs(ref[away]))
    assert sign_changes(curve.gamma[away]) <= 2
    assert np.all(np.isfinite(curve.delta)) and np.all(np.isfinite(curve.gamma))


def test_sign_changes_floor():
    v = np.array([1.0, 0.5, 1e-9, -1e-9, 1e-9, -0.2, -1.0])
    assert sign_changes(v, rel_floor=0.0) == 3
    assert sign_changes(v) == 1


def test_empty_report_is_header_only(tmp_path):
    path = emit_report(ConvergenceReport(), tmp_path / "empty.csv")
    assert path.read_bytes() == (",".join(CSV_HEADER) + "\n").encode()


def test_round_trip(tmp_path):
    rep = compare_schemes("xva_call", [50, 100], explicit_max_n=50)
    path = emit_report(rep, tmp_path / "t.csv")
    back = parse_report(path)
    assert back.rows == rep.rows
    assert back.metadata == json.loads(json.dumps(rep.metadata))
    raw = path.read_bytes()
    assert b"\r" not in raw
    raw.decode("utf-8")


def test_sidecar_contents(tmp_path):
    rep = run_convergence("xva_call", "imex", [50])
    emit_report(rep, tmp_path / "x.csv")
    meta = json.loads((tmp_path / "x.csv.json").read_text())
    for key in ("model", "market", "domain", "cfl", "dt_rule", "version"):
        assert key in meta
    assert meta["domain"] == [0.0, 60.0]


def test_emit_to_missing_dir_names_path(tmp_path):
    target = tmp_path / "nope" / "r.csv"
    with pytest.raises(OSError, match="nope"):
        emit_report(ConvergenceReport(), target)


def test_csv_fields_are_plain():
    rows = [ConvergenceRow("imex", 50, 1.5e-3, None, 0.25, 1e-4, "ok")]
    text = format_csv(ConvergenceReport(rows))
    assert text.splitlines()[1] == "imex,50,0.0015,,0.25,0.0001,ok"
