import json
import math
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdmelab.errors import ConfigError
from rdmelab.harness.cli import main
from rdmelab.harness.config import (
    PRESETS,
    build_config,
    geometric_mesh,
    load_config_file,
    parse_config_text,
    stream_seed,
    with_overrides,
)
from rdmelab.harness.csvio import BASE_COLUMNS, format_csv, header, parse_csv, read_csv, write_csv
from rdmelab.harness.sweeps import (
    ModelResult,
    SweepRow,
    corrected_band,
    locate_crossing,
    models_beat_baseline,
    rates_table,
    run_fig1_sweep,
    run_fig2_sweep,
)
from rdmelab.model import Boundary
from rdmelab.rates import RateModel, fange_min_h

RHO = 2e-9


@pytest.fixture(scope="module")
def cube_fig1():
    return run_fig1_sweep(build_config(preset="cube", boundary="reflective"))


@pytest.fixture(scope="module")
def square_fig1():
    return run_fig1_sweep(build_config(preset="square", boundary="reflective"))


@pytest.fixture(scope="module")
def cube_fig2():
    return run_fig2_sweep(build_config(preset="cube"))


# config

def test_parse_config_text():
    text = """
    # cube with a coarse mesh
    preset = cube
    D = 2e-12
    n_per_side = 8, 4, 6   # any order
    models = fange, matched_asym
    with_mc = yes
    k_r = inf
    """
    values = parse_config_text(text)
    assert values["D"] == 2e-12
    assert values["n_per_side"] == (8, 4, 6)
    assert values["with_mc"] is True
    assert math.isinf(values["k_r"])
    cfg = build_config(values)
    assert cfg.mesh == (4, 6, 8)
    assert cfg.models == (RateModel.FANGE, RateModel.MATCHED_ASYM)
    assert cfg.params.D == 2e-12
    assert cfg.boundary is Boundary.PERIODIC


@pytest.mark.parametrize("text", ["nonsense", "colour = red", "samples = many", "with_mc = maybe"])
def test_config_text_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


@pytest.mark.parametrize("values", [
    dict(preset="sphere"), dict(n_per_side=()), dict(n_per_side=(1, 4)), dict(dim=2, models=("conventional",)),
    dict(samples=0), dict(tol=0.0), dict(D=-1.0), dict(models=("gfrd",)), dict(dt_levels=(1e-9,)),
])
def test_build_config_errors(values):
    with pytest.raises(ConfigError):
        build_config(values)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "absent.cfg")


def test_presets():
    cube = build_config(preset="cube")
    assert cube.params.dim == 3 and cube.params.L == pytest.approx(100 * RHO)
    assert cube.mesh == (5, 6, 7, 8, 10, 12, 15, 18, 22, 26, 32, 38, 46, 56, 68)
    square = build_config(preset="square")
    assert square.params.dim == 2 and square.params.L == pytest.approx(250 * RHO)
    assert RateModel.CONVENTIONAL not in square.models
    assert set(PRESETS) == {"cube", "square"}


def test_with_overrides_ignores_none():
    cfg = build_config()
    assert with_overrides(cfg, seed=None, samples=5).samples == 5
    assert with_overrides(cfg, seed=None).seed == cfg.seed
    with pytest.raises(ConfigError):
        with_overrides(cfg, samples=0)


@settings(max_examples=50)
@given(st.floats(0.5, 5.0), st.floats(0.1, 2.0), st.integers(4, 24))
def test_geometric_mesh_properties(log_lo, span, per_decade):
    lo, hi = 10**log_lo, 10 ** (log_lo + span)
    L = 10 ** (log_lo + span + 1)
    mesh = geometric_mesh(L, lo, hi, per_decade)
    assert list(mesh) == sorted(set(mesh))
    assert all(n >= 2 for n in mesh)


def test_stream_seed():
    assert stream_seed(42, 1) == stream_seed(42, 1)
    assert stream_seed(42, 1) != stream_seed(42, 2)
    assert 0 <= stream_seed(0, 5, 6) < 2**64


# sweeps

def test_cube_fig1_crossing(cube_fig1):
    assert 3.0 * RHO <= cube_fig1.h_star_sweep <= 3.4 * RHO
    assert cube_fig1.h_star / RHO == pytest.approx(3.176, rel=1e-3)


def test_square_fig1_crossing(square_fig1):
    assert 4.8 * RHO <= square_fig1.h_star_sweep <= 5.4 * RHO
    lo, hi = square_fig1.bracket
    assert lo <= square_fig1.h_star <= hi


@pytest.mark.parametrize("name", ["cube_fig1", "square_fig1"])
def test_sweep_and_closed_form_within_one_mesh_step(name, request):
    result = request.getfixturevalue(name)
    lo, hi = result.bracket
    assert abs(result.h_star_sweep - result.h_star) <= hi - lo


def test_cube_row_at_ten_rho(cube_fig1):
    row = next(r for r in cube_fig1.rows if math.isclose(r.h_over_rho, 10.0))
    assert row.tau_D_asym == pytest.approx(0.10109, rel=1e-4)
    assert not row.below_h_star


def test_fig1_has_both_boundaries(cube_fig1):
    for r in cube_fig1.rows:
        assert r.tau_D_exact > 0 and r.tau_D_exact_alt > 0
    # with a centred target, odd lattices give the same times under both boundaries
    for r in cube_fig1.rows:
        if round(100 / r.h_over_rho) % 2 == 1:
            assert r.tau_D_exact == pytest.approx(r.tau_D_exact_alt, rel=1e-8)


def test_fig1_rows_descending(cube_fig1):
    hs = [r.h for r in cube_fig1.rows]
    assert hs == sorted(hs, reverse=True)


def test_flags_agree_with_rate_domains(cube_fig2):
    p = build_config(preset="cube").params
    for r in cube_fig2.rows:
        assert ("below_h_star" in r.flags) == (r.h <= cube_fig2.h_star)
        assert ("below_h_crit" in r.flags) == (r.h <= cube_fig2.h_crit)
        assert ("outside_fange_domain" in r.flags) == (r.h < fange_min_h(p))
        for name, m in r.models.items():
            if m.rate is None:
                assert m.tau_meso is None and m.relerr is None
            else:
                assert m.rate > 0 and m.tau_meso > 0
                assert not math.isnan(m.relerr)
        if r.below_h_star:
            assert r.models["matched_asym"].rate is None


def test_matched_exact_rows_reproduce_tau_micro(cube_fig2):
    for r in cube_fig2.rows:
        m = r.models["matched_exact"]
        if r.tau_D_exact < r.tau_micro:
            assert abs(m.relerr) <= 1e-9


def test_erban_chapman_close_to_matched(cube_fig2):
    for r in corrected_band(cube_fig2, 10 * RHO):
        diff = abs(r.models["matched_asym"].tau_meso - r.models["erban_chapman"].tau_meso)
        assert diff / r.tau_micro <= 0.1


def test_corrections_beat_conventional(cube_fig2):
    band = corrected_band(cube_fig2, 10 * RHO)
    assert band
    for r in band:
        wins = models_beat_baseline(r, "conventional", ["erban_chapman", "fange", "matched_asym", "matched_exact"])
        assert all(wins.values()), (r.h_over_rho, wins)


def test_fig2_with_mc_matches_exact():
    cfg = build_config(dict(n_per_side=(10,), models=("conventional", "matched_asym"), samples=3000, seed=3))
    result = run_fig2_sweep(cfg, with_mc=True)
    for m in result.rows[0].models.values():
        assert abs(m.mc_mean - m.tau_meso) <= 3 * m.mc_stderr


def test_fig1_with_mc_matches_exact():
    cfg = build_config(dict(preset="square", n_per_side=(12,), samples=4000, seed=1), boundary="reflective")
    r = run_fig1_sweep(cfg, with_mc=True).rows[0]
    assert abs(r.tau_D_mc_mean - r.tau_D_exact) <= 3 * r.tau_D_mc_stderr


def test_threads_do_not_change_rows():
    cfg = build_config(dict(n_per_side=(5, 8, 11)))
    a = run_fig2_sweep(cfg)
    b = run_fig2_sweep(with_overrides(cfg, threads=3))
    assert format_csv(a.rows) == format_csv(b.rows)


def test_rates_table_has_no_solves():
    result = rates_table(build_config())
    assert all(r.tau_D_exact is None for r in result.rows)
    assert all(r.models["matched_exact"].rate is None for r in result.rows)


def test_locate_crossing_none_without_sign_change():
    rows = [SweepRow(h, h / RHO, 8, 1.0, 1.0, 10.0) for h in (1e-8, 2e-8)]
    assert locate_crossing(rows, 10.0) == (None, None)


# CSV

def _row(h, models=None, flags=()):
    return SweepRow(h, h / RHO, 1000, 0.25 / h * 1e-8, 0.3 / h * 1e-8, 0.3183098861837908, models or {}, flags)


def test_empty_model_list_columns():
    text = format_csv([_row(1e-8)])
    assert text.splitlines()[0].split(",") == list(BASE_COLUMNS) + ["flags"]


def test_header_order():
    cols = header(["fange"], mc_tau_D=True, mc_models=True)
    assert cols[:6] == list(BASE_COLUMNS)
    assert cols[6:8] == ["tau_D_mc_mean_s", "tau_D_mc_stderr_s"]
    assert cols[8:13] == ["model_fange_rate", "model_fange_tau_meso_s", "model_fange_relerr",
                          "model_fange_mc_mean_s", "model_fange_mc_stderr_s"]
    assert cols[-1] == "flags"


def test_csv_format_and_order(tmp_path):
    rows = [_row(1e-8, {"fange": ModelResult(math.inf, 1.0, 0.5)}), _row(3e-8, {"fange": ModelResult(None)},
                                                                         ("below_h_star", "below_h_crit"))]
    path = write_csv(rows, tmp_path / "sub" / "out.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[1].startswith("3.000000000000e-08,")
    assert lines[1].endswith(",,,,below_h_star;below_h_crit")
    assert ",inf," in lines[2]
    back = read_csv(path)
    assert back[0].flags == ("below_h_star", "below_h_crit")
    assert back[0].models["fange"].rate is None
    assert math.isinf(back[1].models["fange"].rate)


def test_write_csv_reports_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        write_csv([_row(1e-8)], blocker / "out.csv")
    with pytest.raises(ValueError):
        format_csv([])


def test_parse_rejects_foreign_csv():
    with pytest.raises(ValueError):
        parse_csv("a,b\n1,2\n")


finite = st.floats(1e-30, 1e30)
optional = st.one_of(st.none(), finite, st.just(math.inf))


@settings(max_examples=60)
@given(st.lists(st.tuples(st.floats(1e-10, 1e-6), finite, finite, optional, optional, optional), min_size=1,
                max_size=6, unique_by=lambda t: t[0]))
def test_csv_round_trip(items):
    rows = [SweepRow(h, h / RHO, 64, a, b, 0.3, {"m": ModelResult(r, t, e)}, ("below_h_star",) if a > b else ())
            for h, a, b, r, t, e in items]
    back = parse_csv(format_csv(rows))
    by_h = sorted(rows, key=lambda r: r.h, reverse=True)
    assert len(back) == len(rows)
    for r, s in zip(by_h, back):
        assert s.h == pytest.approx(r.h, rel=1e-9)
        assert s.tau_D_exact == pytest.approx(r.tau_D_exact, rel=1e-9)
        assert s.flags == r.flags
        for attr in ("rate", "tau_meso", "relerr"):
            x, y = getattr(r.models["m"], attr), getattr(s.models["m"], attr)
            assert (x is None and y is None) or y == pytest.approx(x, rel=1e-9)


# CLI

def test_cli_sweep_fig1_deterministic(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("preset = square\nn_per_side = 20, 40, 60, 80, 100\n")
    assert main(["sweep-fig1", "--config", str(cfg), "--seed", "42", "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["sweep-fig1", "--config", str(cfg), "--seed", "42", "--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert "crossing" in capsys.readouterr().err


def test_cli_fig2_stdout(capsys):
    assert main(["sweep-fig2", "--preset", "square", "--samples", "10"]) == 0
    out = capsys.readouterr().out
    rows = parse_csv(out)
    assert set(rows[0].models) == {"fange", "matched_asym", "matched_exact"}


def test_cli_rates_table(capsys):
    assert main(["rates-table"]) == 0
    assert capsys.readouterr().out.startswith("h_m,h_over_rho,N")


def test_cli_critical_h(capsys):
    assert main(["critical-h", "--preset", "square"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["h_star_over_rho"] == pytest.approx(5.098, rel=1e-3)
    assert out["h_star_bisect_m"] == pytest.approx(out["h_star_m"], rel=1e-12)


def test_cli_validate_reports_every_check(tmp_path):
    out = tmp_path / "v.json"
    code = main(["validate", "--out", str(out)])
    report = json.loads(out.read_text())
    assert code == (0 if report["passed"] else 1)
    names = {c["name"] for c in report["checks"]}
    assert {"kac_2d_16", "kac_3d_12", "montroll_3d_20", "montroll_2d_64"} <= names
    for c in report["checks"]:
        assert {"measured", "expected", "tolerance", "passed"} <= set(c)


def test_cli_micro_bd(capsys):
    assert main(["micro-bd", "--preset", "square", "--samples", "50", "--dt-levels", "2e-6,5e-7"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["levels"]) == 2 and out["levels"][0]["n"] == 50


@pytest.mark.parametrize("argv", [
    ["sweep-fig1", "--config", "/nonexistent/cfg"],
    ["micro-bd", "--preset", "square", "--dt-levels", "1e-9"],
])
def test_cli_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_bad_flag_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["sweep-fig1", "--samples", "0"])
    assert info.value.code == 2


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "rdmelab.harness.cli", "critical-h"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["dim"] == 3
