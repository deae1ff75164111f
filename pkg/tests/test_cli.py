"""Experiment configs, sweeps, the results format and the CLI verbs."""

import math
import py_compile
import warnings

import pytest

from mmwcache.cli import (
    ConfigError,
    RESULT_COLUMNS,
    SchemaError,
    SweepResult,
    SweepRow,
    analyze_point,
    emit_plots,
    load_config,
    main,
    point_rows,
    read_results,
    run_sweep,
    validate_suites,
    write_results,
)
from mmwcache.montecarlo import montecarlo_strategy_values


BASE = """
[system]
bs_density = 6.366197723675814e-5
gateway_density = 6.366197723675814e-6
tx_power_dbm = 33.0
bandwidth_hz = 1e9
slot_length_s = 0.01
noise_figure_db = 10.0
blockage_per_m = 0.01
carrier_hz = 28e9
alpha_los = 2.1
alpha_nlos = 4.0

[content]
file_count = 4
zipf_exponent = 0.8
file_size_bits = 1e6

[cache]
cache_size = 2
sic_capability = 2

[sweep]
variable = "cache_size"
grid = [1, 2]

[engine]
choices = "montecarlo"

[trials]
n_geometries = 60
n_fading_per_geometry = 100
seed = 7
"""


def write_config(tmp_path, text=BASE, name="exp.toml", out=None):
    out = out if out is not None else tmp_path / "results"
    path = tmp_path / name
    path.write_text(text + f'\n[output]\ndirectory = "{out}"\n')
    return path


@pytest.fixture
def mc_config(tmp_path):
    return load_config(write_config(tmp_path))


def analytic_text():
    return (BASE
            .replace('choices = "montecarlo"', 'choices = "analytic"')
            .replace("sic_capability = 2", "sic_capability = 1"))


def test_load_config_units_and_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert cfg.params.tx_power == pytest.approx(10 ** 3.3 * 1e-3)
    assert cfg.params.nakagami_m == 3
    assert cfg.params.mainlobe_gain == pytest.approx(10.0)
    assert cfg.params.sidelobe_gain == pytest.approx(0.1)
    assert cfg.params.beamwidth == pytest.approx(math.pi / 6)
    assert cfg.params.kappa_los == pytest.approx(1377508.8092540329, rel=1e-12)
    assert cfg.params.kappa_nlos == cfg.params.kappa_los
    assert cfg.params.backhaul_scale == 2e-3
    assert cfg.plan.confidence == 0.99
    assert cfg.plan.n_geometries == 60
    assert cfg.engines == ("montecarlo",)
    assert cfg.variable == "cache_size"
    assert cfg.grid == (1, 2)


def test_load_config_minimal_sections(tmp_path):
    # only the three required tables; everything else falls to defaults
    keep = []
    skip = False
    for line in BASE.splitlines():
        if line.startswith("["):
            skip = line.strip() not in ("[system]", "[content]", "[cache]")
        if not skip and line.strip():
            keep.append(line)
    path = tmp_path / "minimal.toml"
    path.write_text("\n".join(keep) + "\n")
    cfg = load_config(path)
    assert cfg.variable == "cache_size"
    assert cfg.grid == (2.0,)
    assert cfg.engines == ("analytic",)
    assert cfg.plan.n_geometries == 400 and cfg.plan.seed == 0
    assert cfg.out_dir == "results"


def test_load_config_collects_field_diagnostics(tmp_path):
    text = (BASE
            .replace("bandwidth_hz = 1e9\n", "")
            .replace("cache_size = 2", 'cache_size = "three"')
            .replace("n_geometries = 60", 'n_geometries = "many"'))
    with pytest.raises(ConfigError) as err:
        load_config(write_config(tmp_path, text))
    message = str(err.value)
    for address in ("system.bandwidth_hz", "cache.cache_size",
                    "trials.n_geometries"):
        assert address in message


def test_load_config_constructor_errors_named(tmp_path):
    text = BASE.replace("bandwidth_hz = 1e9", "bandwidth_hz = -1e9")
    with pytest.raises(ConfigError, match="system"):
        load_config(write_config(tmp_path, text))
    text = BASE.replace("grid = [1, 2]", "grid = [1, 2.5]")
    with pytest.raises(ConfigError, match="sweep.grid"):
        load_config(write_config(tmp_path, text))
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("[system\n")
    with pytest.raises(ConfigError, match="not valid TOML"):
        load_config(broken)


def test_sweep_accounting_and_roundtrip(mc_config, tmp_path):
    result = run_sweep(mc_config)
    assert result.variable == "cache_size"
    assert len(result.rows) == 2 * 6
    for value in (1, 2):
        point = [r for r in result.rows if r.sweep_value == value]
        assert sorted((r.strategy, r.metric) for r in point) == sorted(
            (s, m) for s in ("hybrid", "mpc", "ldc")
            for m in ("stp", "delay"))
        assert all(r.engine == "montecarlo" for r in point)
        by_key = {(r.strategy, r.metric): r.value for r in point}
        assert by_key[("hybrid", "stp")] >= by_key[("mpc", "stp")] - 1e-12
        assert by_key[("hybrid", "stp")] >= by_key[("ldc", "stp")] - 1e-12
        assert by_key[("hybrid", "delay")] <= by_key[("mpc", "delay")] + 1e-12
        assert by_key[("hybrid", "delay")] <= by_key[("ldc", "delay")] + 1e-12
    path = write_results(result, tmp_path / "out.csv")
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(RESULT_COLUMNS)
    back = read_results(path)
    assert back.variable == result.variable
    assert back.rows == result.rows


def test_sweep_rerun_is_byte_identical(mc_config, tmp_path, monkeypatch):
    first = write_results(run_sweep(mc_config), tmp_path / "a.csv")
    second = write_results(run_sweep(mc_config), tmp_path / "b.csv")
    assert first.read_bytes() == second.read_bytes()
    monkeypatch.setenv("MMWCACHE_WORKERS", "2")
    third = write_results(run_sweep(mc_config), tmp_path / "c.csv")
    assert first.read_bytes() == third.read_bytes()


def test_sweep_matches_manual_point_rows(mc_config):
    result = run_sweep(mc_config)
    values = montecarlo_strategy_values(
        mc_config.params, mc_config.content, mc_config.cache, mc_config.plan)
    manual = point_rows(2, mc_config.params, mc_config.content,
                        mc_config.cache, mc_config.engines, mc_config.plan,
                        values_by_engine={"montecarlo": values})
    assert tuple(r for r in result.rows if r.sweep_value == 2) == manual


def test_divergent_delays_marked_infinite(tmp_path):
    cfg = load_config(write_config(tmp_path, analytic_text()))
    result = run_sweep(cfg)
    delay_rows = [r for r in result.rows if r.metric == "delay"]
    stp_rows = [r for r in result.rows if r.metric == "stp"]
    # at this load every local delay integral caps out, so the delay
    # confidence annotation is infinite while values stay finite
    assert delay_rows and all(math.isinf(r.ci_halfwidth) for r in delay_rows)
    assert all(math.isfinite(r.value) for r in delay_rows)
    assert all(r.ci_halfwidth == 0.0 for r in stp_rows)
    path = write_results(result, tmp_path / "diverged.csv")
    assert read_results(path).rows == result.rows


def test_analyze_point_uses_configured_cache(mc_config):
    result = analyze_point(mc_config)
    assert result.variable == "cache_size"
    assert len(result.rows) == 6
    assert all(r.sweep_value == 2 for r in result.rows)


def test_read_results_schema_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("sweep_variable,sweep_value,strategy,metric,value,ci_halfwidth\n")
    with pytest.raises(SchemaError, match="engine"):
        read_results(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(SchemaError):
        read_results(empty)
    corrupt = tmp_path / "corrupt.csv"
    corrupt.write_text(",".join(RESULT_COLUMNS) + "\n"
                       "cache_size,1,best,stp,0.5,0.0,analytic\n")
    with pytest.raises(SchemaError, match="line 2"):
        read_results(corrupt)


def test_emit_plots_idempotent_and_compiles(mc_config, tmp_path):
    csv_path = write_results(run_sweep(mc_config), tmp_path / "sweep.csv")
    scripts = emit_plots([csv_path])
    assert len(scripts) == 2  # one per metric
    blobs = [p.read_bytes() for p in scripts]
    again = emit_plots([csv_path])
    assert scripts == again
    assert [p.read_bytes() for p in again] == blobs
    for script in scripts:
        py_compile.compile(str(script), doraise=True)


def test_emit_plots_warns_on_empty_rows(tmp_path):
    empty = tmp_path / "none.csv"
    empty.write_text(",".join(RESULT_COLUMNS) + "\n")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        scripts = emit_plots([empty])
    assert scripts == []
    assert any("none.csv" in str(w.message) for w in caught)


def test_main_sweep_with_overrides(tmp_path, capsys):
    out = tmp_path / "alt"
    path = write_config(tmp_path, analytic_text())
    code = main(["sweep", "--config", str(path), "--engine", "montecarlo",
                 "--seed", "9", "--out", str(out)])
    assert code == 0
    csv_path = out / "sweep_cache_size.csv"
    assert csv_path.exists()
    result = read_results(csv_path)
    assert all(r.engine == "montecarlo" for r in result.rows)
    assert "wrote" in capsys.readouterr().out


def test_main_analyze_and_exit_codes(tmp_path, capsys):
    path = write_config(tmp_path)
    assert main(["analyze", "--config", str(path)]) == 0
    printed = capsys.readouterr().out
    assert "hybrid" in printed and "stp" in printed
    assert main(["analyze", "--config", str(tmp_path / "nope.toml")]) == 2
    broken = write_config(tmp_path, BASE.replace(
        "bandwidth_hz = 1e9", 'bandwidth_hz = "wide"'), name="broken.toml")
    assert main(["sweep", "--config", str(broken)]) == 2


def test_main_optimize_prints_both_modes(tmp_path, capsys):
    path = write_config(tmp_path)
    assert main(["optimize", "--config", str(path)]) == 0
    printed = capsys.readouterr().out
    assert "stp-optimal vector" in printed
    assert "delay-optimal vector" in printed
    assert "exact" in printed  # 3^4 designs is well within the auto budget


def test_validate_suites_all_pass():
    suites = validate_suites(seed=0, n_instances=8)
    assert len(suites) == 6
    assert all(ok for _, ok, _ in suites), suites


def test_main_validate_verb(capsys):
    assert main(["validate", "--seed", "1"]) == 0
    printed = capsys.readouterr().out
    assert printed.count(": ok") == 6


def test_row_and_result_validation():
    row = SweepRow(sweep_value=1.0, strategy="hybrid", metric="stp",
                   value=0.5, ci_halfwidth=0.0, engine="analytic")
    with pytest.raises(ValueError):
        SweepRow(sweep_value=1.0, strategy="best", metric="stp",
                 value=0.5, ci_halfwidth=0.0, engine="analytic")
    with pytest.raises(ValueError):
        SweepRow(sweep_value=1.0, strategy="hybrid", metric="stp",
                 value=0.5, ci_halfwidth=0.0, engine="exact")
    with pytest.raises(ValueError):
        SweepResult(variable="beamwidth", rows=(row,))
