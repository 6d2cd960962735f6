import math

import pytest
from hypothesis import given, strategies as st

from config import OUTPUT_DIR_ENV, RunConfig, parse_config, resolve_output_dir
from models import UnitMode
from models.errors import ConfigError


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestParse:
    def test_no_file_gives_defaults(self):
        cfg = parse_config()
        assert cfg.scenario == "gaussian"
        assert cfg.grid.n_points == 512
        assert cfg.grid.unit_mode is UnitMode.MILLIMETERS
        assert cfg.scan.sweep_factors == [1.0, 2.0, 4.0, 8.0]

    def test_comments_blanks_and_auto(self, tmp_path):
        path = write(
            tmp_path,
            "# wire run\n\nscenario = wire   # trailing comment\ngrid.n_points = 1024\ntransform.sigma_ref = auto\n",
        )
        cfg = parse_config(path)
        assert cfg.scenario == "wire"
        assert cfg.grid.n_points == 1024
        assert cfg.transform.sigma_ref is None
        assert cfg.line_of("grid.n_points") == 4

    def test_sweep_factors_from_a_list(self, tmp_path):
        cfg = parse_config(write(tmp_path, "scan.sweep_factors = 1, 3, 9\n"))
        assert cfg.scan.sweep_factors == [1.0, 3.0, 9.0]

    @pytest.mark.parametrize(
        "text, line, match",
        [
            ("scenario = wire\ngrid.points = 12\n", 2, "unknown key"),
            ("grid.n_points = 256\n\ngrid.n_points = 512\n", 3, "duplicate key"),
            ("scenario = wire\nlo.preset = oracle\ngrid.n_points = 513\n", 3, "n_points"),
            ("grid.unit_mode = furlongs\n", 1, "unit_mode"),
            ("scenario gaussian\n", 1, "key = value"),
            ("field.waist =\n", 1, "missing value"),
            ("\n\ntransform.eps_floor = 2\n", 3, "eps_floor"),
            ("scan.sweep_factors = 0.5,1\n", 1, "sweep"),
        ],
    )
    def test_errors_carry_the_line(self, tmp_path, text, line, match):
        with pytest.raises(ConfigError, match=match) as info:
            parse_config(write(tmp_path, text))
        assert info.value.line == line
        assert str(info.value).startswith(f"line {line}: ")

    def test_custom_scenario_needs_a_path(self, tmp_path):
        with pytest.raises(ConfigError, match="field.path") as info:
            parse_config(write(tmp_path, "grid.n_points = 256\nscenario = custom\n"))
        assert info.value.line == 2

    def test_bench_preset_is_millimeters_only(self, tmp_path):
        cfg = parse_config(write(tmp_path, "grid.unit_mode = dimensionless\nlo.preset = bench\n"))
        with pytest.raises(ConfigError, match="millimeters") as info:
            cfg.lo_config(1.0)
        assert info.value.line == 2


class TestBuilders:
    def test_dimensionless_oracle(self):
        cfg = RunConfig.from_flat({"grid.unit_mode": "dimensionless"})
        scenario = cfg.scenario_preset()
        assert scenario.waist == 1.0
        assert cfg.wavenumber() == 1.0
        grid = cfg.grid_spec(scenario.waist)
        assert grid.extent == 16.0
        lo = cfg.lo_config(scenario.waist)
        assert (lo.a, lo.A) == (pytest.approx(0.05), pytest.approx(20.0))
        scan = cfg.scan_config(scenario.waist, cfg.wavenumber(), lo)
        assert (scan.x_axis.n, scan.p_axis.n) == (40, 41)
        assert scan.x0[-1] == pytest.approx(4.0)
        assert scan.p0[-1] == pytest.approx(4.0)

    def test_bench_preset(self):
        cfg = RunConfig.from_flat({"scenario": "wire", "lo.preset": "bench"})
        lo = cfg.lo_config(0.85)
        assert (lo.a, lo.A, lo.focal_length) == (0.081, 2.6, 60.0)
        scan = cfg.scan_config(0.85, cfg.wavenumber(), lo)
        assert scan.x0[-1] == pytest.approx(10.0)
        assert scan.p0[-1] == pytest.approx(0.3 * cfg.wavenumber())

    def test_explicit_values_beat_presets(self):
        cfg = RunConfig.from_flat({"lo.a": 0.1, "lo.A": 5.0, "scan.dx_max": 2.0, "field.waist": 0.7})
        assert cfg.scenario_preset().waist == 0.7
        lo = cfg.lo_config(0.7)
        assert (lo.a, lo.A) == (0.1, 5.0)
        assert cfg.scan_config(0.7, 1.0, lo).x0[0] == pytest.approx(-2.0)

    def test_resolved_auto_values(self):
        resolved = RunConfig.from_flat({"scenario": "wire", "lo.preset": "bench"}).resolved()
        assert resolved["field.waist"] == "0.85"
        assert resolved["field.obstruction_half_width"] == "0.5"
        assert resolved["grid.extent"] == "13.6"
        assert resolved["transform.sigma_ref"] == "0.85"
        assert resolved["lo.a"] == "0.081"
        assert resolved["lo.focal_length"] == "60.0"
        assert float(resolved["scan.p_max"]) == pytest.approx(0.3 * float(resolved["field.wavenumber"]))
        assert "auto" not in resolved.values()

    def test_resolved_skips_what_cannot_be_resolved(self, tmp_path):
        cfg = parse_config(write(tmp_path, "grid.unit_mode = dimensionless\nlo.preset = bench\n"))
        resolved = cfg.resolved()
        assert resolved["field.waist"] == "1.0"
        assert "lo.a" not in resolved
        custom = RunConfig.from_flat({"scenario": "custom", "field.path": "psi.bin"}).resolved()
        assert set(custom) == {"field.wavenumber"}

    def test_invalid_lo_geometry(self):
        cfg = RunConfig.from_flat({"lo.a": 3.0, "lo.A": 2.0})
        with pytest.raises(ConfigError, match="A > a"):
            cfg.lo_config(1.0)

    def test_dsp_and_regularization_specs(self):
        cfg = RunConfig.from_flat({"dsp.quadrature_phase_deg": -90, "transform.eps_floor": 1e-4, "transform.taper": 0})
        assert cfg.dsp_spec().quadrature_phase_deg == -90.0
        reg = cfg.reg_spec()
        assert (reg.eps_floor, reg.taper) == (1e-4, 0)


class TestOverrides:
    def test_flags_win_and_none_is_ignored(self, tmp_path):
        cfg = parse_config(write(tmp_path, "grid.n_points = 256\nscenario = wire\n"))
        merged = cfg.with_overrides({"grid.n_points": 128, "scenario": None})
        assert merged.grid.n_points == 128
        assert merged.scenario == "wire"
        assert merged.line_of("grid.n_points") is None
        assert merged.line_of("scenario") == 2

    def test_invalid_override(self):
        with pytest.raises(ConfigError, match="n_points"):
            parse_config().with_overrides({"grid.n_points": 7})

    def test_flat_lists_every_key(self):
        flat = parse_config().flat()
        assert flat["field.curvature_radius"] == "inf"
        assert flat["transform.sigma_ref"] == "auto"
        assert flat["dsp.with_spurs"] == "false"
        assert flat["scan.sweep_factors"] == "1.0,2.0,4.0,8.0"
        assert RunConfig.from_flat(flat).flat() == flat

    @given(
        st.integers(min_value=1, max_value=2048).map(lambda n: 2 * n),
        st.floats(min_value=0.01, max_value=50.0),
        st.one_of(st.just(math.inf), st.floats(min_value=1.0, max_value=1e4)),
        st.sampled_from(["gaussian", "wire"]),
        st.sampled_from(["bin", "csv"]),
    )
    def test_flat_round_trip(self, n_points, waist, radius, scenario, fmt):
        cfg = RunConfig.from_flat(
            {
                "scenario": scenario,
                "grid.n_points": n_points,
                "field.waist": waist,
                "field.curvature_radius": radius,
                "output.format": fmt,
            }
        )
        assert RunConfig.from_flat(cfg.flat()) == cfg


class TestOutputDir:
    def test_precedence(self, monkeypatch):
        cfg = RunConfig.from_flat({"output.dir": "from-config"})
        assert str(resolve_output_dir(None, cfg)) == "from-config"
        monkeypatch.setenv(OUTPUT_DIR_ENV, "from-env")
        assert str(resolve_output_dir(None, cfg)) == "from-env"
        assert str(resolve_output_dir("from-flag", cfg)) == "from-flag"
