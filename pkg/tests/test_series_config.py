import math
import textwrap

import numpy as np
import pytest

from stswall.config import CaseConfig, load_config, parse_duration, parse_time_function
from stswall.errors import ConfigError, IngestionError
from stswall.series import (
    ingest_boundary_series, synthetic_climate_values, write_synthetic_climate,
)


class TestIngestion:
    def write(self, tmp_path, text):
        path = tmp_path / "series.csv"
        path.write_text(textwrap.dedent(text))
        return path

    def test_linear_interpolation(self, tmp_path):
        path = self.write(tmp_path, """\
            t,val
            0,1
            1,2
        """)
        series = ingest_boundary_series(path)
        assert series.interpolator("val")(0.5) == pytest.approx(1.5)

    def test_single_row_rejected(self, tmp_path):
        path = self.write(tmp_path, """\
            t,val
            0,1
        """)
        with pytest.raises(IngestionError):
            ingest_boundary_series(path)

    def test_shuffled_rows_name_the_line(self, tmp_path):
        path = self.write(tmp_path, """\
            t,val
            0,1
            2,2
            1,3
        """)
        with pytest.raises(IngestionError, match="line 4"):
            ingest_boundary_series(path)

    def test_non_numeric_cell_names_the_line(self, tmp_path):
        path = self.write(tmp_path, """\
            t,val
            0,1
            1,abc
        """)
        with pytest.raises(IngestionError, match="line 3"):
            ingest_boundary_series(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = self.write(tmp_path, """\
            t,a,b
            0,1,2
            1,3
        """)
        with pytest.raises(IngestionError, match="line 3"):
            ingest_boundary_series(path)

    def test_missing_column(self, tmp_path):
        path = self.write(tmp_path, """\
            t,val
            0,1
            1,2
        """)
        with pytest.raises(IngestionError, match="no column"):
            ingest_boundary_series(path).interpolator("other")

    def test_span_check(self, tmp_path):
        path = self.write(tmp_path, """\
            t,val
            0,1
            10,2
        """)
        series = ingest_boundary_series(path)
        series.require_span(0.0, 10.0)
        with pytest.raises(IngestionError):
            series.require_span(0.0, 11.0)

    def test_comments_skipped(self, tmp_path):
        path = self.write(tmp_path, """\
            # a comment line
            t,val
            0,1
            1,2
        """)
        assert ingest_boundary_series(path).interpolator("val")(1.0) == 2.0


class TestSyntheticClimate:
    def test_bounds(self):
        t = np.linspace(0.0, 366 * 86400.0, 200_001)
        t_out, theta_out, t_in, theta_in = synthetic_climate_values(t)
        assert t_out.min() >= 271.0 - 1e-9 and t_out.max() <= 301.0 + 1e-9
        for theta in (theta_out, theta_in):
            assert theta.min() >= 0.25 - 1e-9
            assert theta.max() <= 0.53 + 1e-9

    def test_written_file_round_trips(self, tmp_path):
        path = tmp_path / "climate.csv"
        write_synthetic_climate(path, days=3.0, step_hours=2.0)
        series = ingest_boundary_series(path)
        assert set(series.columns) == {"T_out", "theta_out", "T_in", "theta_in"}
        series.require_span(0.0, 3 * 86400.0)
        assert "synthetic" in path.read_text().splitlines()[0]

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_synthetic_climate(a, days=2.0)
        write_synthetic_climate(b, days=2.0)
        assert a.read_bytes() == b.read_bytes()


class TestExpressions:
    def test_closed_form(self):
        fn = parse_time_function("1 + (3/5)*sin(2*pi*t/5)**2")
        assert fn(0.0) == pytest.approx(1.0)
        assert fn(1.25) == pytest.approx(1.6)

    def test_unknown_name_rejected(self):
        with pytest.raises(ConfigError):
            parse_time_function("__import__('os').system('true')")
        with pytest.raises(ConfigError):
            parse_time_function("open('x')")

    def test_syntax_error(self):
        with pytest.raises(ConfigError):
            parse_time_function("1 +")


class TestDurations:
    @pytest.mark.parametrize("text,expected", [
        ("365d", 365 * 86400.0), ("2h", 7200.0), ("30min", 1800.0),
        ("7200s", 7200.0), ("7200", 7200.0), (1.5, 1.5),
    ])
    def test_parse(self, text, expected):
        assert parse_duration(text) == expected


class TestConfigFile:
    def test_full_custom_case(self, tmp_path):
        series_path = tmp_path / "bc.csv"
        series_path.write_text("t,T_amb,theta_amb\n0,1.0,1.0\n100,1.2,1.1\n")
        cfg_path = tmp_path / "case.ini"
        cfg_path.write_text(textwrap.dedent("""\
            [case]
            kind = custom
            title = a two-material slab

            [grid]
            dx = 0.05

            [time]
            tau = 0.5
            dt_euler = 1e-4

            [schemes]
            run = euler, rkl
            ns_rkl = 8

            [groups]
            fo_m = 0.09
            fo_t = 0.07
            gamma = 0.07
            delta = 0.05

            [biot.left]
            m_theta = 25.5
            t_t = 50.5
            t_theta = 0.496

            [materials]
            names = m1, m2
            m1 = table1_mat1
            m2.d_theta = 0.2
            m2.d_t = 1.0, 0.5
            m2.c_t = 0.3
            m2.k_t = 0.2
            m2.k_tm = 0.1

            [wall]
            layers = m1:0.6, m2:0.4

            [initial]
            u = 1.0
            v = 1.0, 0.8

            [forcing.left]
            kind = robin
            u = 1 + 0.5*sin(2*pi*t/3)**2
            v = 1.0

            [forcing.right]
            kind = dirichlet
            series = bc.csv
            u = T_amb
            v = theta_amb
        """))
        cfg = load_config(cfg_path)
        assert cfg.kind == "custom"
        assert cfg.dx == 0.05
        assert cfg.schemes == ["euler", "rkl"]
        assert cfg.ns["rkl"] == 8
        assert cfg.groups.biot_left.m_theta == 25.5
        assert cfg.groups.biot_right.m_theta == 0.0
        assert [name for name, _ in cfg.layers] == ["m1", "m2"]
        assert cfg.initial_v == [1.0, 0.8]
        # builtin and polynomial materials
        assert cfg.materials["m1"].evaluate(1, 1)[0] == pytest.approx(0.3)
        assert cfg.materials["m2"].evaluate(1.0, 0.5)[1] == pytest.approx(1.0 + 0.5 * 0.5)
        # closed-form and series-backed forcing
        assert cfg.forcing_left.u_inf(0.75) == pytest.approx(1.5)
        assert cfg.forcing_right.kind == "dirichlet"
        assert cfg.forcing_right.u_inf(50.0) == pytest.approx(1.1)

    def test_missing_case_section(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[grid]\ndx = 0.1\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_unknown_scheme_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(textwrap.dedent("""\
            [case]
            kind = custom
            [schemes]
            run = euler, leapfrog
            [groups]
            fo_m = 1.0
            fo_t = 1.0
            [materials]
            m1 = table1_mat1
            [wall]
            layers = m1:1.0
        """))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_layer_with_unknown_material(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(textwrap.dedent("""\
            [case]
            kind = custom
            [groups]
            fo_m = 1.0
            fo_t = 1.0
            [materials]
            m1 = table1_mat1
            [wall]
            layers = m2:1.0
        """))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_validate_catches_bad_values(self):
        cfg = CaseConfig(kind="verification")
        cfg.materials = {"m": None}
        cfg.layers = [("m", 1.0)]
        cfg.dx = -1.0
        with pytest.raises(ConfigError):
            cfg.validate()
