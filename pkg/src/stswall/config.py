"""Case configuration: typed container plus the flat INI file format.

The file format uses section headers and ``key = value`` pairs
(`configparser` syntax).  Closed-form boundary forcing is written as an
expression in ``t`` using the functions sin/cos/tan/exp/sqrt/log and the
constant pi; series-backed forcing names a CSV path and columns.  The
full schema is documented in the README.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field as dc_field
from typing import Optional

from .dimensionless import DimensionlessGroups
from .errors import ConfigError
from .model import BiotSet, CoefficientModel, SideForcing, builtin_material
from .series import ingest_boundary_series

_EXPR_NAMES = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "exp": math.exp, "sqrt": math.sqrt, "log": math.log,
    "abs": abs, "pi": math.pi,
}

_DURATION_UNITS = {"s": 1.0, "min": 60.0, "h": 3600.0, "d": 86400.0}


def parse_time_function(expr: str):
    """Compile a closed-form forcing expression of ``t`` into a callable."""
    try:
        code = compile(expr, "<forcing>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad forcing expression {expr!r}: {exc}") from None
    for name in code.co_names:
        if name != "t" and name not in _EXPR_NAMES:
            raise ConfigError(f"forcing expression {expr!r} uses unknown name {name!r}")
    namespace = dict(_EXPR_NAMES)

    def fn(t: float) -> float:
        namespace["t"] = t
        return float(eval(code, {"__builtins__": {}}, namespace))

    fn.expression = expr
    return fn


def parse_duration(text, default_unit: str = "s") -> float:
    """Seconds from a duration literal like '365d', '2h', '30min', '7200'."""
    if isinstance(text, (int, float)):
        return float(text) * _DURATION_UNITS[default_unit]
    s = str(text).strip().lower()
    for unit in ("min", "d", "h", "s"):
        if s.endswith(unit):
            return float(s[: -len(unit)]) * _DURATION_UNITS[unit]
    return float(s) * _DURATION_UNITS[default_unit]


def _float_list(text) -> list:
    return [float(tok) for tok in str(text).replace(";", ",").split(",") if tok.strip()]


def _str_list(text) -> list:
    return [tok.strip() for tok in str(text).split(",") if tok.strip()]


@dataclass
class CaseConfig:
    """Everything a case runner needs, with a plain-data mirror for the manifest."""

    kind: str
    title: str = ""
    dx: float = 0.01
    tau: float = 1.0
    tau_days: float = 1.0
    schemes: list = dc_field(default_factory=lambda: ["euler", "df", "rkc", "rkl"])
    ns: dict = dc_field(default_factory=lambda: {"rkc": 10, "rkl": 20})
    damping_rkc: float = 0.0
    dt_euler: Optional[float] = None      # None: derive from the operator estimate
    dt_df: Optional[float] = None
    dt_exp_base: Optional[float] = None   # schedule base; None: operator estimate
    groups: Optional[DimensionlessGroups] = None
    materials: dict = dc_field(default_factory=dict)
    layers: list = dc_field(default_factory=list)          # (material name, thickness)
    initial_u: object = 1.0                                 # scalar or per-layer list
    initial_v: object = 1.0
    forcing_left: Optional[SideForcing] = None
    forcing_right: Optional[SideForcing] = None
    admissible_box: Optional[tuple] = None
    sample_every: int = 0
    dump_matrix: bool = False
    reference_check: bool = True
    stage_forcing: str = "frozen"       # super-step cycles: "frozen" | "stage"
    df_forcing_time: str = "base"       # Du Fort-Frankel: "base" | "midpoint"
    sweep_ns: list = dc_field(default_factory=lambda: [10, 20, 40, 80])
    sweep_schemes: list = dc_field(default_factory=lambda: ["rkc", "rkl"])
    physical_configurations: list = dc_field(default_factory=lambda: ["ins_re", "re_ins", "re"])
    drying_scheme: str = "rkl"
    climate_path: Optional[str] = None    # None: write the synthetic series
    step_count_horizon_days: float = 365.0
    rho2: float = 1000.0
    c2: float = 4180.0
    latent_heat: float = 2.5e6
    description: dict = dc_field(default_factory=dict)

    def validate(self) -> None:
        if self.kind not in ("verification", "physical", "custom"):
            raise ConfigError(f"unknown case kind {self.kind!r}")
        if self.tau < 0:
            raise ConfigError("tau must be >= 0")
        if self.dx <= 0:
            raise ConfigError("dx must be positive")
        known = {"euler", "df", "rkc", "rkl"}
        for s in self.schemes:
            if s not in known:
                raise ConfigError(f"unknown scheme {s!r}; choose from {sorted(known)}")
        if not self.layers:
            raise ConfigError("wall needs at least one layer")
        for name, _ in self.layers:
            if name not in self.materials:
                raise ConfigError(f"layer references unknown material {name!r}")


def _parse_material(section_values: dict, name: str, rho2: float, c2: float) -> CoefficientModel:
    keys = ("d_theta", "d_t", "c_t", "k_t", "k_tm")
    spec = {}
    for key in keys:
        raw = section_values.get(f"{name}.{key}")
        if raw is None:
            raise ConfigError(f"material {name!r} is missing coefficient {key}")
        vals = _float_list(raw)
        spec[key] = vals[0] if len(vals) == 1 else vals
    return CoefficientModel.polynomials(name, **spec)


def _parse_forcing(cp: configparser.ConfigParser, section: str, base_dir) -> SideForcing:
    if not cp.has_section(section):
        raise ConfigError(f"missing [{section}] section")
    sec = cp[section]
    kind = sec.get("kind", "robin").strip().lower()
    series = None
    if "series" in sec:
        path = sec["series"].strip()
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        series = ingest_boundary_series(path)

    def value_fn(key, default_expr="0"):
        raw = sec.get(key)
        if raw is None:
            return parse_time_function(default_expr)
        raw = raw.strip()
        if series is not None and raw in series.columns:
            return series.interpolator(raw)
        return parse_time_function(raw)

    u_fn = value_fn("u", "1")
    v_fn = value_fn("v", "1")
    if kind == "dirichlet":
        return SideForcing.dirichlet(u_fn, v_fn)
    return SideForcing.robin(
        u_fn, v_fn,
        psat_inf=value_fn("psat_inf"),
        g_inf=value_fn("g_inf"),
        flux_m=value_fn("flux_m"),
        flux_t=value_fn("flux_t"),
    )


def _parse_biot(cp: configparser.ConfigParser, section: str) -> BiotSet:
    if not cp.has_section(section):
        return BiotSet()
    sec = cp[section]
    return BiotSet(**{key: sec.getfloat(key, 0.0) for key in
                      ("m_sat", "m_theta", "t_t", "t_sat", "t_theta", "t_g")})


def load_config(path) -> CaseConfig:
    """Parse an INI case file into a :class:`CaseConfig`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    base_dir = os.path.dirname(os.path.abspath(path))
    if not cp.has_section("case"):
        raise ConfigError("config needs a [case] section")
    kind = cp["case"].get("kind", "custom").strip().lower()
    cfg = CaseConfig(kind=kind, title=cp["case"].get("title", "").strip())

    is_physical_time = kind == "physical"
    if cp.has_section("grid"):
        cfg.dx = cp["grid"].getfloat("dx", cfg.dx)
    if cp.has_section("time"):
        sec = cp["time"]
        unit = "s"
        if "tau" in sec:
            cfg.tau = parse_duration(sec["tau"], unit)
        if "dt_euler" in sec:
            cfg.dt_euler = parse_duration(sec["dt_euler"], unit)
        if "dt_df" in sec:
            cfg.dt_df = parse_duration(sec["dt_df"], unit)
        if "dt_exp" in sec and sec["dt_exp"].strip().lower() != "auto":
            cfg.dt_exp_base = parse_duration(sec["dt_exp"], unit)
        cfg.tau_days = cfg.tau / 86400.0 if is_physical_time else cfg.tau
    if cp.has_section("schemes"):
        sec = cp["schemes"]
        if "run" in sec:
            cfg.schemes = _str_list(sec["run"])
        cfg.ns = {
            "rkc": sec.getint("ns_rkc", cfg.ns["rkc"]),
            "rkl": sec.getint("ns_rkl", cfg.ns["rkl"]),
        }
        cfg.damping_rkc = sec.getfloat("damping_rkc", cfg.damping_rkc)
    if cp.has_section("constants"):
        sec = cp["constants"]
        cfg.rho2 = sec.getfloat("rho2", cfg.rho2)
        cfg.c2 = sec.getfloat("c2", cfg.c2)
        cfg.latent_heat = sec.getfloat("latent_heat", cfg.latent_heat)

    if cp.has_section("groups"):
        sec = cp["groups"]
        cfg.groups = DimensionlessGroups(
            fo_m=sec.getfloat("fo_m", 1.0),
            fo_t=sec.getfloat("fo_t", 1.0),
            gamma=sec.getfloat("gamma", 0.0),
            delta=sec.getfloat("delta", 0.0),
            alpha=sec.getfloat("alpha", 0.0),
            biot_left=_parse_biot(cp, "biot.left"),
            biot_right=_parse_biot(cp, "biot.right"),
        )

    if cp.has_section("materials"):
        sec = dict(cp["materials"])
        names = _str_list(sec.get("names", ""))
        if not names:
            names = sorted({key.split(".")[0] for key in sec if key != "names"})
        for name in names:
            if name in sec and "." not in name:
                cfg.materials[name] = builtin_material(sec[name].strip(), cfg.rho2, cfg.c2)
            else:
                cfg.materials[name] = _parse_material(sec, name, cfg.rho2, cfg.c2)
    if cp.has_section("wall"):
        for token in _str_list(cp["wall"].get("layers", "")):
            name, _, thick = token.partition(":")
            if not thick:
                raise ConfigError(f"layer token {token!r} must look like name:thickness")
            cfg.layers.append((name.strip(), float(thick)))
    if cp.has_section("initial"):
        sec = cp["initial"]
        for key, attr in (("u", "initial_u"), ("v", "initial_v")):
            if key in sec:
                vals = _float_list(sec[key])
                setattr(cfg, attr, vals[0] if len(vals) == 1 else vals)
    if cp.has_section("forcing.left"):
        cfg.forcing_left = _parse_forcing(cp, "forcing.left", base_dir)
    if cp.has_section("forcing.right"):
        cfg.forcing_right = _parse_forcing(cp, "forcing.right", base_dir)
    if cp.has_section("output"):
        sec = cp["output"]
        cfg.sample_every = sec.getint("sample_every", cfg.sample_every)
        cfg.dump_matrix = sec.getboolean("dump_matrix", cfg.dump_matrix)
    if cp.has_section("sweep"):
        sec = cp["sweep"]
        if "ns" in sec:
            cfg.sweep_ns = [int(x) for x in _float_list(sec["ns"])]
        if "schemes" in sec:
            cfg.sweep_schemes = _str_list(sec["schemes"])
    if cp.has_section("physical"):
        sec = cp["physical"]
        if "configurations" in sec:
            cfg.physical_configurations = _str_list(sec["configurations"])
        cfg.drying_scheme = sec.get("drying_scheme", cfg.drying_scheme).strip()
        climate = sec.get("climate", "").strip()
        cfg.climate_path = None if climate in ("", "synthetic") else climate
    if cp.has_section("box"):
        sec = cp["box"]
        cfg.admissible_box = (
            sec.getfloat("u_min"), sec.getfloat("u_max"),
            sec.getfloat("v_min"), sec.getfloat("v_max"),
        )

    cfg.description = {"source": str(path), "kind": kind, "title": cfg.title}
    if kind in ("verification", "physical"):
        cfg.validate()
    else:
        if cfg.groups is None:
            raise ConfigError("custom cases need a [groups] section")
        cfg.validate()
    return cfg
