"""Error norms, accuracy digits, scheme-comparison ratios, and the
moisture post-processing quantities (total content and drying rate).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .integrators import RunReport
from .model import Grid1D, StateField

SCD_CAP = 16.0

COMPARISON_COLUMNS = (
    "scheme", "dt", "N_t", "rho_Ndt_pct",
    "eps2_u", "eps2_v", "epsinf_u", "epsinf_v",
    "scd_u", "scd_v", "cpu_s", "rho_cpu_pct", "rho_cpu_day_s",
)


def error_norms(num, ref, dx: float):
    """(eps2, epsinf) between two nodal fields on spacing ``dx``.

    eps2 carries the quadrature weight sqrt(dx * sum d^2) so values are
    comparable across resolutions; epsinf is the raw maximum difference.
    """
    a = np.asarray(num, dtype=float)
    b = np.asarray(ref, dtype=float)
    if a.shape != b.shape:
        raise ConfigError(f"field shapes differ: {a.shape} vs {b.shape}")
    d = a - b
    eps2 = float(math.sqrt(dx * float(np.sum(d * d))))
    epsinf = float(np.max(np.abs(d))) if d.size else 0.0
    return eps2, epsinf


def state_error_norms(num: StateField, ref: StateField, grid: Grid1D):
    """Per-field norms of two states on the same grid and time.

    Returns ((eps2_u, epsinf_u), (eps2_v, epsinf_v)).
    """
    if num.u.size != grid.node_count or ref.u.size != grid.node_count:
        raise ConfigError("states do not match the grid")
    if abs(num.time - ref.time) > 1e-9 * max(1.0, abs(ref.time)):
        raise ConfigError(f"states are at different times: {num.time} vs {ref.time}")
    dx = grid.spacing
    return error_norms(num.u, ref.u, dx), error_norms(num.v, ref.v, dx)


def scd_value(epsinf: float, ref_norm: float) -> float:
    """Significant correct digits from a uniform error and reference norm."""
    if ref_norm == 0.0:
        raise ConfigError("scd needs a reference with non-zero uniform norm")
    err = epsinf / ref_norm
    if err == 0.0:
        return SCD_CAP
    return min(SCD_CAP, -math.log10(err))


def scd(num, ref) -> float:
    """Significant correct digits: -log10 of the relative uniform error.

    Capped at 16 for exact agreement; raises on an identically-zero
    reference.
    """
    a = np.asarray(num, dtype=float)
    b = np.asarray(ref, dtype=float)
    return scd_value(float(np.max(np.abs(a - b))), float(np.max(np.abs(b))))


@dataclass
class ComparisonRecord:
    """One row of the scheme-comparison table."""

    scheme: str
    dt: float
    n_t: int
    rho_ndt_pct: float
    eps2_u: Optional[float] = None
    eps2_v: Optional[float] = None
    epsinf_u: Optional[float] = None
    epsinf_v: Optional[float] = None
    scd_u: Optional[float] = None
    scd_v: Optional[float] = None
    cpu_s: float = 0.0
    rho_cpu_pct: float = 0.0
    rho_cpu_day_s: float = 0.0
    status: str = "ok"

    def row(self) -> list:
        def fmt(x):
            return "" if x is None else repr(float(x))
        return [
            self.scheme, repr(float(self.dt)), str(self.n_t), repr(float(self.rho_ndt_pct)),
            fmt(self.eps2_u), fmt(self.eps2_v), fmt(self.epsinf_u), fmt(self.epsinf_v),
            fmt(self.scd_u), fmt(self.scd_v),
            repr(float(self.cpu_s)), repr(float(self.rho_cpu_pct)), repr(float(self.rho_cpu_day_s)),
        ]


def ratios(
    report: RunReport,
    euler_report: RunReport,
    tau_days: float,
    reference: Optional[StateField] = None,
    grid: Optional[Grid1D] = None,
) -> ComparisonRecord:
    """Comparison record of a run against the Euler baseline.

    Step and CPU ratios come from executed step counts and marching-loop
    timings; error columns are filled when a reference state and grid are
    supplied.
    """
    if euler_report.n_steps <= 0 and report.n_steps > 0:
        raise ConfigError("Euler baseline has no steps")
    if abs(report.tau - euler_report.tau) > 1e-9 * max(1.0, euler_report.tau):
        raise ConfigError("runs cover different final times")
    rho_ndt = (100.0 * report.n_steps / euler_report.n_steps
               if euler_report.n_steps > 0 else 100.0)
    rec = ComparisonRecord(
        scheme=report.scheme,
        dt=report.dt,
        n_t=report.n_t,
        rho_ndt_pct=rho_ndt,
        cpu_s=report.cpu_s,
        rho_cpu_pct=(100.0 * report.cpu_s / euler_report.cpu_s
                     if euler_report.cpu_s > 0 else 0.0),
        rho_cpu_day_s=report.cpu_s / tau_days if tau_days > 0 else 0.0,
    )
    if reference is not None:
        if grid is None:
            raise ConfigError("a grid is required to compute error norms")
        (e2u, eiu), (e2v, eiv) = state_error_norms(report.final_state, reference, grid)
        rec.eps2_u, rec.epsinf_u = e2u, eiu
        rec.eps2_v, rec.epsinf_v = e2v, eiv
        rec.scd_u = scd(report.final_state.u, reference.u)
        rec.scd_v = scd(report.final_state.v, reference.v)
    return rec


def failure_record(scheme: str, dt: float, n_t: int, euler_report: Optional[RunReport]) -> ComparisonRecord:
    rho = 0.0
    if euler_report is not None and euler_report.n_steps > 0 and dt > 0:
        rho = 100.0 * (math.floor(euler_report.tau / dt) + 1) / euler_report.n_steps
    return ComparisonRecord(scheme=scheme, dt=dt, n_t=n_t, rho_ndt_pct=rho, status="failed")


def write_comparison_csv(records, path) -> None:
    """Comparison table with the fixed column order (failed rows keep
    their metric cells empty)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARISON_COLUMNS)
        for rec in records:
            row = rec.row()
            if rec.status != "ok":
                row = row[:4] + [""] * 9
            writer.writerow(row)


def total_moisture(state_or_v, grid: Grid1D, material_domain) -> float:
    """Trapezoidal integral of the moisture field over a node range.

    ``material_domain`` is an inclusive (first_node, last_node) pair.
    """
    v = state_or_v.v if isinstance(state_or_v, StateField) else np.asarray(state_or_v, dtype=float)
    a, b = material_domain
    if not (0 <= a < b < grid.node_count):
        raise ConfigError(f"empty or out-of-range material domain {material_domain}")
    seg = v[a:b + 1]
    return float(grid.spacing * (np.sum(seg) - 0.5 * (seg[0] + seg[-1])))


def drying_rate(times, totals):
    """Time derivative of a sampled total-moisture series.

    Centered differences at interior samples, one-sided at the ends.
    Returns an array aligned with ``times``.
    """
    t = np.asarray(times, dtype=float)
    q = np.asarray(totals, dtype=float)
    if t.ndim != 1 or t.size < 2 or t.shape != q.shape:
        raise ConfigError("drying_rate needs two aligned 1D series with >= 2 samples")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise ConfigError("sample times must be strictly increasing (no duplicates)")
    return np.gradient(q, t)
