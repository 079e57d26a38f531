"""Boundary time series: CSV ingestion, linear interpolation, and the
synthetic annual climate shipped for the drying study.

The climate file is *synthetic* (the measured data behind the original
drying study are not public): temperature is a sinusoidal annual cycle
plus a diurnal ripple between 271 K and 301 K, and the surface moisture
content follows an annual cycle between 0.25 and 0.53 derived from a
relative-humidity-like seasonal swing.  The generator is deterministic.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import IngestionError

DAY_S = 86400.0
YEAR_S = 365.0 * DAY_S

SYNTHETIC_COLUMNS = ("t_s", "T_out", "theta_out", "T_in", "theta_in")


@dataclass(frozen=True)
class BoundarySeries:
    """Strictly increasing sample times plus named value columns."""

    time: np.ndarray
    columns: dict

    @property
    def span(self) -> tuple:
        return float(self.time[0]), float(self.time[-1])

    def require_span(self, t0: float, t1: float) -> None:
        lo, hi = self.span
        if lo > t0 + 1e-9 or hi < t1 - 1e-9:
            raise IngestionError(
                f"series spans [{lo:g}, {hi:g}] but the run needs [{t0:g}, {t1:g}]"
            )

    def interpolator(self, name: str):
        """Linear interpolant of one column as a callable of time."""
        if name not in self.columns:
            raise IngestionError(f"series has no column {name!r}; has {sorted(self.columns)}")
        t = self.time
        y = self.columns[name]

        def fn(at: float) -> float:
            return float(np.interp(at, t, y))

        return fn


def ingest_boundary_series(path) -> BoundarySeries:
    """Read and validate a headered CSV time series.

    The first column is time; remaining columns are named quantities.
    Lines starting with '#' are comments.  Raises
    :class:`~stswall.errors.IngestionError` with a 1-based line number for
    non-numeric cells, ragged rows, or non-monotone time.
    """
    rows = []
    header = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or (raw[0].lstrip().startswith("#")):
                continue
            if header is None:
                header = [c.strip() for c in raw]
                if len(header) < 2:
                    raise IngestionError(f"{path}: line {lineno}: need a time column plus data columns")
                continue
            if len(raw) != len(header):
                raise IngestionError(
                    f"{path}: line {lineno}: expected {len(header)} cells, got {len(raw)}"
                )
            try:
                rows.append((lineno, [float(c) for c in raw]))
            except ValueError as exc:
                raise IngestionError(f"{path}: line {lineno}: non-numeric cell ({exc})") from None
    if header is None:
        raise IngestionError(f"{path}: no header row found")
    if len(rows) < 2:
        raise IngestionError(f"{path}: need at least two data rows, got {len(rows)}")
    data = np.array([vals for _, vals in rows])
    t = data[:, 0]
    for i in range(1, t.size):
        if t[i] <= t[i - 1]:
            raise IngestionError(
                f"{path}: line {rows[i][0]}: time {t[i]:g} not greater than previous {t[i-1]:g}"
            )
    columns = {name: data[:, k].copy() for k, name in enumerate(header[1:], start=1)}
    return BoundarySeries(time=t.copy(), columns=columns)


def synthetic_climate_values(t_s):
    """Synthetic boundary values at time(s) t_s seconds after installation.

    Returns (T_out, theta_out, T_in, theta_in).  Installation is set at
    midsummer: the exterior starts warm and dry and turns cold and wet in
    winter; the interior is near-constant and moderately humid.  The
    exterior surface is the dominant drying route (its moisture level sits
    well below the interior one through the first season), which is what
    makes an exterior insulation layer the drying bottleneck.
    """
    t = np.asarray(t_s, dtype=float)
    # Midsummer installation: the exterior is warmest and driest at t = 0
    # and coldest and wettest in midwinter.
    annual = np.cos(2.0 * np.pi * t / YEAR_S)
    diurnal = np.cos(2.0 * np.pi * t / DAY_S)
    t_out = 286.0 + 12.0 * annual + 3.0 * diurnal
    theta_out = 0.35 - 0.10 * annual
    t_in = 293.0 + 2.0 * annual
    # Indoor humidity of the unoccupied new build: holds near the wall's own
    # construction level through the warm season, then falls to its
    # ventilated autumn level around day 80 (the quartic shoulder keeps the
    # drop smooth but late).
    theta_in = 0.31 + 0.22 * np.exp(-((t / (80.0 * DAY_S)) ** 4))
    return t_out, theta_out, t_in, theta_in


def write_synthetic_climate(path, days: float = 366.0, step_hours: float = 1.0) -> None:
    """Write the synthetic climate CSV covering [0, days]."""
    n = int(math.floor(days * 24.0 / step_hours)) + 1
    t = np.arange(n) * step_hours * 3600.0
    t_out, theta_out, t_in, theta_in = synthetic_climate_values(t)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# synthetic annual climate (not measured data); hourly samples\n")
        writer = csv.writer(fh)
        writer.writerow(SYNTHETIC_COLUMNS)
        for k in range(n):
            writer.writerow([
                f"{t[k]:.1f}", f"{t_out[k]:.6f}", f"{theta_out[k]:.8f}",
                f"{t_in[k]:.6f}", f"{theta_in[k]:.8f}",
            ])
