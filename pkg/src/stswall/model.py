"""Physical model building blocks.

Uniform 1D grids, per-material coefficient models, multilayer wall
assemblies, nodal state fields, the saturation-pressure law, and the
boundary-forcing description consumed by the spatial operator.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError

# Saturation-pressure law P_sat(T) = 997.3 ((T - 159.5)/120.6)^8.275 [Pa],
# valid for T above the 159.5 K pole.
SATURATION_T_MIN_K = 159.5
_SATURATION_SCALE_PA = 997.3
_SATURATION_T_DIV_K = 120.6
_SATURATION_EXPONENT = 8.275

# Liquid-water constants used by the built-in dimensional materials.
RHO_WATER = 1000.0  # kg/m^3
C_WATER = 4180.0    # J/(kg K)


def saturation_pressure(temperature):
    """Saturation vapor pressure in Pa for a temperature in K.

    Accepts a scalar or an array; strictly increasing in temperature.
    Raises ``ValueError`` for any temperature at or below 159.5 K, where
    the power law leaves its domain.
    """
    t = np.asarray(temperature, dtype=float)
    if np.any(t <= SATURATION_T_MIN_K):
        raise ValueError(
            f"saturation_pressure requires T > {SATURATION_T_MIN_K} K, got {temperature!r}"
        )
    p = _SATURATION_SCALE_PA * ((t - SATURATION_T_MIN_K) / _SATURATION_T_DIV_K) ** _SATURATION_EXPONENT
    if np.isscalar(temperature) or np.ndim(temperature) == 0:
        return float(p)
    return p


CoefficientFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _const_fn(value: float) -> CoefficientFn:
    value = float(value)

    def fn(u, v):
        return np.full_like(np.asarray(v, dtype=float), value)

    return fn


def _poly_fn(coeffs: Sequence[float]) -> CoefficientFn:
    c = np.asarray(list(coeffs), dtype=float)

    def fn(u, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        for ck in c[::-1]:
            out = out * v + ck
        return out

    return fn


@dataclass(frozen=True)
class CoefficientModel:
    """Five transport/storage coefficients of one material as functions of (u, v).

    ``u`` is the temperature-like variable and ``v`` the moisture-like
    variable (dimensionless or physical depending on the case).  All five
    callables must be deterministic, side-effect free, and broadcast over
    numpy arrays.  ``constant`` marks state-independent models, which lets
    the operator cache face coefficients and detect linear problems.
    """

    name: str
    d_theta: CoefficientFn
    d_t: CoefficientFn
    c_t: CoefficientFn
    k_t: CoefficientFn
    k_tm: CoefficientFn
    constant: bool = False

    @classmethod
    def constants(cls, name, d_theta, d_t, c_t, k_t, k_tm) -> "CoefficientModel":
        vals = dict(d_theta=d_theta, d_t=d_t, c_t=c_t, k_t=k_t, k_tm=k_tm)
        for key, val in vals.items():
            if key == "c_t":
                if not val > 0:
                    raise ConfigError(f"material {name!r}: c_t must be positive, got {val}")
            elif val < 0:
                raise ConfigError(f"material {name!r}: {key} must be non-negative, got {val}")
        return cls(name=name, constant=True, **{k: _const_fn(x) for k, x in vals.items()})

    @classmethod
    def polynomials(cls, name, d_theta, d_t, c_t, k_t, k_tm) -> "CoefficientModel":
        """Build a model whose coefficients are polynomials in v.

        Each argument is either a scalar or a low-to-high coefficient list.
        """

        def build(spec):
            if np.ndim(spec) == 0:
                return _const_fn(float(spec))
            return _poly_fn(spec)

        all_const = all(np.ndim(s) == 0 for s in (d_theta, d_t, c_t, k_t, k_tm))
        return cls(
            name=name,
            d_theta=build(d_theta),
            d_t=build(d_t),
            c_t=build(c_t),
            k_t=build(k_t),
            k_tm=build(k_tm),
            constant=all_const,
        )

    def evaluate(self, u, v):
        """Return (d_theta, d_t, c_t, k_t, k_tm) at the given state."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        out = (self.d_theta(u, v), self.d_t(u, v), self.c_t(u, v),
               self.k_t(u, v), self.k_tm(u, v))
        if u.ndim == 0:
            return tuple(float(x) for x in out)
        return out


def builtin_material(name: str, rho2: float = RHO_WATER, c2: float = C_WATER) -> CoefficientModel:
    """Return one of the named built-in materials.

    ``table1_mat1``/``table1_mat2`` are the constant dimensionless pair used
    by the verification case; ``table3_re``/``table3_ins`` are the
    dimensional rammed-earth and glass-wool models (coefficients in SI
    units, moisture-dependent storage uses ``rho2*c2``).
    """
    key = name.lower()
    if key == "table1_mat1":
        return CoefficientModel.constants(name, 0.3, 2.1, 0.1, 0.5, 0.4)
    if key == "table1_mat2":
        return CoefficientModel.constants(name, 0.1, 3.2, 0.3, 0.2, 0.1)
    if key == "table3_re":
        return CoefficientModel.polynomials(
            name,
            d_theta=[1e-7 - 2.4e-9 * 0.1, 2.4e-9],   # 1e-7 + 2.4e-9 (v - 0.1)
            d_t=1e-10,
            c_t=[1730.0 * 648.0, rho2 * c2],
            k_t=[0.6, 5.0],
            k_tm=4e-18,
        )
    if key == "table3_ins":
        return CoefficientModel.polynomials(
            name,
            d_theta=1e-20,
            d_t=0.0,
            c_t=[146.0 * 840.0, rho2 * c2],
            k_t=0.4875,
            k_tm=1e-17,
        )
    raise ConfigError(f"unknown built-in material {name!r}")


@dataclass(frozen=True)
class Grid1D:
    """Uniform node set spanning [0, length]."""

    node_positions: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.node_positions, dtype=float)
        object.__setattr__(self, "node_positions", x)
        if x.ndim != 1 or x.size < 2:
            raise ConfigError("grid needs at least two nodes")
        dx = np.diff(x)
        if np.any(dx <= 0):
            raise ConfigError("grid nodes must be strictly increasing")
        h = dx[0]
        if np.max(np.abs(dx - h)) > 1e-12 * max(abs(h), 1e-300):
            raise ConfigError("grid must be uniform to 1e-12 relative tolerance")
        length = x[-1] - x[0]
        if abs(h * (x.size - 1) - length) > 1e-12 * length:
            raise ConfigError("spacing * (node_count - 1) must equal the domain length")

    @classmethod
    def uniform(cls, length: float, node_count: int) -> "Grid1D":
        if node_count < 2 or length <= 0:
            raise ConfigError("uniform grid needs length > 0 and at least two nodes")
        return cls(np.linspace(0.0, float(length), int(node_count)))

    @property
    def node_count(self) -> int:
        return int(self.node_positions.size)

    @property
    def spacing(self) -> float:
        return float(self.node_positions[1] - self.node_positions[0])

    @property
    def length(self) -> float:
        return float(self.node_positions[-1] - self.node_positions[0])


@dataclass(frozen=True)
class WallAssembly:
    """Ordered material layers with their thicknesses.

    ``interface_positions`` are the cumulative sums of the thicknesses of
    all but the last layer; a coordinate x belongs to the left layer when
    x <= x_int.
    """

    layers: tuple
    interface_positions: np.ndarray = field(init=False)
    total_length: float = field(init=False)

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("wall needs at least one layer")
        layers = tuple((model, float(th)) for model, th in self.layers)
        for model, th in layers:
            if not isinstance(model, CoefficientModel):
                raise ConfigError("each layer is a (CoefficientModel, thickness) pair")
            if th <= 0:
                raise ConfigError(f"layer {model.name!r} has non-positive thickness {th}")
        object.__setattr__(self, "layers", layers)
        cum = np.cumsum([th for _, th in layers])
        object.__setattr__(self, "interface_positions", cum[:-1])
        object.__setattr__(self, "total_length", float(cum[-1]))

    def layer_index(self, x: float, tol: float = 0.0) -> int:
        """Index of the layer owning coordinate x (x <= x_int maps left)."""
        if x < -tol or x > self.total_length + tol:
            raise ConfigError(f"x={x} outside the wall [0, {self.total_length}]")
        return bisect.bisect_left(self.interface_positions, x - tol)

    def node_layer_indices(self, grid: Grid1D) -> np.ndarray:
        tol = 1e-9 * grid.spacing
        return np.array([self.layer_index(x, tol) for x in grid.node_positions])

    def face_layer_indices(self, grid: Grid1D) -> np.ndarray:
        """Layer owning each open face interval (x_j, x_{j+1})."""
        x = grid.node_positions
        mids = 0.5 * (x[:-1] + x[1:])
        tol = 1e-9 * grid.spacing
        return np.array([self.layer_index(m, tol) for m in mids])


def build_wall(layer_specs) -> WallAssembly:
    """Assemble a wall from (CoefficientModel, thickness) pairs."""
    return WallAssembly(tuple(layer_specs))


def evaluate_coefficients(wall: WallAssembly, x: float, u, v):
    """Coefficients (d_theta, d_t, c_t, k_t, k_tm) of the layer owning x."""
    model, _ = wall.layers[wall.layer_index(float(x))]
    return model.evaluate(u, v)


@dataclass
class StateField:
    """Nodal values of the two fields at one time level."""

    u: np.ndarray
    v: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise ConfigError("u and v must be 1D arrays of equal length")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise ConfigError("state fields must be finite")

    def copy(self) -> "StateField":
        return StateField(self.u.copy(), self.v.copy(), self.time)


@dataclass(frozen=True)
class BiotSet:
    """Surface-exchange coefficients for one boundary."""

    m_sat: float = 0.0
    m_theta: float = 0.0
    t_t: float = 0.0
    t_sat: float = 0.0
    t_theta: float = 0.0
    t_g: float = 0.0

    def __post_init__(self):
        for name, val in self.as_dict().items():
            if not math.isfinite(val) or val < 0:
                raise ConfigError(f"Biot coefficient {name} must be finite and >= 0, got {val}")

    def as_dict(self) -> dict:
        return {
            "m_sat": self.m_sat, "m_theta": self.m_theta, "t_t": self.t_t,
            "t_sat": self.t_sat, "t_theta": self.t_theta, "t_g": self.t_g,
        }


TimeFn = Callable[[float], float]


def _zero(t: float) -> float:
    return 0.0


@dataclass(frozen=True)
class SideForcing:
    """Ambient data and closure kind for one boundary side.

    For ``kind='dirichlet'`` only ``u_inf``/``v_inf`` are used (the imposed
    surface values).  For ``kind='robin'`` the ambient functions feed the
    exchange terms; ``psat_star`` maps the surface u to the saturation
    ratio used by the sat-terms and may stay ``None`` while those terms
    have zero coefficient.
    """

    kind: str
    u_inf: TimeFn
    v_inf: TimeFn
    psat_inf: TimeFn = _zero
    g_inf: TimeFn = _zero
    flux_m: TimeFn = _zero   # additional moisture flux term
    flux_t: TimeFn = _zero   # additional heat flux term
    psat_star: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.kind not in ("robin", "dirichlet"):
            raise ConfigError(f"boundary kind must be 'robin' or 'dirichlet', got {self.kind!r}")

    @classmethod
    def dirichlet(cls, u_inf: TimeFn, v_inf: TimeFn) -> "SideForcing":
        return cls(kind="dirichlet", u_inf=u_inf, v_inf=v_inf)

    @classmethod
    def robin(cls, u_inf: TimeFn, v_inf: TimeFn, **kwargs) -> "SideForcing":
        return cls(kind="robin", u_inf=u_inf, v_inf=v_inf, **kwargs)


@dataclass(frozen=True)
class BoundaryForcing:
    left: SideForcing
    right: SideForcing

    def side(self, which: str) -> SideForcing:
        if which == "left":
            return self.left
        if which == "right":
            return self.right
        raise ConfigError(f"side must be 'left' or 'right', got {which!r}")
