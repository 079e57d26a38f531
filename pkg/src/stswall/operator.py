"""Semi-discrete spatial operator for the coupled two-field system.

Conservative second-order flux differencing on a uniform grid with
harmonic-mean face coefficients.  Interfaces must sit on grid nodes; the
interface node balances one-sided fluxes from each neighbouring layer and
averages the two storage coefficients over its half-cells.  Robin
boundaries enter through finite-volume half-cells, Dirichlet boundaries
are imposed strongly (node values overwritten each stage by the
integrators).

Sign convention for Robin exchange: the published closure expression
(see :func:`apply_robin_closure`) measures the surface *excess* over the
ambient.  A positive excess must drive the state back toward the ambient,
so the operator applies the exchange terms with inflow orientation
(ambient minus surface); the additional flux terms and the absorbed
radiation keep their printed sign and act as inflow (heating/wetting
positive).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dimensionless import DimensionlessGroups
from .errors import AssemblyError, ConfigError
from .model import BoundaryForcing, Grid1D, SideForcing, StateField, WallAssembly

SourceFn = Callable[[np.ndarray, float], np.ndarray]


def _harmonic(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Coefficients are non-negative; the offset only guards the 0/0 case
    # and is absorbed exactly for any normal-range sum.
    return 2.0 * a * b / (a + b + 1e-300)


@dataclass(frozen=True)
class StabilityEstimate:
    """Gershgorin bound on the stiffest decay rate and the resulting step limit."""

    lambda_max: float
    lambda_min: float = 0.0
    dt_exp: float = 0.0

    def __post_init__(self):
        if self.lambda_min < 0 or self.lambda_max < self.lambda_min:
            raise ConfigError("need 0 <= lambda_min <= lambda_max")
        expected = math.inf if self.lambda_max == 0 else 2.0 / self.lambda_max
        if self.dt_exp != expected:
            object.__setattr__(self, "dt_exp", expected)


class SemiDiscreteOperator:
    """Right-hand side of the semi-discrete system plus stability helpers.

    The assembled object is immutable apart from ``rhs_evals``; create one
    operator per run when marching concurrently.
    """

    def __init__(
        self,
        wall: WallAssembly,
        grid: Grid1D,
        groups: DimensionlessGroups,
        forcing: BoundaryForcing,
        source_u: Optional[SourceFn] = None,
        source_v: Optional[SourceFn] = None,
        admissible_box: Optional[tuple] = None,
    ):
        self.wall = wall
        self.grid = grid
        self.groups = groups
        self.forcing = forcing
        self.source_u = source_u
        self.source_v = source_v
        self.admissible_box = admissible_box
        self.rhs_evals = 0

        x = grid.node_positions
        self.n = grid.node_count
        self.dx = grid.spacing
        if abs(wall.total_length - grid.length) > 1e-9 * wall.total_length:
            raise AssemblyError(
                f"grid length {grid.length} does not cover the wall length {wall.total_length}"
            )
        tol = 1e-9 * self.dx
        self._interface_nodes = []
        for x_int in wall.interface_positions:
            j = int(round(x_int / self.dx))
            if j <= 0 or j >= self.n - 1 or abs(x[j] - x_int) > tol:
                raise AssemblyError(
                    f"interface at x={x_int} does not coincide with an interior grid node"
                )
            self._interface_nodes.append(j)

        self._node_layer = wall.node_layer_indices(grid)
        self._face_layer = wall.face_layer_indices(grid)
        # Contiguous face runs per layer: list of (face_start, face_stop, model).
        self._face_runs = []
        start = 0
        for f in range(1, self.n - 1):
            if self._face_layer[f] != self._face_layer[start]:
                self._face_runs.append((start, f, wall.layers[self._face_layer[start]][0]))
                start = f
        self._face_runs.append((start, self.n - 1, wall.layers[self._face_layer[start]][0]))

        self._node_runs = []
        start = 0
        for j in range(1, self.n):
            if self._node_layer[j] != self._node_layer[start]:
                self._node_runs.append((start, j, wall.layers[self._node_layer[start]][0]))
                start = j
        self._node_runs.append((start, self.n, wall.layers[self._node_layer[start]][0]))

        self._all_constant = all(model.constant for model, _ in wall.layers)
        self._coeff_cache = None
        self._matrix_cache = None
        self._rowsum_cache = None

        for side in ("left", "right"):
            sf = forcing.side(side)
            biot = self._biot(side)
            if sf.kind == "robin" and (biot.m_sat > 0 or biot.t_sat > 0) and sf.psat_star is None:
                raise ConfigError(
                    f"{side} side uses saturation exchange terms but has no psat_star function"
                )

    # -- geometry / classification -------------------------------------------------

    @property
    def x_nodes(self) -> np.ndarray:
        return self.grid.node_positions

    def _biot(self, side: str):
        return self.groups.biot_left if side == "left" else self.groups.biot_right

    @property
    def is_linear(self) -> bool:
        """True when the state Jacobian is constant (coefficients and exchange)."""
        if not self._all_constant:
            return False
        for side in ("left", "right"):
            sf = self.forcing.side(side)
            biot = self._biot(side)
            if sf.kind == "robin" and (biot.m_sat > 0 or biot.t_sat > 0):
                return False
        return True

    # -- coefficients ---------------------------------------------------------------

    def _coefficients(self, u: np.ndarray, v: np.ndarray):
        """Face transport coefficients and nodal storage at the given state."""
        if self._all_constant and self._coeff_cache is not None:
            return self._coeff_cache
        nf = self.n - 1
        d_th = np.empty(nf)
        d_t = np.empty(nf)
        k_t = np.empty(nf)
        k_tm = np.empty(nf)
        for f0, f1, model in self._face_runs:
            uu = u[f0:f1 + 1]
            vv = v[f0:f1 + 1]
            a_dth = model.d_theta(uu, vv)
            a_dt = model.d_t(uu, vv)
            a_kt = model.k_t(uu, vv)
            a_ktm = model.k_tm(uu, vv)
            d_th[f0:f1] = _harmonic(a_dth[:-1], a_dth[1:])
            d_t[f0:f1] = _harmonic(a_dt[:-1], a_dt[1:])
            k_t[f0:f1] = _harmonic(a_kt[:-1], a_kt[1:])
            k_tm[f0:f1] = _harmonic(a_ktm[:-1], a_ktm[1:])
        c = np.empty(self.n)
        for n0, n1, model in self._node_runs:
            c[n0:n1] = model.c_t(u[n0:n1], v[n0:n1])
        for j in self._interface_nodes:
            left_model = self.wall.layers[self._node_layer[j]][0]
            right_model = self.wall.layers[self._node_layer[j] + 1][0]
            c[j] = 0.5 * (float(left_model.c_t(u[j], v[j])) + float(right_model.c_t(u[j], v[j])))
        coeffs = (d_th, d_t, k_t, k_tm, c)
        if self._all_constant:
            self._coeff_cache = coeffs
        return coeffs

    # -- boundary closure -----------------------------------------------------------

    def _exchange(self, side: str, u_b: float, v_b: float, t: float):
        return _exchange_terms(self._biot(side), self.forcing.side(side), u_b, v_b, t)

    def _inflow(self, side: str, u_b: float, v_b: float, t: float):
        """Boundary exchange oriented as inflow (drives state toward ambient)."""
        sf = self.forcing.side(side)
        biot = self._biot(side)
        e_m, e_t = _exchange_terms(biot, sf, u_b, v_b, t)
        s_m, s_t = _source_terms(biot, sf, self.groups.alpha, t)
        return s_m - e_m, s_t - e_t

    # -- right-hand side ------------------------------------------------------------

    def rhs(self, t: float, u: np.ndarray, v: np.ndarray):
        """Time derivatives (du/dt, dv/dt) at state (u, v) and time t."""
        self.rhs_evals += 1
        g = self.groups
        dx = self.dx
        d_th, d_t, k_t, k_tm, c = self._coefficients(u, v)
        grad_u = (u[1:] - u[:-1]) / dx
        grad_v = (v[1:] - v[:-1]) / dx
        q_m = d_th * grad_v + g.gamma * d_t * grad_u
        q_t = k_t * grad_u + g.delta * k_tm * grad_v

        du_dt = np.empty_like(u)
        dv_dt = np.empty_like(v)
        dv_dt[1:-1] = g.fo_m * (q_m[1:] - q_m[:-1]) / dx
        du_dt[1:-1] = g.fo_t * (q_t[1:] - q_t[:-1]) / (dx * c[1:-1])

        if self.forcing.left.kind == "robin":
            phi_m, phi_t = self._inflow("left", u[0], v[0], t)
            dv_dt[0] = g.fo_m * (q_m[0] + phi_m) * 2.0 / dx
            du_dt[0] = g.fo_t * (q_t[0] + phi_t) * 2.0 / (dx * c[0])
        else:
            dv_dt[0] = 0.0
            du_dt[0] = 0.0
        if self.forcing.right.kind == "robin":
            phi_m, phi_t = self._inflow("right", u[-1], v[-1], t)
            dv_dt[-1] = g.fo_m * (phi_m - q_m[-1]) * 2.0 / dx
            du_dt[-1] = g.fo_t * (phi_t - q_t[-1]) * 2.0 / (dx * c[-1])
        else:
            dv_dt[-1] = 0.0
            du_dt[-1] = 0.0

        if self.source_u is not None:
            du_dt += self.source_u(self.x_nodes, t)
        if self.source_v is not None:
            dv_dt += self.source_v(self.x_nodes, t)
        if self.forcing.left.kind == "dirichlet":
            du_dt[0] = dv_dt[0] = 0.0
        if self.forcing.right.kind == "dirichlet":
            du_dt[-1] = dv_dt[-1] = 0.0
        return du_dt, dv_dt

    def rhs_vector(self, t: float, y: np.ndarray) -> np.ndarray:
        """Stacked-form RHS on y = [u; v], mainly for tests and oracles."""
        n = self.n
        du, dv = self.rhs(t, y[:n], y[n:])
        return np.concatenate([du, dv])

    def apply_constraints(self, t: float, u: np.ndarray, v: np.ndarray) -> None:
        """Overwrite Dirichlet nodes with the imposed values at time t."""
        if self.forcing.left.kind == "dirichlet":
            u[0] = self.forcing.left.u_inf(t)
            v[0] = self.forcing.left.v_inf(t)
        if self.forcing.right.kind == "dirichlet":
            u[-1] = self.forcing.right.u_inf(t)
            v[-1] = self.forcing.right.v_inf(t)

    # -- frozen-coefficient matrix ----------------------------------------------------

    def _exchange_jacobian(self, side: str, u_b: float, v_b: float, t: float):
        """(dE_M/du, dE_M/dv, dE_T/du, dE_T/dv) of the exchange terms."""
        biot = self._biot(side)
        de_m_du = 0.0
        de_t_du = biot.t_t
        if biot.m_sat > 0 or biot.t_sat > 0:
            sf = self.forcing.side(side)
            h = 1e-6 * max(abs(u_b), 1.0)
            dsat = (_sat_excess(biot, sf, u_b + h, t) - _sat_excess(biot, sf, u_b - h, t)) / (2 * h)
            de_m_du += biot.m_sat * dsat
            de_t_du += biot.t_sat * dsat
        return de_m_du, biot.m_theta, de_t_du, biot.t_theta

    def frozen_matrix(self, t: float = 0.0, state: Optional[StateField] = None) -> np.ndarray:
        """Dense matrix A with rhs ~= -A y + b(t), coefficients frozen at ``state``.

        Row/column order is [u_0..u_{N-1}, v_0..v_{N-1}].  For linear
        operators the matrix is exact and cached.
        """
        if self.is_linear and self._matrix_cache is not None:
            return self._matrix_cache
        n = self.n
        if state is None:
            u = np.ones(n)
            v = np.ones(n)
        else:
            u, v = state.u, state.v
        g = self.groups
        dx = self.dx
        d_th, d_t, k_t, k_tm, c = self._coefficients(u, v)

        a = np.zeros((2 * n, 2 * n))
        iu = np.arange(n)
        iv = iu + n
        # Interior rows: flux divergence of the two-coefficient fluxes.
        j = np.arange(1, n - 1)
        fm = j - 1   # face j-1/2
        fp = j       # face j+1/2
        cm = 1.0 / (dx * dx)
        # v-equation rows
        a[iv[j], iv[j - 1]] = -g.fo_m * d_th[fm] * cm
        a[iv[j], iv[j + 1]] = -g.fo_m * d_th[fp] * cm
        a[iv[j], iv[j]] = g.fo_m * (d_th[fm] + d_th[fp]) * cm
        a[iv[j], iu[j - 1]] = -g.fo_m * g.gamma * d_t[fm] * cm
        a[iv[j], iu[j + 1]] = -g.fo_m * g.gamma * d_t[fp] * cm
        a[iv[j], iu[j]] = g.fo_m * g.gamma * (d_t[fm] + d_t[fp]) * cm
        # u-equation rows
        cu = g.fo_t * cm / c[j]
        a[iu[j], iu[j - 1]] = -k_t[fm] * cu
        a[iu[j], iu[j + 1]] = -k_t[fp] * cu
        a[iu[j], iu[j]] = (k_t[fm] + k_t[fp]) * cu
        a[iu[j], iv[j - 1]] = -g.delta * k_tm[fm] * cu
        a[iu[j], iv[j + 1]] = -g.delta * k_tm[fp] * cu
        a[iu[j], iv[j]] = g.delta * (k_tm[fm] + k_tm[fp]) * cu

        for side, b in (("left", 0), ("right", n - 1)):
            sf = self.forcing.side(side)
            if sf.kind == "dirichlet":
                a[iu[b], :] = 0.0
                a[iv[b], :] = 0.0
                continue
            f = 0 if side == "left" else n - 2
            nb = 1 if side == "left" else n - 2
            de_m_du, de_m_dv, de_t_du, de_t_dv = self._exchange_jacobian(side, u[b], v[b], t)
            w_m = g.fo_m * 2.0 / dx
            w_t = g.fo_t * 2.0 / (dx * c[b])
            a[iv[b], iv[b]] = w_m * (d_th[f] / dx + de_m_dv)
            a[iv[b], iv[nb]] = -w_m * d_th[f] / dx
            a[iv[b], iu[b]] = w_m * (g.gamma * d_t[f] / dx + de_m_du)
            a[iv[b], iu[nb]] = -w_m * g.gamma * d_t[f] / dx
            a[iu[b], iu[b]] = w_t * (k_t[f] / dx + de_t_du)
            a[iu[b], iu[nb]] = -w_t * k_t[f] / dx
            a[iu[b], iv[b]] = w_t * (g.delta * k_tm[f] / dx + de_t_dv)
            a[iu[b], iv[nb]] = -w_t * g.delta * k_tm[f] / dx

        if self.is_linear:
            self._matrix_cache = a
        return a

    def forcing_vector(self, t: float) -> np.ndarray:
        """b(t) with rhs(t, y) = -A y + b(t); only valid for linear operators."""
        if not self.is_linear:
            raise AssemblyError("forcing vector is only defined for linear operators")
        n = self.n
        evals = self.rhs_evals
        du, dv = self.rhs(t, np.zeros(n), np.zeros(n))
        self.rhs_evals = evals  # bookkeeping probe, not a marching evaluation
        return np.concatenate([du, dv])

    def jacobian_diagonal(self, t: float = 0.0, state: Optional[StateField] = None):
        """Positive per-node decay rates (diag of A) split as (diag_u, diag_v)."""
        a = self.frozen_matrix(t, state)
        d = np.diag(a)
        return d[:self.n].copy(), d[self.n:].copy()

    def jacobian_node_blocks(self, t: float = 0.0, state: Optional[StateField] = None):
        """Per-node 2x2 blocks of A coupling (u_j, v_j) to itself.

        Returns (b_uu, b_uv, b_vu, b_vv) arrays of length node_count.  These
        are the terms a three-level scheme must treat implicitly to stay
        stable under two-way cross coupling.
        """
        a = self.frozen_matrix(t, state)
        idx = np.arange(self.n)
        return (
            a[idx, idx].copy(),
            a[idx, idx + self.n].copy(),
            a[idx + self.n, idx].copy(),
            a[idx + self.n, idx + self.n].copy(),
        )

    def gershgorin_lambda_max(self, t: float = 0.0, state: Optional[StateField] = None) -> float:
        """Infinity-norm row-sum bound; never below the true spectral radius.

        Computed directly from the face coefficients (equals the row sums
        of :meth:`frozen_matrix`, which the test suite asserts) so the
        per-cycle refresh on nonlinear runs costs about one RHS evaluation.
        """
        if self.is_linear and self._rowsum_cache is not None:
            return self._rowsum_cache
        n = self.n
        if state is None:
            u = np.ones(n)
            v = np.ones(n)
        else:
            u, v = state.u, state.v
        g = self.groups
        dx = self.dx
        d_th, d_t, k_t, k_tm, c = self._coefficients(u, v)
        cm = 2.0 / (dx * dx)
        row_v = (d_th[:-1] + d_th[1:] + abs(g.gamma) * (d_t[:-1] + d_t[1:])) * (g.fo_m * cm)
        row_u = ((k_t[:-1] + k_t[1:] + abs(g.delta) * (k_tm[:-1] + k_tm[1:]))
                 * (g.fo_t * cm) / c[1:-1])
        best = max(float(row_v.max()), float(row_u.max())) if n > 2 else 0.0
        for side, b, f in (("left", 0, 0), ("right", n - 1, n - 2)):
            if self.forcing.side(side).kind != "robin":
                continue
            de_m_du, de_m_dv, de_t_du, de_t_dv = self._exchange_jacobian(side, u[b], v[b], t)
            w_m = g.fo_m * 2.0 / dx
            w_t = g.fo_t * 2.0 / (dx * c[b])
            best = max(
                best,
                w_m * (2.0 * (d_th[f] + abs(g.gamma) * d_t[f]) / dx
                       + abs(de_m_dv) + abs(de_m_du)),
                w_t * (2.0 * (k_t[f] + abs(g.delta) * k_tm[f]) / dx
                       + abs(de_t_du) + abs(de_t_dv)),
            )
        best = float(best)
        if self.is_linear:
            self._rowsum_cache = best
        return best

    def dump_matrix(self, path, t: float = 0.0, state: Optional[StateField] = None) -> None:
        """Write the frozen matrix in coordinate format: 'row col value' lines."""
        a = self.frozen_matrix(t, state)
        rows, cols = np.nonzero(a)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"% {a.shape[0]} {a.shape[1]} {rows.size}\n")
            for i, j in zip(rows, cols):
                fh.write(f"{i} {j} {a[i, j]:.17g}\n")


def assemble_operator(
    wall: WallAssembly,
    grid: Grid1D,
    groups: DimensionlessGroups,
    forcing: BoundaryForcing,
    **kwargs,
) -> SemiDiscreteOperator:
    """Build the semi-discrete operator for a wall/grid/groups/forcing set."""
    return SemiDiscreteOperator(wall, grid, groups, forcing, **kwargs)


def _sat_excess(biot, sf: SideForcing, u_b: float, t: float) -> float:
    """Saturation-ratio excess (surface minus ambient); 0 when inactive."""
    if biot.m_sat == 0.0 and biot.t_sat == 0.0:
        return 0.0
    if u_b <= 0.0:
        raise ZeroDivisionError("Robin closure saturation term is singular at boundary u <= 0")
    u_inf = sf.u_inf(t)
    if u_inf <= 0.0:
        raise ZeroDivisionError("ambient u_inf <= 0 in saturation term")
    return sf.psat_star(u_b) / u_b - sf.psat_inf(t) / u_inf


def _exchange_terms(biot, sf: SideForcing, u_b: float, v_b: float, t: float):
    """Surface-minus-ambient exchange pair (E_M, E_T)."""
    sat = _sat_excess(biot, sf, u_b, t)
    dv = v_b - sf.v_inf(t)
    e_m = biot.m_sat * sat + biot.m_theta * dv
    e_t = biot.t_t * (u_b - sf.u_inf(t)) + biot.t_sat * sat + biot.t_theta * dv
    return e_m, e_t


def _source_terms(biot, sf: SideForcing, alpha: float, t: float):
    """Additional flux terms plus absorbed radiation (inflow positive)."""
    return sf.flux_m(t), sf.flux_t(t) + alpha * biot.t_g * sf.g_inf(t)


def apply_robin_closure(
    side: str,
    state: StateField,
    t: float,
    groups: DimensionlessGroups,
    forcing: BoundaryForcing,
) -> tuple:
    """Published Robin closure values (moisture, heat) for one side.

    Returns the surface-excess form: additional flux terms plus exchange
    terms ordered surface-minus-ambient plus the absorbed radiation.  The
    operator itself applies the exchange part with the opposite (inflow)
    orientation; see the module docstring.
    """
    sf = forcing.side(side)
    if sf.kind != "robin":
        raise ConfigError(f"{side} side is not a Robin boundary")
    biot = groups.biot_left if side == "left" else groups.biot_right
    b = 0 if side == "left" else state.u.size - 1
    e_m, e_t = _exchange_terms(biot, sf, float(state.u[b]), float(state.v[b]), t)
    s_m, s_t = _source_terms(biot, sf, groups.alpha, t)
    return s_m + e_m, s_t + e_t


def estimate_lambda_max(
    op: SemiDiscreteOperator,
    state: Optional[StateField] = None,
    t: float = 0.0,
    compute_min: bool = False,
) -> StabilityEstimate:
    """Stability estimate from the frozen-coefficient matrix at ``state``.

    ``lambda_max`` is the Gershgorin (infinity-norm) bound; ``lambda_min``
    is reported for completeness from a dense eigensolve when requested.
    """
    lam_max = op.gershgorin_lambda_max(t, state)
    lam_min = 0.0
    if compute_min and lam_max > 0:
        eig = np.linalg.eigvals(op.frozen_matrix(t, state))
        re = eig.real
        positive = re[re > 1e-12 * lam_max]
        if positive.size:
            lam_min = float(np.min(positive))
    return StabilityEstimate(lambda_max=lam_max, lambda_min=lam_min)
