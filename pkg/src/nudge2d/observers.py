"""Observer sets, their movement rules, and the two interpolation operators.

``sample_bilinear`` takes gridded values to arbitrary points (the sampling
direction). ``scatter_to_grid`` extends scattered observations back to the
whole grid through a piecewise-linear interpolant built on a 3x3 periodic
tiling of the observation points, so proximity across the seam behaves like
proximity inside the domain. Lattice-structured observer sets (the static
grid and the sliding thick window) use a separable bilinear path instead of
triangulation; the thin window inserts exact nodal values with no
interpolation at all.

Every strategy draws from the generator it was constructed with, so equal
seeds reproduce identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import Delaunay

from .spectral import TWO_PI, Grid

STRATEGY_KINDS = (
    "static",
    "bleeps",
    "thin-sweep",
    "thick-sweep",
    "random-sweep",
    "creeps",
    "lagrangian",
)

# Random-walk moves, drawn uniformly: +x, -x, +y, -y, stay.
CREEP_MOVES = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [0, 0]], dtype=int)

_TILE_SHIFTS = np.array(
    [[ix * TWO_PI, iy * TWO_PI] for ix in (-1, 0, 1) for iy in (-1, 0, 1)]
)

__all__ = [
    "STRATEGY_KINDS",
    "CREEP_MOVES",
    "Region",
    "ObserverSet",
    "StaticGridObservers",
    "BleepsObservers",
    "CreepsObservers",
    "ThinSweepObservers",
    "ThickSweepObservers",
    "RandomSweepObservers",
    "LagrangianObservers",
    "make_observers",
    "wrap_position",
    "sample_bilinear",
    "tiled_linear_interpolator",
    "scatter_to_grid",
    "lattice_to_grid",
    "apply_window_mask",
    "thin_sweep_region",
    "thick_window_extend",
    "thick_lattice_shape",
    "snapped_axis_indices",
]


def wrap_position(p):
    """Wrap coordinates into [-pi, pi)."""
    out = np.mod(np.asarray(p, dtype=float) + np.pi, TWO_PI) - np.pi
    # mod can round up to the period itself; fold the right endpoint back
    return np.where(out >= np.pi, out - TWO_PI, out)


# ---------------------------------------------------------------------------
# Interpolation operators
# ---------------------------------------------------------------------------

def sample_bilinear(grid: Grid, values, points) -> np.ndarray:
    """Periodic bilinear interpolation of nodal values at arbitrary points.

    ``values`` has shape (n, n) or (n, n, c); ``points`` has shape (p, 2).
    Returns (p,) or (p, c) accordingly. Points on nodes reproduce the nodal
    values and any function bilinear on a cell is evaluated exactly.
    """
    values = np.asarray(values)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    s = (pts + np.pi) / grid.dx
    i0 = np.floor(s).astype(int)
    frac = s - i0
    i0 %= grid.n
    i1 = (i0 + 1) % grid.n
    fx = frac[:, 0]
    fy = frac[:, 1]
    if values.ndim > 2:
        extra = (1,) * (values.ndim - 2)
        fx = fx.reshape(fx.shape + extra)
        fy = fy.reshape(fy.shape + extra)
    v00 = values[i0[:, 0], i0[:, 1]]
    v10 = values[i1[:, 0], i0[:, 1]]
    v01 = values[i0[:, 0], i1[:, 1]]
    v11 = values[i1[:, 0], i1[:, 1]]
    return (
        (1.0 - fx) * (1.0 - fy) * v00
        + fx * (1.0 - fy) * v10
        + (1.0 - fx) * fy * v01
        + fx * fy * v11
    )


def _dedupe_points(points: np.ndarray, values: np.ndarray):
    """Drop repeated observation points, keeping lexicographic order."""
    order = np.lexsort((points[:, 1], points[:, 0]))
    pts = points[order]
    vals = values[order]
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return pts[keep], vals[keep]


def tiled_linear_interpolator(points, values) -> LinearNDInterpolator:
    """Piecewise-linear interpolant of observations on the 3x3 periodic tiling.

    Observations are replicated at the eight period shifts before
    triangulating, so evaluation anywhere on the central square sees each
    observer at its periodically nearest copy. Duplicate points are dropped
    beforehand and the tiled set is ordered lexicographically, which makes
    the triangulation deterministic for a given observation set.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float)
    if len(points) == 0:
        raise ValueError("at least one observation point is required")
    points, values = _dedupe_points(points, values)
    tiled_pts = (points[None, :, :] + _TILE_SHIFTS[:, None, :]).reshape(-1, 2)
    tiled_vals = np.concatenate([values] * len(_TILE_SHIFTS), axis=0)
    order = np.lexsort((tiled_pts[:, 1], tiled_pts[:, 0]))
    try:
        tri = Delaunay(tiled_pts[order])
    except Exception as exc:  # pragma: no cover - tiling precludes collinearity
        raise RuntimeError("degenerate observation geometry") from exc
    return LinearNDInterpolator(tri, tiled_vals[order])


def scatter_to_grid(grid: Grid, points, values) -> np.ndarray:
    """Extend observed values to every grid node, periodically.

    Returns (n, n) for scalar observations or (n, n, c) for stacked ones.
    Linear in the observed values; the output never exceeds max|values|.
    """
    interp = tiled_linear_interpolator(points, values)
    out = interp(grid.xx, grid.yy)
    if not np.all(np.isfinite(out)):
        raise RuntimeError("degenerate observation geometry left uncovered nodes")
    return out


def _axis_weights(obs: np.ndarray, eval_coords: np.ndarray, periodic: bool):
    """Bracketing interval index and weight of each evaluation coordinate."""
    m = len(obs)
    x = np.asarray(eval_coords, dtype=float)
    if periodic:
        if m == 1:
            return np.zeros(len(x), int), np.zeros(len(x), int), np.zeros(len(x))
        x = np.where(x < obs[0], x + TWO_PI, x)
        edges = np.append(obs, obs[0] + TWO_PI)
        j = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, m - 1)
        w = (x - edges[j]) / (edges[j + 1] - edges[j])
        return j, (j + 1) % m, w
    if m == 1:
        return np.zeros(len(x), int), np.zeros(len(x), int), np.zeros(len(x))
    j = np.clip(np.searchsorted(obs, x, side="right") - 1, 0, m - 2)
    w = np.clip((x - obs[j]) / (obs[j + 1] - obs[j]), 0.0, 1.0)
    return j, j + 1, w


def lattice_to_grid(grid: Grid, x_obs, y_obs, lattice_values, *,
                    periodic_x: bool = True) -> np.ndarray:
    """Separable bilinear extension of lattice observations to the grid.

    ``x_obs`` and ``y_obs`` are ascending observer coordinates; the y axis is
    always treated periodically, the x axis optionally (a sliding window uses
    a bounded x axis). ``lattice_values`` has shape (mx, my) or (mx, my, c).
    """
    V = np.asarray(lattice_values)
    jx, jx1, wx = _axis_weights(np.asarray(x_obs, float), grid.x, periodic_x)
    jy, jy1, wy = _axis_weights(np.asarray(y_obs, float), grid.x, True)
    return _bilinear_combine(V, jx, jx1, wx, jy, jy1, wy)


def _bilinear_combine(V, jx, jx1, wx, jy, jy1, wy):
    wxc = wx[:, None]
    wyc = wy[None, :]
    if V.ndim > 2:
        extra = (1,) * (V.ndim - 2)
        wxc = wxc.reshape(wxc.shape + extra)
        wyc = wyc.reshape(wyc.shape + extra)
    v00 = V[jx[:, None], jy[None, :]]
    v10 = V[jx1[:, None], jy[None, :]]
    v01 = V[jx[:, None], jy1[None, :]]
    v11 = V[jx1[:, None], jy1[None, :]]
    return (
        (1.0 - wxc) * (1.0 - wyc) * v00
        + wxc * (1.0 - wyc) * v10
        + (1.0 - wxc) * wyc * v01
        + wxc * wyc * v11
    )


# ---------------------------------------------------------------------------
# Sliding windows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """Grid-aligned x-window with full y extent, wrapping periodically."""

    grid: Grid
    left_index: int
    width_cells: int

    def __post_init__(self):
        if not 0 < self.width_cells <= self.grid.n:
            raise ValueError("window width must cover 1..n cells")
        object.__setattr__(self, "left_index", int(self.left_index) % self.grid.n)

    @property
    def x_left(self) -> float:
        return float(self.grid.x[self.left_index])

    @property
    def width(self) -> float:
        return self.width_cells * self.grid.dx

    def column_indices(self, *, include_right_edge: bool = False) -> np.ndarray:
        cols = self.width_cells + (1 if include_right_edge else 0)
        return (self.left_index + np.arange(cols)) % self.grid.n

    def column_mask(self, *, include_right_edge: bool = False) -> np.ndarray:
        mask = np.zeros(self.grid.n, dtype=bool)
        mask[self.column_indices(include_right_edge=include_right_edge)] = True
        return mask

    def shifted(self, cells: int) -> "Region":
        return Region(self.grid, (self.left_index + cells) % self.grid.n, self.width_cells)


def thin_sweep_region(grid: Grid, t: float, a: int, b: int, dt: float,
                      left_index0: int = 0) -> Region:
    """Window of ``a`` cells after ``round(t/dt)`` steps of ``b`` cells each."""
    if not (1 <= a <= grid.n):
        raise ValueError("window width a must satisfy 1 <= a <= n")
    steps = int(round(t / dt))
    return Region(grid, (left_index0 + b * steps) % grid.n, a)


def apply_window_mask(grid: Grid, fields, region: Region, *,
                      include_right_edge: bool = False) -> np.ndarray:
    """Zero everything outside the window; values inside pass through unchanged."""
    fields = np.asarray(fields)
    mask = region.column_mask(include_right_edge=include_right_edge)
    shape = (grid.n,) + (1,) * (fields.ndim - 1)
    return fields * mask.reshape(shape)


def thick_window_extend(grid: Grid, region: Region, x_axis, y_axis,
                        lattice_values) -> np.ndarray:
    """Bilinear extension of window-lattice observations, masked to the window.

    ``x_axis`` is the unwrapped ascending lattice x, spanning the window
    including both edges; evaluation happens only on grid columns inside the
    closed window, everything else is zero.
    """
    V = np.asarray(lattice_values)
    cols = region.column_indices(include_right_edge=True)
    x_eval = region.x_left + ((cols - region.left_index) % grid.n) * grid.dx
    jx, jx1, wx = _axis_weights(np.asarray(x_axis, float), x_eval, False)
    jy, jy1, wy = _axis_weights(np.asarray(y_axis, float), grid.x, True)
    sub = _bilinear_combine(V, jx, jx1, wx, jy, jy1, wy)
    out = np.zeros((grid.n,) + sub.shape[1:], dtype=sub.dtype)
    out[cols] = sub
    return out


def snapped_axis_indices(n: int, m: int) -> np.ndarray:
    """Node indices of an m-point uniform axis lattice snapped to the grid."""
    if m < 2:
        raise ValueError("need at least 2 lattice points per dimension")
    if m > n:
        raise ValueError(f"lattice size {m} exceeds grid size {n}")
    return np.round(np.arange(m) * n / m).astype(int) % n


def thick_lattice_shape(count: int) -> tuple[int, int]:
    """Nearest (mx, my) lattice to ``count`` points matching the 1:4 window aspect."""
    if count < 4:
        raise ValueError("thick window needs at least a 2 x 2 lattice")
    mx = max(2, int(round(np.sqrt(count / 4.0))))
    my = max(2, int(round(count / mx)))
    return mx, my


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------

class ObserverSet:
    """Common interface: wrapped positions plus a deterministic advance rule."""

    kind = "?"

    def __init__(self, grid: Grid):
        self.grid = grid

    @property
    def positions(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def count(self) -> int:
        return len(self.positions)

    def advance(self, dt: float, u_velocity=None) -> None:
        """Move observers across one time step; static sets stay put."""


class StaticGridObservers(ObserverSet):
    """Uniform m x m lattice snapped to grid nodes; never moves."""

    kind = "static"

    def __init__(self, grid: Grid, m: int):
        super().__init__(grid)
        self.m = int(m)
        self.axis_index = snapped_axis_indices(grid.n, self.m)
        ix, iy = np.meshgrid(self.axis_index, self.axis_index, indexing="ij")
        self.node_index = np.stack([ix.ravel(), iy.ravel()], axis=1)

    @property
    def positions(self) -> np.ndarray:
        return self.grid.x[self.node_index]

    @property
    def count(self) -> int:
        return self.m * self.m


class BleepsObservers(ObserverSet):
    """Observers redrawn onto uniformly random grid nodes every interval."""

    kind = "bleeps"

    def __init__(self, grid: Grid, count: int, rng: np.random.Generator,
                 move_interval: int = 1):
        super().__init__(grid)
        if count < 1:
            raise ValueError("need at least one observer")
        if move_interval < 1:
            raise ValueError("move interval must be >= 1")
        self.rng = rng
        self.move_interval = int(move_interval)
        self._n_obs = int(count)
        self._ticks = 0
        self.node_index = self._draw()

    def _draw(self) -> np.ndarray:
        return self.rng.integers(0, self.grid.n, size=(self._n_obs, 2))

    @property
    def positions(self) -> np.ndarray:
        return self.grid.x[self.node_index]

    @property
    def count(self) -> int:
        return self._n_obs

    def advance(self, dt: float, u_velocity=None) -> None:
        self._ticks += 1
        if self._ticks % self.move_interval == 0:
            self.node_index = self._draw()


class CreepsObservers(ObserverSet):
    """Observers random-walking on grid nodes: a cardinal step or a pause."""

    kind = "creeps"

    def __init__(self, grid: Grid, count: int, rng: np.random.Generator,
                 move_interval: int = 1):
        super().__init__(grid)
        if count < 1:
            raise ValueError("need at least one observer")
        if move_interval < 1:
            raise ValueError("move interval must be >= 1")
        self.rng = rng
        self.move_interval = int(move_interval)
        self._ticks = 0
        self.node_index = rng.integers(0, grid.n, size=(int(count), 2))

    @property
    def positions(self) -> np.ndarray:
        return self.grid.x[self.node_index]

    def advance(self, dt: float, u_velocity=None) -> None:
        self._ticks += 1
        if self._ticks % self.move_interval == 0:
            moves = CREEP_MOVES[self.rng.integers(0, len(CREEP_MOVES), size=self.count)]
            self.node_index = (self.node_index + moves) % self.grid.n


class ThinSweepObservers(ObserverSet):
    """A window of ``a`` grid columns, fully observed, sliding b cells per step."""

    kind = "thin-sweep"

    def __init__(self, grid: Grid, a: int, b: int, left_index0: int = 0):
        super().__init__(grid)
        if not (1 <= int(a) <= grid.n):
            raise ValueError("window width a must satisfy 1 <= a <= n")
        if int(b) < 0:
            raise ValueError("cells-per-step b must be nonnegative")
        self.a = int(a)
        self.b = int(b)
        self.region = Region(grid, left_index0, self.a)

    @property
    def positions(self) -> np.ndarray:
        cols = self.region.column_indices()
        ix, iy = np.meshgrid(cols, np.arange(self.grid.n), indexing="ij")
        return self.grid.x[np.stack([ix.ravel(), iy.ravel()], axis=1)]

    @property
    def count(self) -> int:
        return self.a * self.grid.n

    def advance(self, dt: float, u_velocity=None) -> None:
        self.region = self.region.shifted(self.b)


class ThickSweepObservers(ObserverSet):
    """A quarter-domain window carrying an mx x my observer lattice.

    The window spans n/4 grid cells in x and the full y extent; it slides
    ``b`` cells per step. The lattice covers the closed window in x (both
    edges included) and is periodic in y; it rides along rigidly.
    """

    kind = "thick-sweep"

    def __init__(self, grid: Grid, mx: int, my: int, b: int = 1):
        super().__init__(grid)
        if mx < 2 or my < 2:
            raise ValueError("window lattice needs at least 2 points per dimension")
        if int(b) < 0:
            raise ValueError("cells-per-step b must be nonnegative")
        self.mx = int(mx)
        self.my = int(my)
        self.b = int(b)
        width_cells = grid.n // 4
        self.region = Region(grid, 0, width_cells)
        self.rel_x = np.arange(self.mx) * (self.region.width / (self.mx - 1))
        self.y_axis = -np.pi + np.arange(self.my) * (TWO_PI / self.my)

    @property
    def x_axis(self) -> np.ndarray:
        """Unwrapped ascending lattice x spanning the closed window."""
        return self.region.x_left + self.rel_x

    @property
    def positions(self) -> np.ndarray:
        px, py = np.meshgrid(wrap_position(self.x_axis), self.y_axis, indexing="ij")
        return np.stack([px.ravel(), py.ravel()], axis=1)

    @property
    def count(self) -> int:
        return self.mx * self.my

    def advance(self, dt: float, u_velocity=None) -> None:
        self.region = self.region.shifted(self.b)


class RandomSweepObservers(ObserverSet):
    """Free points with fixed random velocities, not bound to the grid."""

    kind = "random-sweep"

    def __init__(self, grid: Grid, count: int, rng: np.random.Generator):
        super().__init__(grid)
        if count < 1:
            raise ValueError("need at least one observer")
        self._positions = rng.uniform(-np.pi, np.pi, size=(int(count), 2))
        self.velocities = rng.uniform(-1.0, 1.0, size=(int(count), 2))

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    def advance(self, dt: float, u_velocity=None) -> None:
        self._positions = wrap_position(self._positions + dt * self.velocities)


class LagrangianObservers(ObserverSet):
    """Tracers advected by the sampled reference velocity.

    Positions advance with the same three-step scheme as the solver, using
    bilinearly sampled velocities recorded at each tracer's own past
    positions; the first two steps fall back to Euler and the two-step
    scheme while the history fills.
    """

    kind = "lagrangian"

    def __init__(self, grid: Grid, m: int):
        super().__init__(grid)
        axis = grid.x[snapped_axis_indices(grid.n, int(m))]
        px, py = np.meshgrid(axis, axis, indexing="ij")
        self._positions = np.stack([px.ravel(), py.ravel()], axis=1)
        self._history: list[np.ndarray] = []

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    def advance(self, dt: float, u_velocity=None) -> None:
        if u_velocity is None:
            raise ValueError("tracer advection needs the reference velocity fields")
        u1, u2 = u_velocity
        stacked = np.stack([u1, u2], axis=-1)
        v_now = sample_bilinear(self.grid, stacked, self._positions)
        if len(self._history) >= 2:
            c0, c1, c2 = 23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0
            disp = dt * (c0 * v_now + c1 * self._history[0] + c2 * self._history[1])
        elif len(self._history) == 1:
            disp = dt * (1.5 * v_now - 0.5 * self._history[0])
        else:
            disp = dt * v_now
        self._positions = wrap_position(self._positions + disp)
        self._history = [v_now, *self._history[:1]]


def make_observers(grid: Grid, kind: str, rng: np.random.Generator, *,
                   m: int | None = None, count: int | None = None,
                   a: int | None = None, b: int | None = None,
                   mx: int | None = None, my: int | None = None,
                   move_interval: int = 1) -> ObserverSet:
    """Construct the observer set for a strategy from its configuration knobs."""
    if kind == "static":
        return StaticGridObservers(grid, m)
    if kind == "bleeps":
        return BleepsObservers(grid, count, rng, move_interval)
    if kind == "creeps":
        return CreepsObservers(grid, count, rng, move_interval)
    if kind == "thin-sweep":
        return ThinSweepObservers(grid, a, b if b is not None else a)
    if kind == "thick-sweep":
        if mx is None or my is None:
            mx, my = thick_lattice_shape(count)
        return ThickSweepObservers(grid, mx, my, b if b is not None else 1)
    if kind == "random-sweep":
        return RandomSweepObservers(grid, count, rng)
    if kind == "lagrangian":
        return LagrangianObservers(grid, m if m is not None else int(round(np.sqrt(count))))
    raise ValueError(f"unknown observer strategy {kind!r}")
