"""Wigner functions over the shot-noise-unit phase plane, phase-space
rotations, and incoherent mixtures.

The convention is pinned to the package quadrature scaling: the vacuum gives
W(x, p) = (1/2 pi) e^{-(x^2+p^2)/2}, a coherent state |alpha> is the same
Gaussian centered at (2 Re alpha, 2 Im alpha), and rotated marginals of W
reproduce the homodyne quadrature densities. Evaluation runs the standard
Fock-basis Laguerre series through three-term recurrences in the scaled
variable beta = (x + i p)/2, so no factorials appear at any order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fock import DensityMatrix, FockCutoff, PureState, State
from .errors import GridError

_NORM_TOL = 1e-4
_BOUND = 1.0 / np.pi


@dataclass(frozen=True)
class WignerGrid:
    """W sampled on a rectangular (x, p) grid; values[i, j] = W(x_axis[i], p_axis[j])."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.array(self.x_axis, dtype=np.float64, copy=True)
        p = np.array(self.p_axis, dtype=np.float64, copy=True)
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.shape != (x.size, p.size):
            raise ValueError(f"values shape {v.shape} does not match axes ({x.size}, {p.size})")
        for axis in (x, p):
            steps = np.diff(axis)
            if axis.size < 2 or np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
                raise ValueError("axes must be strictly increasing and uniform")
        bound = float(np.max(np.abs(v)))
        if bound > _BOUND + 1e-12:
            raise GridError(f"|W| exceeds the convention bound 1/pi: {bound:.6g}")
        total = float(np.trapezoid(np.trapezoid(v, p, axis=1), x))
        if abs(total - 1.0) > _NORM_TOL:
            raise GridError(
                f"grid does not cover the state: integral of W is {total:.6f}"
            )
        for arr in (x, p, v):
            arr.flags.writeable = False
        object.__setattr__(self, "x_axis", x)
        object.__setattr__(self, "p_axis", p)
        object.__setattr__(self, "values", v)


def default_axes(halfwidth: float = 8.0, points: int = 201) -> np.ndarray:
    """Default phase-space axis: 201 points over +-8 shot-noise units."""
    return np.linspace(-halfwidth, halfwidth, points)


def _as_matrix(state: State) -> tuple[np.ndarray, FockCutoff]:
    if isinstance(state, PureState):
        rho = state.to_density()
        return rho.elements, rho.cutoff
    if isinstance(state, DensityMatrix):
        return state.elements / state.trace, state.cutoff
    raise TypeError(f"expected PureState or DensityMatrix, got {type(state).__name__}")


def wigner_values(state: State, x_axis: np.ndarray, p_axis: np.ndarray) -> np.ndarray:
    """Raw W(x, p) array without grid-coverage validation."""
    rho, _ = _as_matrix(state)
    xg, pg = np.meshgrid(
        np.asarray(x_axis, dtype=np.float64),
        np.asarray(p_axis, dtype=np.float64),
        indexing="ij",
    )
    return _wigner_points(rho, xg, pg)


def wigner_function(
    state: State,
    x_axis: np.ndarray | None = None,
    p_axis: np.ndarray | None = None,
) -> WignerGrid:
    """Wigner function of the normalized state on the given (or default) grid.

    Raises GridError when the grid fails to capture the state (integral of W
    off unity beyond 1e-4) or the convention bound |W| <= 1/pi is broken.
    """
    if x_axis is None:
        x_axis = default_axes()
    if p_axis is None:
        p_axis = x_axis
    return WignerGrid(x_axis, p_axis, wigner_values(state, x_axis, p_axis))


def phase_shift(state: State, phi: float):
    """Phase-space rotation e^{i phi n}: maps |alpha> to |alpha e^{i phi}>."""
    if isinstance(state, PureState):
        n = np.arange(state.dim)
        return PureState(state.amplitudes * np.exp(1j * phi * n), state.cutoff)
    if isinstance(state, DensityMatrix):
        n = np.arange(state.dim)
        phase = np.exp(1j * phi * n)
        return DensityMatrix(state.elements * np.outer(phase, phase.conj()), state.cutoff)
    raise TypeError(f"expected PureState or DensityMatrix, got {type(state).__name__}")


def mixture(rhos: list[DensityMatrix], weights: list[float]) -> DensityMatrix:
    """Incoherent mixture sum_i w_i rho_i; weights must be >= 0 and sum to 1."""
    if len(rhos) != len(weights) or not rhos:
        raise ValueError("need one weight per state")
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0.0) or abs(float(np.sum(w)) - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    cutoff = rhos[0].cutoff
    if any(r.cutoff != cutoff for r in rhos):
        raise ValueError("all states must share a cutoff")
    out = np.zeros((cutoff.dim, cutoff.dim), dtype=np.complex128)
    for wi, ri in zip(w, rhos):
        out += wi * ri.elements / ri.trace
    return DensityMatrix(out, cutoff)


def wigner_overlap(a: WignerGrid, b: WignerGrid) -> float:
    """Phase-space overlap integral of two Wigner grids on identical axes."""
    if not (np.array_equal(a.x_axis, b.x_axis) and np.array_equal(a.p_axis, b.p_axis)):
        raise ValueError("grids must share axes")
    inner = np.trapezoid(a.values * b.values, a.p_axis, axis=1)
    return float(np.trapezoid(inner, a.x_axis))


def wigner_marginal(
    state: State,
    theta: float,
    x_values: np.ndarray,
    s_axis: np.ndarray | None = None,
) -> np.ndarray:
    """Marginal of W along the direction conjugate to x_theta.

    Integrates W over the line x cos(theta) + p sin(theta) = u, evaluating W
    at the exact rotated points (no interpolation), so the result is directly
    comparable to the homodyne quadrature density at LO phase theta.
    """
    s = default_axes() if s_axis is None else np.asarray(s_axis, dtype=np.float64)
    u = np.asarray(x_values, dtype=np.float64)
    xs = u[:, None] * np.cos(theta) - s[None, :] * np.sin(theta)
    ps = u[:, None] * np.sin(theta) + s[None, :] * np.cos(theta)
    rho, _ = _as_matrix(state)
    return np.trapezoid(_wigner_points(rho, xs, ps), s, axis=1)


def _wigner_points(rho: np.ndarray, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Laguerre-recurrence evaluation of W at arbitrary points (QuTiP-style
    iterative scheme in beta = (x + i p)/2)."""
    d = rho.shape[0]
    two_a = x + 1j * p  # 2 beta
    two_ac = two_a.conj()
    wlist = np.empty((d,) + two_a.shape, dtype=np.complex128)
    wlist[0] = np.exp(-0.5 * np.abs(two_a) ** 2) / np.pi
    w = rho[0, 0].real * wlist[0].real
    for n in range(1, d):
        wlist[n] = two_a * wlist[n - 1] / np.sqrt(n)
        w = w + 2.0 * (rho[0, n] * wlist[n]).real
    for m in range(1, d):
        temp = wlist[m].copy()
        wlist[m] = (two_ac * temp - np.sqrt(m) * wlist[m - 1]) / np.sqrt(m)
        w = w + (rho[m, m] * wlist[m]).real
        for n in range(m + 1, d):
            temp2 = (two_a * wlist[n - 1] - np.sqrt(m) * temp) / np.sqrt(n)
            temp = wlist[n].copy()
            wlist[n] = temp2
            w = w + 2.0 * (rho[m, n] * wlist[n]).real
    return 0.5 * w


def save_wigner_csv(grid: WignerGrid, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "p", "value"])
        for i, x in enumerate(grid.x_axis):
            for j, p in enumerate(grid.p_axis):
                writer.writerow([repr(float(x)), repr(float(p)), repr(float(grid.values[i, j]))])
    return path


def save_wigner_json(grid: WignerGrid, path: str | Path, extra: dict | None = None) -> Path:
    path = Path(path)
    payload = {
        "x_axis": [float(v) for v in grid.x_axis],
        "p_axis": [float(v) for v in grid.p_axis],
        "values": [float(v) for v in grid.values.ravel()],
    }
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload, sort_keys=True) + "\n")
    return path


def load_wigner_json(path: str | Path) -> WignerGrid:
    payload = json.loads(Path(path).read_text())
    x = np.array(payload["x_axis"])
    p = np.array(payload["p_axis"])
    values = np.array(payload["values"]).reshape(x.size, p.size)
    return WignerGrid(x, p, values)
