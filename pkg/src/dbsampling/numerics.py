"""Deterministic numerical kernels shared by the whole package.

Everything here is frequency-aware composite quadrature on Legendre-Lobatto
panels, bracketed root finding, and seeded noise generation.  All routines are
pure: given the same inputs they return bit-identical outputs, regardless of
evaluation order or thread count.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as _leg
from scipy.optimize import brentq


class NumericsError(ValueError):
    """Raised on contract violations (bad brackets, incoherent grids, ...)."""


@dataclass(frozen=True)
class Tolerances:
    """Default accuracy budgets, one order below the acceptance thresholds."""

    ode_tol: float = 1e-10
    quad_tol: float = 1e-10
    root_tol: float = 1e-11
    series_tail_tol: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("ode_tol", "quad_tol", "root_tol", "series_tail_tol"):
            if not getattr(self, name) > 0.0:
                raise NumericsError(f"{name} must be strictly positive")

    def replace(self, **kwargs) -> "Tolerances":
        data = {
            "ode_tol": self.ode_tol,
            "quad_tol": self.quad_tol,
            "root_tol": self.root_tol,
            "series_tail_tol": self.series_tail_tol,
        }
        data.update(kwargs)
        return Tolerances(**data)


@lru_cache(maxsize=32)
def lobatto_rule(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Lobatto nodes and weights on [-1, 1] (p points, degree 2p-3)."""
    if p < 2:
        raise NumericsError("Lobatto rule needs at least 2 points")
    basis = _leg.Legendre.basis(p - 1)
    interior = np.real(basis.deriv().roots())
    x = np.concatenate([[-1.0], np.sort(interior), [1.0]])
    w = 2.0 / (p * (p - 1) * basis(x) ** 2)
    return x, w


@lru_cache(maxsize=32)
def cumulative_matrix(p: int) -> np.ndarray:
    """Matrix Q with (Q f)_i = integral of the degree p-1 interpolant of f
    from -1 to the i-th Lobatto node.  Exact for polynomials up to x**(p-1)."""
    x, _ = lobatto_rule(p)
    vand = _leg.legvander(x, p - 1)
    anti = np.zeros((p, p))
    anti[:, 0] = x + 1.0
    for j in range(1, p):
        upper = _leg.Legendre.basis(j + 1)
        lower = _leg.Legendre.basis(j - 1)
        anti[:, j] = (upper(x) - upper(-1.0) - lower(x) + lower(-1.0)) / (2 * j + 1)
    return anti @ np.linalg.inv(vand)


class Grid:
    """Composite Legendre-Lobatto panel grid on [lo, hi].

    Nodes include both interval endpoints and every declared breakpoint, so
    piecewise-defined integrands are never interpolated across a kink.  Panel
    density is chosen to resolve oscillation at circular frequency `oscillation`
    (a few radians of phase per panel keeps the rule at roundoff accuracy).
    """

    def __init__(self, lo: float, hi: float, edges: np.ndarray, order: int,
                 breakpoints: tuple[float, ...] = ()):
        if not hi > lo:
            raise NumericsError("grid needs hi > lo")
        self.lo = float(lo)
        self.hi = float(hi)
        self.order = int(order)
        self.edges = np.asarray(edges, dtype=float)
        self.breakpoints = tuple(sorted(set(float(b) for b in breakpoints)))
        ref, wref = lobatto_rule(self.order)
        h = np.diff(self.edges)
        if np.any(h <= 0):
            raise NumericsError("grid edges must be strictly increasing")
        # panel_nodes[k, j] = j-th node of panel k; adjacent panels share edges
        self.panel_nodes = self.edges[:-1, None] + (ref[None, :] + 1.0) * 0.5 * h[:, None]
        self.panel_weights = wref[None, :] * 0.5 * h[:, None]
        self.panel_widths = h
        # flat strictly-increasing node list with shared edges deduplicated
        self.node_index = np.empty(self.panel_nodes.shape, dtype=np.intp)
        stride = self.order - 1
        for k in range(self.n_panels):
            self.node_index[k] = np.arange(k * stride, k * stride + self.order)
        self.nodes = np.empty(self.n_panels * stride + 1)
        self.nodes[self.node_index.ravel()] = self.panel_nodes.ravel()
        self.weights = np.zeros_like(self.nodes)
        np.add.at(self.weights, self.node_index.ravel(), self.panel_weights.ravel())
        self.nodes.setflags(write=False)

    @property
    def n_panels(self) -> int:
        return len(self.edges) - 1

    @property
    def size(self) -> int:
        return len(self.nodes)

    def panel_view(self, values: np.ndarray) -> np.ndarray:
        """Reshape node-coherent values to (n_panels, order[, ...])."""
        values = np.asarray(values)
        if values.shape[0] != self.size:
            raise NumericsError("values not coherent with grid")
        return values[self.node_index]

    def edge_index(self, x: float, tol: float = 1e-9) -> int:
        k = int(np.argmin(np.abs(self.edges - x)))
        if abs(self.edges[k] - x) > tol * (1.0 + abs(x)):
            raise NumericsError(f"{x} is not a panel boundary of this grid")
        return k

    def subspan_weights(self, lo: float, hi: float) -> np.ndarray:
        """Quadrature weights supported on the panels of [lo, hi] only."""
        klo, khi = self.edge_index(lo), self.edge_index(hi)
        if not khi > klo:
            raise NumericsError("need lo < hi, both panel boundaries")
        w = np.zeros_like(self.weights)
        np.add.at(w, self.node_index[klo:khi].ravel(),
                  self.panel_weights[klo:khi].ravel())
        return w

    def _interp_matrix(self) -> np.ndarray:
        if not hasattr(self, "_vand_inv"):
            ref, _ = lobatto_rule(self.order)
            self._vand_inv = np.linalg.inv(_leg.legvander(ref, self.order - 1))
        return self._vand_inv

    def interpolate(self, values: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Evaluate the panel-wise Legendre interpolant of node values at x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.lo - 1e-12) or np.any(x > self.hi + 1e-12):
            raise NumericsError("interpolation points outside grid span")
        pv = self.panel_view(values)
        coef = np.einsum("ij,kj...->ki...", self._interp_matrix(), pv)
        panel = np.clip(np.searchsorted(self.edges, x, side="right") - 1,
                        0, self.n_panels - 1)
        out = np.empty(x.shape + values.shape[1:], dtype=values.dtype)
        for k in np.unique(panel):
            sel = panel == k
            t = 2.0 * (x[sel] - self.edges[k]) / self.panel_widths[k] - 1.0
            out[sel] = _leg.legval(t, coef[k], tensor=True).T if values.ndim > 1 \
                else _leg.legval(t, coef[k])
        return out


def make_grid(lo: float, hi: float, oscillation: float = 0.0,
              breakpoints=(), order: int = 20, phase_per_panel: float = 2.5,
              min_panels: int = 2) -> Grid:
    """Build a panel grid resolving integrands that oscillate like
    exp(i * oscillation * x).  Breakpoints always land on panel edges."""
    cuts = [lo, hi]
    for b in breakpoints:
        if lo < b < hi:
            cuts.append(float(b))
    cuts = np.array(sorted(set(cuts)))
    edges = [lo]
    density = (1.0 + abs(oscillation)) / phase_per_panel
    for left, right in zip(cuts[:-1], cuts[1:]):
        n = max(min_panels, int(np.ceil((right - left) * density)))
        edges.extend(np.linspace(left, right, n + 1)[1:])
    return Grid(lo, hi, np.array(edges), order, breakpoints=tuple(cuts[1:-1]))


def integrate(grid: Grid, values: np.ndarray, lo: float | None = None,
              hi: float | None = None):
    """Composite quadrature of node-coherent samples over [lo, hi].

    lo/hi default to the full grid span and must be panel boundaries.
    Deterministic for a fixed grid; linear in the samples.
    """
    values = np.asarray(values)
    if values.shape[0] != grid.size:
        raise NumericsError("values not coherent with grid")
    if not np.all(np.isfinite(values)):
        raise NumericsError("non-finite sample passed to integrate")
    if lo is None and hi is None:
        w = grid.weights
    else:
        lo = grid.lo if lo is None else lo
        hi = grid.hi if hi is None else hi
        if lo < grid.lo - 1e-12 or hi > grid.hi + 1e-12:
            raise NumericsError("integration interval outside grid span")
        w = grid.subspan_weights(lo, hi)
    return np.tensordot(w, values, axes=(0, 0))


def cumulative_panels(grid: Grid, panel_values: np.ndarray) -> np.ndarray:
    """Cumulative integral from grid.lo evaluated at every panel node.

    panel_values has shape (order, n_panels, ...) — node index first so the
    per-panel matrix application is a single contiguous matmul.  The result
    has the same shape and equals the running integral of the panel-wise
    interpolant.
    """
    q = cumulative_matrix(grid.order)
    shape = panel_values.shape
    local = (q @ panel_values.reshape(grid.order, -1)).reshape(shape)
    local *= grid.panel_widths.reshape((1, -1) + (1,) * (len(shape) - 2)) * 0.5
    offsets = np.cumsum(local[-1], axis=0)
    local[:, 1:] += offsets[:-1]
    return local


def find_root_bracketed(f, lo: float, hi: float, tol: float = 1e-11) -> float:
    """Root of f on [lo, hi] given a sign change; Brent with bisection fallback.

    Returns r with bracket width below tol.  Raises if f(lo) f(hi) > 0 or if
    an evaluation is non-finite.
    """
    flo, fhi = f(lo), f(hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)):
        raise NumericsError("non-finite function value at bracket endpoint")
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if flo * fhi > 0:
        raise NumericsError("no sign change on the bracket")

    def wrapped(x):
        v = f(x)
        if not np.isfinite(v):
            raise NumericsError("non-finite function value during root search")
        return v

    return float(brentq(wrapped, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                        maxiter=200))


@dataclass(frozen=True)
class NoiseSample:
    """A seeded bounded perturbation sequence with its sup-norm."""

    values: np.ndarray
    sup: float


def uniform_noise(seed: int, count: int, delta: float) -> NoiseSample:
    """Deterministic uniform noise on [-delta, delta]; only the sup-norm of
    the sequence matters to the error bounds, so the distribution is free."""
    if delta < 0:
        raise NumericsError("delta must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    values = rng.uniform(-delta, delta, size=count) if delta > 0 else np.zeros(count)
    values.setflags(write=False)
    sup = float(np.max(np.abs(values))) if count else 0.0
    return NoiseSample(values=values, sup=sup)


def derived_seed(seed: int, *stream: int) -> int:
    """Stable per-trial seed derivation so parallel trials stay independent."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def kahan_sum(terms: np.ndarray):
    """Compensated ascending summation; reproducible across platforms."""
    total = np.zeros((), dtype=np.result_type(terms, np.float64))
    comp = np.zeros_like(total)
    for t in np.asarray(terms).ravel():
        y = t - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total[()]
