"""Potentials and the Neumann wave solution xi(x, z).

xi solves -xi'' + V xi = z xi with xi(0, z) = 1, xi'(0, z) = 0; it is entire
in z and real for real z.  Two independent computational routes are provided:

* ``xi_solve`` integrates the first-order system with a fixed-step explicit
  Runge-Kutta scheme of order 8 (frequency-scaled steps, complex state).
* ``xi_picard`` sums the Neumann series of the equivalent Volterra integral
  equation xi = cos(sqrt(z) x) + int_0^x G(z, x, y) V(y) xi(y, z) dy, whose
  terms decay factorially.

``wave_table`` is the batched production engine used by the spectral and
kernel layers: a collocation form of the same integral equation, vectorized
over many z at once on a shared panel grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import DOP853

from .numerics import (Grid, NumericsError, cumulative_panels, integrate,
                       make_grid)


class SolverError(RuntimeError):
    """Raised when an integration produces a non-finite state."""


# --------------------------------------------------------------------------
# potentials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Potential:
    """Real absolutely continuous potential on [0, s_max].

    Presets (zero, constant, cosine, polynomial) are smooth; the
    piecewise-linear kind is continuous with an integrable piecewise-constant
    derivative.  Instances are immutable and safe to share between threads.
    """

    kind: str
    s_max: float
    params: tuple = ()
    knots: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not self.s_max > 0:
            raise ValueError("s_max must be positive")
        if self.kind == "piecewise_linear":
            xs = np.asarray([k[0] for k in self.knots], dtype=float)
            if len(xs) < 2 or np.any(np.diff(xs) <= 0) or xs[0] != 0.0:
                raise ValueError("piecewise-linear nodes must start at 0 and increase")

    # ---- constructors ----
    @staticmethod
    def zero(s_max: float) -> "Potential":
        return Potential("zero", s_max)

    @staticmethod
    def constant(c: float, s_max: float) -> "Potential":
        return Potential("constant", s_max, (float(c),))

    @staticmethod
    def cosine(amplitude: float, frequency: float, s_max: float) -> "Potential":
        return Potential("cosine", s_max, (float(amplitude), float(frequency)))

    @staticmethod
    def polynomial(coefficients: Sequence[float], s_max: float) -> "Potential":
        return Potential("polynomial", s_max, tuple(float(c) for c in coefficients))

    @staticmethod
    def piecewise_linear(xs: Sequence[float], values: Sequence[float]) -> "Potential":
        knots = tuple((float(x), float(v)) for x, v in zip(xs, values))
        return Potential("piecewise_linear", knots[-1][0], (), knots)

    @staticmethod
    def parse(text: str) -> "Potential":
        """Parse the line-oriented potential format.

        Either a single line ``preset NAME PARAMS...`` with
        zero S | constant C S | cosine AMP FREQ S | polynomial S C0 C1 ...,
        or one ``x value`` pair per line for the piecewise-linear kind.
        """
        lines = [ln.strip() for ln in text.strip().splitlines()
                 if ln.strip() and not ln.strip().startswith("#")]
        if not lines:
            raise ValueError("empty potential specification")
        if lines[0].split()[0] == "preset":
            if len(lines) != 1:
                raise ValueError("preset potentials take a single line")
            parts = lines[0].split()
            name, args = parts[1], [float(v) for v in parts[2:]]
            if name == "zero":
                return Potential.zero(*args)
            if name == "constant":
                return Potential.constant(*args)
            if name == "cosine":
                return Potential.cosine(*args)
            if name == "polynomial":
                return Potential.polynomial(args[1:], args[0])
            raise ValueError(f"unknown preset {name!r}")
        pairs = [tuple(float(v) for v in ln.split()) for ln in lines]
        if any(len(p) != 2 for p in pairs):
            raise ValueError("piecewise-linear lines must be `x value`")
        return Potential.piecewise_linear([p[0] for p in pairs], [p[1] for p in pairs])

    def describe(self) -> str:
        if self.kind == "piecewise_linear":
            return "\n".join(f"{x:.17g} {v:.17g}" for x, v in self.knots)
        if self.kind == "polynomial":
            args = (self.s_max, *self.params)
        else:
            args = (*self.params, self.s_max)
        return "preset " + self.kind + " " + " ".join(f"{a:.17g}" for a in args)

    # ---- evaluation ----
    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(x)
        elif self.kind == "constant":
            out = np.full_like(x, self.params[0])
        elif self.kind == "cosine":
            amp, freq = self.params
            out = amp * np.cos(freq * x)
        elif self.kind == "polynomial":
            out = np.polynomial.polynomial.polyval(x, np.asarray(self.params))
        else:
            xs = np.array([k[0] for k in self.knots])
            vs = np.array([k[1] for k in self.knots])
            out = np.interp(x, xs, vs)
        return out if out.shape else float(out)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind in ("zero", "constant"):
            out = np.zeros_like(x)
        elif self.kind == "cosine":
            amp, freq = self.params
            out = -amp * freq * np.sin(freq * x)
        elif self.kind == "polynomial":
            out = np.polynomial.polynomial.polyval(
                x, np.polynomial.polynomial.polyder(np.asarray(self.params)))
        else:
            xs = np.array([k[0] for k in self.knots])
            vs = np.array([k[1] for k in self.knots])
            slopes = np.diff(vs) / np.diff(xs)
            idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
        return out if out.shape else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        if self.kind == "piecewise_linear":
            return tuple(k[0] for k in self.knots[1:-1])
        return ()

    def mean_value(self, s: float) -> float:
        """(1/s) * integral of V over [0, s], computed in closed form."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "cosine":
            amp, freq = self.params
            return amp if freq == 0 else amp * math.sin(freq * s) / (freq * s)
        if self.kind == "polynomial":
            c = np.asarray(self.params)
            return float(np.polynomial.polynomial.polyval(
                s, np.polynomial.polynomial.polyint(c))) / s
        xs = np.array([k[0] for k in self.knots])
        vs = np.array([k[1] for k in self.knots])
        xs = np.minimum(xs, s)
        vals = np.interp(xs, [k[0] for k in self.knots], vs)
        return float(np.trapezoid(vals, xs)) / s

    def derivative_l1(self, s: float | None = None) -> float:
        """integral of |V'| over [0, s]; finite for every supported kind."""
        s = self.s_max if s is None else s
        if self.kind == "piecewise_linear":
            xs = np.array([k[0] for k in self.knots])
            vs = np.array([k[1] for k in self.knots])
            right = np.minimum(xs[1:], s)
            seg = np.clip(right - xs[:-1], 0.0, None)
            slopes = np.abs(np.diff(vs) / np.diff(xs))
            return float(np.sum(slopes * seg))
        x = np.linspace(0.0, s, 20001)
        return float(np.trapezoid(np.abs(self.derivative(x)), x))


# --------------------------------------------------------------------------
# wave field containers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveField:
    """xi(., z) and xi'(., z) tabulated on a grid for one spectral point z."""

    z: complex
    grid: Grid
    xi: np.ndarray
    xi_prime: np.ndarray

    def __post_init__(self):
        if not (np.all(np.isfinite(self.xi)) and np.all(np.isfinite(self.xi_prime))):
            raise SolverError("non-finite wave field values")
        if abs(self.xi[0] - 1.0) > 1e-12 or abs(self.xi_prime[0]) > 1e-12:
            raise SolverError("initial conditions violated in wave field")


@dataclass(frozen=True)
class WaveTable:
    """Batched tabulation of xi(., z_j) on a shared grid (columns = z order)."""

    grid: Grid
    zs: np.ndarray
    xi: np.ndarray            # (grid.size, len(zs))
    xi_prime: np.ndarray | None = None

    def column(self, j: int) -> np.ndarray:
        return self.xi[:, j]

    @property
    def xi_end(self) -> np.ndarray:
        return self.xi[-1]

    @property
    def xi_prime_end(self) -> np.ndarray:
        if self.xi_prime is None:
            raise ValueError("table built without derivative data")
        return self.xi_prime[-1]


def greens(z: complex, x: float, y: float) -> complex:
    """Free Volterra kernel sin(sqrt(z)(x-y))/sqrt(z), entire in z."""
    d = x - y
    u = z * d * d
    if abs(u) < 1e-8:
        return d * (1.0 - u / 6.0 + u * u / 120.0)
    w = np.sqrt(complex(z))
    return complex(np.sin(w * d) / w)


# --------------------------------------------------------------------------
# batched Picard collocation engine
# --------------------------------------------------------------------------

def _picard_trig(grid: Grid, vpan: np.ndarray, zs: np.ndarray, tail_tol: float,
                 max_iterations: int):
    """Neumann series on panel collocation nodes, oscillatory kernel split
    sin(w(x-y)) = sin(wx)cos(wy) - cos(wx)sin(wy).  zs are already shifted.

    Arrays are laid out (order, n_panels, Z) so every pass is contiguous;
    real z > 0 runs entirely in real arithmetic.
    """
    w = np.sqrt(zs.astype(complex))
    if np.all(np.isreal(zs)) and np.all(np.real(zs) > 0):
        w = w.real
    x = grid.panel_nodes.T[..., None]
    v = vpan.T[..., None]
    cw = np.cos(w * x)
    sw = np.sin(w * x)
    xi = cw.copy()
    term = cw.copy()
    buf = np.empty_like(cw)
    floor = tail_tol * max(1.0, float(np.max(np.abs(cw))))
    converged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iterations):
            np.multiply(v, term, out=buf)
            cum_c = cumulative_panels(grid, cw * buf)
            cum_s = cumulative_panels(grid, sw * buf)
            np.multiply(sw, cum_c, out=term)
            cum_s *= cw
            term -= cum_s
            term /= w
            xi += term
            m = float(np.max(np.abs(term)))
            if not np.isfinite(m):
                raise SolverError("Picard iteration diverged (non-finite term)")
            if m < floor:
                converged = True
                break
    if not converged:
        raise SolverError("Picard iteration did not converge")
    np.multiply(v, xi, out=buf)
    cum_c = cumulative_panels(grid, cw * buf)
    cum_s = cumulative_panels(grid, sw * buf)
    cum_c *= cw
    cum_s *= sw
    xi_p = -w * sw
    xi_p += cum_c
    xi_p += cum_s
    return xi, xi_p


def _picard_poly(grid: Grid, vpan: np.ndarray, zs: np.ndarray, tail_tol: float,
                 max_iterations: int):
    """Same iteration with the kernel expanded in powers of z (x - y)^2;
    only used for shifted z so close to 0 that the trig split would divide
    by a vanishing frequency.  Layout (order, n_panels, Z)."""
    x = grid.panel_nodes.T[..., None]
    z = zs[None, None, :]
    v = vpan.T[..., None]
    kmax = 2
    xi = 1.0 - z * x ** 2 / 2.0 + z ** 2 * x ** 4 / 24.0 - z ** 3 * x ** 6 / 720.0
    term = xi.copy()
    converged = False
    for _ in range(max_iterations):
        new = np.zeros_like(term)
        for k in range(kmax + 1):
            ck = (-z) ** k / math.factorial(2 * k + 1)
            m = 2 * k + 1
            for j in range(m + 1):
                cum = cumulative_panels(grid, x ** j * v * term)
                new = new + ck * math.comb(m, j) * (-1.0) ** j * x ** (m - j) * cum
        term = new
        xi = xi + term
        m2 = float(np.max(np.abs(term)))
        if not np.isfinite(m2):
            raise SolverError("Picard iteration diverged (non-finite term)")
        if m2 < tail_tol:
            converged = True
            break
    if not converged:
        raise SolverError("Picard iteration did not converge")
    xi_p = np.zeros_like(xi)
    xi_p += -z * x * (1.0 - z * x ** 2 / 6.0 + z ** 2 * x ** 4 / 120.0)
    for k in range(kmax + 1):
        ck = (-z) ** k / math.factorial(2 * k)
        m = 2 * k
        for j in range(m + 1):
            cum = cumulative_panels(grid, x ** j * v * xi)
            xi_p = xi_p + ck * math.comb(m, j) * (-1.0) ** j * x ** (m - j) * cum
    return xi, xi_p


def _solve_panels(p: Potential, zs: np.ndarray, grid: Grid, tail_tol: float,
                  max_iterations: int):
    """Run the collocation iteration; returns panel-layout (order, n_panels, Z)."""
    if grid.hi > p.s_max + 1e-12:
        raise NumericsError("grid extends beyond the potential's extent")
    shift = p.mean_value(grid.hi)
    vpan = np.asarray(p.value(grid.panel_nodes), dtype=float) - shift
    zt = zs - shift
    small = np.abs(zt) * grid.hi ** 2 < 1e-6
    if np.all(~small):
        return _picard_trig(grid, vpan, zt, tail_tol, max_iterations)
    if np.all(small):
        return _picard_poly(grid, vpan, zt, tail_tol, max_iterations)
    shape = (grid.order, grid.n_panels, len(zs))
    xi = np.empty(shape, dtype=complex)
    xi_p = np.empty_like(xi)
    a, b = _picard_trig(grid, vpan, zt[~small], tail_tol, max_iterations)
    xi[..., ~small] = a
    xi_p[..., ~small] = b
    a, b = _picard_poly(grid, vpan, zt[small], tail_tol, max_iterations)
    xi[..., small] = a
    xi_p[..., small] = b
    return xi, xi_p


def boundary_pair(p: Potential, zs, grid: Grid, tail_tol: float = 1e-15,
                  max_iterations: int = 160) -> tuple[np.ndarray, np.ndarray]:
    """(xi(s, z), xi'(s, z)) for a batch of z, without tabulating the field."""
    zs = np.atleast_1d(np.asarray(zs))
    xi, xi_p = _solve_panels(p, zs, grid, tail_tol, max_iterations)
    end, end_p = xi[-1, -1], xi_p[-1, -1]
    if not (np.all(np.isfinite(end)) and np.all(np.isfinite(end_p))):
        raise SolverError("non-finite boundary values")
    return np.asarray(end, dtype=complex), np.asarray(end_p, dtype=complex)


def wave_table(p: Potential, zs, grid: Grid, tail_tol: float = 1e-15,
               max_iterations: int = 160, derivative: bool = True) -> WaveTable:
    """Tabulate xi(., z) (and xi') for a batch of z on the panel grid.

    The potential is shifted by its mean over the span, which shrinks the
    Neumann series without changing the solution; the series then converges
    in a handful of iterations once |sqrt(z)| dominates the potential size.
    """
    zs = np.atleast_1d(np.asarray(zs))
    xi, xi_p = _solve_panels(p, zs, grid, tail_tol, max_iterations)
    # flatten panel layout (shared edges hold identical values by construction)
    flat = np.empty((grid.size, len(zs)), dtype=complex)
    flat[grid.node_index.T.ravel()] = xi.reshape(-1, len(zs))
    if not np.all(np.isfinite(flat)):
        raise SolverError("non-finite wave table")
    flat_p = None
    if derivative:
        flat_p = np.empty((grid.size, len(zs)), dtype=complex)
        flat_p[grid.node_index.T.ravel()] = xi_p.reshape(-1, len(zs))
        if not np.all(np.isfinite(flat_p)):
            raise SolverError("non-finite wave table")
    return WaveTable(grid=grid, zs=zs, xi=flat, xi_prime=flat_p)


# --------------------------------------------------------------------------
# explicit Runge-Kutta route
# --------------------------------------------------------------------------

_RK_A = DOP853.A
_RK_B = DOP853.B
_RK_C = DOP853.C
_RK_STAGES = len(_RK_B)


def _rk_advance(vfun: Callable, zs: np.ndarray, x0: float, x1: float,
                y: np.ndarray, nsub: int) -> np.ndarray:
    h = (x1 - x0) / nsub
    k = np.empty((_RK_STAGES,) + y.shape, dtype=y.dtype)
    for _ in range(nsub):
        k[0, 0] = y[1]
        k[0, 1] = (vfun(x0) - zs) * y[0]
        for i in range(1, _RK_STAGES):
            yi = y + h * np.tensordot(_RK_A[i, :i], k[:i], axes=1)
            xi_ = x0 + _RK_C[i] * h
            k[i, 0] = yi[1]
            k[i, 1] = (vfun(xi_) - zs) * yi[0]
        y = y + h * np.tensordot(_RK_B, k, axes=1)
        x0 += h
    return y


def xi_solve_batch(p: Potential, zs, grid: Grid,
                   phase_per_step: float = 0.10) -> WaveTable:
    """Fixed-step order-8 Runge-Kutta integration of (xi, xi'), batched over z.

    Steps run node to node (panel edges include every potential breakpoint,
    so no step straddles a derivative jump); gaps wider than the phase budget
    for the fastest oscillation in the batch are subdivided.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    if grid.hi > p.s_max + 1e-12:
        raise NumericsError("grid extends beyond the potential's extent")
    omega = float(np.max(np.abs(np.sqrt(zs)))) + 1.0
    y = np.zeros((2, len(zs)), dtype=complex)
    y[0] = 1.0
    xi = np.empty((grid.size, len(zs)), dtype=complex)
    xi_p = np.empty_like(xi)
    xi[0], xi_p[0] = y
    nodes = grid.nodes
    hmax = phase_per_step / omega
    for i in range(1, len(nodes)):
        gap = nodes[i] - nodes[i - 1]
        nsub = max(1, int(np.ceil(gap / hmax)))
        y = _rk_advance(p.value, zs, nodes[i - 1], nodes[i], y, nsub)
        if not np.all(np.isfinite(y)):
            raise SolverError("Runge-Kutta state became non-finite")
        xi[i], xi_p[i] = y
    return WaveTable(grid=grid, zs=zs, xi=xi, xi_prime=xi_p)


def xi_solve(p: Potential, z: complex, s: float | None = None,
             grid: Grid | None = None) -> WaveField:
    """Solve the Neumann initial value problem for one z on [0, s]."""
    if grid is None:
        s = p.s_max if s is None else s
        grid = make_grid(0.0, s, oscillation=abs(np.sqrt(complex(z))),
                         breakpoints=p.breakpoints())
    else:
        s = grid.hi if s is None else s
        if abs(grid.hi - s) > 1e-12 or abs(grid.lo) > 1e-12:
            raise NumericsError("grid does not span [0, s]")
    if s > p.s_max + 1e-12:
        raise NumericsError("s exceeds the potential's extent")
    table = xi_solve_batch(p, [z], grid)
    return WaveField(z=z, grid=grid, xi=table.xi[:, 0], xi_prime=table.xi_prime[:, 0])


# --------------------------------------------------------------------------
# pointwise Picard iteration (the factorially convergent Neumann series)
# --------------------------------------------------------------------------

def picard_terms(p: Potential, z: complex, x: float, iterations: int,
                 tail_tol: float = 0.0) -> np.ndarray:
    """Values at x of the successive Neumann-series iterates.

    Term 0 is cos(sqrt(z) x); term n+1 applies the Volterra kernel to term n.
    Stops early once a term's sup over the grid falls below tail_tol.
    """
    if not 0.0 <= x <= p.s_max + 1e-12:
        raise NumericsError("x outside the potential's extent")
    if x == 0.0:
        out = np.zeros(iterations + 1, dtype=complex)
        out[0] = 1.0
        return out
    w = np.sqrt(complex(z))
    grid = make_grid(0.0, x, oscillation=abs(w),
                     breakpoints=[b for b in p.breakpoints() if b < x])
    xg = grid.panel_nodes.T
    vpan = np.asarray(p.value(xg), dtype=float)
    values = [np.complex128(np.cos(w * x))]
    if abs(z) * x * x < 1e-8:
        # kernel ~ (x - y) - z (x - y)^3 / 6: four cumulative moments suffice
        term = np.cos(w * xg).astype(complex)
        for _ in range(iterations):
            m0 = cumulative_panels(grid, vpan * term)
            m1 = cumulative_panels(grid, xg * vpan * term)
            term = xg * m0 - m1 - z * (
                xg ** 3 * m0 - 3 * xg ** 2 * m1
                + 3 * xg * cumulative_panels(grid, xg ** 2 * vpan * term)
                - cumulative_panels(grid, xg ** 3 * vpan * term)) / 6.0
            values.append(term[-1, -1])
            if tail_tol and np.max(np.abs(term)) < tail_tol:
                break
        return np.array(values)
    cw = np.cos(w * xg)
    sw = np.sin(w * xg)
    term = cw.astype(complex)
    for _ in range(iterations):
        cum_c = cumulative_panels(grid, cw * vpan * term)
        cum_s = cumulative_panels(grid, sw * vpan * term)
        term = (sw * cum_c - cw * cum_s) / w
        values.append(term[-1, -1])
        if tail_tol and np.max(np.abs(term)) < tail_tol:
            break
    return np.array(values)


def xi_picard(p: Potential, z: complex, x: float, iterations: int = 30,
              tail_tol: float = 1e-8) -> complex:
    """xi(x, z) through the truncated Neumann series (independent of xi_solve)."""
    if iterations < 0:
        raise NumericsError("iterations must be nonnegative")
    terms = picard_terms(p, z, x, iterations, tail_tol=tail_tol)
    if not np.all(np.isfinite(terms)):
        raise SolverError("non-finite Picard term")
    return complex(np.sum(terms))
