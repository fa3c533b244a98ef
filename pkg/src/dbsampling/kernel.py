"""Reproducing kernels of the wave-transform spaces and the transform itself.

The space attached to (V, s) consists of the entire functions
f(z) = int_0^s xi(x, z) phi(x) dx with phi in L2(0, s); the map phi -> f is an
isometry and the reproducing kernel is k_s(z, w) = int_0^s xi(x, z)
xi(x, conj(w)) dx (hermitian, positive on the real diagonal).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .numerics import Grid, NumericsError, integrate, make_grid
from .schrodinger import Potential, WaveTable, wave_table


def _chunk_size(grid: Grid, cap: int = 4_000_000) -> int:
    return max(1, int(cap // grid.size))


def eigen_table(p: Potential, grid: Grid, ts, tail_tol: float = 1e-15) -> WaveTable:
    """Tabulate xi(., t) for a (possibly long) batch of real spectral points.

    Chunks are banded by frequency (iteration count follows the slowest
    member of a batch) and capped so intermediate arrays stay modest.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    order = np.argsort(np.abs(ts))
    xi = np.empty((grid.size, len(ts)), dtype=complex)
    xi_p = np.empty_like(xi)
    cap_n = _chunk_size(grid)
    pos = 0
    while pos < len(ts):
        omega_lo = max(1.0, np.sqrt(abs(ts[order[pos]])))
        cap = max(1.5 * omega_lo, omega_lo + 5.0) ** 2
        take = int(np.searchsorted(np.abs(ts[order[pos:]]), cap, side="right"))
        take = min(max(take, 1), cap_n)
        sel = order[pos:pos + take]
        t = wave_table(p, ts[sel], grid, tail_tol=tail_tol)
        xi[:, sel] = t.xi
        xi_p[:, sel] = t.xi_prime
        pos += take
    return WaveTable(grid=grid, zs=ts, xi=xi, xi_prime=xi_p)


def product_grid(p: Potential, s: float, omega_left: float, omega_right: float,
                 extra_breaks=()) -> Grid:
    """Panel grid resolving products xi(., z) xi(., t) of the two frequencies."""
    breaks = tuple(p.breakpoints()) + tuple(extra_breaks)
    return make_grid(0.0, s, oscillation=omega_left + omega_right + 1.0,
                     breakpoints=[b for b in breaks if 0.0 < b < s])


def kernel_columns(p: Potential, s: float, zs, ts, weight_values=None,
                   grid: Grid | None = None,
                   tables: tuple[WaveTable, WaveTable] | None = None) -> np.ndarray:
    """Matrix of weighted pairings int_0^s xi(x, z_i) W(x) xi(x, t_j) dx.

    For real t_j and W = 1 this is the kernel column k_s(z_i, t_j).  Pass
    precomputed tables (matching `grid`) to amortize tabulation across calls.
    """
    zs = np.atleast_1d(np.asarray(zs))
    ts = np.atleast_1d(np.asarray(ts))
    if grid is None:
        oz = float(np.max(np.abs(np.sqrt(zs.astype(complex)))))
        ot = float(np.max(np.abs(np.sqrt(ts.astype(complex)))))
        grid = product_grid(p, s, oz, ot)
    if tables is None:
        left = eigen_table(p, grid, zs) if np.isrealobj(zs) else _complex_table(p, grid, zs)
        right = eigen_table(p, grid, ts) if np.isrealobj(ts) else _complex_table(p, grid, ts)
    else:
        left, right = tables
    w = grid.weights if weight_values is None else grid.weights * weight_values
    return (left.xi * w[:, None]).T @ right.xi


def _complex_table(p: Potential, grid: Grid, zs) -> WaveTable:
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    xi = np.empty((grid.size, len(zs)), dtype=complex)
    xi_p = np.empty_like(xi)
    step = _chunk_size(grid)
    for k in range(0, len(zs), step):
        t = wave_table(p, zs[k:k + step], grid)
        xi[:, k:k + step] = t.xi
        xi_p[:, k:k + step] = t.xi_prime
    return WaveTable(grid=grid, zs=zs, xi=xi, xi_prime=xi_p)


def kernel_k(p: Potential, s: float, z: complex, w: complex,
             grid: Grid | None = None) -> complex:
    """Reproducing kernel k_s(z, w) = <xi(., conj z), xi(., conj w)> by
    quadrature of xi(x, z) xi(x, conj(w)); hermitian in (z, w)."""
    if s > p.s_max + 1e-12:
        raise NumericsError("s exceeds the potential's extent")
    if grid is None:
        osc = abs(np.sqrt(complex(z))) + abs(np.sqrt(complex(w))) + 1.0
        grid = make_grid(0.0, s, oscillation=osc, breakpoints=p.breakpoints())
    table = wave_table(p, np.array([complex(z), np.conj(complex(w))]), grid)
    return complex(integrate(grid, table.xi[:, 0] * table.xi[:, 1]))


def kernel_diag(p: Potential, s: float, ts, grid: Grid | None = None) -> np.ndarray:
    """Diagonal values k_s(t, t) = int xi(x, t)^2 dx for real t (always > 0)."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.empty(len(ts))
    order = np.argsort(np.abs(ts))
    pos = 0
    while pos < len(ts):
        omega = max(1.0, abs(np.sqrt(abs(ts[order[pos]]))))
        cap = max(1.5 * omega, omega + 5.0) ** 2
        take = int(np.searchsorted(np.abs(ts[order[pos:]]), cap, side="right"))
        take = max(take, 1)
        sel = order[pos:pos + take]
        omega_hi = max(1.0, abs(np.sqrt(abs(ts[sel[-1]]))))
        g = grid if grid is not None else make_grid(
            0.0, s, oscillation=2.0 * omega_hi + 1.0, breakpoints=p.breakpoints())
        table = eigen_table(p, g, ts[sel])
        vals = np.real(table.xi) ** 2
        out[sel] = np.tensordot(g.weights, vals, axes=(0, 0))
        pos += take
    if np.any(out <= 0):
        raise NumericsError("nonpositive diagonal kernel value")
    return out


def _sinc_like(t: complex, s: float) -> complex:
    """sin(t s)/t, with the removable singularity filled by its series."""
    u = t * s
    if abs(u) < 1e-4:
        return s * (1.0 - u * u / 6.0 + u ** 4 / 120.0)
    return np.sin(u) / t


def kernel_free(s: float, z: complex, w: complex) -> complex:
    """Closed form of the zero-potential kernel int_0^s cos(sqrt z x)
    cos(sqrt(conj w) x) dx, with series branches near the removable
    singularities sqrt(z) -> +-sqrt(w) and sqrt(z), sqrt(w) -> 0."""
    u = np.sqrt(complex(z))
    v = np.conj(np.sqrt(complex(w)))
    return complex(0.5 * (_sinc_like(u - v, s) + _sinc_like(u + v, s)))


# --------------------------------------------------------------------------
# the isometric transform
# --------------------------------------------------------------------------

@dataclass
class DBFunction:
    """An element f(z) = int_0^s xi(x, z) phi(x) dx given by samples of phi.

    The evaluation cache is an optimization only; semantics are fixed by
    fresh quadrature against the tabulated phi.
    """

    potential: Potential
    s: float
    grid: Grid
    phi: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def norm_l2(self) -> float:
        return float(np.sqrt(np.real(integrate(self.grid, np.abs(self.phi) ** 2))))

    def phi_on(self, grid: Grid) -> np.ndarray:
        """Resample phi onto another grid by panel-wise interpolation."""
        if grid is self.grid:
            return self.phi
        return self.grid.interpolate(self.phi, grid.nodes)


def transform(p: Potential, s: float, phi, grid: Grid) -> DBFunction:
    """Wrap L2(0, s) samples as a member of the transform space."""
    phi = np.asarray(phi)
    if phi.shape[0] != grid.size:
        raise NumericsError("phi samples not coherent with the grid")
    if abs(grid.lo) > 1e-12 or abs(grid.hi - s) > 1e-9:
        raise NumericsError("grid does not span [0, s]")
    if s > p.s_max + 1e-12:
        raise NumericsError("s exceeds the potential's extent")
    return DBFunction(potential=p, s=s, grid=grid, phi=phi)


def evaluate_many(f: DBFunction, zs, use_cache: bool = True) -> np.ndarray:
    """f(z) = int_0^s xi(x, z) phi(x) dx for a batch of z."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    out = np.empty(len(zs), dtype=complex)
    missing, idx = [], []
    if use_cache:
        with f._lock:
            for j, z in enumerate(zs):
                key = complex(z)
                if key in f._cache:
                    out[j] = f._cache[key]
                else:
                    missing.append(key)
                    idx.append(j)
    else:
        missing, idx = [complex(z) for z in zs], list(range(len(zs)))
    if missing:
        omega = max(abs(np.sqrt(complex(z))) for z in missing) + 1.0
        dens = (1.0 + omega) * np.max(f.grid.panel_widths)
        if dens <= 3.0 * f.grid.order / 8.0:
            grid, phi = f.grid, f.phi
        else:
            grid = make_grid(0.0, f.s, oscillation=omega,
                             breakpoints=sorted(set(f.grid.breakpoints) |
                                                set(f.potential.breakpoints())))
            phi = f.phi_on(grid)
        step = _chunk_size(grid)
        vals = np.empty(len(missing), dtype=complex)
        marr = np.asarray(missing)
        for k in range(0, len(missing), step):
            table = wave_table(f.potential, marr[k:k + step], grid)
            vals[k:k + step] = np.tensordot(grid.weights * phi, table.xi, axes=(0, 0))
        for j, key, v in zip(idx, missing, vals):
            out[j] = v
        if use_cache:
            with f._lock:
                for key, v in zip(missing, vals):
                    f._cache.setdefault(key, complex(v))
    return out


def evaluate(f: DBFunction, z: complex) -> complex:
    """Evaluate the transform at a single point."""
    return complex(evaluate_many(f, [z])[0])
