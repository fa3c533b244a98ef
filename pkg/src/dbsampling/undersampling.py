"""Undersampling (aliasing): reconstructing from the sparser spectrum.

A member g of the large space (extent b) is fed to the sampling series of the
small space (extent a < b).  The result ghat interpolates g on the small
spectrum, and the pointwise error is controlled by

    |g(z) - ghat(z)| <= h_a(z) * int_a^b |psi|,

where h_a(z) = sup_{x in [a,b]} |xi_ext(x, z) - xi(x, z)| measures how badly
the kernel-expansion continuation xi_ext of xi(., z) fails beyond a, and psi
is the L2 profile generating g.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import DBFunction, eigen_table, product_grid
from .numerics import Grid, integrate, kahan_sum
from .schrodinger import Potential, WaveTable, wave_table
from .spectrum import SpectralData


class UndersamplingError(ValueError):
    pass


@dataclass
class ExtensionField:
    """Series continuation of xi(., z) built from the small-space expansion.

    xi_ext(x, z) = sum_n [k_a(lambda_n, conj z)/k_a(lambda_n, lambda_n)]
    xi(x, lambda_n) for x in [0, b]; it agrees with xi(., z) on [0, a] and
    deviates beyond.  Tabulation is cached per z; at z equal to a small-space
    eigenvalue the series collapses to its single surviving term, which is
    used verbatim so the equality xi_ext = xi holds exactly there.
    """

    potential: Potential
    a: float
    b: float
    spectral_a: SpectralData
    n_cut: int
    zmax_hint: float = 1200.0
    grid: Grid = field(init=False, default=None, repr=False)
    _eig: WaveTable = field(init=False, default=None, repr=False)
    _wa: np.ndarray = field(init=False, default=None, repr=False)
    _coeff_cache: dict = field(init=False, default_factory=dict, repr=False)
    _tab_cache: dict = field(init=False, default_factory=dict, repr=False)
    _direct_cache: dict = field(init=False, default_factory=dict, repr=False)
    _h_cache: dict = field(init=False, default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 < self.a < self.b:
            raise UndersamplingError("need 0 < a < b")
        if abs(self.spectral_a.s - self.a) > 1e-9:
            raise UndersamplingError("spectral data does not live on [0, a]")
        if self.n_cut > self.spectral_a.n_max:
            raise UndersamplingError("truncation exceeds the spectral data")
        if self.b > self.potential.s_max + 1e-12:
            raise UndersamplingError("b exceeds the potential's extent")

    def _ensure_tables(self):
        if self.grid is None:
            omega_t = float(np.sqrt(abs(self.spectral_a.eigenvalues[-1]))) + 1.0
            self.grid = product_grid(self.potential, self.b,
                                     np.sqrt(self.zmax_hint) + 1.5, omega_t,
                                     extra_breaks=(self.a,))
            self._eig = eigen_table(self.potential, self.grid,
                                    self.spectral_a.eigenvalues)
            self._wa = self.grid.subspan_weights(0.0, self.a)

    def xi_columns(self, zs) -> np.ndarray:
        """xi(., z) tabulated on the [0, b] grid, cached per z; spectral
        points are served verbatim from the eigenfunction table."""
        self._ensure_tables()
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        missing = []
        for j, z in enumerate(zs):
            if complex(z) in self._direct_cache:
                continue
            m = self._eig_index(complex(z))
            if m is not None:
                self._direct_cache[complex(z)] = self._eig.xi[:, m]
            else:
                missing.append(j)
        if missing:
            zt = wave_table(self.potential, zs[missing], self.grid)
            for j, col in zip(missing, zt.xi.T):
                self._direct_cache[complex(zs[j])] = col
        return np.stack([self._direct_cache[complex(z)] for z in zs], axis=1)

    def _eig_index(self, z: complex) -> int | None:
        if z.imag != 0.0:
            return None
        hit = np.nonzero(self.spectral_a.eigenvalues == z.real)[0]
        return int(hit[0]) if len(hit) else None

    def coefficients(self, zs, n_cut: int | None = None) -> np.ndarray:
        """Rows k_a(lambda_n, conj z)/k_a(lambda_n, lambda_n), n <= n_cut."""
        self._ensure_tables()
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        n_cut = self.n_cut if n_cut is None else n_cut
        missing = [j for j, z in enumerate(zs)
                   if complex(z) not in self._coeff_cache]
        if missing:
            # spectral points are already tabulated; everything else needs a solve
            fresh = [j for j in missing if self._eig_index(complex(zs[j])) is None]
            for j in missing:
                m = self._eig_index(complex(zs[j]))
                if m is not None:
                    num = (self._eig.xi[:, m] * self._wa) @ self._eig.xi
                    self._coeff_cache[complex(zs[j])] = num / self.spectral_a.norming
            if fresh:
                zf = zs[fresh]
                if np.max(np.abs(np.sqrt(zf))) > np.sqrt(self.zmax_hint) + 1.0:
                    raise UndersamplingError("z outside the declared range")
                cols = self.xi_columns(zf)
                num = (cols * self._wa[:, None]).T @ self._eig.xi
                rows = num / self.spectral_a.norming
                for j, row in zip(fresh, rows):
                    self._coeff_cache[complex(zs[j])] = row
        return np.array([self._coeff_cache[complex(z)][:n_cut + 1] for z in zs])

    def tabulate(self, z: complex, n_cut: int | None = None) -> np.ndarray:
        """xi_ext(., z) on the grid nodes over [0, b]."""
        self._ensure_tables()
        n_cut = self.n_cut if n_cut is None else n_cut
        key = (complex(z), n_cut)
        if key in self._tab_cache:
            return self._tab_cache[key]
        hit = np.nonzero(self.spectral_a.eigenvalues == complex(z).real)[0]
        if len(hit) and complex(z).imag == 0.0:
            vals = self._eig.xi[:, hit[0]].copy()  # one-term series, exactly xi
        else:
            c = self.coefficients([z], n_cut)[0]
            vals = self._eig.xi[:, :n_cut + 1] @ c
        self._tab_cache[key] = vals
        return vals

    def direct(self, z: complex) -> np.ndarray:
        """xi(., z) itself on the same grid (for error functionals)."""
        return self.xi_columns([z])[:, 0]


def xi_ext(p: Potential, a: float, sd_a: SpectralData, x: float, z: complex,
           n_cut: int, field_: ExtensionField | None = None) -> complex:
    """Pointwise value of the continuation series at x in [0, b]."""
    f = field_ or ExtensionField(potential=p, a=a, b=p.s_max,
                                 spectral_a=sd_a, n_cut=n_cut)
    if not 0.0 <= x <= f.b + 1e-12:
        raise UndersamplingError("x outside [0, b]")
    vals = f.tabulate(z, n_cut)
    return complex(f.grid.interpolate(vals, np.array([x]))[0])


def h_sup(p: Potential, a: float, b: float, sd_a: SpectralData, z: complex,
          n_cut: int, x_points: int = 2048,
          field_: ExtensionField | None = None) -> float:
    """sup over [a, b] of |xi_ext - xi| via a uniform scan refined by one
    golden-section pass around the discrete argmax."""
    f = field_ or ExtensionField(potential=p, a=a, b=b, spectral_a=sd_a,
                                 n_cut=n_cut)
    key = (complex(z), n_cut, x_points)
    if key in f._h_cache:
        return f._h_cache[key]
    diff = f.tabulate(z, n_cut) - f.direct(z)
    xs = np.linspace(a, b, x_points)
    vals = np.abs(f.grid.interpolate(diff, xs))
    i = int(np.argmax(vals))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    best = float(vals[i])
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1 = float(np.abs(f.grid.interpolate(diff, np.array([x1]))[0]))
    f2 = float(np.abs(f.grid.interpolate(diff, np.array([x2]))[0]))
    for _ in range(40):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = float(np.abs(f.grid.interpolate(diff, np.array([x2]))[0]))
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = float(np.abs(f.grid.interpolate(diff, np.array([x1]))[0]))
        if hi - lo < 1e-10:
            break
    out = max(best, f1, f2)
    f._h_cache[key] = out
    return out


def undersampled_reconstruct(ext: ExtensionField, samples, z: complex,
                             n_cut: int | None = None) -> complex:
    """ghat(z) = sum_{n<=N} [k_a(lambda_n, conj z)/k_a(lambda_n, lambda_n)]
    g(lambda_n), the aliased reconstruction of a large-space element."""
    n_cut = ext.n_cut if n_cut is None else n_cut
    samples = np.asarray(samples, dtype=complex)
    if len(samples) < n_cut + 1:
        raise UndersamplingError("fewer samples than the truncation order")
    c = ext.coefficients([z], n_cut)[0]
    return complex(kahan_sum(c * samples[:n_cut + 1]))


def hyp2_abs_sum(ext: ExtensionField, zs, n_cut: int) -> np.ndarray:
    """sum_{n<=N} |k_a(lambda_n, conj z)/k_a(lambda_n, lambda_n)| *
    sup_{x in [0,b]} |xi(x, lambda_n)| (absolute convergence functional)."""
    ext._ensure_tables()
    sups = np.max(np.abs(ext._eig.xi[:, :n_cut + 1]), axis=0)
    c = np.abs(ext.coefficients(zs, n_cut))
    return c @ sups


@dataclass(frozen=True)
class AliasingReport:
    """Pointwise audit of the aliasing bound on a z grid for one profile."""

    a: float
    b: float
    n_cut: int
    int_psi_tail: float
    sup_h: float
    max_violation: float
    z_grid_size: int
    x_grid_size: int
    interp_error: float
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "N": self.n_cut,
            "int_psi_tail": self.int_psi_tail, "sup_h": self.sup_h,
            "max_violation": self.max_violation,
            "z_grid_size": self.z_grid_size, "x_grid_size": self.x_grid_size,
            "interp_error": self.interp_error, "pass": self.passed,
        }


def aliasing_report(p: Potential, a: float, b: float, sd_a: SpectralData,
                    psi: DBFunction, zs, n_cut: int,
                    field_: ExtensionField | None = None,
                    x_points: int = 2048) -> AliasingReport:
    """Check |g(z) - ghat(z)| <= h_a(z) int_a^b |psi| on the z grid.

    Also records the interpolation defect max_n |ghat(lambda_n) -
    g(lambda_n)| over the spectral points below the truncation order.
    """
    if abs(psi.s - b) > 1e-9:
        raise UndersamplingError("psi must span [0, b]")
    ext = field_ or ExtensionField(potential=p, a=a, b=b, spectral_a=sd_a,
                                   n_cut=n_cut)
    ext._ensure_tables()
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    psi_vals = psi.phi_on(ext.grid)
    g_samples = (ext.grid.weights * psi_vals) @ ext._eig.xi[:, :n_cut + 1]
    coeff = ext.coefficients(zs, n_cut)
    ghat = coeff @ g_samples
    g_vals = (ext.grid.weights * psi_vals) @ ext.xi_columns(zs)
    tail = float(np.real(integrate(ext.grid, np.abs(psi_vals), a, b)))
    hs = np.array([h_sup(p, a, b, sd_a, z, n_cut, x_points=x_points,
                         field_=ext) for z in zs])
    violation = np.abs(g_vals - ghat) - hs * tail
    # interpolation at the sampled spectral points (series collapses there)
    lam = sd_a.eigenvalues[:n_cut + 1]
    sel = np.linspace(0, n_cut, 8, dtype=int)
    ghat_lam = np.array([undersampled_reconstruct(ext, g_samples, lam[j], n_cut)
                         for j in sel])
    interp_err = float(np.max(np.abs(ghat_lam - g_samples[sel])))
    max_violation = float(np.max(violation))
    return AliasingReport(
        a=a, b=b, n_cut=n_cut, int_psi_tail=tail,
        sup_h=float(np.max(hs)), max_violation=max_violation,
        z_grid_size=len(zs), x_grid_size=x_points, interp_error=interp_err,
        passed=bool(max_violation <= 1e-9 * (1.0 + tail)))
