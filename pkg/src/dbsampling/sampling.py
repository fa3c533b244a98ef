"""Plain Kramer-type sampling: f(z) = sum_n f(lambda_n) k(z, lambda_n) / k(lambda_n, lambda_n).

Samples live on the spectrum of a selfadjoint realization; the series
converges uniformly on compact subsets of the plane for every member of the
transform space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import DBFunction, eigen_table, evaluate_many, product_grid
from .numerics import kahan_sum
from .schrodinger import Potential
from .spectrum import SpectralData


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SampledFunction:
    """Samples of a transform-space element over a spectrum, with optional
    bounded perturbations attached."""

    spectral: SpectralData
    samples: np.ndarray
    truncation: int
    noise: np.ndarray | None = None

    def __post_init__(self):
        if len(self.samples) < self.truncation + 1:
            raise SamplingError("fewer samples than the truncation order")
        if self.noise is not None and len(self.noise) != len(self.samples):
            raise SamplingError("noise length must match samples")

    def noisy_samples(self) -> np.ndarray:
        if self.noise is None:
            return self.samples
        return self.samples + self.noise


class KramerKernel:
    """Provider of normalized kernel rows K(z, lambda_n) = k(z, lambda_n) /
    k(lambda_n, lambda_n), tabulated once per spectrum and reused across z."""

    def __init__(self, p: Potential, sd: SpectralData,
                 zmax_hint: float | None = None):
        self.potential = p
        self.spectral = sd
        omega_t = float(np.sqrt(np.abs(sd.eigenvalues[-1]))) + 1.0
        if zmax_hint is None:
            self._omega_z = omega_t + 0.5
        else:
            self._omega_z = float(np.sqrt(zmax_hint)) + 1.5
        self.grid = product_grid(p, sd.s, self._omega_z, omega_t)
        self._table = eigen_table(p, self.grid, sd.eigenvalues)

    def rows(self, zs, n_cut: int | None = None) -> np.ndarray:
        """Kernel rows for a batch of z; shape (len(zs), n_cut + 1)."""
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        if np.max(np.abs(np.sqrt(zs))) > self._omega_z:
            raise SamplingError("z outside the provider's declared range")
        n_cut = self.spectral.n_max if n_cut is None else n_cut
        from .schrodinger import wave_table
        zt = wave_table(self.potential, zs, self.grid)
        k = (zt.xi * self.grid.weights[:, None]).T @ self._table.xi[:, :n_cut + 1]
        return k / self.spectral.norming[:n_cut + 1]

    def row(self, z: complex, n_cut: int | None = None) -> np.ndarray:
        return self.rows([z], n_cut)[0]


def take_samples(f: DBFunction, sd: SpectralData, n_cut: int) -> SampledFunction:
    """Evaluate f at the first n_cut + 1 spectral points."""
    if f.s > sd.s + 1e-9:
        raise SamplingError("f does not belong to the sampled space")
    if sd.n_max < n_cut:
        raise SamplingError("spectral data shorter than requested truncation")
    samples = evaluate_many(f, sd.eigenvalues[:n_cut + 1])
    return SampledFunction(spectral=sd, samples=samples, truncation=n_cut)


def reconstruct(sf: SampledFunction, sd: SpectralData, provider: KramerKernel,
                z: complex) -> complex:
    """Truncated sampling series at z, summed in ascending order with
    compensated summation."""
    row = provider.row(z, sf.truncation)
    terms = sf.noisy_samples()[:sf.truncation + 1] * row
    return complex(kahan_sum(terms))


def reconstruct_many(sf: SampledFunction, sd: SpectralData,
                     provider: KramerKernel, zs) -> np.ndarray:
    rows = provider.rows(zs, sf.truncation)
    vals = rows * sf.noisy_samples()[None, :sf.truncation + 1]
    return np.array([kahan_sum(v) for v in vals])


@dataclass(frozen=True)
class ConvergenceProfile:
    """Reconstruction error against truncation order on a fixed z grid."""

    n_values: tuple
    sup_errors: tuple
    rows: tuple  # (z, f_exact, f_N, abs_err) at the largest truncation

    def csv_rows(self):
        return [(z.real, z.imag, fe.real, fe.imag, fn.real, fn.imag, err)
                for (z, fe, fn, err) in self.rows]


def convergence_profile(sf: SampledFunction, sd: SpectralData,
                        provider: KramerKernel, zs, n_values,
                        f_exact) -> ConvergenceProfile:
    """Sup-error of the truncated series over zs for each truncation order.

    f_exact may be a DBFunction or an array of reference values on zs.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    if isinstance(f_exact, DBFunction):
        reference = evaluate_many(f_exact, zs)
    else:
        reference = np.asarray(f_exact, dtype=complex)
    rows_full = provider.rows(zs, max(n_values))
    sups = []
    for n in n_values:
        vals = rows_full[:, :n + 1] @ sf.noisy_samples()[:n + 1]
        sups.append(float(np.max(np.abs(vals - reference))))
    n_top = max(n_values)
    vals = rows_full[:, :n_top + 1] @ sf.noisy_samples()[:n_top + 1]
    rows = tuple((complex(z), complex(fe), complex(fn), float(abs(fn - fe)))
                 for z, fe, fn in zip(zs, reference, vals))
    return ConvergenceProfile(n_values=tuple(int(n) for n in n_values),
                              sup_errors=tuple(sups), rows=rows)
