"""Per-path beamforming and phase-slope delay estimation.

Steering the array at an estimated angle isolates that path's spectrum up
to the fading coefficient and a small leakage term from the other paths.
Dividing out the known pulse spectrum leaves a residual whose phase is a
straight line in frequency with slope equal to minus the delay; the
constant fading phase lands in the intercept. Each snapshot is fitted
independently and the per-snapshot delays are aggregated afterwards,
because averaging the beamformer output across fading snapshots first
would cancel the signal (the fading coefficients have zero mean).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ValidationError
from .pulse import Spectrum, unwrap_phase
from .channel import SnapshotSet

__all__ = ["BeamformedSpectrum", "DelayEstimate", "beamform", "fit_delay"]

# Below this coefficient of determination a per-snapshot line fit is
# considered unreliable and flagged.
RSQ_RELIABLE = 0.5


@dataclass
class BeamformedSpectrum:
    """Beamformer output per (snapshot, path, frequency bin)."""

    values: np.ndarray
    sines_used: np.ndarray

    @property
    def num_snapshots(self) -> int:
        return self.values.shape[0]

    @property
    def num_paths(self) -> int:
        return self.values.shape[1]


@dataclass
class DelayEstimate:
    """Per-snapshot phase-slope delay fits and their aggregates.

    ``delay_per_snapshot`` is exactly ``-slope``; ``intercept`` absorbs the
    per-snapshot fading phase (modulo 2*pi). ``reliable`` marks fits whose
    r-squared reaches :data:`RSQ_RELIABLE`.
    """

    delay_per_snapshot: np.ndarray
    delay_median: np.ndarray
    delay_mean: np.ndarray
    slope: np.ndarray
    intercept: np.ndarray
    rsq: np.ndarray
    band: np.ndarray
    reliable: np.ndarray


def beamform(snaps: SnapshotSet, sines: Sequence[float]) -> BeamformedSpectrum:
    """Steer the array at each sin(angle) value and average over sensors.

    Output path i, bin q is (1/M) * sum_k exp(-j*2*pi*spacing*(k-1)*s_i)
    * x_k(w_q), evaluated for every snapshot.
    """
    sines = np.asarray(sines, dtype=float)
    if sines.ndim != 1 or sines.size == 0:
        raise ValidationError("need a non-empty 1-D list of sin(angle) values")
    if np.abs(sines).max() > 1.0:
        raise ValidationError("|sin(angle)| values must not exceed 1")
    m = snaps.num_sensors
    k = np.arange(m)
    weights = np.exp(-2j * np.pi * snaps.array.spacing * np.outer(sines, k)) / m
    values = np.einsum("lm,smn->sln", weights, snaps.spectra)
    return BeamformedSpectrum(values=values, sines_used=sines)


def fit_delay(
    bf: BeamformedSpectrum,
    g_spec: Spectrum,
    band: np.ndarray,
    weighted: bool = False,
) -> DelayEstimate:
    """Fit the in-band residual phase slope per snapshot and path.

    The beamformed spectrum is deconvolved by the known pulse spectrum
    (which removes the pulse phase without a second unwrapping pass), the
    residual phase is unwrapped across the band, and an ordinary (or
    |g|^2-weighted) least-squares line in omega gives the delay as minus
    the slope. Aggregates over snapshots are the median (robust to deep
    fades) and the mean.
    """
    band = np.asarray(band, dtype=int)
    if band.size < 3:
        raise ValidationError("band must contain at least 3 bins")
    if np.any(np.diff(band) != 1):
        raise ValidationError("band must be contiguous")
    g_band = g_spec.values[band]
    if np.any(g_band == 0):
        raise ValidationError("pulse spectrum vanishes inside the band")

    omega = g_spec.omega[band]
    residual = bf.values[:, :, band] * (np.conj(g_band) / np.abs(g_band) ** 2)
    phase = unwrap_phase(np.angle(residual), axis=-1)

    if weighted:
        w = np.abs(g_band) ** 2
        w = w / w.sum()
    else:
        w = np.full(band.size, 1.0 / band.size)

    # Weighted least squares of phase against omega, vectorized over
    # (snapshot, path).
    x_mean = np.dot(w, omega)
    x_centered = omega - x_mean
    x_var = np.dot(w, x_centered**2)
    y_mean = phase @ w
    y_centered = phase - y_mean[..., None]
    slope = (y_centered * x_centered) @ w / x_var
    intercept = y_mean - slope * x_mean

    fitted = slope[..., None] * omega + intercept[..., None]
    ss_res = ((phase - fitted) ** 2) @ w
    ss_tot = (y_centered**2) @ w
    # A perfectly flat phase (zero delay, exact data) has no variance to
    # explain; treat it as a perfect fit.
    rsq = np.where(ss_tot > 1e-30, 1.0 - ss_res / np.maximum(ss_tot, 1e-300), 1.0)
    rsq = np.clip(rsq, 0.0, 1.0)

    delays = -slope
    return DelayEstimate(
        delay_per_snapshot=delays,
        delay_median=np.median(delays, axis=0),
        delay_mean=np.mean(delays, axis=0),
        slope=slope,
        intercept=intercept,
        rsq=rsq,
        band=band,
        reliable=rsq >= RSQ_RELIABLE,
    )
