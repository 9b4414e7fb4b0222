"""Multipath array-signal synthesis with per-snapshot fading.

Each snapshot is one full record of the known pulse arriving over L
propagation paths at a uniform linear array. A path contributes the pulse
delayed by its arrival time, phased across sensors by its arrival angle,
and scaled by a random fading coefficient that is constant within the
snapshot (block fading) and independent across snapshots and paths.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .exceptions import ValidationError
from .pulse import SampledWaveform, _omega_grid

__all__ = [
    "ArrayConfig",
    "PathParam",
    "FadingModel",
    "SnapshotSet",
    "steering_vector",
    "synthesize",
    "save_dataset",
    "load_dataset",
]

DATASET_MAGIC = "JADE1"


@dataclass
class ArrayConfig:
    """Uniform linear array geometry.

    ``spacing`` is the element spacing in wavelengths. Spacings above half
    a wavelength alias angles within +/-90 degrees; that is allowed but
    warned about.
    """

    num_sensors: int
    spacing: float

    def validate(self) -> None:
        if self.num_sensors < 2:
            raise ValidationError(f"need at least 2 sensors, got {self.num_sensors}")
        if self.spacing <= 0:
            raise ValidationError(f"spacing must be positive, got {self.spacing}")
        if self.spacing > 0.5:
            warnings.warn(
                f"element spacing {self.spacing} wavelengths exceeds 0.5; "
                "angles may alias spatially",
                stacklevel=2,
            )


@dataclass
class PathParam:
    """One propagation path: arrival angle (degrees) and delay (samples).

    The delay may be fractional or negative; it is applied to the pulse
    spectrum as exp(-j*omega*delay).
    """

    angle_deg: float
    delay: float

    def validate(self, num_samples: Optional[int] = None) -> None:
        if not -90.0 < self.angle_deg < 90.0:
            raise ValidationError(
                f"angle must lie strictly inside (-90, 90) degrees, got {self.angle_deg}"
            )
        if not np.isfinite(self.delay):
            raise ValidationError("delay must be finite")
        if num_samples is not None and abs(self.delay) >= num_samples / 2:
            raise ValidationError(
                f"|delay| = {abs(self.delay)} must be below half the window "
                f"({num_samples / 2} samples)"
            )

    @property
    def sin_angle(self) -> float:
        return float(np.sin(np.radians(self.angle_deg)))


@dataclass
class FadingModel:
    """Per-snapshot multiplicative fading coefficient distribution.

    Variants
    --------
    deterministic : fixed complex coefficient ``beta`` (no randomness).
    rayleigh : real and imaginary parts i.i.d. N(0, sigma^2), so the
        amplitude is Rayleigh and the phase uniform. E|beta|^2 = 2 sigma^2.
    rician : line-of-sight amplitude ``nu`` plus a complex Gaussian
        scatter term with per-component std ``sigma``, rotated by a
        uniformly random global phase. K-factor = nu^2 / (2 sigma^2).
    suzuki : Rayleigh amplitude shadowed by a lognormal factor
        10^(X/20), X ~ N(mean_db, std_db^2), with uniform random phase.
    """

    kind: str = "rayleigh"
    beta: complex = 1.0 + 0.0j
    sigma: float = 1.0
    nu: float = 0.0
    mean_db: float = 0.0
    std_db: float = 0.0

    _KINDS = ("deterministic", "rayleigh", "rician", "suzuki")

    @classmethod
    def deterministic(cls, beta: complex = 1.0 + 0.0j) -> "FadingModel":
        return cls(kind="deterministic", beta=complex(beta))

    @classmethod
    def rayleigh(cls, sigma: float = 1.0) -> "FadingModel":
        return cls(kind="rayleigh", sigma=sigma)

    @classmethod
    def rician(cls, nu: float, sigma: float) -> "FadingModel":
        return cls(kind="rician", nu=nu, sigma=sigma)

    @classmethod
    def rician_from_k(cls, k_factor: float, power: float = 2.0) -> "FadingModel":
        """Rician model with the given K-factor and total power E|beta|^2."""
        if k_factor < 0:
            raise ValidationError(f"K-factor must be >= 0, got {k_factor}")
        sigma = np.sqrt(power / (2.0 * (1.0 + k_factor)))
        nu = np.sqrt(k_factor * power / (1.0 + k_factor))
        return cls(kind="rician", nu=float(nu), sigma=float(sigma))

    @classmethod
    def suzuki(cls, sigma: float = 1.0, mean_db: float = 0.0, std_db: float = 6.0) -> "FadingModel":
        return cls(kind="suzuki", sigma=sigma, mean_db=mean_db, std_db=std_db)

    def validate(self) -> None:
        if self.kind not in self._KINDS:
            raise ValidationError(f"unknown fading kind {self.kind!r}; one of {self._KINDS}")
        if self.kind in ("rayleigh", "rician", "suzuki") and self.sigma <= 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if self.kind == "rician" and self.nu < 0:
            raise ValidationError(f"nu must be >= 0, got {self.nu}")
        if self.kind == "suzuki" and self.std_db < 0:
            raise ValidationError(f"std_db must be >= 0, got {self.std_db}")

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` i.i.d. fading coefficients."""
        self.validate()
        if self.kind == "deterministic":
            return np.full(count, self.beta, dtype=complex)
        if self.kind == "rayleigh":
            return self.sigma * (
                rng.standard_normal(count) + 1j * rng.standard_normal(count)
            )
        if self.kind == "rician":
            scatter = rng.standard_normal(count) + 1j * rng.standard_normal(count)
            phase = rng.uniform(0.0, 2.0 * np.pi, count)
            return (self.nu + self.sigma * scatter) * np.exp(1j * phase)
        # suzuki
        amplitude = rng.rayleigh(self.sigma, count)
        shadow = 10.0 ** (rng.normal(self.mean_db, self.std_db, count) / 20.0)
        phase = rng.uniform(0.0, 2.0 * np.pi, count)
        return amplitude * shadow * np.exp(1j * phase)

    def mean_square(self) -> float:
        """E|beta|^2 for this model (used by closed-form power checks)."""
        self.validate()
        if self.kind == "deterministic":
            return abs(self.beta) ** 2
        if self.kind == "rayleigh":
            return 2.0 * self.sigma**2
        if self.kind == "rician":
            return self.nu**2 + 2.0 * self.sigma**2
        ln10 = np.log(10.0)
        return 2.0 * self.sigma**2 * np.exp((self.std_db * ln10 / 10.0) ** 2 / 2.0 + self.mean_db * ln10 / 10.0)


@dataclass
class SnapshotSet:
    """Synthesized (or loaded) array snapshots and their per-sensor spectra.

    ``data`` is indexed (snapshot, sensor, time) and ``spectra`` is its DFT
    along the time axis. ``paths``/``betas`` retain the generating ground
    truth when the set was synthesized; they are ``None`` for datasets
    loaded from disk.
    """

    data: np.ndarray
    spectra: np.ndarray
    array: ArrayConfig
    paths: Optional[List[PathParam]] = None
    fading: Optional[FadingModel] = None
    noise_var: float = 0.0
    seed: Optional[int] = None
    betas: Optional[np.ndarray] = None

    @property
    def num_snapshots(self) -> int:
        return self.data.shape[0]

    @property
    def num_sensors(self) -> int:
        return self.data.shape[1]

    @property
    def num_samples(self) -> int:
        return self.data.shape[2]


def steering_vector(arr: ArrayConfig, angle_deg: float) -> np.ndarray:
    """Array response to a unit plane wave from ``angle_deg``.

    Element k (1-based) is exp(j*2*pi*spacing*(k-1)*sin(angle)).
    """
    arr.validate()
    sin_theta = np.sin(np.radians(angle_deg))
    k = np.arange(arr.num_sensors)
    return np.exp(2j * np.pi * arr.spacing * k * sin_theta)


def _snapshot_rng(seed: int, snapshot: int) -> np.random.Generator:
    # Per-snapshot substream: snapshot content does not depend on the total
    # snapshot count, so parallel and serial generation agree.
    return np.random.default_rng(np.random.SeedSequence([seed, snapshot]))


def delayed_pulse_spectrum(pulse_values: np.ndarray, delay: float) -> np.ndarray:
    """Spectrum of the pulse delayed by ``delay`` samples (circular shift)."""
    n = len(pulse_values)
    omega = _omega_grid(n)
    return np.fft.fft(pulse_values) * np.exp(-1j * omega * delay)


def synthesize(
    pulse: SampledWaveform,
    paths: Sequence[PathParam],
    arr: ArrayConfig,
    fading: FadingModel,
    num_snapshots: int,
    noise_var: float = 0.0,
    seed: int = 0,
) -> SnapshotSet:
    """Generate array snapshots for the given paths, fading and noise.

    Delays are applied multiplicatively in the frequency domain, which
    supports fractional and negative values and matches the exp(-j*omega*
    delay) convention assumed by the estimator. Noise, when requested, is
    circular complex white Gaussian with variance ``noise_var`` per sample.
    The output is fully reproducible from ``seed``.
    """
    arr.validate()
    fading.validate()
    if len(paths) == 0:
        raise ValidationError("at least one path is required")
    if num_snapshots < 1:
        raise ValidationError(f"num_snapshots must be >= 1, got {num_snapshots}")
    if noise_var < 0:
        raise ValidationError(f"noise_var must be >= 0, got {noise_var}")
    if seed < 0:
        raise ValidationError(f"seed must be >= 0, got {seed}")
    n = len(pulse)
    for p in paths:
        p.validate(num_samples=n)

    num_paths = len(paths)
    m = arr.num_sensors
    # (L, N) delayed pulses and (M, L) steering matrix are fixed across snapshots.
    delayed = np.empty((num_paths, n), dtype=complex)
    for i, p in enumerate(paths):
        delayed[i] = np.fft.ifft(delayed_pulse_spectrum(pulse.values, p.delay))
    steering = np.column_stack([steering_vector(arr, p.angle_deg) for p in paths])

    data = np.empty((num_snapshots, m, n), dtype=complex)
    betas = np.empty((num_snapshots, num_paths), dtype=complex)
    for s in range(num_snapshots):
        rng = _snapshot_rng(seed, s)
        b = fading.draw(rng, num_paths)
        betas[s] = b
        data[s] = (steering * b) @ delayed
        if noise_var > 0:
            noise = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
            data[s] += np.sqrt(noise_var / 2.0) * noise

    spectra = np.fft.fft(data, axis=-1)
    return SnapshotSet(
        data=data,
        spectra=spectra,
        array=arr,
        paths=list(paths),
        fading=fading,
        noise_var=noise_var,
        seed=seed,
        betas=betas,
    )


def save_dataset(snaps: SnapshotSet, path) -> None:
    """Write snapshots as text: a header line, then one sensor per line.

    Format: ``JADE1 M=<sensors> N=<samples> S=<snapshots> delta=<spacing>``
    followed by S*M lines (snapshot-major), each holding N comma-separated
    ``re:im`` complex samples.
    """
    s_count, m, n = snaps.data.shape
    with open(path, "w") as fh:
        fh.write(
            f"{DATASET_MAGIC} M={m} N={n} S={s_count} delta={float(snaps.array.spacing)!r}\n"
        )
        for s in range(s_count):
            for k in range(m):
                row = snaps.data[s, k]
                fh.write(
                    ",".join(f"{float(v.real)!r}:{float(v.imag)!r}" for v in row)
                )
                fh.write("\n")


def _parse_header(line: str) -> dict:
    parts = line.split()
    if not parts or parts[0] != DATASET_MAGIC:
        raise ValidationError(f"not a {DATASET_MAGIC} dataset (bad header)")
    fields = {}
    for tok in parts[1:]:
        key, _, val = tok.partition("=")
        fields[key] = val
    try:
        return {
            "M": int(fields["M"]),
            "N": int(fields["N"]),
            "S": int(fields["S"]),
            "delta": float(fields["delta"]),
        }
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"malformed dataset header: {line!r}") from exc


def load_dataset(path) -> SnapshotSet:
    """Read a dataset written by :func:`save_dataset`.

    The per-sensor spectra are recomputed from the time series, so the
    loaded set satisfies the same data/spectra consistency as a
    synthesized one. Ground-truth fields are not stored in the file and
    come back as ``None``.
    """
    with open(path) as fh:
        header = _parse_header(fh.readline().strip())
        m, n, s_count = header["M"], header["N"], header["S"]
        data = np.empty((s_count, m, n), dtype=complex)
        for s in range(s_count):
            for k in range(m):
                line = fh.readline()
                if not line:
                    raise ValidationError(
                        f"dataset truncated at snapshot {s}, sensor {k}"
                    )
                cells = line.strip().replace(":", ",").split(",")
                if len(cells) != 2 * n:
                    raise ValidationError(
                        f"expected {n} re:im samples per line, got "
                        f"{len(cells) // 2} (snapshot {s}, sensor {k})"
                    )
                pairs = np.asarray(cells, dtype=float).reshape(n, 2)
                data[s, k] = pairs[:, 0] + 1j * pairs[:, 1]
    arr = ArrayConfig(num_sensors=m, spacing=header["delta"])
    return SnapshotSet(data=data, spectra=np.fft.fft(data, axis=-1), array=arr)
