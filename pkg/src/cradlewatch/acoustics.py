"""Offline spectral analysis for the white-noise actuator.

Validates the masking idea behind the white-noise machine: a broadband noise
superposed on a tonal disturbance flattens the combined spectrum over the
250-5500 Hz band the machine covers. Spectra are single rectangular-window
DFT power spectra; flatness is the geometric-over-arithmetic mean ratio of
the band's spectral magnitudes (1.0 for a perfectly flat band, near 0 for a
pure tone).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from sys import float_info

import numpy as np

from .rng import Xorshift64Star

BAND_LO_HZ = 250.0
BAND_HI_HZ = 5500.0

# SampleBuffer must be able to resolve the band of interest.
MIN_RATE_HZ = int(2 * BAND_HI_HZ)


class EmptyBufferError(ValueError):
    pass


class EmptyBandError(ValueError):
    pass


class LengthMismatchError(ValueError):
    pass


class RateMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SampleBuffer:
    """A real-amplitude signal at a fixed sample rate."""

    samples: np.ndarray
    rate_hz: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise EmptyBufferError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")
        if self.rate_hz < MIN_RATE_HZ:
            raise ValueError(f"rate_hz must be >= {MIN_RATE_HZ} to resolve the band")

    def __len__(self) -> int:
        return int(self.samples.size)


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """One-sided power spectrum: bin k holds |X[k]|^2 / N^2 at freq k*rate/N."""

    freqs_hz: np.ndarray
    power: np.ndarray
    rate_hz: int
    n_samples: int

    def bins(self) -> list[tuple[float, float]]:
        return list(zip(self.freqs_hz.tolist(), self.power.tolist()))


def power_spectrum(buf: SampleBuffer) -> PowerSpectrum:
    """Rectangular-window DFT power spectrum, one-sided (k = 0 .. N//2)."""
    n = len(buf)
    spectrum = np.fft.rfft(buf.samples)
    power = (spectrum.real**2 + spectrum.imag**2) / float(n * n)
    freqs = np.arange(power.size) * (buf.rate_hz / n)
    return PowerSpectrum(freqs_hz=freqs, power=power, rate_hz=buf.rate_hz, n_samples=n)


def total_power(spec: PowerSpectrum) -> float:
    """Sum of the one-sided spectrum with interior bins counted twice.

    Equals sum(x**2)/N (Parseval); the 0 Hz bin, and the Nyquist bin when N is
    even, appear once in the full spectrum and are not doubled.
    """
    doubled = 2.0 * float(np.sum(spec.power[1:]))
    if spec.n_samples % 2 == 0:
        doubled -= float(spec.power[-1])
    return float(spec.power[0]) + doubled


def band_flatness(spec: PowerSpectrum, lo_hz: float = BAND_LO_HZ, hi_hz: float = BAND_HI_HZ) -> float:
    """Spectral flatness of the band: geometric / arithmetic mean of magnitudes.

    Zero bins are floored at machine-epsilon scale before the geometric mean,
    so a silent band reads as flat and a lone tone reads as ~0.
    """
    mask = (spec.freqs_hz >= lo_hz) & (spec.freqs_hz <= hi_hz)
    if int(mask.sum()) < 2:
        raise EmptyBandError(f"band [{lo_hz}, {hi_hz}] Hz covers fewer than 2 bins")
    magnitudes = np.sqrt(spec.power[mask])
    magnitudes = np.where(magnitudes == 0.0, float_info.epsilon, magnitudes)
    geometric = math.exp(float(np.mean(np.log(magnitudes))))
    return geometric / float(np.mean(magnitudes))


def band_peak_hz(spec: PowerSpectrum, lo_hz: float = BAND_LO_HZ, hi_hz: float = BAND_HI_HZ) -> float:
    """Frequency of the strongest bin within the band."""
    mask = (spec.freqs_hz >= lo_hz) & (spec.freqs_hz <= hi_hz)
    if not mask.any():
        raise EmptyBandError(f"band [{lo_hz}, {hi_hz}] Hz covers no bins")
    idx = int(np.argmax(np.where(mask, spec.power, -1.0)))
    return float(spec.freqs_hz[idx])


def masking_gain(noise: SampleBuffer, white: SampleBuffer) -> float:
    """Flatness gain from superposing a masking signal on a disturbance.

    Returns flatness(noise + white) / flatness(noise); values > 1 mean the
    mix occupies a flatter band than the disturbance alone.
    """
    if noise.rate_hz != white.rate_hz:
        raise RateMismatchError(f"{noise.rate_hz} Hz vs {white.rate_hz} Hz")
    if len(noise) != len(white):
        raise LengthMismatchError(f"{len(noise)} samples vs {len(white)}")
    mixed = SampleBuffer(samples=noise.samples + white.samples, rate_hz=noise.rate_hz)
    return band_flatness(power_spectrum(mixed)) / band_flatness(power_spectrum(noise))


def generate_white(duration_s: float, rate_hz: int, seed: int) -> SampleBuffer:
    """Reproducible white noise: xorshift64* uniforms in [-1, 1).

    The same (duration, rate, seed) produces the identical buffer on every
    platform; length is exactly round(duration * rate).
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be > 0")
    n = int(round(duration_s * rate_hz))
    rng = Xorshift64Star(seed)
    samples = np.fromiter((rng.uniform_signed() for _ in range(n)), dtype=float, count=n)
    return SampleBuffer(samples=samples, rate_hz=rate_hz)


def load_samples_csv(path, rate_hz: int) -> SampleBuffer:
    """Read a one-amplitude-per-line CSV into a buffer."""
    samples = np.loadtxt(path, dtype=float, ndmin=1)
    return SampleBuffer(samples=samples, rate_hz=rate_hz)
