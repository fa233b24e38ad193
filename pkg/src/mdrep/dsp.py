"""Signal-processing kernels: raw FMCW returns to 128x128 Doppler-time maps.

Every operation is a pure function of its inputs; randomness only enters
through an explicit generator passed to :func:`add_noise_snr`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAP_SIZE = 128


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ComplexSignal:
    """Slow-time complex baseband signal (one value per chirp)."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class RangeTimeMap:
    """Range-compressed chirps: rows are range bins, columns slow time."""

    bins: np.ndarray
    chirp_rate_hz: float

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        object.__setattr__(self, "bins", bins)
        if bins.ndim != 2 or bins.shape[0] < 1 or bins.shape[1] < 1:
            raise ValueError("bins must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(bins)):
            raise ValueError("bins must be finite")
        if not self.chirp_rate_hz > 0:
            raise ValueError("chirp_rate_hz must be positive")


@dataclass(frozen=True)
class DopplerTimeMap:
    """128x128 complex map; rows are Doppler bins (zero Doppler at row 64)."""

    values: np.ndarray
    duration_s: float = 1.0
    doppler_span_hz: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", values)
        if values.shape != (MAP_SIZE, MAP_SIZE):
            raise ValueError(f"map must be {MAP_SIZE}x{MAP_SIZE}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("map values must be finite")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if not self.doppler_span_hz > 0:
            raise ValueError("doppler_span_hz must be positive")

    @property
    def doppler_bin_hz(self) -> float:
        return self.doppler_span_hz / MAP_SIZE


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters: window/hop in samples, centred `fft_len`-bin DFT."""

    window_len: int
    hop: int
    fft_len: int = MAP_SIZE

    def __post_init__(self):
        if self.window_len < 2:
            raise ValueError("window_len must be >= 2")
        if self.hop < 1:
            raise ValueError("hop must be >= 1")
        if self.hop > self.window_len:
            raise ValueError("hop must not exceed window_len")
        if self.fft_len < self.window_len:
            raise ValueError("fft_len must be >= window_len")
        if self.fft_len & (self.fft_len - 1):
            raise ValueError("fft_len must be a power of two")


# ---------------------------------------------------------------------------
# operations


def blackman_window(n: int) -> np.ndarray:
    """Classic Blackman window w[k] = 0.42 - 0.5 cos(2pik/(n-1)) + 0.08 cos(4pik/(n-1))."""
    if n < 2:
        raise ValueError("window length must be >= 2")
    k = np.arange(n)
    return 0.42 - 0.5 * np.cos(2 * np.pi * k / (n - 1)) + 0.08 * np.cos(4 * np.pi * k / (n - 1))


def range_profile(raw_chirps: np.ndarray, chirp_rate_hz: float = 1.0) -> RangeTimeMap:
    """Range-compress a fast-time x slow-time chirp matrix (DFT per column)."""
    raw = np.asarray(raw_chirps, dtype=np.complex128)
    if raw.ndim != 2 or raw.shape[1] < 1:
        raise ValueError("raw_chirps must be a non-empty 2-D matrix")
    if raw.shape[0] < 2:
        raise ValueError("fast-time dimension must be >= 2")
    return RangeTimeMap(np.fft.fft(raw, axis=0), chirp_rate_hz)


def sum_range_bins(rt: RangeTimeMap, bin_lo: int = 0, bin_hi: int | None = None) -> ComplexSignal:
    """Coherently sum range rows [bin_lo, bin_hi] into a slow-time signal."""
    n_bins = rt.bins.shape[0]
    if bin_hi is None:
        bin_hi = n_bins - 1
    if not (0 <= bin_lo <= bin_hi < n_bins):
        raise ValueError(f"invalid bin span [{bin_lo}, {bin_hi}] for {n_bins} range bins")
    summed = rt.bins[bin_lo : bin_hi + 1].sum(axis=0)
    return ComplexSignal(summed, rt.chirp_rate_hz)


def stft(signal: ComplexSignal, cfg: StftConfig, window: np.ndarray | None = None) -> np.ndarray:
    """Windowed short-time DFT with zero frequency centred at row fft_len/2.

    Frame ``f`` covers samples ``[f*hop, f*hop + window_len)``. Frames are
    multiplied by a Blackman window (or an explicit substitute), zero-padded
    to ``fft_len`` and transformed. Returns an (fft_len, n_frames) matrix.
    """
    x = signal.samples
    if x.size < cfg.window_len:
        raise ValueError("signal shorter than analysis window")
    if window is None:
        window = blackman_window(cfg.window_len)
    else:
        window = np.asarray(window, dtype=np.float64)
        if window.shape != (cfg.window_len,):
            raise ValueError("window length must equal cfg.window_len")
    n_frames = (x.size - cfg.window_len) // cfg.hop + 1
    idx = cfg.hop * np.arange(n_frames)[:, None] + np.arange(cfg.window_len)[None, :]
    frames = x[idx] * window
    spec = np.fft.fft(frames, n=cfg.fft_len, axis=1)
    return np.fft.fftshift(spec, axes=1).T


def resample_to_128(
    m: np.ndarray, duration_s: float = 1.0, doppler_span_hz: float = 1.0
) -> DopplerTimeMap:
    """Bilinearly resample a complex matrix onto the 128x128 corner-aligned grid."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 2:
        raise ValueError("input must be at least 2x2")
    return DopplerTimeMap(_bilinear(m, MAP_SIZE, MAP_SIZE), duration_s, doppler_span_hz)


def _bilinear(m: np.ndarray, oh: int, ow: int) -> np.ndarray:
    h, w = m.shape
    r = np.arange(oh) * ((h - 1) / (oh - 1))
    c = np.arange(ow) * ((w - 1) / (ow - 1))
    r0 = np.minimum(np.floor(r).astype(np.intp), h - 2)
    c0 = np.minimum(np.floor(c).astype(np.intp), w - 2)
    fr = (r - r0)[:, None]
    fc = (c - c0)[None, :]
    tl = m[np.ix_(r0, c0)]
    tr = m[np.ix_(r0, c0 + 1)]
    bl = m[np.ix_(r0 + 1, c0)]
    br = m[np.ix_(r0 + 1, c0 + 1)]
    return (1 - fr) * ((1 - fc) * tl + fc * tr) + fr * ((1 - fc) * bl + fc * br)


def unwrap_phase_time(phase: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Unwrap each Doppler row along time so successive diffs lie in (-pi, pi]."""
    p = np.asarray(phase, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] < 1:
        raise ValueError("phase must be a 2-D matrix")
    if np.any(p > np.pi + tol) or np.any(p < -np.pi - tol):
        raise ValueError("phase values must lie in [-pi, pi]")
    if p.shape[1] == 1:
        return p.copy()
    d = np.diff(p, axis=1)
    # wind each diff into (-pi, pi]; ceil((d - pi)/2pi) maps the boundaries
    # so that +pi stays and -pi becomes +pi
    wound = d - 2 * np.pi * np.ceil((d - np.pi) / (2 * np.pi))
    out = np.empty_like(p)
    out[:, 0] = p[:, 0]
    out[:, 1:] = p[:, :1] + np.cumsum(wound, axis=1)
    return out


def add_noise_snr(
    dtm: DopplerTimeMap, snr_db: float, rng: np.random.Generator | int
) -> DopplerTimeMap:
    """Add circularly-symmetric complex Gaussian noise at the requested SNR.

    Noise variance is ``mean(|z|^2) / 10^(snr_db/10)``; a fixed seed gives a
    fixed realization. Infinite SNR returns the map unchanged.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    z = dtm.values
    p_signal = float(np.mean(np.abs(z) ** 2))
    if p_signal <= 0.0:
        raise ValueError("SNR undefined for an all-zero map")
    noise_var = p_signal / 10.0 ** (snr_db / 10.0)
    if noise_var == 0.0:
        return DopplerTimeMap(z.copy(), dtm.duration_s, dtm.doppler_span_hz)
    sigma = math.sqrt(noise_var / 2.0)
    noise = sigma * (rng.standard_normal(z.shape) + 1j * rng.standard_normal(z.shape))
    return DopplerTimeMap(z + noise, dtm.duration_s, dtm.doppler_span_hz)
