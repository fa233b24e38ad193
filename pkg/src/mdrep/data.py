"""Dataset ingestion, the train/val/test split and synthetic signatures.

Recording files (``.rad``) are ASCII: four header lines (center frequency
Hz, chirp duration s, samples per chirp, number of chirps) followed by one
complex sample per line as ``a+bi``, chirp-major (all fast-time samples of
chirp 0, then chirp 1, ...). Labels come from the ``<class>_<id>.rad``
filename convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dsp import (
    ComplexSignal,
    DopplerTimeMap,
    StftConfig,
    range_profile,
    resample_to_128,
    stft,
    sum_range_bins,
)
from .seeding import derive_seed, sample_rng

CLASS_NAMES = ("walking", "sitdown", "standup", "pickup", "drink", "fall")
NUM_CLASSES = len(CLASS_NAMES)


# ---------------------------------------------------------------------------
# recording files


class RecordingParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class RecordingMeta:
    center_freq_hz: float
    chirp_duration_s: float
    samples_per_chirp: int
    num_chirps: int

    @property
    def chirp_rate_hz(self) -> float:
        return 1.0 / self.chirp_duration_s


def _format_complex(z: complex) -> str:
    return f"{z.real:.9g}{z.imag:+.9g}i"


def _parse_complex(token: str, line: int) -> complex:
    token = token.strip()
    if not token.endswith("i"):
        raise RecordingParseError(f"sample {token!r} must end with 'i'", line)
    try:
        return complex(token[:-1].replace(" ", "") + "j")
    except ValueError:
        raise RecordingParseError(f"cannot parse sample {token!r}", line) from None


def parse_raw_recording(source: bytes | str | Path) -> tuple[np.ndarray, RecordingMeta]:
    """Parse a recording into a (fast_time x slow_time) matrix plus metadata."""
    if isinstance(source, (str, Path)):
        source = Path(source).read_bytes()
    lines = source.decode("ascii", errors="replace").splitlines()
    if len(lines) < 4:
        raise RecordingParseError("missing header (4 lines expected)", len(lines) + 1)

    def header_float(i: int, name: str) -> float:
        try:
            value = float(lines[i])
        except ValueError:
            raise RecordingParseError(f"bad {name}: {lines[i]!r}", i + 1) from None
        if not (math.isfinite(value) and value > 0):
            raise RecordingParseError(f"{name} must be positive", i + 1)
        return value

    def header_int(i: int, name: str) -> int:
        try:
            value = int(lines[i])
        except ValueError:
            raise RecordingParseError(f"bad {name}: {lines[i]!r}", i + 1) from None
        if value < 1:
            raise RecordingParseError(f"{name} must be >= 1", i + 1)
        return value

    meta = RecordingMeta(
        center_freq_hz=header_float(0, "center frequency"),
        chirp_duration_s=header_float(1, "chirp duration"),
        samples_per_chirp=header_int(2, "samples per chirp"),
        num_chirps=header_int(3, "number of chirps"),
    )
    expected = meta.samples_per_chirp * meta.num_chirps
    sample_lines = [ln for ln in lines[4:] if ln.strip()]
    if len(sample_lines) != expected:
        raise RecordingParseError(
            f"expected {expected} samples, found {len(sample_lines)}", len(lines)
        )
    flat = np.empty(expected, dtype=np.complex128)
    for i, token in enumerate(sample_lines):
        flat[i] = _parse_complex(token, i + 5)
    # chirp-major on disk -> (fast_time, slow_time) in memory
    return flat.reshape(meta.num_chirps, meta.samples_per_chirp).T.copy(), meta


def write_recording(path: str | Path, raw: np.ndarray, meta: RecordingMeta) -> None:
    raw = np.asarray(raw, dtype=np.complex128)
    if raw.shape != (meta.samples_per_chirp, meta.num_chirps):
        raise ValueError(
            f"matrix shape {raw.shape} does not match header "
            f"({meta.samples_per_chirp}, {meta.num_chirps})"
        )
    if not np.all(np.isfinite(raw)):
        raise ValueError("samples must be finite")
    lines = [
        f"{meta.center_freq_hz:.9g}",
        f"{meta.chirp_duration_s:.9g}",
        str(meta.samples_per_chirp),
        str(meta.num_chirps),
    ]
    for chirp in range(meta.num_chirps):
        for fast in range(meta.samples_per_chirp):
            lines.append(_format_complex(raw[fast, chirp]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def label_from_filename(name: str) -> int:
    stem = Path(name).stem
    cls = stem.split("_", 1)[0]
    if cls not in CLASS_NAMES:
        raise ValueError(f"unknown class prefix {cls!r} in {name!r}")
    return CLASS_NAMES.index(cls)


# ---------------------------------------------------------------------------
# preprocessing chain


def auto_stft_config(sample_rate_hz: float) -> StftConfig:
    """0.2 s window / 0.01 s hop expressed in samples, 128-bin centred DFT.

    The window is clamped to 128 samples so the DFT always uses 128 bins;
    shorter windows are zero-padded up to the 128-point transform.
    """
    window = min(max(int(round(0.2 * sample_rate_hz)), 2), 128)
    hop = min(max(int(round(0.01 * sample_rate_hz)), 1), window)
    return StftConfig(window_len=window, hop=hop, fft_len=128)


def signal_to_map(signal: ComplexSignal) -> DopplerTimeMap:
    """STFT a slow-time signature and resample it onto the 128x128 grid."""
    cfg = auto_stft_config(signal.sample_rate_hz)
    if len(signal) < cfg.window_len + cfg.hop:
        raise ValueError(
            f"signal too short: need at least {cfg.window_len + cfg.hop} samples "
            f"at {signal.sample_rate_hz} Hz"
        )
    spec = stft(signal, cfg)
    duration = len(signal) / signal.sample_rate_hz
    return resample_to_128(spec, duration_s=duration, doppler_span_hz=signal.sample_rate_hz)


def preprocess(
    raw: np.ndarray,
    chirp_rate_hz: float,
    bin_lo: int = 0,
    bin_hi: int | None = None,
) -> DopplerTimeMap:
    """Full chain: range profile -> coherent bin sum -> STFT -> 128x128 map."""
    rt = range_profile(raw, chirp_rate_hz)
    return signal_to_map(sum_range_bins(rt, bin_lo, bin_hi))


def preprocess_recording(source: bytes | str | Path, bin_lo: int = 0,
                         bin_hi: int | None = None) -> DopplerTimeMap:
    raw, meta = parse_raw_recording(source)
    return preprocess(raw, meta.chirp_rate_hz, bin_lo, bin_hi)


# ---------------------------------------------------------------------------
# dataset split


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def indices(self, which: str) -> tuple[int, ...]:
        if which not in ("train", "val", "test"):
            raise ValueError(f"unknown split {which!r}")
        return getattr(self, which)


def _largest_remainder(ideals: list[float], total: int, caps: list[int],
                       tiebreak: list[float]) -> list[int]:
    floors = [min(int(math.floor(x)), cap) for x, cap in zip(ideals, caps)]
    remaining = total - sum(floors)
    order = sorted(
        range(len(ideals)),
        key=lambda i: (-(ideals[i] - math.floor(ideals[i])), tiebreak[i], i),
    )
    alloc = list(floors)
    for i in order:
        if remaining == 0:
            break
        if alloc[i] < caps[i]:
            alloc[i] += 1
            remaining -= 1
    if remaining:
        raise ValueError("cannot satisfy split quotas under per-class caps")
    return alloc


def split(n: int, seed: int, labels: np.ndarray | None = None) -> DatasetSplit:
    """Seeded 50/25/25 partition; stratified per class when labels are given.

    Test and validation each get n // 4 samples, training keeps the rounding
    remainder. Stratification distributes those quotas across classes by
    largest remainder, preferring classes with more samples left, so each
    class ratio holds within one sample.
    """
    if n < 4:
        raise ValueError("need at least 4 samples to split")
    n_test = n // 4
    n_val = n // 4
    rng = np.random.default_rng(seed)
    if labels is None:
        perm = rng.permutation(n)
        train = perm[: n - n_val - n_test]
        val = perm[n - n_val - n_test : n - n_test]
        test = perm[n - n_test :]
    else:
        labels = np.asarray(labels)
        if labels.shape != (n,):
            raise ValueError("labels must have one entry per sample")
        classes = sorted(set(int(c) for c in labels))
        per_class = {c: rng.permutation(np.flatnonzero(labels == c)) for c in classes}
        counts = [len(per_class[c]) for c in classes]
        test_alloc = _largest_remainder(
            [cnt * n_test / n for cnt in counts], n_test, counts,
            tiebreak=[-cnt for cnt in counts],
        )
        left = [cnt - t for cnt, t in zip(counts, test_alloc)]
        val_alloc = _largest_remainder(
            [cnt * n_val / n for cnt in counts], n_val, left,
            tiebreak=[-l for l in left],
        )
        test_parts, val_parts, train_parts = [], [], []
        for c, t_c, v_c in zip(classes, test_alloc, val_alloc):
            idx = per_class[c]
            test_parts.append(idx[:t_c])
            val_parts.append(idx[t_c : t_c + v_c])
            train_parts.append(idx[t_c + v_c :])
        train = np.concatenate(train_parts)
        val = np.concatenate(val_parts)
        test = np.concatenate(test_parts)
    return DatasetSplit(
        tuple(int(i) for i in train),
        tuple(int(i) for i in val),
        tuple(int(i) for i in test),
        seed,
    )


# ---------------------------------------------------------------------------
# synthetic signatures


@dataclass(frozen=True)
class ClassMotion:
    """Per-class generator parameters.

    The pendulum model places a torso return at ``torso_hz`` and limb
    returns swinging sinusoidally at ``limb_rate_hz`` over an instantaneous
    Doppler extent of +-``limb_extent_hz``, gated by the named envelope. In
    phase-coded mode only ``phase_step_rad`` matters: it is the per-frame
    increment of the carrier phase trajectory.
    """

    name: str
    torso_hz: float
    limb_rate_hz: float
    limb_extent_hz: float
    envelope: str = "const"
    phase_step_rad: float = 0.0


@dataclass(frozen=True)
class SynthConfig:
    classes: tuple[ClassMotion, ...]
    samples_per_class: int
    sample_rate_hz: float = 1000.0
    duration_s: float = 1.398
    noise_floor: float = 1e-3
    jitter: float = 0.12
    seed: int = 0
    phase_only: bool = False
    carrier_hz: float = 300.0
    carrier_jitter_hz: float = 100.0
    phase_jitter_rad: float = 0.4

    def __post_init__(self):
        if len(self.classes) != NUM_CLASSES:
            raise ValueError(f"exactly {NUM_CLASSES} classes required")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        if not (self.sample_rate_hz > 0 and self.duration_s > 0):
            raise ValueError("sample rate and duration must be positive")
        for motion in self.classes:
            if not motion.limb_rate_hz > 0:
                raise ValueError(f"{motion.name}: limb_rate_hz must be positive")
            if motion.limb_extent_hz < 0:
                raise ValueError(f"{motion.name}: limb_extent_hz must be >= 0")

    @property
    def num_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


_PENDULUM_MOTIONS = (
    ClassMotion("walking", 40.0, 1.6, 140.0, "const"),
    ClassMotion("sitdown", -35.0, 0.9, 70.0, "fall"),
    ClassMotion("standup", 35.0, 0.9, 70.0, "rise"),
    ClassMotion("pickup", -25.0, 1.2, 100.0, "bump"),
    ClassMotion("drink", 12.0, 0.7, 45.0, "dip"),
    ClassMotion("fall", -55.0, 0.5, 200.0, "burst"),
)

# aliased per-frame slopes 0.5 + 0.35c keep classes far apart after
# unwrapping while every raw step magnitude stays above pi
_PHASE_STEPS = tuple(0.5 + 0.35 * c - 2.0 * math.pi for c in range(NUM_CLASSES))


def default_synth_config(samples_per_class: int = 20, seed: int = 0) -> SynthConfig:
    return SynthConfig(classes=_PENDULUM_MOTIONS, samples_per_class=samples_per_class, seed=seed)


def phase_only_synth_config(samples_per_class: int = 200, seed: int = 0) -> SynthConfig:
    """Classes differ only in their carrier-phase trajectory.

    The sample rate is chosen so the analysis windows tile the signal
    exactly (hop == window == 128 samples); each 128-sample block carries a
    per-frame phase offset, so every class shares one magnitude pattern
    while the per-frame phase steps all exceed pi in magnitude.
    """
    motions = tuple(
        replace(m, phase_step_rad=_PHASE_STEPS[i]) for i, m in enumerate(_PENDULUM_MOTIONS)
    )
    return SynthConfig(
        classes=motions,
        samples_per_class=samples_per_class,
        sample_rate_hz=12800.0,
        duration_s=16384.0 / 12800.0,
        noise_floor=5e-3,
        seed=seed,
        phase_only=True,
    )


_ENVELOPES = {
    "const": lambda u: np.ones_like(u),
    "rise": lambda u: u * u * (3.0 - 2.0 * u),
    "fall": lambda u: 1.0 - u * u * (3.0 - 2.0 * u),
    "bump": lambda u: np.exp(-((u - 0.5) ** 2) / (2.0 * 0.15**2)),
    "burst": lambda u: np.exp(-((u - 0.5) ** 2) / (2.0 * 0.06**2)),
    "dip": lambda u: 1.0 - 0.8 * np.exp(-((u - 0.5) ** 2) / (2.0 * 0.15**2)),
}


def _pendulum_signal(motion: ClassMotion, cfg: SynthConfig,
                     rng: np.random.Generator) -> np.ndarray:
    if motion.envelope not in _ENVELOPES:
        raise ValueError(f"unknown envelope {motion.envelope!r}")
    n = cfg.num_samples
    t = np.arange(n) / cfg.sample_rate_hz
    env = _ENVELOPES[motion.envelope](t / cfg.duration_s)
    jit = lambda: 1.0 + rng.uniform(-cfg.jitter, cfg.jitter)
    torso = jit() * motion.torso_hz
    z = np.exp(1j * 2.0 * np.pi * torso * t * env)
    # two limb returns: the fundamental swing and a weaker double-rate one
    for amp, rate_mul, extent_mul in ((0.8, 1.0, 1.0), (0.4, 2.0, 0.5)):
        f_m = jit() * motion.limb_rate_hz * rate_mul
        beta = jit() * motion.limb_extent_hz * extent_mul
        psi = rng.uniform(0.0, 2.0 * np.pi)
        z = z + amp * np.exp(1j * (beta / f_m) * np.sin(2.0 * np.pi * f_m * t + psi) * env)
    noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z + cfg.noise_floor * noise


def _phase_coded_signal(motion: ClassMotion, cfg: SynthConfig,
                        rng: np.random.Generator) -> np.ndarray:
    frame = auto_stft_config(cfg.sample_rate_hz)
    if frame.hop != frame.window_len:
        raise ValueError("phase-coded synthesis requires non-overlapping analysis windows")
    n = cfg.num_samples
    if n % frame.window_len:
        raise ValueError("signal length must be a multiple of the analysis window")
    n_frames = n // frame.window_len
    f_tone = cfg.carrier_hz + rng.uniform(-cfg.carrier_jitter_hz, cfg.carrier_jitter_hz)
    theta0 = rng.uniform(-np.pi, np.pi)
    steps = motion.phase_step_rad + rng.normal(0.0, cfg.phase_jitter_rad, n_frames - 1)
    theta = theta0 + np.concatenate(([0.0], np.cumsum(steps)))
    base = np.exp(1j * 2.0 * np.pi * f_tone * np.arange(frame.window_len) / cfg.sample_rate_hz)
    z = (np.exp(1j * theta)[:, None] * base[None, :]).reshape(-1)
    noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z + cfg.noise_floor * noise


def synth_signal(cfg: SynthConfig, class_idx: int, sample_idx: int) -> np.ndarray:
    """Deterministic raw slow-time signal for one sample."""
    motion = cfg.classes[class_idx]
    rng = sample_rng(cfg.seed, class_idx, sample_idx)
    if cfg.phase_only:
        return _phase_coded_signal(motion, cfg, rng)
    return _pendulum_signal(motion, cfg, rng)


@dataclass
class LabeledSample:
    id: str
    label: int
    dtm: DopplerTimeMap

    def __post_init__(self):
        if not 0 <= self.label < NUM_CLASSES:
            raise ValueError(f"label {self.label} out of range")


def synth_generate(cfg: SynthConfig) -> list[LabeledSample]:
    """Generate ``6 * samples_per_class`` preprocessed samples, seeded per id."""
    samples = []
    for class_idx, motion in enumerate(cfg.classes):
        for s in range(cfg.samples_per_class):
            z = synth_signal(cfg, class_idx, s)
            dtm = signal_to_map(ComplexSignal(z, cfg.sample_rate_hz))
            samples.append(LabeledSample(f"{motion.name}_{s:04d}", class_idx, dtm))
    return samples


def signal_to_raw_chirps(z: np.ndarray) -> np.ndarray:
    """Embed a slow-time signal into a 2-bin chirp matrix.

    Splitting each value across two identical fast-time samples makes the
    range profile put the whole signal in bin 0, so summing all range bins
    recovers the signal exactly.
    """
    z = np.asarray(z, dtype=np.complex128)
    return np.vstack([z / 2.0, z / 2.0])


# ---------------------------------------------------------------------------
# in-memory dataset


@dataclass
class Dataset:
    samples: list[LabeledSample]
    split: DatasetSplit

    def __post_init__(self):
        ids = [s.id for s in self.samples]
        if len(set(ids)) != len(ids):
            raise ValueError("sample ids must be unique")

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def indices(self, which: str) -> tuple[int, ...]:
        return self.split.indices(which)


def build_synth_dataset(cfg: SynthConfig) -> Dataset:
    samples = synth_generate(cfg)
    labels = np.array([s.label for s in samples])
    return Dataset(samples, split(len(samples), derive_seed(cfg.seed, "split"), labels))
