"""Conversion of complex Doppler-time maps into real channel stacks.

Eleven named input formats are supported, built from five channel kinds:
magnitude ``mag``, wrapped phase ``phw``, time-unwrapped phase ``phu``,
real part ``re`` and imaginary part ``im``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import DopplerTimeMap, unwrap_phase_time


@dataclass(frozen=True)
class ReprFormat:
    name: str
    kinds: tuple[str, ...]

    @property
    def channels(self) -> int:
        return len(self.kinds)


_FORMAT_TABLE = {
    "Magnitude": ("mag",),
    "PhaseW": ("phw",),
    "PhaseU": ("phu",),
    "Real": ("re",),
    "Imag": ("im",),
    "Polar2W": ("mag", "phw"),
    "Polar2U": ("mag", "phu"),
    "Rect2": ("re", "im"),
    "PolRect4W": ("re", "im", "mag", "phw"),
    "PolRect4U": ("re", "im", "mag", "phu"),
    "PolRect5": ("re", "im", "mag", "phw", "phu"),
}

FORMATS = {name: ReprFormat(name, kinds) for name, kinds in _FORMAT_TABLE.items()}

# lowercase/underscore aliases accepted on the command line
_ALIASES = {name.lower(): name for name in FORMATS}
_ALIASES.update({
    "phase_w": "PhaseW", "phase_u": "PhaseU", "imaginary": "Imag",
    "polar2_w": "Polar2W", "polar2_u": "Polar2U", "rectangular2": "Rect2",
    "polrect4_w": "PolRect4W", "polrect4_u": "PolRect4U", "polrect5_uw": "PolRect5",
})


def get_format(name: str | ReprFormat) -> ReprFormat:
    if isinstance(name, ReprFormat):
        return name
    key = _ALIASES.get(name.lower())
    if key is None:
        raise ValueError(f"unknown representation format: {name!r}")
    return FORMATS[key]


@dataclass
class ChannelStack:
    """C x 128 x 128 real channels plus the scale needed to undo normalization.

    ``scale`` records the per-sample maximum complex magnitude. It is filled
    in when channels are extracted from a map, or derived by
    :func:`normalize` when possible.
    """

    data: np.ndarray
    format: ReprFormat
    scale: float | None = None
    normalized: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[0] != self.format.channels:
            raise ValueError(
                f"stack must have shape ({self.format.channels}, H, W) "
                f"for {self.format.name}, got {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("stack values must be finite")


def raw_channels(dtm: DopplerTimeMap, fmt: str | ReprFormat) -> ChannelStack:
    """Extract the format's channels without normalization."""
    fmt = get_format(fmt)
    z = dtm.values
    cache: dict[str, np.ndarray] = {}

    def channel(kind: str) -> np.ndarray:
        if kind not in cache:
            if kind == "mag":
                cache[kind] = np.abs(z)
            elif kind == "phw":
                cache[kind] = np.angle(z)
            elif kind == "phu":
                cache[kind] = unwrap_phase_time(np.angle(z))
            elif kind == "re":
                cache[kind] = z.real.copy()
            else:
                cache[kind] = z.imag.copy()
        return cache[kind]

    data = np.stack([channel(kind) for kind in fmt.kinds])
    return ChannelStack(data, fmt, scale=float(np.abs(z).max()), normalized=False)


def normalize(stack: ChannelStack) -> ChannelStack:
    """Scale channels to O(1) ranges, per sample.

    Magnitude goes to [0, 1] (divided by the max magnitude), real/imaginary
    to [-1, 1] (same divisor), wrapped phase to (-1, 1] (divided by pi).
    Unwrapped phase is divided by pi as well but keeps its unbounded range,
    preserving the original scaling up to that constant. An all-zero
    magnitude leaves every channel at zero.
    """
    if not np.all(np.isfinite(stack.data)):
        raise ValueError("stack values must be finite")
    scale = stack.scale
    if scale is None:
        scale = _derive_scale(stack)
    denom = scale if scale > 0 else 1.0
    data = stack.data.copy()
    for i, kind in enumerate(stack.format.kinds):
        if kind in ("mag", "re", "im"):
            data[i] /= denom
        else:
            data[i] /= np.pi
    return ChannelStack(data, stack.format, scale=scale, normalized=True)


def _derive_scale(stack: ChannelStack) -> float:
    kinds = stack.format.kinds
    if "mag" in kinds:
        return float(stack.data[kinds.index("mag")].max())
    if "re" in kinds and "im" in kinds:
        re = stack.data[kinds.index("re")]
        im = stack.data[kinds.index("im")]
        return float(np.sqrt(re**2 + im**2).max())
    if "re" in kinds or "im" in kinds:
        raise ValueError(
            "cannot derive a magnitude scale for a lone re/im channel; set stack.scale"
        )
    return 1.0  # phase-only stacks need no magnitude scale


def to_channels(dtm: DopplerTimeMap, fmt: str | ReprFormat) -> ChannelStack:
    """Extract and normalize the named representation of a Doppler-time map."""
    return normalize(raw_channels(dtm, fmt))


def reconstruct_map(stack: ChannelStack) -> np.ndarray:
    """Rebuild the complex map from a Rect2/Polar2* stack (undoing the scale)."""
    kinds = stack.format.kinds
    data = stack.data
    scale = stack.scale if stack.normalized else 1.0
    if scale is None:
        raise ValueError("normalized stack lacks its recorded scale")
    if "re" in kinds and "im" in kinds:
        return (data[kinds.index("re")] + 1j * data[kinds.index("im")]) * scale
    if "mag" in kinds and ("phw" in kinds or "phu" in kinds):
        mag = data[kinds.index("mag")] * scale
        pk = "phw" if "phw" in kinds else "phu"
        phase = data[kinds.index(pk)] * (np.pi if stack.normalized else 1.0)
        return mag * np.exp(1j * phase)
    raise ValueError(f"format {stack.format.name} does not determine the complex map")


# ---------------------------------------------------------------------------
# flat binary serialization ("UDCS"): 16-byte header, then row-major f32 LE

_MAGIC = b"UDCS"
_HEADER = struct.Struct("<4sBHH7x")


def write_stack(path: str | Path, stack: ChannelStack) -> None:
    c, h, w = stack.data.shape
    payload = stack.data.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, c, h, w))
        fh.write(payload)


def read_stack(path: str | Path, fmt: str | ReprFormat) -> ChannelStack:
    fmt = get_format(fmt)
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated stack file")
    magic, c, h, w = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * c * h * w
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    if c != fmt.channels:
        raise ValueError(f"{path}: {c} channels on disk, {fmt.name} needs {fmt.channels}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(c, h, w)
    return ChannelStack(data.astype(np.float64), fmt)


__all__ = [
    "ReprFormat", "ChannelStack", "FORMATS", "get_format", "raw_channels",
    "normalize", "to_channels", "reconstruct_map", "write_stack", "read_stack",
]
