"""Classifier architectures.

Single-domain model: five conv blocks (3x3 kernel, stride 2, batch norm,
LeakyReLU) with channel progression in_ch -> 32 -> 64 -> 128 -> 256 -> 512,
flattened (8,192 values for 128x128 input) into a 128-dim embedding, then a
linear head to 6 class scores. The multi-domain model keeps one encoder per
representation, sums the active embeddings and shares one head. A small
"meta" module maps concatenated frozen embeddings or confidence scores to
class scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import BatchNormState, Tensor

NUM_CLASSES = 6
EMBED_DIM = 128
FLAT_DIM = 8192
CONV_CHANNELS = (32, 64, 128, 256, 512)
META_HIDDEN = 64

# order matters: it fixes table layouts and checkpoint key prefixes
DOMAINS = ("Mag", "PhW", "PhU", "Re", "Im")
DOMAIN_FORMATS = {"Mag": "Magnitude", "PhW": "PhaseW", "PhU": "PhaseU", "Re": "Real", "Im": "Imag"}


# ---------------------------------------------------------------------------
# parameter containers


@dataclass
class ConvBlockParams:
    w: Tensor
    b: Tensor
    gamma: Tensor
    beta: Tensor
    bn: BatchNormState


@dataclass
class EncoderParams:
    in_ch: int
    blocks: list[ConvBlockParams]
    embed_w: Tensor
    embed_b: Tensor

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, blk in enumerate(self.blocks):
            out[f"{prefix}block{i}.w"] = blk.w
            out[f"{prefix}block{i}.b"] = blk.b
            out[f"{prefix}block{i}.gamma"] = blk.gamma
            out[f"{prefix}block{i}.beta"] = blk.beta
        out[f"{prefix}embed.w"] = self.embed_w
        out[f"{prefix}embed.b"] = self.embed_b
        return out

    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        """Trainable tensors plus batch-norm running stats, for checkpoints."""
        out = {name: t.data for name, t in self.named_parameters(prefix).items()}
        for i, blk in enumerate(self.blocks):
            out[f"{prefix}block{i}.running_mean"] = blk.bn.running_mean
            out[f"{prefix}block{i}.running_var"] = blk.bn.running_var
        return out


@dataclass
class HeadParams:
    w: Tensor
    b: Tensor | None

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out = {f"{prefix}head.w": self.w}
        if self.b is not None:
            out[f"{prefix}head.b"] = self.b
        return out

    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.named_parameters(prefix).items()}


@dataclass
class SingleDomainModel:
    format_name: str
    encoder: EncoderParams
    head: HeadParams
    leaky_slope: float = 0.01

    def named_parameters(self) -> dict[str, Tensor]:
        return {**self.encoder.named_parameters("enc."), **self.head.named_parameters()}

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {**self.encoder.state_arrays("enc."), **self.head.state_arrays()}


@dataclass
class MultiDomainParams:
    encoders: dict[str, EncoderParams]
    head: HeadParams
    leaky_slope: float = 0.01

    def named_parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for domain, enc in self.encoders.items():
            out.update(enc.named_parameters(f"enc.{domain}."))
        out.update(self.head.named_parameters())
        return out

    def domain_parameters(self, domain: str) -> dict[str, Tensor]:
        return self.encoders[domain].named_parameters(f"enc.{domain}.")

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for domain, enc in self.encoders.items():
            out.update(enc.state_arrays(f"enc.{domain}."))
        out.update(self.head.state_arrays())
        return out


@dataclass
class MetaParams:
    input_dim: int
    activation: str  # "linear" or "leaky_relu"
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    w3: Tensor
    b3: Tensor
    leaky_slope: float = 0.01

    def named_parameters(self, prefix: str = "meta.") -> dict[str, Tensor]:
        return {
            f"{prefix}w1": self.w1, f"{prefix}b1": self.b1,
            f"{prefix}w2": self.w2, f"{prefix}b2": self.b2,
            f"{prefix}w3": self.w3, f"{prefix}b3": self.b3,
        }

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.named_parameters().items()}


# ---------------------------------------------------------------------------
# initialization


def _kaiming_uniform(rng: np.random.Generator, shape, fan_in: int, slope: float, dtype):
    gain = math.sqrt(2.0 / (1.0 + slope**2))
    bound = gain * math.sqrt(3.0 / fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


def init_encoder(in_ch: int, rng: np.random.Generator, slope: float = 0.01,
                 dtype=np.float32) -> EncoderParams:
    if in_ch < 1:
        raise ValueError("in_ch must be >= 1")
    blocks = []
    prev = in_ch
    for ch in CONV_CHANNELS:
        blocks.append(ConvBlockParams(
            w=_kaiming_uniform(rng, (ch, prev, 3, 3), prev * 9, slope, dtype),
            b=Tensor(np.zeros(ch, dtype=dtype), requires_grad=True),
            gamma=Tensor(np.ones(ch, dtype=dtype), requires_grad=True),
            beta=Tensor(np.zeros(ch, dtype=dtype), requires_grad=True),
            bn=BatchNormState.create(ch, dtype=dtype),
        ))
        prev = ch
    embed_w = _kaiming_uniform(rng, (FLAT_DIM, EMBED_DIM), FLAT_DIM, slope, dtype)
    embed_b = Tensor(np.zeros(EMBED_DIM, dtype=dtype), requires_grad=True)
    return EncoderParams(in_ch, blocks, embed_w, embed_b)


def init_head(rng: np.random.Generator, use_bias: bool = True, slope: float = 0.01,
              dtype=np.float32) -> HeadParams:
    w = _kaiming_uniform(rng, (EMBED_DIM, NUM_CLASSES), EMBED_DIM, slope, dtype)
    b = Tensor(np.zeros(NUM_CLASSES, dtype=dtype), requires_grad=True) if use_bias else None
    return HeadParams(w, b)


def init_single(format_name: str, in_ch: int, rng: np.random.Generator,
                slope: float = 0.01, dtype=np.float32) -> SingleDomainModel:
    return SingleDomainModel(
        format_name,
        init_encoder(in_ch, rng, slope, dtype),
        init_head(rng, True, slope, dtype),
        leaky_slope=slope,
    )


def init_multi(rng: np.random.Generator, slope: float = 0.01, dtype=np.float32,
               use_bias: bool = True) -> MultiDomainParams:
    encoders = {d: init_encoder(1, rng, slope, dtype) for d in DOMAINS}
    return MultiDomainParams(encoders, init_head(rng, use_bias, slope, dtype), leaky_slope=slope)


def init_meta(input_kind: str, activation: str, rng: np.random.Generator,
              slope: float = 0.01, dtype=np.float32) -> MetaParams:
    if input_kind not in ("embeddings", "confidences"):
        raise ValueError("input_kind must be 'embeddings' or 'confidences'")
    if activation not in ("linear", "leaky_relu"):
        raise ValueError("activation must be 'linear' or 'leaky_relu'")
    input_dim = len(DOMAINS) * (EMBED_DIM if input_kind == "embeddings" else NUM_CLASSES)
    mk = lambda di, do: _kaiming_uniform(rng, (di, do), di, slope, dtype)
    zeros = lambda n: Tensor(np.zeros(n, dtype=dtype), requires_grad=True)
    return MetaParams(
        input_dim, activation,
        w1=mk(input_dim, META_HIDDEN), b1=zeros(META_HIDDEN),
        w2=mk(META_HIDDEN, META_HIDDEN), b2=zeros(META_HIDDEN),
        w3=mk(META_HIDDEN, NUM_CLASSES), b3=zeros(NUM_CLASSES),
        leaky_slope=slope,
    )


# ---------------------------------------------------------------------------
# forward passes


def encode(p: EncoderParams, x: Tensor, mode: str = "train", slope: float = 0.01) -> Tensor:
    """Run the five conv blocks and the embedding projection: (N,C,128,128) -> (N,128)."""
    if x.data.ndim != 4 or x.data.shape[1] != p.in_ch:
        raise ValueError(
            f"encoder expects (N, {p.in_ch}, H, W) input, got {x.data.shape}"
        )
    h = x
    for blk in p.blocks:
        h = ag.conv2d(h, blk.w, blk.b, stride=2, padding=1)
        h = ag.batchnorm2d(h, blk.gamma, blk.beta, blk.bn, mode=mode)
        h = ag.leaky_relu(h, slope)
    n = h.data.shape[0]
    flat = h.reshape((n, -1))
    if flat.data.shape[1] != FLAT_DIM:
        raise ValueError(
            f"flattened feature size {flat.data.shape[1]} != {FLAT_DIM}; "
            "encoder requires 128x128 input"
        )
    return ag.linear(flat, p.embed_w, p.embed_b)


def classify(h: HeadParams, e: Tensor) -> Tensor:
    """Linear map from embeddings to 6 class scores (no softmax)."""
    if e.data.ndim != 2 or e.data.shape[1] != EMBED_DIM:
        raise ValueError(f"embeddings must be (N, {EMBED_DIM}), got {e.data.shape}")
    return ag.linear(e, h.w, h.b)


def single_forward(model: SingleDomainModel, x: Tensor, mode: str = "train") -> Tensor:
    return classify(model.head, encode(model.encoder, x, mode, model.leaky_slope))


def sample_domains(rng: np.random.Generator, k: int = 2, n: int = 5) -> tuple[int, ...]:
    """Draw k distinct domain indices, uniform over all unordered k-subsets."""
    if k > n:
        raise ValueError(f"cannot draw {k} distinct domains from {n}")
    picked = rng.choice(n, size=k, replace=False)
    return tuple(sorted(int(i) for i in picked))


def multi_forward(p: MultiDomainParams, stacks: dict[str, Tensor],
                  active: tuple[str, ...] | list[str], mode: str = "train") -> Tensor:
    """Class scores from the sum of the active domains' embeddings.

    Inactive encoders are not executed, so they receive no gradient.
    """
    if not active:
        raise ValueError("active domain set must be non-empty")
    missing = [d for d in active if d not in stacks]
    if missing:
        raise ValueError(f"missing input stacks for domains: {missing}")
    emb = None
    for domain in active:
        e = encode(p.encoders[domain], stacks[domain], mode, p.leaky_slope)
        emb = e if emb is None else emb + e
    return classify(p.head, emb)


def meta_forward(m: MetaParams, inputs: Tensor) -> Tensor:
    """Two 64-wide hidden layers (optionally LeakyReLU) then 6 class scores."""
    if inputs.data.ndim != 2 or inputs.data.shape[1] != m.input_dim:
        raise ValueError(f"meta input must be (N, {m.input_dim}), got {inputs.data.shape}")
    h = ag.linear(inputs, m.w1, m.b1)
    if m.activation == "leaky_relu":
        h = ag.leaky_relu(h, m.leaky_slope)
    h = ag.linear(h, m.w2, m.b2)
    if m.activation == "leaky_relu":
        h = ag.leaky_relu(h, m.leaky_slope)
    return ag.linear(h, m.w3, m.b3)


# ---------------------------------------------------------------------------
# saliency


def saliency(model: SingleDomainModel, stack: np.ndarray, class_index: int) -> np.ndarray:
    """|d score_class / d input| per channel and pixel, eval-mode network."""
    if not 0 <= class_index < NUM_CLASSES:
        raise ValueError(f"class index must lie in [0, {NUM_CLASSES})")
    arr = np.asarray(stack, dtype=np.float64)
    squeeze = arr.ndim == 3
    if squeeze:
        arr = arr[None]
    x = Tensor(arr, requires_grad=True)
    logits = single_forward(model, x, mode="eval")
    target = ag.take_column(logits, class_index).sum()
    ag.backward(target)
    grads = np.abs(x.grad)
    return grads[0] if squeeze else grads


def threshold_saliency(saliency_map: np.ndarray, fraction: float = 0.25) -> np.ndarray:
    """Zero entries below ``fraction`` of the map maximum (visualization variant)."""
    out = saliency_map.copy()
    out[out < fraction * out.max()] = 0.0
    return out
