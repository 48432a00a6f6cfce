"""Low-rank adapter math and blockwise 4-bit quantization, desk scale.

The update convention: a base matrix W (d x k) is frozen and adapted by
delta_W = (alpha/rank) * b @ a, with a (rank x k) seeded uniform on
[-1/sqrt(k), 1/sqrt(k)] and b (d x rank) zero at init so the adapted model
starts exactly at the base model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _accel
from .errors import CorruptionError

QUANT_SCHEMES = ("absmax4", "nf4")


@dataclass(frozen=True)
class LoraAdapter:
    a: np.ndarray  # rank x k down-projection
    b: np.ndarray  # d x rank up-projection, zero at init
    rank: int
    alpha: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.ndim != 2 or b.ndim != 2:
            raise ValueError("adapter factors must be 2-D matrices")
        if self.rank < 1 or a.shape[0] != self.rank or b.shape[1] != self.rank:
            raise ValueError(
                f"rank {self.rank} inconsistent with factor shapes {a.shape} / {b.shape}"
            )
        if self.rank > min(self.d, self.k):
            raise ValueError(f"rank {self.rank} exceeds min(d={self.d}, k={self.k})")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def d(self) -> int:
        return self.b.shape[0]

    @property
    def k(self) -> int:
        return self.a.shape[1]

    @property
    def scaling(self) -> float:
        return self.alpha / self.rank

    def delta(self) -> np.ndarray:
        """The effective update (alpha/rank) * b @ a, shape d x k."""
        return self.scaling * (self.b @ self.a)


def lora_init(d: int, k: int, r: int, alpha: float, seed: int) -> LoraAdapter:
    """Seeded adapter: a ~ U[-1/sqrt(k), 1/sqrt(k)], b = 0 (so delta = 0)."""
    if r > min(d, k):
        raise ValueError(f"rank {r} exceeds min(d={d}, k={k})")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(k)
    a = rng.uniform(-bound, bound, size=(r, k))
    return LoraAdapter(a=a, b=np.zeros((d, r)), rank=r, alpha=alpha)


def _check_shapes(w: np.ndarray, adapter: LoraAdapter) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (adapter.d, adapter.k):
        raise ValueError(f"base matrix shape {w.shape} != adapter shape ({adapter.d}, {adapter.k})")
    return w


def lora_forward(w: np.ndarray, adapter: LoraAdapter, x: np.ndarray) -> np.ndarray:
    """w @ x + (alpha/rank) * b @ (a @ x); equals w @ x exactly while b is zero."""
    w = _check_shapes(w, adapter)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (adapter.k,):
        raise ValueError(f"input shape {x.shape} != ({adapter.k},)")
    return w @ x + adapter.scaling * (adapter.b @ (adapter.a @ x))


def lora_merge(w: np.ndarray, adapter: LoraAdapter) -> np.ndarray:
    """Fold the adapter into the base matrix: w + (alpha/rank) * b @ a."""
    return _check_shapes(w, adapter) + adapter.delta()


def lora_grads(
    w: np.ndarray, adapter: LoraAdapter, x: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of L = upstream . lora_forward(w, adapter, x) w.r.t. (a, b).

    The base matrix is frozen and receives no gradient.
    """
    _check_shapes(w, adapter)
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.shape != (adapter.k,) or upstream.shape != (adapter.d,):
        raise ValueError(
            f"expected x ({adapter.k},) and upstream ({adapter.d},), got {x.shape} / {upstream.shape}"
        )
    da = adapter.scaling * np.outer(adapter.b.T @ upstream, x)
    db = adapter.scaling * np.outer(upstream, adapter.a @ x)
    return da, db


def lora_param_stats(d: int, k: int, r: int) -> dict:
    if r < 1 or r > min(d, k):
        raise ValueError(f"rank {r} must be in [1, min(d={d}, k={k})]")
    lora_params = r * (d + k)
    full_params = d * k
    return {
        "lora_params": lora_params,
        "full_params": full_params,
        "ratio": lora_params / full_params,
    }


# ---------------------------------------------------------------------------
# Blockwise 4-bit quantization


@dataclass(frozen=True)
class QuantizedTensor:
    codes: np.ndarray
    scales: np.ndarray  # one per block; the absmax4 scheme stores absmax/7
    block_size: int
    scheme: str
    original_length: int


def quantize_blockwise(values, block_size: int, scheme: str = "absmax4") -> QuantizedTensor:
    """Quantize to 4-bit codes per block of ``block_size`` values.

    absmax4: code = round(7 v / absmax), half away from zero, clamped to
    [-7, 7]; the stored scale is absmax/7. nf4: code = nearest entry of the
    16-entry normal-quantile codebook applied to v/absmax; absmax stored as-is.
    All-zero blocks store scale 0 and codes 0.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        values = values.reshape(-1)
    if values.size == 0:
        raise ValueError("cannot quantize an empty input")
    if block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {block_size}")
    if scheme == "absmax4":
        codes, scales = _accel.absmax4_encode(values, block_size)
    elif scheme == "nf4":
        codes, scales = _accel.nf4_encode(values, block_size)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {QUANT_SCHEMES}")
    return QuantizedTensor(
        codes=codes,
        scales=scales,
        block_size=block_size,
        scheme=scheme,
        original_length=values.size,
    )


def dequantize(q: QuantizedTensor) -> np.ndarray:
    """Reconstruct values from 4-bit codes; rejects out-of-range codes."""
    codes = np.asarray(q.codes)
    if q.scheme == "absmax4":
        if codes.size and (codes.min() < -7 or codes.max() > 7):
            raise CorruptionError("absmax4 codes out of range [-7, 7]")
        return _accel.absmax4_decode(codes.astype(np.int8), np.asarray(q.scales), q.block_size)
    if q.scheme == "nf4":
        if codes.size and (codes.min() < 0 or codes.max() > 15):
            raise CorruptionError("nf4 codes out of range [0, 15]")
        return _accel.nf4_decode(codes.astype(np.uint8), np.asarray(q.scales), q.block_size)
    raise ValueError(f"unknown scheme {q.scheme!r}")


# ---------------------------------------------------------------------------
# Toy training loop


@dataclass(frozen=True)
class TrainConfig:
    rank: int = 2
    alpha: float = 2.0
    steps: int = 500
    learning_rate: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class TrainTrace:
    losses: tuple[float, ...]
    final_adapter: LoraAdapter
    config: TrainConfig


def train_lora_toy(w_base: np.ndarray, w_target: np.ndarray, config: TrainConfig) -> TrainTrace:
    """Gradient descent on L = 0.5 * ||(w_base + delta) - w_target||_F^2.

    Only the adapter factors move; the base stays frozen. losses[i] is the
    loss after the (i+1)-th update, so losses[0] is the loss after step 1.
    """
    w_base = np.asarray(w_base, dtype=np.float64)
    w_target = np.asarray(w_target, dtype=np.float64)
    if w_base.shape != w_target.shape:
        raise ValueError(f"shape mismatch: base {w_base.shape} vs target {w_target.shape}")
    if config.steps < 1:
        raise ValueError(f"steps must be >= 1, got {config.steps}")
    if not config.learning_rate > 0:
        raise ValueError(f"learning_rate must be positive, got {config.learning_rate}")
    d, k = w_base.shape
    adapter = lora_init(d, k, config.rank, config.alpha, config.seed)
    a, b = adapter.a.copy(), adapter.b.copy()
    scale = adapter.scaling
    lr = config.learning_rate
    losses = []
    for _ in range(config.steps):
        err = (w_base + scale * (b @ a)) - w_target
        da = scale * (b.T @ err)
        db = scale * (err @ a.T)
        a -= lr * da
        b -= lr * db
        err = (w_base + scale * (b @ a)) - w_target
        losses.append(0.5 * float(np.sum(err * err)))
    return TrainTrace(
        losses=tuple(losses),
        final_adapter=replace(adapter, a=a, b=b),
        config=config,
    )
