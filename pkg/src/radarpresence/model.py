"""Reconstruction model: two shared encoders (macro / micro) and four
category decoders (static / very-static per input kind).

Encoder (for 64x64 inputs): conv 1->16 3x3 stride 2 + BN + LeakyReLU,
conv 16->64 3x3 stride 2 + BN + LeakyReLU, flatten (16384), dense to the
latent code, 1-D BN. Decoder mirrors it: dense latent->16384 + 1-D BN,
reshape to 64@16x16, two stride-2 transpose convs (64 then 16 filters)
each with BN + LeakyReLU, and a final single-filter 3x3 conv with sigmoid,
so reconstructions always lie in (0, 1).

The training objective sums four per-category MSE terms. Each sample
routes its macro frame through the macro encoder and its category's macro
decoder, and its micro frame through the micro encoder and the category's
micro decoder; a category absent from a batch contributes zero for that
step. Both encoders therefore accumulate gradients from both categories
while each decoder only ever sees its own category.
"""

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import TrainingDivergedError, ValidationError
from .nn import (
    Adamax,
    BatchNorm1d,
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    Dense,
    Flatten,
    LeakyReLU,
    Reshape,
    Sequential,
    Sigmoid,
)
from .nn import ops

IMAGE_SIZE = 64
DEFAULT_LATENT_DIM = 64


class Category(str, enum.Enum):
    STATIC = "static"
    VERY_STATIC = "very_static"


CATEGORIES = (Category.STATIC, Category.VERY_STATIC)

DECODER_KEYS = (
    ("macro", Category.STATIC),
    ("macro", Category.VERY_STATIC),
    ("micro", Category.STATIC),
    ("micro", Category.VERY_STATIC),
)


@dataclass
class TrainingSample:
    """One normalized (macro, micro) image pair with its activity label."""

    macro: np.ndarray
    micro: np.ndarray
    category: Category


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    augment: bool = True
    rotation_deg: float = 10.0
    translate_frac: float = 0.1
    flip_prob: float = 0.5
    scale_range: tuple[float, float] = (0.9, 1.1)
    patience: int = 10
    shuffle: bool = True

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValidationError("batch_size must be >= 2 (batch normalization)")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValidationError("flip_prob must lie in [0, 1]")


def _build_encoder(latent_dim, rng, image_size, dtype):
    feat = image_size // 4
    return Sequential(
        [
            ("conv1", Conv2d(1, 16, 3, stride=2, pad=1, rng=rng, dtype=dtype)),
            ("bn1", BatchNorm2d(16, dtype=dtype)),
            ("act1", LeakyReLU()),
            ("conv2", Conv2d(16, 64, 3, stride=2, pad=1, rng=rng, dtype=dtype)),
            ("bn2", BatchNorm2d(64, dtype=dtype)),
            ("act2", LeakyReLU()),
            ("flatten", Flatten()),
            ("dense", Dense(64 * feat * feat, latent_dim, rng=rng, dtype=dtype)),
            ("bn3", BatchNorm1d(latent_dim, dtype=dtype)),
        ]
    )


def _build_decoder(latent_dim, rng, image_size, dtype):
    feat = image_size // 4
    return Sequential(
        [
            ("dense", Dense(latent_dim, 64 * feat * feat, rng=rng, dtype=dtype)),
            ("bn0", BatchNorm1d(64 * feat * feat, dtype=dtype)),
            ("reshape", Reshape((64, feat, feat))),
            ("deconv1", ConvTranspose2d(64, 64, 3, stride=2, pad=1, output_padding=1, rng=rng, dtype=dtype)),
            ("bn1", BatchNorm2d(64, dtype=dtype)),
            ("act1", LeakyReLU()),
            ("deconv2", ConvTranspose2d(64, 16, 3, stride=2, pad=1, output_padding=1, rng=rng, dtype=dtype)),
            ("bn2", BatchNorm2d(16, dtype=dtype)),
            ("act2", LeakyReLU()),
            ("conv", Conv2d(16, 1, 3, stride=1, pad=1, rng=rng, dtype=dtype)),
            ("sigmoid", Sigmoid()),
        ]
    )


@dataclass
class PresenceModel:
    """Parameters of the two encoders and four decoders."""

    encoder_macro: Sequential
    encoder_micro: Sequential
    decoders: dict  # (kind, Category) -> Sequential
    latent_dim: int
    image_size: int = IMAGE_SIZE

    def encoder(self, kind: str) -> Sequential:
        return self.encoder_macro if kind == "macro" else self.encoder_micro

    def reconstruct(self, x: np.ndarray, kind: str, category: Category, train=False):
        z = self.encoder(kind).forward(x, train=train)
        return self.decoders[(kind, category)].forward(z, train=train)

    def _parts(self):
        yield "enc_macro", self.encoder_macro
        yield "enc_micro", self.encoder_micro
        for (kind, cat), dec in sorted(
            self.decoders.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
        ):
            yield f"dec_{kind}_{cat.value}", dec

    def named_params(self):
        out = {}
        for prefix, net in self._parts():
            out.update(net.named_params(prefix + "."))
        return out

    def named_grads(self):
        out = {}
        for prefix, net in self._parts():
            out.update(net.named_grads(prefix + "."))
        return out

    def named_state(self):
        out = {}
        for prefix, net in self._parts():
            out.update(net.named_state(prefix + "."))
        return out

    def load_state(self, state):
        for prefix, net in self._parts():
            net.load_state(state, prefix + ".")


def build_model(
    latent_dim: int = DEFAULT_LATENT_DIM,
    seed: int = 0,
    image_size: int = IMAGE_SIZE,
    dtype=np.float32,
) -> PresenceModel:
    """Deterministically initialize the full model from a seed."""
    if latent_dim < 1:
        raise ValidationError("latent_dim must be >= 1")
    if image_size % 4 != 0:
        raise ValidationError("image_size must be divisible by 4")
    rng = np.random.default_rng(seed)
    enc_macro = _build_encoder(latent_dim, rng, image_size, dtype)
    enc_micro = _build_encoder(latent_dim, rng, image_size, dtype)
    decoders = {
        key: _build_decoder(latent_dim, rng, image_size, dtype) for key in DECODER_KEYS
    }
    return PresenceModel(
        encoder_macro=enc_macro,
        encoder_micro=enc_micro,
        decoders=decoders,
        latent_dim=latent_dim,
        image_size=image_size,
    )


# ---------------------------------------------------------------------------
# Objective: sum of four per-category reconstruction MSEs.
# ---------------------------------------------------------------------------


def _stack(samples, kind):
    attr = "macro" if kind == "macro" else "micro"
    return np.stack([getattr(s, attr) for s in samples])[:, None, :, :]


def summed_mse_loss(
    model: PresenceModel,
    batch: list[TrainingSample],
    train: bool = True,
    backward: bool = True,
    strict: bool = False,
):
    """Summed-MSE objective over the four (kind, category) branches.

    Returns (loss, per_term) where per_term maps each (kind, category)
    branch to its MSE contribution. With backward=True the layer grads of
    every visited network are populated; encoders accumulate gradients
    from both of their branches, and networks skipped this step carry no
    gradients at all (so an optimizer leaves them untouched).
    """
    by_cat = {
        cat: [s for s in batch if s.category == cat] for cat in CATEGORIES
    }
    if strict and any(len(v) == 0 for v in by_cat.values()):
        raise ValidationError("strict mode requires both categories in the batch")
    if backward:
        for _, net in model._parts():
            for _, layer in net.layers:
                layer.grads = {}
    # Encoders are visited up to twice (once per category); their gradients
    # accumulate across those visits.
    enc_grad_acc = {"macro": None, "micro": None}
    loss = 0.0
    per_term = {}
    for kind in ("macro", "micro"):
        encoder = model.encoder(kind)
        for cat in CATEGORIES:
            samples = by_cat[cat]
            if not samples or (train and len(samples) < 2):
                # Batchnorm cannot form statistics from one sample.
                per_term[(kind, cat)] = 0.0
                continue
            x = _stack(samples, kind).astype(
                next(iter(encoder.named_params().values())).dtype
            )
            z = encoder.forward(x, train=train)
            recon = model.decoders[(kind, cat)].forward(z, train=train)
            mse, cache = ops.mse_forward(recon, x)
            per_term[(kind, cat)] = mse
            loss += mse
            if backward:
                din, _ = ops.mse_backward(cache)
                dz = model.decoders[(kind, cat)].backward(din)
                encoder.backward(dz)
                grads = encoder.named_grads()
                if enc_grad_acc[kind] is None:
                    enc_grad_acc[kind] = grads
                else:
                    for k, g in grads.items():
                        enc_grad_acc[kind][k] = enc_grad_acc[kind][k] + g
    if backward:
        for kind in ("macro", "micro"):
            if enc_grad_acc[kind] is not None:
                encoder = model.encoder(kind)
                for (name, layer) in encoder.layers:
                    for pname in layer.grads:
                        layer.grads[pname] = enc_grad_acc[kind][f"{name}.{pname}"]
    return loss, per_term


# ---------------------------------------------------------------------------
# Augmentation: random affine (rotation, translation, scale) plus flips,
# applied identically to the macro and micro frames of a sample.
# ---------------------------------------------------------------------------


def augment(
    sample: TrainingSample, rng: np.random.Generator, config: TrainConfig
) -> TrainingSample:
    if not config.augment:
        return sample
    angle = math.radians(rng.uniform(-config.rotation_deg, config.rotation_deg))
    scale = rng.uniform(*config.scale_range)
    size = sample.macro.shape[0]
    shift = rng.uniform(-config.translate_frac, config.translate_frac, size=2) * size
    flip_h = rng.uniform() < config.flip_prob
    flip_v = rng.uniform() < config.flip_prob

    cos, sin = math.cos(angle), math.sin(angle)
    mat = np.array([[cos, -sin], [sin, cos]]) / scale
    center = (size - 1) / 2.0
    offset = center - mat @ (center + shift)

    def tf(img):
        out = ndimage.affine_transform(
            img, mat, offset=offset, order=1, mode="constant", cval=0.0
        )
        if flip_h:
            out = out[:, ::-1]
        if flip_v:
            out = out[::-1, :]
        return np.clip(out, 0.0, 1.0)

    return TrainingSample(
        macro=tf(sample.macro), micro=tf(sample.micro), category=sample.category
    )


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    model: PresenceModel
    losses: list[float]
    epochs_run: int
    optimizer: Adamax = None
    log_lines: list[str] = field(default_factory=list)


def train(
    model: PresenceModel,
    dataset: list[TrainingSample],
    config: TrainConfig,
    optimizer: Adamax | None = None,
) -> TrainResult:
    """Train on an ID-only dataset containing both categories.

    Each step draws half a batch from each category's independently
    shuffled stream (cycling the shorter one), so every step exercises all
    four loss terms. Deterministic for a fixed config seed.
    """
    pools = {cat: [s for s in dataset if s.category == cat] for cat in CATEGORIES}
    for cat, pool in pools.items():
        if not pool:
            raise ValidationError(f"training dataset has no '{cat.value}' samples")
    rng = np.random.default_rng(config.seed)
    opt = optimizer or Adamax(alpha=config.learning_rate)
    opt.state.alpha = config.learning_rate
    params = model.named_params()

    half = max(1, config.batch_size // 2)
    steps = max(math.ceil(len(p) / half) for p in pools.values())
    losses: list[float] = []
    log_lines: list[str] = []
    best = math.inf
    stale = 0
    epochs_run = 0
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = {}
        for cat, pool in pools.items():
            idx = np.arange(len(pool))
            if config.shuffle:
                idx = rng.permutation(len(pool))
            order[cat] = idx
        epoch_loss = 0.0
        for step in range(steps):
            batch = []
            for cat, pool in pools.items():
                idx = order[cat]
                take = [
                    pool[idx[(step * half + j) % len(pool)]] for j in range(half)
                ]
                batch.extend(take)
            if config.augment:
                batch = [augment(s, rng, config) for s in batch]
            loss, _ = summed_mse_loss(model, batch, train=True, backward=True)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, step {step}"
                )
            opt.step(params, model.named_grads())
            epoch_loss += loss
        epoch_loss /= steps
        losses.append(epoch_loss)
        log_lines.append(
            f"epoch {epoch} loss {epoch_loss:.8f} wall {time.perf_counter() - t0:.3f}"
        )
        epochs_run = epoch + 1
        if epoch_loss < best * (1.0 - 1e-4):
            best = epoch_loss
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return TrainResult(
        model=model, losses=losses, epochs_run=epochs_run, optimizer=opt,
        log_lines=log_lines,
    )
