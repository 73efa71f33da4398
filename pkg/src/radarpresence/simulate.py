"""Synthetic FMCW frame-cube generator for parameterized indoor scenes.

The intermediate-frequency (IF) model is the standard stop-and-hop
approximation: a point target at range R contributes a real tone

    rcs * cos(2 pi f_b n / f_adc + phi),   f_b = 2 R S / c,
    phi = 4 pi R / lambda,                 lambda = c / f_center,

evaluated per chirp with R frozen at the chirp start time. Target motion
models move R between chirps: chest displacement for breathing, body sway
for standing people, linear motion for toys. Fans are modeled crudely as
an amplitude-modulated static return that places micro-Doppler sidebands
at +-blade_rate around the carrier; the detector must not depend on
disturber realism, so no attempt at blade-level physics is made.

Everything is a pure function of (config, scene, frame index). The noise
generator is split per frame index, so frames can be produced in any
order, or in parallel, with bit-identical results.
"""

import configparser
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .config import SPEED_OF_LIGHT, RadarConfig
from .errors import ValidationError


class TargetKind(str, enum.Enum):
    BREATHING_HUMAN = "breathing_human"
    STANDING_MICRO_MOTION = "standing_micro_motion"
    FAN = "fan"
    MOVING_POINT = "moving_point"
    STATIC_REFLECTOR = "static_reflector"


HUMAN_KINDS = (TargetKind.BREATHING_HUMAN, TargetKind.STANDING_MICRO_MOTION)
DISTURBER_KINDS = (TargetKind.FAN, TargetKind.MOVING_POINT)

# Standing people sway slowly on top of breathing; ratios relative to the
# configured chest motion. Invented scene parameters, not measured ones.
SWAY_AMPLITUDE_RATIO = 2.5
SWAY_RATE_RATIO = 0.4
SWAY_PHASE = 2.0

# Fan amplitude-modulation depth (fraction of the carrier amplitude).
FAN_AM_DEPTH = 0.5


@dataclass(frozen=True)
class TargetSpec:
    """One point target in a scene.

    Motion parameters are interpreted per kind; unused ones stay zero.
    """

    kind: TargetKind
    range_m: float
    azimuth: float = 0.0
    rcs_amplitude: float = 1.0
    breath_rate: float = 0.0
    chest_amplitude: float = 0.0
    velocity: float = 0.0
    blade_rate: float = 0.0

    def __post_init__(self):
        if not 0.3 <= self.range_m <= 7.0:
            raise ValidationError(f"target range {self.range_m} outside [0.3, 7.0] m")
        if self.rcs_amplitude <= 0:
            raise ValidationError("rcs_amplitude must be positive")
        if self.kind == TargetKind.BREATHING_HUMAN and not (
            0.1 <= self.breath_rate <= 1.0
        ):
            raise ValidationError("breath_rate must lie in [0.1, 1.0] Hz")

    def displacement(self, t: float) -> float:
        """Radial displacement (m) relative to range_m at scene time t."""
        if self.kind == TargetKind.BREATHING_HUMAN:
            return self.chest_amplitude * math.sin(2.0 * math.pi * self.breath_rate * t)
        if self.kind == TargetKind.STANDING_MICRO_MOTION:
            breath = self.chest_amplitude * math.sin(
                2.0 * math.pi * self.breath_rate * t
            )
            sway = (
                SWAY_AMPLITUDE_RATIO
                * self.chest_amplitude
                * math.sin(2.0 * math.pi * SWAY_RATE_RATIO * self.breath_rate * t + SWAY_PHASE)
            )
            return breath + sway
        if self.kind == TargetKind.MOVING_POINT:
            return self.velocity * t
        return 0.0

    def amplitude_factor(self, t: float) -> float:
        """Slow-time amplitude modulation (fans only)."""
        if self.kind == TargetKind.FAN:
            return 1.0 + FAN_AM_DEPTH * math.cos(2.0 * math.pi * self.blade_rate * t)
        return 1.0


@dataclass(frozen=True)
class Scene:
    """A reproducible scene: targets plus noise level and duration."""

    targets: tuple[TargetSpec, ...]
    noise_std: float = 0.0
    duration: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValidationError("scene duration must be positive")
        if self.noise_std < 0:
            raise ValidationError("noise_std must be non-negative")
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass
class FrameCube:
    """One digitized radar frame, shape [n_rx, n_chirps, n_samples]."""

    data: np.ndarray
    frame_index: int
    timestamp: float


def _frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    # Counter-based split: the stream for frame k never depends on other frames.
    return np.random.default_rng((seed & 0xFFFFFFFFFFFFFFFF, frame_index))


def _target_phasors(
    config: RadarConfig, targets: Sequence[TargetSpec], t0s: np.ndarray
) -> np.ndarray:
    """Sum of target IF phasors for chirps starting at times t0s.

    Returns complex array [len(t0s), n_samples]; the real part is the
    noiseless single-antenna IF signal.
    """
    n_fast = np.arange(config.n_samples) / config.adc_rate
    out = np.zeros((len(t0s), config.n_samples), dtype=np.complex128)
    lam = config.wavelength
    for tg in targets:
        r = np.array([tg.range_m + tg.displacement(t) for t in t0s])
        if np.any(r <= 0.0) or np.any(r >= config.max_range):
            raise ValidationError(
                f"target range leaves the unambiguous span (0, {config.max_range:.2f}) m"
            )
        f_beat = 2.0 * r * config.slope / SPEED_OF_LIGHT
        phase = 4.0 * math.pi * r / lam
        amp = tg.rcs_amplitude * np.array([tg.amplitude_factor(t) for t in t0s])
        out += amp[:, None] * np.exp(
            1j * (2.0 * math.pi * f_beat[:, None] * n_fast[None, :] + phase[:, None])
        )
    return out


def simulate_if_chirp(
    config: RadarConfig,
    targets: Sequence[TargetSpec],
    t0: float,
    rng: np.random.Generator | None = None,
    noise_std: float = 0.0,
) -> np.ndarray:
    """Single-antenna IF signal of one chirp starting at scene time t0.

    Returns a real vector of n_samples values: the sum over targets of
    rcs * cos(2 pi f_b t + phi) plus optional Gaussian noise.
    """
    sig = _target_phasors(config, targets, np.array([t0])).real[0]
    if noise_std > 0.0:
        if rng is None:
            raise ValidationError("noise requested but no rng supplied")
        sig = sig + rng.normal(0.0, noise_std, config.n_samples)
    return sig


def quantize(x: np.ndarray, config: RadarConfig) -> np.ndarray:
    """Optional ADC quantization: clip to full scale, round to adc_bits."""
    step = 2.0 * config.adc_full_scale / (2**config.adc_bits)
    clipped = np.clip(x, -config.adc_full_scale, config.adc_full_scale - step)
    return np.round(clipped / step) * step


def simulate_frame(
    config: RadarConfig,
    scene: Scene,
    frame_index: int,
    quantized: bool = False,
) -> FrameCube:
    """Simulate one frame cube [n_rx, n_chirps, n_samples].

    Chirps are spaced chirp_spacing apart starting at frame_index *
    frame_period. Antennas replicate the signal with per-target phase
    offsets pi * k * sin(azimuth) (half-wavelength element spacing).
    Deterministic for fixed (config, scene, frame_index).
    """
    if frame_index < 0 or frame_index * config.frame_period >= scene.duration:
        raise IndexError(f"frame index {frame_index} out of range for scene")
    t0s = frame_index * config.frame_period + np.arange(config.n_chirps) * config.chirp_spacing

    data = np.zeros((config.n_rx, config.n_chirps, config.n_samples))
    for tg in scene.targets:
        phasor = _target_phasors(config, [tg], t0s)
        for k in range(config.n_rx):
            offset = math.pi * k * math.sin(tg.azimuth)
            data[k] += (phasor * np.exp(1j * offset)).real

    if scene.noise_std > 0.0:
        rng = _frame_rng(scene.seed, frame_index)
        data += rng.normal(0.0, scene.noise_std, data.shape)
    if quantized:
        data = quantize(data, config)
    return FrameCube(
        data=data, frame_index=frame_index, timestamp=frame_index * config.frame_period
    )


def num_frames(config: RadarConfig, scene: Scene) -> int:
    return int(scene.duration / config.frame_period)


def simulate_recording(
    config: RadarConfig, scene: Scene, quantized: bool = False
) -> Iterator[FrameCube]:
    """Yield floor(duration / frame_period) frames in order."""
    for i in range(num_frames(config, scene)):
        yield simulate_frame(config, scene, i, quantized=quantized)


# ---------------------------------------------------------------------------
# Scene presets
#
# The source material for the detector never specifies its disturbers'
# signal statistics; all parameter ranges below are invented, chosen only
# to give plausibly separable synthetic scenes. Humans and disturbers sit
# 1 to 4 m from the sensor.
# ---------------------------------------------------------------------------

PRESET_DURATION = 15.0
PRESET_NOISE_STD = 0.05

PRESET_NAMES = (
    "id_static",
    "id_very_static",
    "id_static_with_disturber",
    "id_very_static_with_disturber",
    "ood_fan",
    "ood_moving_toy",
    "empty_room",
)


def _clutter(rng: np.random.Generator) -> list[TargetSpec]:
    n = int(rng.integers(1, 3))
    return [
        TargetSpec(
            kind=TargetKind.STATIC_REFLECTOR,
            range_m=float(rng.uniform(0.6, 6.0)),
            azimuth=float(rng.uniform(-0.6, 0.6)),
            rcs_amplitude=float(rng.uniform(0.5, 1.5)),
        )
        for _ in range(n)
    ]


def _standing_human(rng: np.random.Generator) -> TargetSpec:
    return TargetSpec(
        kind=TargetKind.STANDING_MICRO_MOTION,
        range_m=float(rng.uniform(1.0, 4.0)),
        azimuth=float(rng.uniform(-0.5, 0.5)),
        rcs_amplitude=float(rng.uniform(0.9, 1.6)),
        breath_rate=float(rng.uniform(0.2, 0.4)),
        chest_amplitude=float(rng.uniform(2e-3, 4e-3)),
    )


def _sitting_human(rng: np.random.Generator) -> TargetSpec:
    return TargetSpec(
        kind=TargetKind.BREATHING_HUMAN,
        range_m=float(rng.uniform(1.0, 4.0)),
        azimuth=float(rng.uniform(-0.5, 0.5)),
        rcs_amplitude=float(rng.uniform(0.9, 1.6)),
        breath_rate=float(rng.uniform(0.15, 0.35)),
        chest_amplitude=float(rng.uniform(1.5e-3, 3.5e-3)),
    )


def _fan(rng: np.random.Generator) -> TargetSpec:
    return TargetSpec(
        kind=TargetKind.FAN,
        range_m=float(rng.uniform(1.0, 4.0)),
        azimuth=float(rng.uniform(-0.5, 0.5)),
        rcs_amplitude=float(rng.uniform(0.25, 0.5)),
        blade_rate=float(rng.uniform(6.0, 16.0)),
    )


def _moving_toy(rng: np.random.Generator) -> TargetSpec:
    # Speed and start range chosen so the toy stays inside the unambiguous
    # span for recordings up to ~30 s.
    direction = 1.0 if rng.uniform() < 0.5 else -1.0
    return TargetSpec(
        kind=TargetKind.MOVING_POINT,
        range_m=float(rng.uniform(1.5, 3.0)),
        azimuth=float(rng.uniform(-0.5, 0.5)),
        rcs_amplitude=float(rng.uniform(0.25, 0.5)),
        velocity=direction * float(rng.uniform(0.03, 0.06)),
    )


def _disturber(rng: np.random.Generator) -> TargetSpec:
    return _fan(rng) if rng.uniform() < 0.5 else _moving_toy(rng)


def preset_scene(name: str, seed: int) -> Scene:
    """Build a named preset scene with parameters randomized under seed."""
    if name not in PRESET_NAMES:
        raise ValidationError(f"unknown preset '{name}'; known: {', '.join(PRESET_NAMES)}")
    rng = np.random.default_rng(seed)
    targets = _clutter(rng)
    if name == "id_static":
        targets.append(_standing_human(rng))
    elif name == "id_very_static":
        targets.append(_sitting_human(rng))
    elif name == "id_static_with_disturber":
        targets.append(_standing_human(rng))
        targets.append(_disturber(rng))
    elif name == "id_very_static_with_disturber":
        targets.append(_sitting_human(rng))
        targets.append(_disturber(rng))
    elif name == "ood_fan":
        for _ in range(int(rng.integers(1, 3))):
            targets.append(_fan(rng))
    elif name == "ood_moving_toy":
        targets.append(_moving_toy(rng))
    # empty_room keeps clutter only
    return Scene(
        targets=tuple(targets),
        noise_std=PRESET_NOISE_STD,
        duration=PRESET_DURATION,
        seed=seed,
    )


def preset_category(name: str) -> str:
    """Dataset category label implied by a preset: static / very_static / ood."""
    if name.startswith("id_static"):
        return "static"
    if name.startswith("id_very_static"):
        return "very_static"
    if name in PRESET_NAMES:
        return "ood"
    raise ValidationError(f"unknown preset '{name}'")


# ---------------------------------------------------------------------------
# Scene files: one scene per file, INI-style key/value text.
# ---------------------------------------------------------------------------

_TARGET_FIELDS = (
    "range_m",
    "azimuth",
    "rcs_amplitude",
    "breath_rate",
    "chest_amplitude",
    "velocity",
    "blade_rate",
)


def save_scene(scene: Scene, path) -> None:
    cp = configparser.ConfigParser()
    cp["scene"] = {
        "noise_std": repr(scene.noise_std),
        "duration": repr(scene.duration),
        "seed": str(scene.seed),
    }
    for i, tg in enumerate(scene.targets):
        sec = f"target.{i}"
        cp[sec] = {"kind": tg.kind.value}
        for name in _TARGET_FIELDS:
            cp[sec][name] = repr(getattr(tg, name))
    with open(path, "w") as fh:
        cp.write(fh)


def load_scene(path) -> Scene:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    if "scene" not in cp:
        raise ValidationError(f"scene file {path} has no [scene] section")
    targets = []
    for sec in sorted(s for s in cp.sections() if s.startswith("target.")):
        kind = TargetKind(cp[sec]["kind"])
        kwargs = {name: cp[sec].getfloat(name, 0.0) for name in _TARGET_FIELDS}
        targets.append(TargetSpec(kind=kind, **kwargs))
    return Scene(
        targets=tuple(targets),
        noise_std=cp["scene"].getfloat("noise_std", 0.0),
        duration=cp["scene"].getfloat("duration", PRESET_DURATION),
        seed=cp["scene"].getint("seed", 0),
    )


def with_duration(scene: Scene, duration: float) -> Scene:
    return replace(scene, duration=duration)
