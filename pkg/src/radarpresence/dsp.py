"""Range-Doppler preprocessing: macro and micro RDIs plus the sliding
summation window that accumulates minute periodic body motion.

Macro RDI (per frame, 64 doppler x 64 range):
    Hann-windowed range FFT on fast time, one-sided (n_samples/2 bins),
    averaged across the Rx channels into a single channel, first-order
    frame-to-frame MTI to cancel static returns, Hann-windowed Doppler FFT
    along the 64 chirps, fftshift so zero velocity sits at row 32.

Micro RDI (per 8 consecutive frames):
    fast-time mean removal, Hann-windowed one-sided range FFT, Rx average,
    stacking of the 8 frames' range spectrograms into 512 slow-time rows,
    slow-time mean removal per range bin, low-pass sinc filtering along
    slow time, Hann-windowed 512-point Doppler FFT, and a crop to the 64
    bins centered on zero Doppler where micro motion lives.

All batch operations are pure; ErespdStream is single-owner mutable state.
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import signal as sps

from .errors import ValidationError
from .simulate import FrameCube

MICRO_STACK_DEPTH = 8
MTI_DEPTH = 2
# Raw frames consumed before the first (macro, micro) pair is available.
PAIR_WARMUP = MICRO_STACK_DEPTH - 1
ERESPD_WINDOW = 200
SINC_CUTOFF = 0.1  # fraction of the slow-time Nyquist rate


@dataclass
class RdiFrame:
    """A single 64x64 range-Doppler image (rows doppler, cols range)."""

    data: np.ndarray
    kind: str  # "macro" or "micro"
    frame_index: int = 0


@dataclass
class RdiSequence:
    """Time-ordered RDI frames of a uniform kind and shape."""

    frames: list[RdiFrame] = field(default_factory=list)
    kind: str = "macro"

    def __len__(self):
        return len(self.frames)

    def stack(self) -> np.ndarray:
        return np.stack([f.data for f in self.frames])

    @classmethod
    def from_array(cls, arr: np.ndarray, kind: str, first_index: int = 0):
        frames = [
            RdiFrame(data=a, kind=kind, frame_index=first_index + i)
            for i, a in enumerate(arr)
        ]
        return cls(frames=frames, kind=kind)

    def validate(self):
        if not self.frames:
            return
        shape = self.frames[0].data.shape
        prev = None
        for f in self.frames:
            if f.kind != self.kind or f.data.shape != shape:
                raise ValidationError("mixed kinds or shapes in RDI sequence")
            if prev is not None and f.frame_index <= prev:
                raise ValidationError("frame indices must strictly increase")
            prev = f.frame_index


# ---------------------------------------------------------------------------
# FFT wrappers. np.fft conventions: forward transform unnormalized, so
# Parseval reads sum|x|^2 == (1/N) sum|X|^2.
# ---------------------------------------------------------------------------


def fft_fast_time(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Full FFT along fast time (range transform)."""
    return np.fft.fft(x, axis=axis)


def fft_slow_time(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """FFT along slow time with zero Doppler shifted to the center bin."""
    return np.fft.fftshift(np.fft.fft(x, axis=axis), axes=axis)


def one_sided(spectrum: np.ndarray, axis: int = -1) -> np.ndarray:
    """Keep the first half of a real-input spectrum along axis."""
    n = spectrum.shape[axis] // 2
    return np.take(spectrum, np.arange(n), axis=axis)


def hann(n: int) -> np.ndarray:
    return np.hanning(n)


def _check_cube_shapes(frames: Sequence[FrameCube]):
    shape = frames[0].data.shape
    if len(shape) != 3:
        raise ValidationError("frame cubes must be 3-D [n_rx, n_chirps, n_samples]")
    for f in frames:
        if f.data.shape != shape:
            raise ValidationError("frame cube shape changed within the window")


def _range_spectrum(cube: np.ndarray, remove_fast_mean: bool) -> np.ndarray:
    """Collapsed range spectrogram [n_chirps, n_samples/2] of one frame.

    Hann window on fast time, full FFT, one-sided slice, average over Rx.
    """
    x = cube
    if remove_fast_mean:
        x = x - x.mean(axis=-1, keepdims=True)
    w = hann(x.shape[-1])
    spec = fft_fast_time(x * w, axis=-1)
    return one_sided(spec, axis=-1).mean(axis=0)


def compute_macro_rdi(frames: Sequence[FrameCube]) -> RdiFrame:
    """Macro RDI from the last two frames of a window (first-order MTI)."""
    if len(frames) < MTI_DEPTH:
        raise ValidationError(f"macro RDI needs >= {MTI_DEPTH} frames for the MTI")
    _check_cube_shapes(frames)
    prev = _range_spectrum(frames[-2].data, remove_fast_mean=False)
    curr = _range_spectrum(frames[-1].data, remove_fast_mean=False)
    moving = curr - prev
    w_slow = hann(moving.shape[0])
    rdi = np.abs(fft_slow_time(moving * w_slow[:, None], axis=0))
    return RdiFrame(data=rdi, kind="macro", frame_index=frames[-1].frame_index)


def sinc_lowpass_kernel(cutoff: float = SINC_CUTOFF, taps: int = 129) -> np.ndarray:
    """Hann-windowed sinc low-pass FIR, cutoff as a fraction of Nyquist."""
    if not 0.0 < cutoff <= 1.0:
        raise ValidationError("sinc cutoff must lie in (0, 1]")
    n = np.arange(taps) - (taps - 1) / 2.0
    h = cutoff * np.sinc(cutoff * n) * hann(taps)
    return h / h.sum()


def _sinc_filter(x: np.ndarray, cutoff: float) -> np.ndarray:
    h = sinc_lowpass_kernel(cutoff).astype(x.real.dtype)
    return sps.convolve(x, h[:, None], mode="same", method="direct")


def compute_micro_rdi(
    frames: Sequence[FrameCube], sinc_cutoff: float = SINC_CUTOFF
) -> RdiFrame:
    """Micro RDI from exactly MICRO_STACK_DEPTH consecutive frames."""
    if len(frames) != MICRO_STACK_DEPTH:
        raise ValidationError(f"micro RDI needs exactly {MICRO_STACK_DEPTH} frames")
    _check_cube_shapes(frames)
    specs = [_range_spectrum(f.data, remove_fast_mean=True) for f in frames]
    stacked = np.concatenate(specs, axis=0)  # [8 * n_chirps, n_range]
    stacked = stacked - stacked.mean(axis=0, keepdims=True)
    stacked = _sinc_filter(stacked, sinc_cutoff)
    w_slow = hann(stacked.shape[0])
    spec = np.abs(fft_slow_time(stacked * w_slow[:, None], axis=0))
    center = spec.shape[0] // 2
    n_keep = stacked.shape[0] // MICRO_STACK_DEPTH  # 64 for the default config
    rdi = spec[center - n_keep // 2 : center + n_keep // 2]
    return RdiFrame(data=rdi, kind="micro", frame_index=frames[-1].frame_index)


def paired_rdi_stream(
    frames: Iterable[FrameCube], sinc_cutoff: float = SINC_CUTOFF
) -> Iterator[tuple[RdiFrame, RdiFrame]]:
    """Aligned (macro, micro) RDI pairs, one per frame after PAIR_WARMUP."""
    from collections import deque

    buf: deque[FrameCube] = deque(maxlen=MICRO_STACK_DEPTH)
    for frame in frames:
        buf.append(frame)
        if len(buf) == MICRO_STACK_DEPTH:
            window = list(buf)
            yield (
                compute_macro_rdi(window[-MTI_DEPTH:]),
                compute_micro_rdi(window, sinc_cutoff=sinc_cutoff),
            )


# ---------------------------------------------------------------------------
# Sliding-window summation (200 frames = 10 s at the default frame period).
# ---------------------------------------------------------------------------


def erespd(seq: RdiSequence, window: int = ERESPD_WINDOW) -> RdiSequence:
    """Sliding sums: output[i] = sum of frames i .. i+window-1.

    Output length is len(seq) - window + 1; each output keeps the frame
    index of the first frame of its window.
    """
    if window < 1:
        raise ValidationError("window must be >= 1")
    if len(seq) < window:
        raise ValidationError(
            f"sequence of {len(seq)} frames is shorter than the {window}-frame window"
        )
    arr = seq.stack().astype(np.float64)
    cs = np.cumsum(arr, axis=0)
    out = np.empty((len(seq) - window + 1,) + arr.shape[1:])
    out[0] = cs[window - 1]
    out[1:] = cs[window:] - cs[:-window]
    frames = [
        RdiFrame(data=out[i], kind=seq.kind, frame_index=seq.frames[i].frame_index)
        for i in range(out.shape[0])
    ]
    return RdiSequence(frames=frames, kind=seq.kind)


class ErespdStream:
    """Streaming counterpart of erespd: a ring buffer plus a running sum.

    Emits nothing until `window` frames have been seen, then one summed
    frame per input (add the newest frame, subtract the oldest). Owned by
    a single consumer; not thread-safe.
    """

    def __init__(self, window: int = ERESPD_WINDOW):
        if window < 1:
            raise ValidationError("window must be >= 1")
        self.window = window
        self._buf: list[np.ndarray] = []
        self._indices: list[int] = []
        self._start = 0
        self._sum: np.ndarray | None = None
        self._shape: tuple | None = None
        self._kind: str | None = None

    def push(self, frame: RdiFrame) -> RdiFrame | None:
        if self._shape is None:
            self._shape = frame.data.shape
            self._kind = frame.kind
            self._sum = np.zeros(self._shape, dtype=np.float64)
        elif frame.data.shape != self._shape or frame.kind != self._kind:
            raise ValidationError("RDI shape or kind changed mid-stream")
        data = frame.data.astype(np.float64)
        self._buf.append(data)
        self._indices.append(frame.frame_index)
        self._sum += data
        if len(self._buf) - self._start < self.window:
            return None
        out = RdiFrame(
            data=self._sum.copy(), kind=frame.kind, frame_index=self._indices[self._start]
        )
        self._sum -= self._buf[self._start]
        self._buf[self._start] = None  # release memory
        self._start += 1
        if self._start > 4 * self.window:
            self._buf = self._buf[self._start :]
            self._indices = self._indices[self._start :]
            self._start = 0
        return out


def erespd_stream(state: ErespdStream, frame: RdiFrame) -> RdiFrame | None:
    """Functional wrapper around ErespdStream.push."""
    return state.push(frame)


# ---------------------------------------------------------------------------
# Normalization: the network's final activation is a sigmoid, so inputs are
# min-max scaled to [0, 1] per image. A constant image maps to all zeros.
# ---------------------------------------------------------------------------


def normalize_image(data: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(data)):
        raise ValidationError("RDI contains non-finite values")
    lo = data.min()
    hi = data.max()
    if hi == lo:
        return np.zeros_like(data, dtype=np.float64)
    return (data - lo) / (hi - lo)


def normalize_rdi(frame: RdiFrame) -> RdiFrame:
    return RdiFrame(
        data=normalize_image(frame.data), kind=frame.kind, frame_index=frame.frame_index
    )
