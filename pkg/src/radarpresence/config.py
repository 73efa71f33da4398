"""Radar front-end configuration and derived waveform quantities.

Default values describe a 60 GHz short-range FMCW sensor: 1 Tx / 3 Rx
antennas, 64 chirps per frame, 128 ADC samples per chirp, 50 ms frame
period. The speed of light is taken as exactly 3e8 m/s so that the range
resolution c/(2B) comes out to 0.15 m and range-bin oracles stay exact.
"""

from dataclasses import dataclass

from .errors import ValidationError

SPEED_OF_LIGHT = 3.0e8  # m/s, exact by convention


@dataclass(frozen=True)
class RadarConfig:
    """FMCW radar configuration.

    Attributes:
        n_tx: number of transmit antennas.
        n_rx: number of receive antennas (half-wavelength spacing).
        n_chirps: chirps per frame (slow-time samples).
        n_samples: ADC samples per chirp (fast-time samples).
        frame_period: time between frame starts, seconds.
        chirp_spacing: chirp-to-chirp time, seconds.
        f_min: ramp start frequency, Hz.
        f_max: ramp stop frequency, Hz.
        adc_rate: ADC sampling rate, Hz.
        adc_bits: ADC resolution; only used when quantization is enabled.
        adc_full_scale: clip level of the optional quantizer, linear units.
    """

    n_tx: int = 1
    n_rx: int = 3
    n_chirps: int = 64
    n_samples: int = 128
    frame_period: float = 0.050
    chirp_spacing: float = 391.55e-6
    f_min: float = 60.1e9
    f_max: float = 61.1e9
    adc_rate: float = 2e6
    adc_bits: int = 12
    adc_full_scale: float = 8.0

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "n_chirps", "n_samples"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.f_max <= self.f_min:
            raise ValidationError("f_max must exceed f_min")
        if self.adc_rate <= 0:
            raise ValidationError("adc_rate must be positive")
        # All samples of a chirp must be acquired within the chirp slot.
        if self.n_samples / self.adc_rate > self.chirp_spacing:
            raise ValidationError(
                "chirp sampling time n_samples/adc_rate exceeds chirp_spacing"
            )
        if self.n_chirps * self.chirp_spacing > self.frame_period:
            raise ValidationError("chirps do not fit into the frame period")

    @property
    def bandwidth(self) -> float:
        """Sweep bandwidth B = f_max - f_min, Hz."""
        return self.f_max - self.f_min

    @property
    def chirp_duration(self) -> float:
        """Active chirp duration T_c = n_samples / adc_rate, seconds."""
        return self.n_samples / self.adc_rate

    @property
    def slope(self) -> float:
        """Chirp rate S = B / T_c, Hz/s."""
        return self.bandwidth / self.chirp_duration

    @property
    def center_frequency(self) -> float:
        return 0.5 * (self.f_min + self.f_max)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.center_frequency

    @property
    def range_resolution(self) -> float:
        """Range resolution c / (2B), meters (0.15 m for the defaults)."""
        return SPEED_OF_LIGHT / (2.0 * self.bandwidth)

    @property
    def range_bin_width(self) -> float:
        """Range covered by one FFT bin of an n_samples-point transform."""
        bin_hz = self.adc_rate / self.n_samples
        return bin_hz * SPEED_OF_LIGHT / (2.0 * self.slope)

    @property
    def max_range(self) -> float:
        """Unambiguous range: beat frequency at the Nyquist rate."""
        return (self.adc_rate / 2.0) * SPEED_OF_LIGHT / (2.0 * self.slope)

    @property
    def velocity_resolution(self) -> float:
        """Doppler-bin spacing in m/s over one frame of chirps."""
        return self.wavelength / (2.0 * self.n_chirps * self.chirp_spacing)

    @property
    def max_velocity(self) -> float:
        """Unambiguous radial speed lambda / (4 T_cc)."""
        return self.wavelength / (4.0 * self.chirp_spacing)
