"""Gammatone and gammachirp filterbanks on the ERB scale.

Channel ``k`` has impulse response::

    g_k[n] = A * t**(p-1) * exp(-2*pi*b_f*ERB(f_k)*t) * cos(2*pi*f_k*t + c*ln(t)),  t = n/fs

with ``g_k[0] = 0``. The gammatone is the ``c = 0`` case. ``A`` is chosen per
channel so that the peak of the FFT magnitude response is 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .audio import PIPELINE_RATE, AudioClip

KINDS = ("gammatone", "gammachirp")
DEFAULT_CHIRP = -3.7
TRUNCATION_DB = -60.0


class FilterbankError(ValueError):
    pass


def erb_bandwidth(f_khz):
    """Equivalent rectangular bandwidth in Hz of a filter centred at ``f_khz`` kHz."""
    f = np.asarray(f_khz, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("centre frequency must be non-negative")
    out = 24.7 * (4.37 * f + 1.0)
    return float(out) if out.ndim == 0 else out


def erb_number(f_hz):
    """ERB-number (Cam) of ``f_hz``."""
    return 21.4 * np.log10(4.37 * np.asarray(f_hz, dtype=np.float64) / 1000.0 + 1.0)


def erb_number_inverse(cams):
    return (10.0 ** (np.asarray(cams, dtype=np.float64) / 21.4) - 1.0) * 1000.0 / 4.37


def erb_space(f_min: float, f_max: float, num_channels: int) -> np.ndarray:
    """``num_channels`` frequencies equally spaced in ERB-number, endpoints included."""
    if num_channels < 1:
        raise FilterbankError("need at least one channel")
    if num_channels == 1:
        if f_min != f_max:
            raise FilterbankError("a single channel needs f_min == f_max")
        return np.array([float(f_min)])
    if not 0 <= f_min < f_max:
        raise FilterbankError(f"need 0 <= f_min < f_max, got {f_min}, {f_max}")
    freqs = erb_number_inverse(np.linspace(erb_number(f_min), erb_number(f_max), num_channels))
    # pin endpoints against round-off in the log/exp round trip
    freqs[0], freqs[-1] = f_min, f_max
    return freqs


@dataclass(frozen=True)
class FilterbankSpec:
    kind: str = "gammatone"
    num_channels: int = 64
    f_min: float = 60.0
    f_max: float = 7600.0
    order: int = 4
    bandwidth_factor: float = 1.019
    chirp_coeff: float = DEFAULT_CHIRP
    sample_rate: int = PIPELINE_RATE
    ir_length: int = 4096

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FilterbankError(f"unknown filterbank kind {self.kind!r}")
        if self.kind == "gammatone":
            object.__setattr__(self, "chirp_coeff", 0.0)
        if self.num_channels < 1:
            raise FilterbankError("num_channels must be >= 1")
        if not 0 < self.f_min < self.f_max < self.sample_rate / 2:
            if not (self.num_channels == 1 and self.f_min == self.f_max):
                raise FilterbankError(
                    f"need 0 < f_min < f_max < fs/2, got {self.f_min}, {self.f_max}, fs={self.sample_rate}")
        if self.order < 1:
            raise FilterbankError("order must be >= 1")
        if self.bandwidth_factor <= 0:
            raise FilterbankError("bandwidth_factor must be positive")
        if self.ir_length <= self.order:
            raise FilterbankError("ir_length must exceed the filter order")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class AuditoryFilterbank:
    spec: FilterbankSpec
    center_freqs: np.ndarray
    impulse_responses: np.ndarray = field(repr=False)
    gains: np.ndarray = field(repr=False)

    @property
    def num_channels(self) -> int:
        return self.center_freqs.size

    def frequency_response(self, nfft: int | None = None):
        """Return ``(freqs, H)``: one-sided FFT of every impulse response."""
        nfft = nfft or self.spec.ir_length
        H = np.fft.rfft(self.impulse_responses, n=nfft, axis=1)
        return np.fft.rfftfreq(nfft, 1.0 / self.spec.sample_rate), H

    def __call__(self, clip: AudioClip) -> np.ndarray:
        return apply_filterbank(self, clip)


def _raw_impulse_responses(spec: FilterbankSpec, freqs: np.ndarray):
    n = np.arange(spec.ir_length)
    t = n / spec.sample_rate
    decay = 2.0 * np.pi * spec.bandwidth_factor * erb_bandwidth(freqs / 1000.0)
    envelope = t[None, :] ** (spec.order - 1) * np.exp(-decay[:, None] * t[None, :])
    log_t = np.zeros_like(t)
    log_t[1:] = np.log(t[1:])
    phase = 2.0 * np.pi * freqs[:, None] * t[None, :] + spec.chirp_coeff * log_t[None, :]
    g = envelope * np.cos(phase)
    g[:, 0] = 0.0
    return g, envelope


def build_filterbank(spec: FilterbankSpec) -> AuditoryFilterbank:
    """Realize the impulse responses described by ``spec``.

    Raises :class:`FilterbankError` when ``ir_length`` cuts a channel's
    envelope off above -60 dB of its peak.
    """
    freqs = erb_space(spec.f_min, spec.f_max, spec.num_channels)
    g, envelope = _raw_impulse_responses(spec, freqs)

    peak = envelope.max(axis=1)
    tail = envelope[:, -1]
    floor = 10.0 ** (TRUNCATION_DB / 20.0)
    short = np.nonzero(tail > floor * peak)[0]
    if short.size:
        k = int(short[0])
        raise FilterbankError(
            f"ir_length={spec.ir_length} truncates channel {k} ({freqs[k]:.1f} Hz) at "
            f"{20 * np.log10(tail[k] / peak[k]):.1f} dB")

    mag = np.abs(np.fft.rfft(g, n=spec.ir_length, axis=1)).max(axis=1)
    gains = 1.0 / mag
    g = g * gains[:, None]
    g.setflags(write=False)
    freqs.setflags(write=False)
    return AuditoryFilterbank(spec, freqs, g, gains)


def _overlap_save(x: np.ndarray, h: np.ndarray, nfft: int | None = None) -> np.ndarray:
    """Linear convolution of ``x`` with every row of ``h``, first len(x) samples.

    Block-wise overlap-save with FFT length ``nfft`` (default: the next power
    of two at or above 4x the filter length).
    """
    n_x = x.size
    n_h = h.shape[1]
    if nfft is None:
        nfft = 1 << int(np.ceil(np.log2(4 * n_h)))
    if nfft < n_h:
        raise ValueError("nfft must be at least the filter length")
    step = nfft - n_h + 1
    H = np.fft.rfft(h, n=nfft, axis=1)
    n_blocks = -(-n_x // step)
    padded = np.concatenate([np.zeros(n_h - 1), x, np.zeros(n_blocks * step - n_x)])
    idx = np.arange(n_blocks)[:, None] * step + np.arange(nfft)[None, :]
    X = np.fft.rfft(padded[idx], axis=1)
    y = np.empty((h.shape[0], n_blocks * step))
    for k in range(h.shape[0]):
        blocks = np.fft.irfft(X * H[k], n=nfft, axis=1)[:, n_h - 1:]
        y[k] = blocks.reshape(-1)
    return y[:, :n_x]


def apply_filterbank(fb: AuditoryFilterbank, clip: AudioClip) -> np.ndarray:
    """Filter ``clip`` through every channel; returns a K x len(clip) array.

    Output is the causal convolution truncated to the input length, with no
    group-delay compensation.
    """
    if clip.sample_rate != fb.spec.sample_rate:
        raise FilterbankError(
            f"clip rate {clip.sample_rate} Hz does not match filterbank rate {fb.spec.sample_rate} Hz")
    return _overlap_save(clip.samples, fb.impulse_responses)


def direct_convolve(fb: AuditoryFilterbank, x: np.ndarray) -> np.ndarray:
    """Time-domain reference for :func:`apply_filterbank`."""
    x = np.asarray(x, dtype=np.float64)
    return np.stack([np.convolve(x, g)[:x.size] for g in fb.impulse_responses])


def measure_channels(fb: AuditoryFilterbank, nfft: int | None = None) -> list[dict]:
    """Per-channel peak frequency, ERB and -3 dB bandwidth from the FFT response."""
    freqs, H = fb.frequency_response(nfft)
    mag = np.abs(H)
    rows = []
    for k in range(fb.num_channels):
        m = mag[k]
        i = int(np.argmax(m))
        rows.append({
            "channel": k,
            "center_freq_hz": float(fb.center_freqs[k]),
            "measured_peak_hz": float(freqs[i]),
            "erb_hz": erb_bandwidth(fb.center_freqs[k] / 1000.0),
            "minus3db_bw_hz": _minus3db_width(freqs, m, i),
        })
    return rows


def _minus3db_width(freqs, mag, peak):
    level = mag[peak] / np.sqrt(2.0)

    def crossing(indices):
        prev = peak
        for j in indices:
            if mag[j] < level:
                # linear interpolation between prev (above) and j (below)
                f0, f1, m0, m1 = freqs[prev], freqs[j], mag[prev], mag[j]
                return f0 + (m0 - level) * (f1 - f0) / (m0 - m1)
            prev = j
        return freqs[indices[-1]] if len(indices) else freqs[peak]

    lo = crossing(range(peak - 1, -1, -1))
    hi = crossing(range(peak + 1, mag.size))
    return float(hi - lo)
