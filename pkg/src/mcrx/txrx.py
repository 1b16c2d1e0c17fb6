"""On-off keyed transmission over the receiver: synthesis, impairments, detection.

Bit-1 is a concentration pulse of length ``T_p`` at the start of its bit
interval; bit-0 is silence.  The received current is the superposition of
shifted single-pulse responses on top of the resting baseline.  Decisions
compare the current at consecutive delay-shifted bit boundaries: a falling
current across an interval means targets bound, i.e. a 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError
from .pulse import PulseModelParams, pulse_response
from .trace import Trace

__all__ = [
    "TxConfig", "NoiseConfig", "NOISE_PROFILES", "Trace", "LinkResult",
    "generate_bits", "synthesize_signal", "normalize", "denormalize", "add_noise",
    "moving_mean", "filter_lag", "decision_times", "sample_decision_points", "difference_detect",
    "ber", "run_link", "ber_sweep", "pre_bit_deviation",
]

REFERENCE_BASELINE_UA = 31.25
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class TxConfig:
    n_bits: int = 20
    bit_interval: float = 120.0  # s
    pulse_length: float = 30.0  # s
    concentration: float = 1e-6  # M
    t_transmit: float = 60.0  # s
    seed: int = 1
    delay: float = 55.0  # s
    tail: float = 120.0  # s of record kept after the last decision instant
    saturation_cap: float | None = None  # µA; clip |R(t)| when set
    decision_offset: float = 0.0  # s, added to every decision instant

    def __post_init__(self):
        if self.n_bits < 1:
            raise DomainError("need at least one bit")
        if not 0 < self.pulse_length <= self.bit_interval:
            raise DomainError("pulse length must lie in (0, bit interval]")
        if self.delay < 0 or self.t_transmit < 0:
            raise DomainError("delay and transmit time must be non-negative")

    @property
    def duration(self) -> float:
        return self.t_transmit + self.delay + self.n_bits * self.bit_interval + self.tail


@dataclass(frozen=True)
class NoiseConfig:
    gaussian_sigma: float = 0.0  # µA
    drift_rate: float = 0.0  # µA/s
    seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise DomainError("noise sigma must be non-negative")


# White measurement noise that reproduces a few-percent raw BER with the
# reference pulse model; see tests/test_acceptance.py for the calibration targets.
NOISE_PROFILES = {
    "reference": NoiseConfig(gaussian_sigma=0.005, drift_rate=0.0, seed=0),
    "quiet": NoiseConfig(),
}


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x, z ^ (z >> 31)


def generate_bits(seed: int, n: int) -> np.ndarray:
    """Pseudorandom bits from a xorshift64* shift-register generator.

    The 64-bit state is seeded through splitmix64 so that every integer seed
    (including 0) yields a non-zero state; each output word contributes its
    most significant bit.
    """
    if n < 1:
        raise DomainError("need at least one bit")
    _, state = _splitmix64(seed & _MASK64)
    if state == 0:
        state = 0x9E3779B97F4A7C15
    bits = np.empty(n, dtype=np.int8)
    for i in range(n):
        state ^= state >> 12
        state ^= (state << 25) & _MASK64
        state ^= state >> 27
        out = (state * 0x2545F4914F6CDD1D) & _MASK64
        bits[i] = out >> 63
    return bits


def synthesize_signal(bits, tx: TxConfig, p: PulseModelParams, grid_dt: float = 1.0,
                      baseline: float = REFERENCE_BASELINE_UA) -> Trace:
    """Drain-source current for a bit sequence, by superposing pulse responses.

    ``p`` supplies kinetics, transduction and transport; its timing is
    replaced so that each pulse starts binding ``tx.delay`` seconds after it
    is released and lasts ``tx.pulse_length`` seconds.
    """
    if not 0 < grid_dt <= 1.0:
        raise DomainError("grid_dt must lie in (0, 1] s")
    bits = np.asarray(bits)
    n = int(math.floor(tx.duration / grid_dt + 1e-9)) + 1
    t = grid_dt * np.arange(n)
    template = p.shifted(tx.delay, tx.delay + tx.pulse_length)
    r = np.zeros(n)
    for i, s in enumerate(bits):
        if s:
            r += pulse_response(t - tx.t_transmit - i * tx.bit_interval, template)
    if tx.saturation_cap is not None:
        cap = abs(tx.saturation_cap)
        r = np.clip(r, -cap, cap)
    return Trace(0.0, grid_dt, baseline + r, baseline=baseline)


def normalize(trace: Trace) -> Trace:
    """Divide by the baseline current, so a resting receiver reads 1."""
    if trace.normalized:
        return trace
    if trace.baseline == 0:
        raise DomainError("cannot normalise a trace with zero baseline")
    return trace.with_samples(trace.samples / trace.baseline, normalized=True)


def denormalize(trace: Trace) -> Trace:
    if not trace.normalized:
        return trace
    return trace.with_samples(trace.samples * trace.baseline, normalized=False)


def add_noise(trace: Trace, n: NoiseConfig) -> Trace:
    """Additive white Gaussian noise plus a linear drift, both in µA."""
    rng = np.random.default_rng(n.seed)
    noise = n.gaussian_sigma * rng.standard_normal(len(trace))
    noise += n.drift_rate * (trace.times - trace.t0)
    if trace.normalized:
        noise /= trace.baseline
    return trace.with_samples(trace.samples + noise)


def moving_mean(trace: Trace, window: float) -> Trace:
    """Centred moving average over ``window`` seconds.

    The window spans an odd number of samples; near the ends it is truncated
    to the samples that exist.
    """
    if window < trace.dt:
        raise DomainError("filter window shorter than the sampling period")
    k = 2 * int(round(filter_lag(window, trace.dt) / trace.dt)) + 1
    ones = np.ones(k)
    sums = np.convolve(trace.samples, ones, mode="same")
    counts = np.convolve(np.ones(len(trace)), ones, mode="same")
    return trace.with_samples(sums / counts)


def decision_times(tx: TxConfig, offset: float = 0.0) -> np.ndarray:
    """Delay-shifted bit boundaries: start of every interval plus the end of the last."""
    start = tx.t_transmit + tx.delay + tx.decision_offset + offset
    return start + tx.bit_interval * np.arange(tx.n_bits + 1)


def filter_lag(window: float, dt: float) -> float:
    """Half-width (s) of the centred moving-mean window.

    Decisions on filtered data are taken this much earlier so the window
    stops at the bit boundary instead of averaging in the next pulse's onset.
    """
    k = int(math.floor(window / dt + 0.5))
    if k % 2 == 0:
        k += 1
    return (k // 2) * dt


def sample_decision_points(trace: Trace, tx: TxConfig, times=None) -> np.ndarray:
    """Nearest-sample values of ``trace`` at the decision instants."""
    times = decision_times(tx) if times is None else np.asarray(times, dtype=float)
    idx = np.floor((times - trace.t0) / trace.dt + 0.5).astype(int)
    missing = times[(idx < 0) | (idx >= len(trace))]
    if missing.size:
        listed = ", ".join(f"{t:g}" for t in missing)
        raise DataError(
            f"trace spans [{trace.t0:g}, {trace.t0 + trace.duration:g}] s but "
            f"decision instants at {listed} s fall outside it"
        )
    return trace.samples[idx]


def difference_detect(r) -> np.ndarray:
    """Bit ``i`` is 1 when the current falls between decision points ``i`` and ``i+1``."""
    r = np.asarray(r, dtype=float)
    if r.size < 2:
        raise DomainError("difference detection needs at least two samples")
    return (np.diff(r) < 0).astype(np.int8)


def ber(sent, decoded) -> float:
    sent = np.asarray(sent)
    decoded = np.asarray(decoded)
    if sent.shape != decoded.shape:
        raise DomainError(f"bit sequences differ in length: {sent.size} vs {decoded.size}")
    if sent.size == 0:
        raise DomainError("empty bit sequence")
    return float(np.count_nonzero(sent != decoded)) / sent.size


@dataclass(frozen=True)
class LinkResult:
    bits: np.ndarray
    clean: Trace
    noisy: Trace
    filtered: Trace
    times: np.ndarray
    r_noisy: np.ndarray
    r_filtered: np.ndarray
    decoded_noisy: np.ndarray
    decoded_filtered: np.ndarray

    @property
    def ber_noisy(self) -> float:
        return ber(self.bits, self.decoded_noisy)

    @property
    def ber_filtered(self) -> float:
        return ber(self.bits, self.decoded_filtered)


def run_link(bits, tx: TxConfig, p: PulseModelParams, noise: NoiseConfig,
             window: float = 21.0, grid_dt: float = 1.0,
             baseline: float = REFERENCE_BASELINE_UA,
             filtered_offset: float | None = None) -> LinkResult:
    """Synthesize, corrupt, filter and decode one transmission.

    ``filtered_offset`` shifts the decision instants used on the filtered
    trace; by default they move back by :func:`filter_lag`.
    """
    if filtered_offset is None:
        filtered_offset = -filter_lag(window, grid_dt)
    clean = synthesize_signal(bits, tx, p, grid_dt, baseline)
    noisy = add_noise(clean, noise)
    filtered = moving_mean(noisy, window)
    times = decision_times(tx)
    r_n = sample_decision_points(noisy, tx, times)
    r_f = sample_decision_points(filtered, tx, decision_times(tx, filtered_offset))
    return LinkResult(
        bits=np.asarray(bits, dtype=np.int8), clean=clean, noisy=noisy,
        filtered=filtered, times=times, r_noisy=r_n, r_filtered=r_f,
        decoded_noisy=difference_detect(r_n), decoded_filtered=difference_detect(r_f),
    )


def ber_sweep(tx: TxConfig, p: PulseModelParams, noise: NoiseConfig, seeds,
              window: float = 21.0, grid_dt: float = 1.0):
    """(raw BER, filtered BER) per seed; the seed drives both bits and noise."""
    out = []
    for seed in seeds:
        bits = generate_bits(seed, tx.n_bits)
        nz = NoiseConfig(noise.gaussian_sigma, noise.drift_rate, seed)
        res = run_link(bits, tx, p, nz, window, grid_dt)
        out.append((res.ber_noisy, res.ber_filtered))
    return np.array(out)


def pre_bit_deviation(bits, tx: TxConfig, p: PulseModelParams) -> np.ndarray:
    """Residual |R| from earlier bits at each bit's own decision instant."""
    template = p.shifted(tx.delay, tx.delay + tx.pulse_length)
    t = decision_times(tx)[:-1]
    r = np.zeros_like(t)
    for i, s in enumerate(np.asarray(bits)):
        if s:
            r += pulse_response(t - tx.t_transmit - i * tx.bit_interval, template)
    return np.abs(r)
