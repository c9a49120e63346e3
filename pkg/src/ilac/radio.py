"""Channel, rate and latency models, plus distributed-training cost calculators.

Distances feed a log-distance path-loss law in dB (distance in kilometers);
the noise figure is a power spectral density in dBm/Hz, so the noise power
inside the rate expression scales with the allocated bandwidth.  Uplink
transmissions at the computed rate are error-free by default; an optional
binary-symmetric corruption helper flips sign-quantized model elements for
robustness experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .streams import substream

LN2 = math.log(2.0)

PATH_LOSS_INTERCEPT_DB = 128.1
PATH_LOSS_SLOPE_DB = 37.6


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise as a power spectral density."""

    psd_dbm_per_hz: float = -134.0

    def __post_init__(self):
        if not math.isfinite(self.psd_dbm_per_hz):
            raise ValueError("noise PSD must be finite")

    @property
    def psd_w_per_hz(self) -> float:
        return 10.0 ** ((self.psd_dbm_per_hz - 30.0) / 10.0)


def path_loss_db(distance_km: float) -> float:
    """Log-distance path loss in dB; distance in kilometers."""
    if distance_km <= 0:
        raise ValueError("distance must be positive")
    return PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * math.log10(distance_km)


def gain_from_path_loss(loss_db: float) -> float:
    """Linear power gain for a path loss in dB."""
    return 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class ChannelState:
    client_id: int
    distance_km: float
    loss_db: float
    gain: float

    @classmethod
    def from_distance(cls, client_id: int, distance_km: float) -> "ChannelState":
        loss = path_loss_db(distance_km)
        return cls(client_id=client_id, distance_km=distance_km,
                   loss_db=loss, gain=gain_from_path_loss(loss))


@dataclass(frozen=True)
class RadioAllocation:
    """Per-client bandwidth (Hz) and transmit power (W)."""

    bandwidth_hz: np.ndarray
    power_w: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bandwidth_hz, dtype=np.float64)
        p = np.asarray(self.power_w, dtype=np.float64)
        if b.shape != p.shape:
            raise ValueError("bandwidth and power vectors disagree in length")
        if (b < 0).any() or (p < 0).any():
            raise ValueError("allocations must be nonnegative")
        object.__setattr__(self, "bandwidth_hz", b)
        object.__setattr__(self, "power_w", p)


def rate(bandwidth_hz: float, power_w: float, gain: float, noise: NoiseModel) -> float:
    """Achievable uplink rate b*log2(1 + p*g / (N0*b)) in bits/s.

    Degenerate inputs (zero bandwidth, power or gain) return 0 by continuous
    extension.
    """
    if bandwidth_hz <= 0.0 or power_w <= 0.0 or gain <= 0.0:
        return 0.0
    snr = power_w * gain / (noise.psd_w_per_hz * bandwidth_hz)
    return bandwidth_hz * math.log2(1.0 + snr)


def tx_time(size_bits: float, rate_bps: float) -> float:
    """Transmission latency size/rate in seconds."""
    if rate_bps <= 0.0:
        raise ValueError("infeasible rate: transmission requires a positive rate")
    if size_bits < 0:
        raise ValueError("size must be nonnegative")
    return size_bits / rate_bps


def fl_round_time(compute_s: float, model_bits: float, rate_bps: float,
                  aggregation_s: float) -> float:
    """One federated round: local pass + bidirectional model exchange + aggregation."""
    if rate_bps <= 0.0:
        raise ValueError("infeasible rate: round time requires a positive rate")
    return compute_s + 2.0 * model_bits / rate_bps + aggregation_s


def sl_round_time(compute_s: float, samples: float, bits_per_sample: float,
                  rate_bps: float, n_clients: int, local_fraction: float,
                  model_bits: float) -> float:
    """One split round: local pass + smashed-data exchange + partial model sync."""
    if rate_bps <= 0.0:
        raise ValueError("infeasible rate: round time requires a positive rate")
    if not 0.0 <= local_fraction <= 1.0:
        raise ValueError("local_fraction must lie in [0, 1]")
    return (compute_s
            + 2.0 * samples * bits_per_sample / rate_bps
            + 2.0 * n_clients * local_fraction * model_bits / rate_bps)


def comm_overhead_fl(rounds: int, n_clients: int, model_bits: float) -> float:
    """Total bits moved by `rounds` federated rounds (bidirectional full models)."""
    return rounds * 2.0 * n_clients * model_bits


def comm_overhead_sl(rounds: int, samples: float, bits_per_sample: float,
                     n_clients: int, local_fraction: float, model_bits: float) -> float:
    """Total bits moved by `rounds` split rounds (smashed data + partial models)."""
    return rounds * 2.0 * (samples * bits_per_sample
                           + n_clients * local_fraction * model_bits)


def place_clients(n_clients: int, area_m: float, seed: int,
                  min_distance_m: float = 1.0):
    """Seeded uniform client positions in a square with the server at its center.

    Returns (positions_m, distances_km); every client keeps at least
    `min_distance_m` from the server.
    """
    if n_clients < 1:
        raise ValueError("need at least one client")
    if area_m <= 0:
        raise ValueError("area side must be positive")
    rng = substream(seed, "placement")
    server = np.array([area_m / 2.0, area_m / 2.0])
    positions = np.empty((n_clients, 2))
    for j in range(n_clients):
        while True:
            cand = rng.uniform(0.0, area_m, 2)
            if np.linalg.norm(cand - server) >= min_distance_m:
                positions[j] = cand
                break
    distances_km = np.linalg.norm(positions - server, axis=1) / 1000.0
    return positions, distances_km


def bsc_flip(signs: np.ndarray, flip_prob: float, seed: int, index: int = 0) -> np.ndarray:
    """Flip each bipolar element independently with probability flip_prob."""
    if not 0.0 <= flip_prob <= 1.0:
        raise ValueError("flip_prob must lie in [0, 1]")
    rng = substream(seed, "bsc", index)
    mask = rng.random(np.asarray(signs).shape) < flip_prob
    out = np.array(signs, copy=True)
    out[mask] = -out[mask]
    return out
