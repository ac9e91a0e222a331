"""BPSK mapping and stochastic channel models for the two-way relay link.

Two channel stages are modeled. In the multiple-access stage both sources
transmit simultaneously and the relay sees the superposition
``h_a*rho_a*x_a + h_b*rho_b*x_b + n`` (real AWGN variant) or the same with
per-source phase rotations and circularly symmetric complex noise (complex
variant). In the broadcast stage the relay talks to a single node over a
plain AWGN link.

Noise conventions:
  * real channels: ``n ~ N(0, sigma2)`` per sample;
  * complex channels: ``E[|n|^2] = sigma2``, i.e. ``sigma2/2`` per real
    dimension, so a given SNR means the same thing on both channel kinds.

All randomness flows through :class:`RngStream`, which is reproducible
across runs and platforms for a fixed ``(seed, stream)`` pair.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class RngStream:
    """Deterministic pseudorandom stream keyed by a seed and a stream index.

    Streams are built on the counter-based Philox generator keyed through
    ``SeedSequence(seed, spawn_key=stream)``; distinct stream tuples give
    statistically independent sequences, and identical ``(seed, stream)``
    pairs give bit-identical output regardless of how many other streams
    exist or in which order they are consumed. Gaussian variates are
    produced by Box-Muller over the generator's raw uniform doubles, so
    they do not depend on numpy's internal normal sampler.
    """

    def __init__(self, seed: int, stream: int | tuple[int, ...] = ()):
        if isinstance(stream, (int, np.integer)):
            stream = (int(stream),)
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def derive(self, *idx: int) -> "RngStream":
        """Child stream with the given indices appended to the stream key."""
        return RngStream(self.seed, self.stream + tuple(int(i) for i in idx))

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return low + (high - low) * self._gen.random(n)

    def bits(self, n: int) -> np.ndarray:
        """``n`` fair bits as uint8 in {0,1}."""
        return (self._gen.random(n) < 0.5).astype(np.uint8)

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard Gaussian draws (Box-Muller, interleaved pairs)."""
        m = (n + 1) // 2
        u1 = 1.0 - self._gen.random(m)  # in (0, 1]: keeps the log finite
        u2 = self._gen.random(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(TWO_PI * u2)
        z[1::2] = r * np.sin(TWO_PI * u2)
        return z[:n]

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True, eq=False)
class ChannelParams:
    """Static link parameters seen by the relay.

    ``h_*`` are channel gains, ``rho_*`` transmit amplitudes (power is
    ``rho**2``), ``theta_*`` phase rotations in [0, 2*pi) used only by the
    complex channel, and ``sigma2`` the total noise variance at the relay.
    Fields may be scalars or numpy arrays broadcastable against the sample
    axis (array-valued phases model per-symbol phase processes).
    """

    h_a: float | np.ndarray = 1.0
    h_b: float | np.ndarray = 1.0
    rho_a: float | np.ndarray = 1.0
    rho_b: float | np.ndarray = 1.0
    theta_a: float | np.ndarray = 0.0
    theta_b: float | np.ndarray = 0.0
    sigma2: float | np.ndarray = 1.0

    def __post_init__(self):
        if not np.all(np.asarray(self.rho_a) >= 0) or not np.all(np.asarray(self.rho_b) >= 0):
            raise ValueError("transmit amplitudes rho_a, rho_b must be >= 0")
        if not np.all(np.asarray(self.sigma2) > 0):
            raise ValueError("noise variance sigma2 must be > 0")
        for name in ("theta_a", "theta_b"):
            th = np.asarray(getattr(self, name))
            if not (np.all(th >= 0.0) and np.all(th < TWO_PI)):
                raise ValueError(f"{name} must lie in [0, 2*pi)")
        if not np.all(np.isfinite(self.total_power)):
            raise ValueError("total received power must be finite")

    @property
    def amp_a(self) -> float | np.ndarray:
        """Effective real amplitude h_a * rho_a of source A at the relay."""
        return self.h_a * self.rho_a

    @property
    def amp_b(self) -> float | np.ndarray:
        return self.h_b * self.rho_b

    @property
    def gain_a(self) -> complex | np.ndarray:
        """Complex effective gain h_a * rho_a * exp(j*theta_a)."""
        return self.amp_a * np.exp(1j * np.asarray(self.theta_a, dtype=float))

    @property
    def gain_b(self) -> complex | np.ndarray:
        return self.amp_b * np.exp(1j * np.asarray(self.theta_b, dtype=float))

    @property
    def total_power(self) -> float | np.ndarray:
        """Total received power P_a*h_a**2 + P_b*h_b**2 with P = rho**2."""
        return self.amp_a ** 2 + self.amp_b ** 2

    @classmethod
    def from_power_split(
        cls,
        ratio: float,
        total: float,
        *,
        h_a: float = 1.0,
        h_b: float = 1.0,
        sigma2: float = 1.0,
        theta_a: float = 0.0,
        theta_b: float = 0.0,
    ) -> "ChannelParams":
        """Resolve amplitudes from ``ratio = P_a*h_a^2 / P_b*h_b^2`` and the
        total received power; gains stay as given and the split goes into
        the rho's."""
        if ratio <= 0 or total <= 0:
            raise ValueError("power ratio and total power must be > 0")
        p_b = total / (1.0 + ratio)  # received power of B
        p_a = total - p_b
        return cls(
            h_a=h_a,
            h_b=h_b,
            rho_a=math.sqrt(p_a) / h_a,
            rho_b=math.sqrt(p_b) / h_b,
            theta_a=theta_a,
            theta_b=theta_b,
            sigma2=sigma2,
        )

    def replace(self, **changes) -> "ChannelParams":
        return dataclasses.replace(self, **changes)


def bpsk_modulate(bits: np.ndarray) -> np.ndarray:
    """Map bits to BPSK symbols: 0 -> -1, 1 -> +1."""
    b = np.asarray(bits)
    if b.size and not np.all((b == 0) | (b == 1)):
        raise ValueError("bpsk_modulate expects bits in {0,1}")
    return 2.0 * b.astype(np.float64) - 1.0


def _check_lengths(x_a: np.ndarray, x_b: np.ndarray) -> None:
    if x_a.shape != x_b.shape:
        raise ValueError(f"source symbol blocks differ in shape: {x_a.shape} vs {x_b.shape}")


def mac_awgn(x_a, x_b, params: ChannelParams, rng: RngStream) -> np.ndarray:
    """Real multiple-access channel: amp_a*x_a + amp_b*x_b + N(0, sigma2).

    Draws ``len(x_a)`` Gaussians from ``rng``.
    """
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    _check_lengths(x_a, x_b)
    noise = np.sqrt(params.sigma2) * rng.normal(x_a.size).reshape(x_a.shape)
    return params.amp_a * x_a + params.amp_b * x_b + noise


def mac_complex(x_a, x_b, params: ChannelParams, rng: RngStream) -> np.ndarray:
    """Complex multiple-access channel with per-source phase rotations.

    Output is ``gain_a*x_a + gain_b*x_b + n`` with circularly symmetric
    complex noise of total variance ``sigma2``. Draws ``2*len(x_a)``
    Gaussians from ``rng``: the first half are the real parts.
    """
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    _check_lengths(x_a, x_b)
    n = x_a.size
    z = rng.normal(2 * n)
    noise = np.sqrt(params.sigma2 / 2.0) * (z[:n] + 1j * z[n:]).reshape(x_a.shape)
    return params.gain_a * x_a + params.gain_b * x_b + noise


def p2p_awgn(x, sigma2: float, rng: RngStream) -> np.ndarray:
    """Point-to-point AWGN link used in the broadcast stage: x + N(0, sigma2)."""
    x = np.asarray(x, dtype=np.float64)
    return x + np.sqrt(sigma2) * rng.normal(x.size).reshape(x.shape)


def sigma2_from_snr(snr_db: float, params: ChannelParams) -> float:
    """Noise variance realizing the given relay SNR.

    SNR is defined as total received power over noise variance,
    ``(P_a*h_a^2 + P_b*h_b^2) / sigma2``, identically for the real and
    complex channel kinds.
    """
    return params.total_power / 10.0 ** (snr_db / 10.0)
