"""Two-way relay protocol simulation and Monte Carlo BER estimation.

A trial draws one information word per source, encodes both with the
shared code, sends the BPSK symbols through the configured multiple-access
channel, demaps with the configured LLR frontend and BP-decodes at the
relay. Errors are counted on the information part of the decoded
network-coded word against ``b_a ^ b_b``. End-to-end trials additionally
re-encode the relay's estimate, broadcast it over a point-to-point AWGN
link to node A, decode there and recover ``b_b = b_r ^ b_a``.

Reproducibility contract: every trial owns the pseudorandom stream
``(master seed, snr index, trial index)`` and draws, in order, the two
info words, the block phases (complex channel only), the MAC noise, and
(end-to-end only) the broadcast noise. Sweeps therefore produce identical
results for any worker count; the stopping rule is evaluated on whole
batches of fixed size in trial order.
"""

from __future__ import annotations

import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import ldpc, pnc
from .channel import (
    ChannelParams,
    RngStream,
    bpsk_modulate,
    mac_awgn,
    mac_complex,
    p2p_awgn,
    sigma2_from_snr,
)

# Scheduling and stopping granularity of sweeps. Fixed (never derived from
# the worker count) so that sweep results are scheduling-independent.
BATCH_TRIALS = 128

CHANNEL_KINDS = ("awgn_mac", "complex_mac")
FRONTENDS = ("jncld", "mmse", "brute_force")
SCOPES = ("relay_only", "end_to_end")
PHASE_MODES = ("block", "symbol")

TWO_PI = 2.0 * np.pi


class ConfigError(ValueError):
    """Inconsistent simulation configuration."""


@dataclass(frozen=True)
class CodeSpec:
    """Which LDPC code to use: a random regular construction or an alist file."""

    kind: str
    n_bits: int = 0
    col_degree: int = 3
    row_degree: int = 6
    seed: int = 1
    alist_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("regular", "alist"):
            raise ConfigError(f"unknown code kind {self.kind!r}")
        if self.kind == "regular" and self.n_bits <= 0:
            raise ConfigError("regular code needs n_bits > 0")
        if self.kind == "alist" and not self.alist_path:
            raise ConfigError("alist code needs a path")

    @classmethod
    def regular(cls, n_bits: int, col_degree: int = 3, row_degree: int = 6, seed: int = 1):
        return cls(kind="regular", n_bits=n_bits, col_degree=col_degree,
                   row_degree=row_degree, seed=seed)

    @classmethod
    def alist(cls, path: str):
        return cls(kind="alist", alist_path=str(path))


@lru_cache(maxsize=8)
def _build_code(spec: CodeSpec) -> tuple[ldpc.ParityCheckMatrix, ldpc.Encoder]:
    if spec.kind == "alist":
        with open(spec.alist_path, "r", encoding="utf-8") as fh:
            pcm = ldpc.load_alist(fh.read())
    else:
        pcm = ldpc.construct_regular(
            spec.n_bits, spec.col_degree, spec.row_degree, spec.seed
        )
    return pcm, ldpc.derive_encoder(pcm)


@dataclass(frozen=True)
class SimConfig:
    """One experiment description; immutable and hashable."""

    code: CodeSpec
    channel: str = "awgn_mac"
    frontend: str = "jncld"
    power_ratio: float = 2.0 / 3.0
    total_power: float = 2.0
    snr_db: tuple[float, ...] = (0.0,)
    max_bp_iters: int = 30
    min_error_events: int = 200
    max_trials: int = 1_000_000
    seed: int = 1
    scope: str = "relay_only"
    bc_snr_db: float | None = None
    phase_mode: str = "block"
    phase_a: float | None = None
    phase_b: float | None = None
    h_a: float = 1.0
    h_b: float = 1.0

    def __post_init__(self):
        if self.channel not in CHANNEL_KINDS:
            raise ConfigError(f"channel must be one of {CHANNEL_KINDS}, got {self.channel!r}")
        if self.frontend not in FRONTENDS:
            raise ConfigError(f"frontend must be one of {FRONTENDS}, got {self.frontend!r}")
        if self.scope not in SCOPES:
            raise ConfigError(f"scope must be one of {SCOPES}, got {self.scope!r}")
        if self.phase_mode not in PHASE_MODES:
            raise ConfigError(f"phase_mode must be one of {PHASE_MODES}, got {self.phase_mode!r}")
        if self.power_ratio <= 0:
            raise ConfigError("power_ratio must be > 0")
        if self.total_power <= 0:
            raise ConfigError("total_power must be > 0")
        snr = tuple(float(s) for s in self.snr_db)
        object.__setattr__(self, "snr_db", snr)
        if not snr:
            raise ConfigError("snr_db grid must be nonempty")
        if any(b <= a for a, b in zip(snr, snr[1:])):
            raise ConfigError("snr_db grid must be strictly increasing")
        if self.max_bp_iters < 1:
            raise ConfigError("max_bp_iters must be >= 1")
        if self.min_error_events < 1:
            raise ConfigError("min_error_events must be >= 1")
        if self.max_trials < 1:
            raise ConfigError("max_trials must be >= 1")
        if self.h_a <= 0 or self.h_b <= 0:
            raise ConfigError("channel gains h_a, h_b must be > 0")
        for name in ("phase_a", "phase_b"):
            ph = getattr(self, name)
            if ph is not None:
                if self.channel != "complex_mac":
                    raise ConfigError(f"{name} is only meaningful for complex_mac")
                if not 0.0 <= ph < TWO_PI:
                    raise ConfigError(f"{name} must lie in [0, 2*pi)")


@dataclass(frozen=True)
class TrialResult:
    bit_errors: int
    frame_error: bool
    converged: bool
    iterations: int


@dataclass(frozen=True)
class BerRecord:
    """Aggregated result of one SNR grid point."""

    snr_db: float
    trials: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    seconds: float


def _params_template(cfg: SimConfig) -> ChannelParams:
    return ChannelParams.from_power_split(
        cfg.power_ratio, cfg.total_power, h_a=cfg.h_a, h_b=cfg.h_b, sigma2=1.0
    )


def _llr_fn(cfg: SimConfig) -> Callable:
    table = {
        ("awgn_mac", "jncld"): pnc.jncld_llr_awgn,
        ("awgn_mac", "brute_force"): pnc.brute_force_llr_awgn,
        ("awgn_mac", "mmse"): pnc.mmse_llr,
        ("complex_mac", "jncld"): pnc.jncld_llr_complex,
        ("complex_mac", "brute_force"): pnc.brute_force_llr_complex,
        ("complex_mac", "mmse"): pnc.mmse_llr,
    }
    return table[(cfg.channel, cfg.frontend)]


def _draw_phases(cfg: SimConfig, rng: RngStream, n_sym: int) -> tuple[np.ndarray, np.ndarray]:
    """Block phases are drawn once per codeword; symbol mode per sample.

    Fixed config phases suppress the draw entirely so the stream layout
    stays documented and simple.
    """
    size = n_sym if cfg.phase_mode == "symbol" else 1
    if cfg.phase_a is not None:
        th_a = np.full(size, cfg.phase_a)
    else:
        th_a = rng.uniform(size, 0.0, TWO_PI)
    if cfg.phase_b is not None:
        th_b = np.full(size, cfg.phase_b)
    else:
        th_b = rng.uniform(size, 0.0, TWO_PI)
    return th_a, th_b


def _simulate_mac_batch(cfg: SimConfig, snr_db: float, rngs: Sequence[RngStream]):
    """Run the MAC stage for a batch of trials with per-trial rng streams.

    Returns (b_a, b_b, relay info estimate, converged, iterations).
    """
    pcm, enc = _build_code(cfg.code)
    n_trials = len(rngs)
    k, n = enc.n_info, enc.n_code

    b_a = np.empty((n_trials, k), dtype=np.uint8)
    b_b = np.empty((n_trials, k), dtype=np.uint8)
    for i, rng in enumerate(rngs):
        b_a[i] = rng.bits(k)
        b_b[i] = rng.bits(k)
    x_a = bpsk_modulate(enc.encode_many(b_a))
    x_b = bpsk_modulate(enc.encode_many(b_b))

    base = _params_template(cfg)
    base = base.replace(sigma2=sigma2_from_snr(snr_db, base))

    y = np.empty((n_trials, n), dtype=complex if cfg.channel == "complex_mac" else float)
    if cfg.channel == "awgn_mac":
        for i, rng in enumerate(rngs):
            y[i] = mac_awgn(x_a[i], x_b[i], base, rng)
        llr_params = base
    else:
        th_a = np.empty((n_trials, 1 if cfg.phase_mode == "block" else n))
        th_b = np.empty_like(th_a)
        for i, rng in enumerate(rngs):
            ta, tb = _draw_phases(cfg, rng, n)
            th_a[i], th_b[i] = ta, tb
            trial_params = base.replace(
                theta_a=float(ta[0]) if ta.size == 1 else ta,
                theta_b=float(tb[0]) if tb.size == 1 else tb,
            )
            y[i] = mac_complex(x_a[i], x_b[i], trial_params, rng)
        llr_params = base.replace(theta_a=th_a, theta_b=th_b)

    llrs = _llr_fn(cfg)(y, llr_params)
    bits, conv, iters = ldpc.bp_decode_many(pcm, llrs, cfg.max_bp_iters)
    relay_info = bits[:, enc.info_positions]
    return b_a, b_b, relay_info, conv, iters


def _simulate_batch(cfg: SimConfig, snr_db: float, bc_snr_db: float | None,
                    rngs: Sequence[RngStream]):
    """Full trial batch; returns per-trial (bit_errors, frame_error, conv, iters)."""
    b_a, b_b, relay_info, conv, iters = _simulate_mac_batch(cfg, snr_db, rngs)
    target = b_a ^ b_b

    if cfg.scope == "relay_only" or bc_snr_db is None:
        errs = np.count_nonzero(relay_info != target, axis=1)
        return errs, errs > 0, conv, iters

    # broadcast stage: the relay re-encodes its estimate and node A decodes
    # it, then strips its own word; BC link is unit-power BPSK over AWGN
    pcm, enc = _build_code(cfg.code)
    x_r = bpsk_modulate(enc.encode_many(relay_info))
    sigma2_bc = 1.0 / 10.0 ** (bc_snr_db / 10.0)
    y_bc = np.empty_like(x_r)
    for i, rng in enumerate(rngs):
        y_bc[i] = p2p_awgn(x_r[i], sigma2_bc, rng)
    llr_bc = pnc.p2p_bpsk_llr(y_bc, sigma2_bc)
    bits_bc, conv_bc, iters_bc = ldpc.bp_decode_many(pcm, llr_bc, cfg.max_bp_iters)
    b_r_at_a = bits_bc[:, enc.info_positions]
    b_b_hat = b_r_at_a ^ b_a
    errs = np.count_nonzero(b_b_hat != b_b, axis=1)
    return errs, errs > 0, conv & conv_bc, iters + iters_bc


def _trial_from_batch(batch, idx: int = 0) -> TrialResult:
    errs, frame, conv, iters = batch
    return TrialResult(
        bit_errors=int(errs[idx]),
        frame_error=bool(frame[idx]),
        converged=bool(conv[idx]),
        iterations=int(iters[idx]),
    )


def run_mac_trial(cfg: SimConfig, snr_db: float, rng: RngStream) -> TrialResult:
    """One relay-stage trial; errors counted on the network-coded info word."""
    return _trial_from_batch(_simulate_batch(cfg, snr_db, None, [rng]))


def run_end_to_end_trial(
    cfg: SimConfig, snr_mac_db: float, snr_bc_db: float, rng: RngStream
) -> TrialResult:
    """One full two-stage trial; errors counted on node A's estimate of b_b.

    The reported flag and iteration count combine both decoders (logical
    AND of convergence, sum of iterations).
    """
    return _trial_from_batch(_simulate_batch(cfg, snr_mac_db, snr_bc_db, [rng]))


# ---------------------------------------------------------------------------
# SNR sweeps
# ---------------------------------------------------------------------------

_POOL_CFG: SimConfig | None = None


def _pool_init(cfg: SimConfig) -> None:
    global _POOL_CFG
    _POOL_CFG = cfg
    _build_code(cfg.code)  # warm the per-process cache once


def _pool_batch(args) -> tuple[int, int, int]:
    snr_idx, snr_db, bc_snr_db, start, count = args
    return _batch_counts(_POOL_CFG, snr_idx, snr_db, bc_snr_db, start, count)


def _batch_counts(cfg, snr_idx, snr_db, bc_snr_db, start, count):
    rngs = [RngStream(cfg.seed, (snr_idx, start + i)) for i in range(count)]
    errs, frames, _, _ = _simulate_batch(cfg, snr_db, bc_snr_db, rngs)
    return count, int(errs.sum()), int(np.count_nonzero(frames))


def sweep_snr(
    cfg: SimConfig,
    *,
    workers: int = 1,
    progress: Callable[[BerRecord], None] | None = None,
) -> list[BerRecord]:
    """Monte Carlo BER estimate at every grid point.

    Each point runs trials until ``min_error_events`` frame errors are
    logged or ``max_trials`` trials are spent, whichever comes first,
    counting whole batches of ``BATCH_TRIALS``. Trial streams are keyed by
    (seed, snr index, trial index) and the stopping rule sees batches in
    trial order, so the output is identical for every ``workers`` value.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    _, enc = _build_code(cfg.code)
    k = enc.n_info

    pool = None
    records: list[BerRecord] = []
    try:
        if workers > 1:
            pool = ProcessPoolExecutor(
                max_workers=workers, initializer=_pool_init, initargs=(cfg,)
            )
        for snr_idx, snr_db in enumerate(cfg.snr_db):
            bc_snr_db = None
            if cfg.scope == "end_to_end":
                bc_snr_db = cfg.bc_snr_db if cfg.bc_snr_db is not None else snr_db
            t0 = time.perf_counter()
            trials = bit_errors = frame_errors = 0
            next_start = 0
            pending: deque = deque()

            def submit() -> bool:
                nonlocal next_start
                count = min(BATCH_TRIALS, cfg.max_trials - next_start)
                if count <= 0:
                    return False
                args = (snr_idx, snr_db, bc_snr_db, next_start, count)
                pending.append(pool.submit(_pool_batch, args) if pool else args)
                next_start += count
                return True

            window = workers + 2 if pool else 1
            while len(pending) < window and submit():
                pass
            while pending:
                item = pending.popleft()
                n, be, fe = item.result() if pool else _batch_counts(cfg, *item)
                trials += n
                bit_errors += be
                frame_errors += fe
                if frame_errors >= cfg.min_error_events:
                    break
                submit()
            for item in pending:  # speculative work past the stopping point
                if pool:
                    item.cancel()

            records.append(
                BerRecord(
                    snr_db=snr_db,
                    trials=trials,
                    bit_errors=bit_errors,
                    frame_errors=frame_errors,
                    ber=bit_errors / (trials * k),
                    fer=frame_errors / trials,
                    seconds=time.perf_counter() - t0,
                )
            )
            if progress is not None:
                progress(records[-1])
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return records
