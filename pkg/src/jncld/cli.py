"""Command-line front door: experiment files in, CSV sweep results out.

Experiment files are INI-style text (``[section]`` headers, ``key = value``
pairs, ``#`` comments, UTF-8). Every section except ``[defaults]``
describes one sweep; ``[defaults]`` supplies shared values and may set
``output_dir``. Each sweep writes ``<name>.csv`` with the fixed header
``snr_db,trials,bit_errors,frame_errors,ber,fer,seconds``; a run also
emits ``comparison.csv`` pairing the BER columns of all sweeps plus a
gnuplot script template for overlay plots. A file still being written
carries a ``.partial`` suffix, so an interrupted run never leaves a
complete-looking CSV behind.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, TextIO

import numpy as np

from . import ldpc, pnc
from .channel import ChannelParams, RngStream, mac_awgn, mac_complex
from .relay_sim import (
    CHANNEL_KINDS,
    FRONTENDS,
    PHASE_MODES,
    SCOPES,
    BerRecord,
    CodeSpec,
    ConfigError,
    SimConfig,
    sweep_snr,
)

CSV_HEADER = "snr_db,trials,bit_errors,frame_errors,ber,fer,seconds"

TWO_PI = 2.0 * math.pi


class ExperimentError(ValueError):
    """Malformed experiment file; message names the offending section/key."""


@dataclass
class ExperimentFile:
    """Parsed experiment: named sweep configs plus the output directory."""

    configs: dict[str, SimConfig]
    output_dir: str = "."


# keys accepted in a sweep section (or in [defaults]) and in [defaults] only
_BLOCK_KEYS = {
    "alist", "n_bits", "col_degree", "row_degree", "code_seed",
    "channel", "frontend", "scope",
    "power_ratio", "total_power", "snr_db",
    "max_bp_iters", "min_error_events", "max_trials",
    "seed", "bc_snr_db", "phase_mode", "phase_a", "phase_b",
    "h_a", "h_b",
}
_DEFAULTS_ONLY_KEYS = {"output_dir"}


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ExperimentError(f"[{section}] key '{key}': expected an integer, got {raw!r}")


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ExperimentError(f"[{section}] key '{key}': expected a number, got {raw!r}")


def _parse_ratio(section: str, key: str, raw: str) -> float:
    """Numbers or rationals like ``2/3``."""
    try:
        return float(Fraction(raw))
    except (ValueError, ZeroDivisionError):
        raise ExperimentError(f"[{section}] key '{key}': expected a ratio, got {raw!r}")


def _parse_grid(section: str, key: str, raw: str) -> tuple[float, ...]:
    """Either ``start:stop:step`` (stop inclusive) or a comma list."""
    raw = raw.strip()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ExperimentError(
                f"[{section}] key '{key}': range syntax is start:stop:step, got {raw!r}"
            )
        start, stop, step = (_parse_float(section, key, p) for p in parts)
        if step <= 0:
            raise ExperimentError(f"[{section}] key '{key}': step must be > 0")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ExperimentError(f"[{section}] key '{key}': empty range {raw!r}")
        return tuple(start + i * step for i in range(count))
    return tuple(_parse_float(section, key, tok) for tok in raw.split(",") if tok.strip())


def _parse_choice(section: str, key: str, raw: str, choices) -> str:
    val = raw.strip()
    if val not in choices:
        raise ExperimentError(
            f"[{section}] key '{key}': must be one of {', '.join(choices)}, got {raw!r}"
        )
    return val


def _build_config(section: str, items: dict[str, str]) -> SimConfig:
    unknown = set(items) - _BLOCK_KEYS
    if unknown:
        raise ExperimentError(f"[{section}] unknown key '{sorted(unknown)[0]}'")

    if "alist" in items and "n_bits" in items:
        raise ExperimentError(f"[{section}] give either key 'alist' or key 'n_bits', not both")
    if "alist" in items:
        code = CodeSpec.alist(items["alist"].strip())
    elif "n_bits" in items:
        code = CodeSpec.regular(
            n_bits=_parse_int(section, "n_bits", items["n_bits"]),
            col_degree=_parse_int(section, "col_degree", items.get("col_degree", "3")),
            row_degree=_parse_int(section, "row_degree", items.get("row_degree", "6")),
            seed=_parse_int(section, "code_seed", items.get("code_seed", "1")),
        )
    else:
        raise ExperimentError(f"[{section}] missing required key 'n_bits' (or 'alist')")

    if "snr_db" not in items:
        raise ExperimentError(f"[{section}] missing required key 'snr_db'")

    kwargs = dict(
        code=code,
        channel=_parse_choice(section, "channel", items.get("channel", "awgn_mac"), CHANNEL_KINDS),
        frontend=_parse_choice(section, "frontend", items.get("frontend", "jncld"), FRONTENDS),
        scope=_parse_choice(section, "scope", items.get("scope", "relay_only"), SCOPES),
        phase_mode=_parse_choice(section, "phase_mode", items.get("phase_mode", "block"), PHASE_MODES),
        power_ratio=_parse_ratio(section, "power_ratio", items.get("power_ratio", "2/3")),
        total_power=_parse_float(section, "total_power", items.get("total_power", "2")),
        snr_db=_parse_grid(section, "snr_db", items["snr_db"]),
        max_bp_iters=_parse_int(section, "max_bp_iters", items.get("max_bp_iters", "30")),
        min_error_events=_parse_int(section, "min_error_events", items.get("min_error_events", "200")),
        max_trials=_parse_int(section, "max_trials", items.get("max_trials", "1000000")),
        seed=_parse_int(section, "seed", items.get("seed", "1")),
        h_a=_parse_float(section, "h_a", items.get("h_a", "1")),
        h_b=_parse_float(section, "h_b", items.get("h_b", "1")),
    )
    if "bc_snr_db" in items:
        kwargs["bc_snr_db"] = _parse_float(section, "bc_snr_db", items["bc_snr_db"])
    for key in ("phase_a", "phase_b"):
        if key in items:
            kwargs[key] = _parse_float(section, key, items[key])
    try:
        return SimConfig(**kwargs)
    except ConfigError as exc:
        raise ExperimentError(f"[{section}] {exc}") from exc


def parse_experiment(text: str) -> ExperimentFile:
    """Parse experiment text into validated sweep configs."""
    cp = configparser.ConfigParser(
        inline_comment_prefixes=("#",), interpolation=None, default_section="__unused__"
    )
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ExperimentError(f"bad experiment file: {exc}") from exc

    defaults: dict[str, str] = {}
    output_dir = "."
    if cp.has_section("defaults"):
        defaults = dict(cp.items("defaults"))
        unknown = set(defaults) - _BLOCK_KEYS - _DEFAULTS_ONLY_KEYS
        if unknown:
            raise ExperimentError(f"[defaults] unknown key '{sorted(unknown)[0]}'")
        output_dir = defaults.pop("output_dir", ".")

    configs: dict[str, SimConfig] = {}
    for section in cp.sections():
        if section == "defaults":
            continue
        merged = dict(defaults)
        merged.update(cp.items(section))
        configs[section] = _build_config(section, merged)
    if not configs:
        raise ExperimentError("no config blocks in experiment file")
    return ExperimentFile(configs=configs, output_dir=output_dir)


# ---------------------------------------------------------------------------
# running experiments
# ---------------------------------------------------------------------------

def format_record(rec: BerRecord) -> str:
    return (
        f"{rec.snr_db!r},{rec.trials},{rec.bit_errors},{rec.frame_errors},"
        f"{rec.ber!r},{rec.fer!r},{rec.seconds:.3f}"
    )


def _write_comparison(out_dir: Path, results: dict[str, list[BerRecord]]) -> None:
    names = list(results)
    grid = sorted({rec.snr_db for recs in results.values() for rec in recs})
    by_cfg = {name: {rec.snr_db: rec for rec in recs} for name, recs in results.items()}
    lines = ["snr_db," + ",".join(f"ber_{n}" for n in names)]
    for snr in grid:
        cells = [repr(snr)]
        for name in names:
            rec = by_cfg[name].get(snr)
            cells.append(repr(rec.ber) if rec is not None else "")
        lines.append(",".join(cells))
    (out_dir / "comparison.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


_GNUPLOT_TEMPLATE = """\
# Overlay BER curves produced by this run. Render with:  gnuplot plot_ber.gp
set datafile separator ","
set terminal pngcairo size 900,600
set output "ber_curves.png"
set xlabel "SNR (dB)"
set ylabel "BER"
set logscale y
set format y "1e%T"
set grid
set key bottom left
plot {plots}
"""


def _write_gnuplot(out_dir: Path, names: list[str]) -> None:
    plots = ", \\\n     ".join(
        f'"{name}.csv" using 1:5 skip 1 with linespoints title "{name}"' for name in names
    )
    (out_dir / "plot_ber.gp").write_text(
        _GNUPLOT_TEMPLATE.format(plots=plots), encoding="utf-8"
    )


def run(
    experiment: ExperimentFile,
    *,
    workers: int = 1,
    out_dir: str | None = None,
    seed_override: int | None = None,
    err: TextIO = sys.stderr,
) -> int:
    """Run every sweep in the experiment; returns a process exit status."""
    target = Path(out_dir if out_dir is not None else experiment.output_dir)
    target.mkdir(parents=True, exist_ok=True)

    results: dict[str, list[BerRecord]] = {}
    for name, cfg in experiment.configs.items():
        if seed_override is not None:
            cfg = dataclasses.replace(cfg, seed=seed_override)
        print(f"[{name}] sweeping {len(cfg.snr_db)} SNR points "
              f"(frontend={cfg.frontend}, channel={cfg.channel})", file=err)
        final = target / f"{name}.csv"
        partial = target / f"{name}.csv.partial"
        with open(partial, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")

            def on_record(rec: BerRecord) -> None:
                fh.write(format_record(rec) + "\n")
                fh.flush()
                print(
                    f"[{name}] snr={rec.snr_db:g} dB: trials={rec.trials} "
                    f"ber={rec.ber:.3e} fer={rec.fer:.3e} ({rec.seconds:.1f}s)",
                    file=err,
                )

            results[name] = sweep_snr(cfg, workers=workers, progress=on_record)
        os.replace(partial, final)

    _write_comparison(target, results)
    _write_gnuplot(target, list(results))
    return 0


# ---------------------------------------------------------------------------
# self test
# ---------------------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


@dataclass
class SelftestReport:
    suites: list[SuiteResult]

    @property
    def ok(self) -> bool:
        return all(s.passed for s in self.suites)


def _selftest_oracle(corrupt: bool) -> SuiteResult:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(2024)))
    n = 20_000
    params = ChannelParams(
        h_a=rng.uniform(0.1, 2.0, n),
        h_b=rng.uniform(0.1, 2.0, n),
        rho_a=rng.uniform(0.1, 2.0, n),
        rho_b=rng.uniform(0.1, 2.0, n),
        theta_a=rng.uniform(0.0, TWO_PI, n),
        theta_b=rng.uniform(0.0, TWO_PI, n),
        sigma2=rng.uniform(0.05, 4.0, n),
    )
    y_real = rng.uniform(-6.0, 6.0, n)
    radius = 6.0 * np.sqrt(rng.random(n))
    angle = rng.uniform(0.0, TWO_PI, n)
    y_cplx = radius * np.exp(1j * angle)

    closed_r = pnc.jncld_llr_awgn(y_real, params)
    closed_c = pnc.jncld_llr_complex(y_cplx, params)
    if corrupt:  # negative-control hook: nudge the closed forms off the oracle
        closed_r = closed_r + 5e-9
        closed_c = closed_c + 5e-9
    err_r = np.max(np.abs(closed_r - pnc.brute_force_llr_awgn(y_real, params)))
    err_c = np.max(np.abs(closed_c - pnc.brute_force_llr_complex(y_cplx, params)))
    passed = err_r < 1e-9 and err_c < 1e-9
    return SuiteResult(
        "llr-oracle-identity", passed,
        f"max |closed - brute| real={err_r:.2e} complex={err_c:.2e} (limit 1e-9, n={n})",
    )


def _selftest_gf2() -> SuiteResult:
    pcm = ldpc.construct_regular(120, 3, 6, seed=11)
    enc = ldpc.derive_encoder(pcm)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(2025)))
    pairs = 300
    ok = enc.n_info + enc.h_rank == pcm.n_bits
    for _ in range(pairs):
        a = (rng.random(enc.n_info) < 0.5).astype(np.uint8)
        b = (rng.random(enc.n_info) < 0.5).astype(np.uint8)
        ca, cb = enc.encode(a), enc.encode(b)
        ok = ok and ldpc.syndrome_check(pcm, ca ^ cb)
        ok = ok and np.array_equal(ca ^ cb, enc.encode(a ^ b))
        if not ok:
            break
    return SuiteResult(
        "gf2-linearity", bool(ok),
        f"{pairs} random pairs: encode(a)^encode(b) is a codeword and equals encode(a^b)",
    )


def _selftest_channel() -> SuiteResult:
    params = ChannelParams.from_power_split(2.0 / 3.0, 2.0, sigma2=0.8)
    n = 200_000
    x = np.ones(n)
    y = mac_awgn(x, -x, params, RngStream(7, (0,)))
    det = params.amp_a - params.amp_b
    mean_err = abs(float(np.mean(y)) - det)
    var_err = abs(float(np.var(y)) - 0.8) / 0.8
    yc = mac_complex(np.ones(n), np.ones(n), params.replace(theta_a=0.0, theta_b=0.0),
                     RngStream(7, (1,)))
    cvar = float(np.mean(np.abs(yc - (params.amp_a + params.amp_b)) ** 2))
    cvar_err = abs(cvar - 0.8) / 0.8
    same = np.array_equal(RngStream(3, (1, 2)).normal(64), RngStream(3, (1, 2)).normal(64))
    passed = mean_err < 0.02 and var_err < 0.02 and cvar_err < 0.02 and same
    return SuiteResult(
        "channel-moments", passed,
        f"mean err={mean_err:.3g}, var rel err={var_err:.3g}, "
        f"complex var rel err={cvar_err:.3g}, streams reproducible={same}",
    )


def selftest(*, corrupt_closed_form: bool = False, out: TextIO = sys.stdout) -> SelftestReport:
    """Reduced-size health checks of the numerical core.

    ``corrupt_closed_form`` is a test hook that perturbs the closed-form
    LLRs so the oracle suite must fail; it exists to prove the suite can
    detect a wrong constant.
    """
    report = SelftestReport(
        suites=[
            _selftest_oracle(corrupt_closed_form),
            _selftest_gf2(),
            _selftest_channel(),
        ]
    )
    for suite in report.suites:
        print(f"{'PASS' if suite.passed else 'FAIL'} {suite.name}: {suite.detail}", file=out)
    return report


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="jncld",
        description="Two-way-relay BER sweeps: network-coded LDPC decoding at the relay.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run every sweep in an experiment file")
    p_run.add_argument("file", help="experiment file (INI-style, see README)")
    p_run.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="parallel worker processes (results do not depend on this)")
    p_run.add_argument("--out", default=None, help="output directory (overrides the file)")
    p_run.add_argument("--seed", type=int, default=None, help="override every block's seed")

    sub.add_parser("selftest", help="run reduced-size numerical health checks")

    args = parser.parse_args(argv)
    if args.command == "selftest":
        return 0 if selftest().ok else 1

    try:
        text = Path(args.file).read_text(encoding="utf-8")
        experiment = parse_experiment(text)
        return run(
            experiment,
            workers=max(1, args.workers),
            out_dir=args.out,
            seed_override=args.seed,
        )
    except (ExperimentError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
