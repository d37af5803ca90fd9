"""Command-line front end: run sweeps and diagnostics, emit CSV/plot-ready files.

Exit codes: 0 success, 2 configuration error, 3 partial failure (some sweep
points errored; everything that succeeded is still written). All emitted
files are locale-independent and reproducible byte-for-byte from the
configuration plus overrides.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import engine, metrics
from .channel import LargeScaleProfile, assemble_channel, generate_small_scale
from .config import ConfigError, Violation, load_config, config_from_dict, validate_config
from .streams import StreamKey, derive_stream

RESULTS_HEADER = "detector,K,M,ebno_db,bits,errors,ber,ci_low,ci_high,trials,seed"
CAPACITY_HEADER = "M,K,rho,exact_bits_hz,approx_bits_hz,rel_err"
FAVORABLE_HEADER = "M,K,mean_eps,std_eps"

# Spreads realization indices of different antenna counts across disjoint
# trial-index ranges so their channel draws are independent.
_ROW_STRIDE = 1_000_000


@dataclass
class OutputBundle:
    results_csv_path: Path
    curve_paths: list = field(default_factory=list)
    summary: str = ""


def _fmt(value) -> str:
    """Full round-trip precision, locale-independent."""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``--set dotted.key=value`` pairs onto the raw JSON document."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError([Violation("BadOverride", item, "expected KEY=VALUE")])
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings like perfect-power-control
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError([Violation("BadOverride", key, "path crosses a non-object")])
        node[parts[-1]] = value
    return doc


def _load_with_overrides(config_path: str, overrides):
    path = Path(config_path)
    if not path.is_file():
        raise FileNotFoundError(config_path)
    if not overrides:
        return load_config(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return config_from_dict(_apply_overrides(doc, overrides))


def _write_results_csv(path: Path, points) -> None:
    lines = [RESULTS_HEADER]
    for p in points:
        lines.append(",".join([
            p.detector, str(p.K), str(p.M), _fmt(float(p.ebno_db)),
            str(p.bits), str(p.errors), _fmt(p.ber),
            _fmt(p.ci_low), _fmt(p.ci_high), str(p.trials), str(p.seed),
        ]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_curves(out_dir: Path, points) -> list:
    curves = {}
    for p in points:
        curves.setdefault((p.detector, p.M), []).append(p)
    paths = []
    for (detector, m), pts in sorted(curves.items()):
        pts = sorted(pts, key=lambda p: p.ebno_db)
        path = out_dir / f"curve_{detector}_M{m}.dat"
        rows = [
            " ".join([_fmt(float(p.ebno_db)), _fmt(p.ber), _fmt(p.ci_low), _fmt(p.ci_high)])
            for p in pts
        ]
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def _write_plot_script(out_dir: Path, curve_paths) -> None:
    lines = [
        "# Generic gnuplot commands for the emitted BER curves.",
        "set logscale y",
        "set xlabel 'Eb/N0 [dB]'",
        "set ylabel 'BER'",
        "set grid",
    ]
    plots = [
        f"'{p.name}' using 1:2 with linespoints title '{p.stem.replace('curve_', '')}'"
        for p in curve_paths
    ]
    if plots:
        lines.append("plot \\")
        lines.append(", \\\n".join("    " + s for s in plots))
    (out_dir / "plot_script").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _summary_text(result) -> str:
    lines = [
        f"{'detector':>8} {'K':>4} {'M':>5} {'Eb/N0':>8} {'bits':>10} "
        f"{'errors':>8} {'BER':>12} {'95% CI':>27} {'trials':>7}"
    ]
    for p, wall in zip(result.points, result.wall_time_s):
        flag = "" if p.converged else "  [unconverged]"
        lines.append(
            f"{p.detector:>8} {p.K:>4} {p.M:>5} {p.ebno_db:>8.2f} {p.bits:>10} "
            f"{p.errors:>8} {p.ber:>12.4e} [{p.ci_low:.4e}, {p.ci_high:.4e}] "
            f"{p.trials:>7}  ({wall:.2f}s){flag}"
        )
    for f in result.failures:
        lines.append(f"FAILED {f.detector} M={f.M} Eb/N0={f.ebno_db}: {f.error}")
    return "\n".join(lines)


def cmd_simulate(config_path: str, out_dir: str, overrides=(), workers: int = 1):
    """Run the configured sweep and write results.csv, curve files, plot script."""
    try:
        cfg = _load_with_overrides(config_path, overrides)
    except FileNotFoundError:
        print(f"error: config file not found: {config_path}", file=sys.stderr)
        return 2, None
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2, None

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if cfg.power_scaling is not None and cfg.power_scaling.enabled:
        result = engine.run_power_scaling(cfg, cfg.power_scaling.reference_power,
                                          workers=workers)
    else:
        result = engine.run_sweep(cfg, workers=workers)

    results_csv = out / "results.csv"
    _write_results_csv(results_csv, result.points)
    curve_paths = _write_curves(out, result.points)
    _write_plot_script(out, curve_paths)

    summary = _summary_text(result)
    print(summary)
    bundle = OutputBundle(results_csv_path=results_csv, curve_paths=curve_paths,
                          summary=summary)
    return (3 if result.failures else 0), bundle


def cmd_capacity(config_path: str, out_dir: str, realizations: int = 50) -> int:
    """Average exact and approximate sum rates over channel realizations.

    One row per (M, rho) with rho mapped from the Eb/N0 grid the same way the
    BER engine maps it (rho = 2 * 10^(ebno/10)); every row is averaged over
    ``realizations`` independent channel draws.
    """
    try:
        cfg = validate_config(load_config(config_path))
    except FileNotFoundError:
        print(f"error: config file not found: {config_path}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    if realizations < 1:
        print("error: realizations must be >= 1", file=sys.stderr)
        return 2

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile = LargeScaleProfile(cfg.d_vector())
    rhos = [engine.ebno_db_to_rho(e) for e in cfg.ebno_grid_db]

    lines = [CAPACITY_HEADER]
    for m_index, m in enumerate(cfg.antenna_list):
        # The Gram eigenvalues carry the whole rho dependence, so one set of
        # realizations serves every rho row for this M.
        eigs = []
        for r in range(realizations):
            stream = derive_stream(StreamKey(cfg.master_seed, "channel",
                                             m_index * _ROW_STRIDE + r))
            ch = assemble_channel(generate_small_scale(m, cfg.num_users, stream), profile)
            eigs.append(np.linalg.eigvalsh(ch.H.conj().T @ ch.H))
        for rho in rhos:
            exact = float(np.mean([np.sum(np.log2(1.0 + rho * lam)) for lam in eigs]))
            approx = float(np.sum(np.log2(1.0 + rho * m * profile.d)))
            rel_err = abs(exact - approx) / exact if exact != 0.0 else 0.0
            lines.append(",".join([str(m), str(cfg.num_users), _fmt(rho),
                                   _fmt(exact), _fmt(approx), _fmt(rel_err)]))
    (out / "capacity.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_diagnose(antenna_list, num_users: int, realizations: int, seed: int,
                 out_dir: str, synthetic_orthogonal: bool = False) -> int:
    """Sample the favorable-propagation deviation over channel realizations.

    With --synthetic-orthogonal, channels are built from Hadamard columns
    (exactly orthogonal, squared norm M) instead of random fading, which
    pins the deviation at exactly zero and serves as a self-check.
    """
    if realizations < 1 or num_users < 1 or not antenna_list:
        print("error: need realizations >= 1, K >= 1, non-empty M list", file=sys.stderr)
        return 2
    if synthetic_orthogonal:
        bad = [m for m in antenna_list if m < num_users or (m & (m - 1)) != 0]
        if bad:
            print(f"error: synthetic orthogonal mode needs power-of-two M >= K; got {bad}",
                  file=sys.stderr)
            return 2
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile = LargeScaleProfile(np.ones(num_users))

    lines = [FAVORABLE_HEADER]
    for m_index, m in enumerate(antenna_list):
        eps = []
        for r in range(realizations):
            if synthetic_orthogonal:
                G = scipy.linalg.hadamard(m)[:, :num_users].astype(complex)
            else:
                stream = derive_stream(StreamKey(seed, "channel",
                                                 m_index * _ROW_STRIDE + r))
                G = generate_small_scale(m, num_users, stream)
            ch = assemble_channel(G, profile)
            eps.append(metrics.favorable_deviation(ch).epsilon)
        eps = np.asarray(eps)
        std = float(eps.std(ddof=1)) if len(eps) > 1 else 0.0
        lines.append(",".join([str(m), str(num_users),
                               _fmt(float(eps.mean())), _fmt(std)]))
    (out / "favorable.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _int_list(text: str):
    return [int(part) for part in text.split(",") if part]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mumimo",
        description="Massive MU-MIMO uplink link-level simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a BER sweep from a JSON config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="override a config field (dotted keys ok)")
    sim.add_argument("--workers", type=int, default=1)

    cap = sub.add_parser("capacity", help="tabulate exact vs approximate sum rate")
    cap.add_argument("--config", required=True)
    cap.add_argument("--out", required=True)
    cap.add_argument("--realizations", type=int, default=50)

    diag = sub.add_parser("diagnose", help="sample the favorable-propagation deviation")
    diag.add_argument("--M", required=True, type=_int_list, metavar="M1,M2,...")
    diag.add_argument("--K", required=True, type=int)
    diag.add_argument("--realizations", required=True, type=int)
    diag.add_argument("--seed", required=True, type=int)
    diag.add_argument("--out", required=True)
    diag.add_argument("--synthetic-orthogonal", action="store_true")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        status, _ = cmd_simulate(args.config, args.out, overrides=args.overrides,
                                 workers=args.workers)
        return status
    if args.command == "capacity":
        return cmd_capacity(args.config, args.out, realizations=args.realizations)
    if args.command == "diagnose":
        return cmd_diagnose(args.M, args.K, args.realizations, args.seed, args.out,
                            synthetic_orthogonal=args.synthetic_orthogonal)
    return 2


if __name__ == "__main__":
    sys.exit(main())
