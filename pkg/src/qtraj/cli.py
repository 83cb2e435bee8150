"""Command-line interface.

Four subcommands::

    qtraj born-curve    outcome frequency vs initial population (CSV)
    qtraj distribution  z-distribution snapshots vs the two-peak density (CSVs)
    qtraj jump          jump-ensemble two-point split vs closed form (CSV)
    qtraj verify        run the acceptance checks (one line each)

Every data-producing run writes a JSON manifest next to its outputs
recording the command, the fully resolved configuration, the package
version, and the wall time.  CSV numbers are written with ``repr`` so the
files are byte-reproducible for a given configuration and seed regardless
of worker count.

A JSON config file (``--config``) may supply any long-option value by its
underscored name (e.g. ``{"n_traj": 50000}``); explicit command-line flags
take precedence over the file, which takes precedence over built-in
defaults.

Exit codes: 0 success, 1 verification failure, 2 bad usage or invalid
parameters, 3 output I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analytic, verify as verify_mod
from .ensemble import (
    EnsembleConfig,
    born_curve,
    distribution_snapshots,
    jump_ensemble,
)

_BORN_DEFAULTS = {
    "gsxi": [1.0],
    "x_grid": (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    "n_traj": 100_000,
    "dt": 1e-3,
    "tau_budget": 25.0,
    "seed": 42,
    "threads": None,
    "out": "born_curve.csv",
}

_DIST_DEFAULTS = {
    "x": 0.6,
    "tau_snapshots": (1.0, 3.0, 10.0),
    "n_traj": 100_000,
    "dt": 1e-3,
    "tau_budget": 25.0,
    "seed": 42,
    "threads": None,
    "out_dir": "distribution",
}

_JUMP_DEFAULTS = {
    "x": 0.6,
    "tau_snapshots": (1.0,),
    "n_traj": 100_000,
    "rate_multiplier": 1.0,
    "dt": 1e-3,
    "seed": 42,
    "threads": None,
    "out": "jump_split.csv",
}


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.replace(" ", "").split(",") if tok)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc


def _parse_count(text: str) -> int:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a count: {text!r}") from exc
    if value <= 0 or value != int(value):
        raise argparse.ArgumentTypeError(f"count must be a positive integer: {text!r}")
    return int(value)


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults < config file < explicit flags into one dict."""
    file_values: dict = {}
    if getattr(args, "config", None) is not None:
        with open(args.config, encoding="utf-8") as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(defaults)
        if unknown:
            raise ValueError(
                f"unknown config keys {sorted(unknown)}; "
                f"valid keys are {sorted(defaults)}"
            )
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_values:
            value = file_values[key]
            if isinstance(value, list) and key in ("x_grid", "tau_snapshots"):
                value = tuple(float(v) for v in value)
            resolved[key] = value
        else:
            resolved[key] = default
    return resolved


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def _write_manifest(path: Path, command: str, resolved: dict,
                    outputs: list[str], t0: float) -> None:
    manifest = {
        "command": command,
        "config": {k: _jsonable(v) for k, v in sorted(resolved.items())},
        "duration_s": round(time.monotonic() - t0, 3),
        "outputs": sorted(outputs),
        "version": __version__,
    }
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _cmd_born(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    opt = _resolve(args, _BORN_DEFAULTS)
    out = Path(opt["out"])
    rows: list[list] = []
    for gsxi in opt["gsxi"]:
        cfg = EnsembleConfig(
            n_traj=opt["n_traj"], x_grid=tuple(opt["x_grid"]), gs_xi=float(gsxi),
            dt=opt["dt"], tau_budget=opt["tau_budget"], seed=opt["seed"],
            workers=opt["threads"],
        )
        result = born_curve(cfg)
        for p in result.points:
            rows.append(
                [float(gsxi), p.x, p.p_hat, p.std_err, p.n_absorbed, p.n_total]
            )
            print(
                f"gsxi={gsxi:g} x={p.x:g}: p_hat={p.p_hat:.5f} "
                f"+- {p.std_err:.5f} ({p.n_absorbed}/{p.n_total} absorbed)"
            )
        if result.flagged:
            print(
                f"note: gsxi={gsxi:g} left more than 1% of trajectories "
                "unabsorbed; consider a larger --tau-budget"
            )
    _write_csv(out, ["gsxi", "x", "p_hat", "std_err", "n_absorbed", "n_total"], rows)
    _write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"), "born-curve", opt, [str(out)], t0
    )
    print(f"wrote {out}")
    return 0


def _cmd_distribution(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    opt = _resolve(args, _DIST_DEFAULTS)
    out_dir = Path(opt["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = EnsembleConfig(
        n_traj=opt["n_traj"], tau_snapshots=tuple(opt["tau_snapshots"]),
        dt=opt["dt"], tau_budget=opt["tau_budget"], seed=opt["seed"],
        workers=opt["threads"],
    )
    result = distribution_snapshots(cfg, float(opt["x"]))
    outputs: list[str] = []
    n = cfg.n_traj
    for snap in result.snapshots:
        mixture = analytic.GaussianMixture.from_initial(float(opt["x"]), snap.tau)
        norm = mixture.normalization()
        if abs(norm - 1.0) > 1e-6:
            print(f"note: oracle density at tau={snap.tau:g} integrates to {norm!r}")
        centers = 0.5 * (snap.hist_edges[:-1] + snap.hist_edges[1:])
        width = np.diff(snap.hist_edges)
        emp = snap.hist_counts / (n * width)
        oracle = mixture.density(centers)
        path = out_dir / f"snapshot_tau_{snap.tau:g}.csv"
        _write_csv(
            path,
            ["z", "empirical_density", "oracle_density"],
            [[float(z), float(e), float(o)] for z, e, o in zip(centers, emp, oracle)],
        )
        outputs.append(str(path))
        chi2_note = (
            f" chi2/dof={snap.chi2 / snap.chi2_dof:.2f}" if snap.chi2_dof > 0 else ""
        )
        print(
            f"tau={snap.tau:g}: mean tanh(z)={snap.mean_tanh_z:.5f} "
            f"+- {snap.sem_tanh_z:.5f}, absorbed {snap.absorbed_fraction:.4f}"
            f"{chi2_note} -> {path}"
        )
    if result.flagged:
        print(
            "note: more than 1% of trajectories were still unabsorbed at the "
            "budget; consider a larger --tau-budget"
        )
    _write_manifest(out_dir / "manifest.json", "distribution", opt, outputs, t0)
    return 0


def _cmd_jump(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    opt = _resolve(args, _JUMP_DEFAULTS)
    out = Path(opt["out"])
    taus = tuple(opt["tau_snapshots"])
    cfg = EnsembleConfig(
        model="jump", n_traj=opt["n_traj"], tau_snapshots=taus,
        rate_multiplier=opt["rate_multiplier"], dt=opt["dt"],
        tau_budget=max(taus), seed=opt["seed"], workers=opt["threads"],
    )
    result = jump_ensemble(cfg, float(opt["x"]))
    rows = []
    for row in result.rows:
        rows.append([
            row.tau,
            row.moving_pos_emp, row.moving_pos_oracle,
            row.moving_wt_emp, row.moving_wt_oracle,
            row.stationary_wt_emp, row.stationary_wt_oracle,
            row.moving_pos_3sigma, row.moving_wt_3sigma, row.stationary_wt_3sigma,
        ])
        ok_pos = abs(row.moving_pos_emp - row.moving_pos_oracle) <= row.moving_pos_3sigma
        ok_wt = abs(row.moving_wt_emp - row.moving_wt_oracle) <= row.moving_wt_3sigma
        ok_st = abs(row.stationary_wt_emp - row.stationary_wt_oracle) <= row.stationary_wt_3sigma
        print(
            f"tau={row.tau:g}: pos {row.moving_pos_emp:.6f} vs {row.moving_pos_oracle:.6f} "
            f"[{'ok' if ok_pos else 'OFF'}], moving wt {row.moving_wt_emp:.5f} vs "
            f"{row.moving_wt_oracle:.5f} (3s={row.moving_wt_3sigma:.5f}) "
            f"[{'ok' if ok_wt else 'OFF'}], stationary wt {row.stationary_wt_emp:.5f} vs "
            f"{row.stationary_wt_oracle:.5f} [{'ok' if ok_st else 'OFF'}]"
        )
    _write_csv(
        out,
        [
            "tau",
            "moving_pos_emp", "moving_pos_oracle",
            "moving_wt_emp", "moving_wt_oracle",
            "stationary_wt_emp", "stationary_wt_oracle",
            "moving_pos_3sigma", "moving_wt_3sigma", "stationary_wt_3sigma",
        ],
        rows,
    )
    if result.flagged:
        print(
            "note: more than 1% of trajectories had neither clicked nor "
            "collapsed within the tau budget"
        )
    _write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"), "jump", opt, [str(out)], t0
    )
    print(f"wrote {out}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    results = verify_mod.run_all(quick=args.quick, workers=args.threads)
    for res in results:
        print(res.line())
        for detail in res.details:
            print(f"       - {detail}")
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} checks passed in {time.monotonic() - t0:.1f} s")
    if args.out is not None:
        report = {
            "quick": args.quick,
            "results": [r.to_dict() for r in results],
            "version": __version__,
        }
        Path(args.out).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"wrote {args.out}")
    return 0 if n_pass == len(results) else 1


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file supplying option defaults")
    sub.add_argument("--n-traj", dest="n_traj", type=_parse_count,
                     help="trajectories per point")
    sub.add_argument("--dt", type=float, help="time step (g is fixed at 1)")
    sub.add_argument("--seed", type=int, help="base seed")
    sub.add_argument("--threads", type=int,
                     help="worker threads (default: QTRAJ_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtraj",
        description="Stochastic collapse trajectories for projective measurement.",
    )
    parser.add_argument("--version", action="version", version=f"qtraj {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    born = subs.add_parser("born-curve", help="outcome frequency vs initial population")
    born.add_argument("--gsxi", action="append", type=float,
                      help="noise coupling g*S_xi (repeatable; default 1.0)")
    born.add_argument("--x-grid", dest="x_grid", type=_parse_floats,
                      help="comma-separated initial populations")
    born.add_argument("--tau-budget", dest="tau_budget", type=float,
                      help="maximum dimensionless time per trajectory")
    born.add_argument("--out", help="output CSV path")
    _add_common(born)
    born.set_defaults(func=_cmd_born)

    dist = subs.add_parser("distribution", help="z-distribution snapshots")
    dist.add_argument("--x", type=float, help="initial population (interior)")
    dist.add_argument("--tau-snapshots", dest="tau_snapshots", type=_parse_floats,
                      help="comma-separated snapshot times")
    dist.add_argument("--tau-budget", dest="tau_budget", type=float,
                      help="maximum dimensionless time per trajectory")
    dist.add_argument("--out-dir", dest="out_dir", help="output directory")
    _add_common(dist)
    dist.set_defaults(func=_cmd_distribution)

    jmp = subs.add_parser("jump", help="jump-ensemble split vs closed form")
    jmp.add_argument("--x", type=float, help="initial population (interior)")
    jmp.add_argument("--tau-snapshots", dest="tau_snapshots", type=_parse_floats,
                     help="comma-separated snapshot times")
    jmp.add_argument("--rate-multiplier", dest="rate_multiplier", type=float,
                     help="click-rate multiplier lambda")
    jmp.add_argument("--out", help="output CSV path")
    _add_common(jmp)
    jmp.set_defaults(func=_cmd_jump)

    ver = subs.add_parser("verify", help="run the acceptance checks")
    ver.add_argument("--quick", action="store_true",
                     help="tenfold-smaller ensembles with widened fixed tolerances")
    ver.add_argument("--out", help="JSON report path")
    ver.add_argument("--threads", type=int,
                     help="worker threads (default: QTRAJ_THREADS or 1)")
    ver.set_defaults(func=_cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
