"""Analyses and simulations of ZUE-decoded concatenated codes for short-molecule DNA storage.

Exit codes: 0 success, 1 invariant failure, 2 config error, 3 capability error.
All outputs are CSV (or ``key,value`` CSV for reports) preceded by ``#``
metadata lines; the output file is written only after all work succeeded.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .channel import (
    Channel,
    channel_from_config,
    symmetry_witness_for,
)
from .errors import CapabilityError, InputDomainError, UndetectedErrorDetected
from .exponents import exponent_sweep, r_max, typewriter_c0u_lower_bound
from .inner import ensemble_erasure_prob, theorem2_bound, Z95
from .outer import psi_lower_bound, theorem3_codebook_size
from .pipeline import SimulationConfig, run_experiment
from .rng import STREAM_ENSEMBLE, substream
from .selfcheck import run_selfcheck

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_CAPABILITY = 0, 1, 2, 3
LN2 = math.log(2.0)


class ConfigError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def _seed(cfg: dict, args) -> int:
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def _channel(cfg: dict) -> Channel:
    if "channel" not in cfg:
        raise ConfigError("config has no 'channel' section")
    return channel_from_config(cfg["channel"])


def header(command: str, cfg: dict, seed: int, timestamp: bool) -> list:
    digest = hashlib.sha256(
        json.dumps({**cfg, "seed": seed}, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    lines = [f"# shortmol {__version__}", f"# command={command}", f"# config_sha256={digest}", f"# seed={seed}"]
    if timestamp:
        lines.append(f"# timestamp={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}")
    return lines


def _table(columns, rows) -> list:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows([_fmt(v) for v in row] for row in rows)
    return buf.getvalue().splitlines()


def cmd_channel_info(cfg: dict, args) -> tuple:
    ch = _channel(cfg)
    witness, source = symmetry_witness_for(ch)
    rm = r_max(ch)
    rows = [
        ("channel", ch.name),
        ("q", ch.q),
        ("outputs", ch.output_size),
        ("symmetric", witness is not None),
        ("witness_source", source),
        ("r_max_nats", rm),
        ("r_max_bits", rm / LN2),
    ]
    notes = []
    if bool(ch.support.all()):
        notes.append("warning: full-support channel; every codeword is always feasible so ZUE decoding always erases")
    spec = cfg["channel"]
    if spec.get("name") == "erasure":
        cap = (1 - float(spec["p"])) * math.log(ch.q)
        rows.append(("shannon_capacity_nats", cap))
        notes.append("erasure channel: r_max equals the Shannon capacity (1-p) log q")
    if spec.get("name") == "typewriter":
        lb = typewriter_c0u_lower_bound(float(spec["eps"]))
        rows.append(("c0u_lower_bound_nats", lb))
        rows.append(("c0u_lower_bound_bits", lb / LN2))
        rows.append(("c0u_bound_exceeds_r_max", lb > rm))
    if witness is not None:
        rows.append(("witness", json.dumps(witness.table.tolist(), separators=(",", ":"))))
    lines = _table(("quantity", "value"), rows)
    return lines, notes


def _rate_grid(cfg: dict) -> np.ndarray:
    if "rates" in cfg:
        rates = np.array([float(r) for r in cfg["rates"]])
    elif "rate_grid" in cfg:
        g = cfg["rate_grid"]
        rates = np.linspace(float(g["start"]), float(g["stop"]), int(g["num"]))
    else:
        raise ConfigError("exponent sweep needs 'rates' or 'rate_grid'")
    if rates.size == 0:
        raise ConfigError("rate grid is empty")
    return rates


def cmd_exponent_sweep(cfg: dict, args) -> tuple:
    ch = _channel(cfg)
    curve = exponent_sweep(ch, _rate_grid(cfg), float(cfg.get("rho_max", 64.0)))
    return _table(("rate_nats", "exponent_nats", "rho_star", "saturated"), curve.rows()), []


def _inner_points(cfg: dict, ch: Channel) -> list:
    if "points" in cfg:
        return [(int(p["L"]), int(p["K"])) for p in cfg["points"]]
    if "L" in cfg:
        frac = float(cfg.get("rate_fraction", 0.5))
        rm = r_max(ch)
        pts = []
        for L in cfg["L"]:
            L = int(L)
            K = int(cfg["K"]) if "K" in cfg else max(1, int(round(frac * rm * L / math.log(ch.q))))
            pts.append((L, min(K, L)))
        return pts
    raise ConfigError("inner-erasure needs 'points' or 'L'")


def cmd_inner_erasure(cfg: dict, args) -> tuple:
    ch = _channel(cfg)
    n_codes = int(cfg.get("n_codes", 200))
    trials = int(cfg.get("trials_per_code", 2000))
    exact = bool(cfg.get("exact", False))
    full_rank = bool(cfg.get("full_rank", False))
    rho_max = float(cfg.get("rho_max", 64.0))
    cols = ["L", "K", "rate_nats", "p_er_mc", "ci_half_width", "theorem2_bound"]
    if exact:
        cols.append("p_er_exact")
    rows = []
    for i, (L, K) in enumerate(_inner_points(cfg, ch)):
        rng = substream(args.seed_value, STREAM_ENSEMBLE, i)
        est = ensemble_erasure_prob(ch.q, K, L, ch, n_codes, trials, rng, threads=args.threads,
                                    require_full_rank=full_rank)
        rate = K * math.log(ch.q) / L
        row = [L, K, rate, est.mean, Z95 * est.std_error, theorem2_bound(ch, L, rate, rho_max)]
        if exact:
            ex = ensemble_erasure_prob(ch.q, K, L, ch, n_codes, trials,
                                       substream(args.seed_value, STREAM_ENSEMBLE, i),
                                       require_full_rank=full_rank, exact=True)
            row.append(ex.mean)
        rows.append(row)
    return _table(cols, rows), []


def cmd_end_to_end(cfg: dict, args) -> tuple:
    ms = cfg.get("M")
    if ms is None:
        raise ConfigError("end-to-end config needs 'M' (an integer or a list)")
    ms = ms if isinstance(ms, list) else [ms]
    cols = ["M", "L", "K", "q", "beta_implied", "rate_nats", "xi", "codebook_size", "trials",
            "err_rate", "err_ci", "mean_erasure_frac", "s_zero_frac", "ties",
            "undetected_inner_errors", "psi_lower_bound", "log_codebook_size_thm3"]
    rows, trial_rows, notes = [], [], []
    for M in ms:
        sim = SimulationConfig.from_dict(cfg, M=int(M), seed=args.seed_value)
        rep = run_experiment(sim, threads=args.threads)
        if rep.undetected:
            raise UndetectedErrorDetected(f"M={M}: {rep.undetected} undetected inner errors")
        beta = sim.beta_implied
        try:
            psi = psi_lower_bound(sim.M, beta, sim.channel)
        except InputDomainError:
            psi = math.nan
            notes.append(f"M={M}: implied beta {beta:.4g} outside (0, 1/log q); psi not reported")
        rows.append([sim.M, sim.L, sim.K, sim.q, beta, sim.rate, sim.xi, sim.codebook_size, rep.trials,
                     rep.err_rate, rep.err_ci, rep.mean_erasure_frac, rep.s_zero_frac, rep.ties,
                     rep.undetected, psi, theorem3_codebook_size(sim.M, sim.T, sim.sigma)])
        for t, r in enumerate(rep.records):
            trial_rows.append([sim.M, t, r.transmitted, r.survivors, r.erased,
                               -1 if r.decoded is None else r.decoded, r.tie])
    args.trial_table = _table(("M", "trial", "transmitted", "survivors", "erased", "decoded", "tie"),
                              trial_rows)
    return _table(cols, rows), notes


COMMANDS = {
    "channel-info": cmd_channel_info,
    "exponent-sweep": cmd_exponent_sweep,
    "inner-erasure": cmd_inner_erasure,
    "end-to-end": cmd_end_to_end,
}


def _write(path, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".shortmol-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shortmol", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"shortmol {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["selfcheck"]:
        sp = sub.add_parser(name)
        if name != "selfcheck":
            sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--out", metavar="PATH", default=None)
        sp.add_argument("--seed", type=int, default=None, metavar="U64")
        sp.add_argument("--threads", type=int, default=1, metavar="N")
        sp.add_argument("--no-timestamp", action="store_true")
        if name == "end-to-end":
            sp.add_argument("--trial-log", metavar="PATH", default=None,
                            help="also write one CSV row per trial")
    return p


def _selfcheck(args) -> int:
    seed = args.seed if args.seed is not None else 0
    results = run_selfcheck(seed=seed)
    buf = io.StringIO()
    for line in header("selfcheck", {}, seed, not args.no_timestamp):
        buf.write(line + "\n")
    for line in _table(("check", "passed", "detail"), ((r.name, r.passed, r.detail) for r in results)):
        buf.write(line + "\n")
    _write(args.out, buf.getvalue())
    failed = [r.name for r in results if not r.passed]
    for name in failed:
        print(f"FAILED: {name}", file=sys.stderr)
    return EXIT_INVARIANT if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "selfcheck":
            return _selfcheck(args)
        cfg = load_config(args.config)
        args.seed_value = _seed(cfg, args)
        args.trial_table = None
        lines, notes = COMMANDS[args.command](cfg, args)
        head = header(args.command, cfg, args.seed_value, not args.no_timestamp)
        text = "\n".join(head + lines) + "\n"
        trial_log = getattr(args, "trial_log", None)
        if trial_log and args.trial_table is not None:
            _write(trial_log, "\n".join(head + args.trial_table) + "\n")
        _write(args.out, text)
        for n in notes:
            print(n, file=sys.stderr)
        return EXIT_OK
    except (ConfigError, InputDomainError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except UndetectedErrorDetected as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
