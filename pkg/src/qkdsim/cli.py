"""Command-line front end.

Subcommands: ``run`` (one session, human-readable report), ``sweep``
(cartesian parameter sweep to CSV), ``network`` (trusted-node scenario),
``selftest`` (fast invariant battery). Everything is deterministic given
--seed; sweep rows come out in declaration order at any --jobs level.

Exit codes are a stable contract: 0 success, 1 usage or config error,
2 session aborted at the error-rate test, 3 session aborted at
reconciliation, 4 relay underfunded (insufficient link key).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import os
import sys

from .adversary import (InterceptResend, NoAttack, PhotonNumberSplit,
                        strategy_label)
from .netsim import (InsufficientLinkKey, Network, SessionAborted,
                     StubKeySource)
from .photonics import DetectorPair, FiberChannel, SourceModel
from .postprocess import AttackModel
from .protocol import SessionConfig, SessionOutcome, run_session
from .rng import RandomSource, mix64

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORT_QBER = 2
EXIT_ABORT_RECONCILIATION = 3
EXIT_INSUFFICIENT_LINK_KEY = 4

CSV_COLUMNS = ["seed", "distance_km", "mu", "eve", "pulses", "clicks",
               "raw_len", "sifted_len", "qber", "leak_ec", "final_len",
               "eve_info", "auth_consumed", "secret_growth", "outcome"]

CONFIG_KEYS = {"pulses", "mu", "distance_km", "attenuation_db_per_km",
               "efficiency", "dark_count_prob", "flip_prob", "eve",
               "attack_model", "sample_fraction", "margin",
               "auth_pool_bits", "seed", "sweep", "repeats", "output"}
SWEEP_KEYS = {"distance_km", "mu", "eve_fraction"}

DEFAULTS = {"pulses": 200_000, "mu": 0.1, "distance_km": 15.0,
            "attenuation_db_per_km": 0.2, "efficiency": 0.1,
            "dark_count_prob": 1e-5, "flip_prob": 0.01, "eve": "none",
            "attack_model": "coherent", "sample_fraction": 0.1,
            "margin": 30, "auth_pool_bits": 512, "seed": 1}


class ConfigError(Exception):
    """Bad config file or flag combination; maps to exit 1."""


def parse_eve(text: str):
    if text == "none":
        return NoAttack()
    if text == "pns":
        return PhotonNumberSplit()
    if text == "intercept":
        return InterceptResend(1.0)
    if text.startswith("intercept:"):
        try:
            return InterceptResend(float(text.split(":", 1)[1]))
        except ValueError as exc:
            raise ConfigError(f"bad intercept fraction in {text!r}") from exc
    raise ConfigError(
        f"unknown eve strategy {text!r}; use none, pns, intercept, "
        "or intercept:<fraction>")


def parse_attack_model(text: str) -> AttackModel:
    try:
        return AttackModel(text.lower())
    except ValueError as exc:
        raise ConfigError(
            f"unknown attack model {text!r}; use coherent or individual"
        ) from exc


def _resolve_config_path(path: str) -> str:
    """Relative config names may live in $QKDSIM_CONFIG_DIR."""
    if os.path.exists(path) or os.path.isabs(path):
        return path
    base = os.environ.get("QKDSIM_CONFIG_DIR")
    if base:
        candidate = os.path.join(base, path)
        if os.path.exists(candidate):
            return candidate
    return path


def load_config_file(path: str) -> dict:
    path = _resolve_config_path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno}, column "
            f"{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(
            f"{path}: unknown keys {sorted(unknown)}; "
            f"allowed: {sorted(CONFIG_KEYS)}")
    sweep = data.get("sweep", {})
    if not isinstance(sweep, dict) or set(sweep) - SWEEP_KEYS:
        raise ConfigError(
            f"{path}: sweep axes must be among {sorted(SWEEP_KEYS)}")
    return data


def merge_params(args: argparse.Namespace) -> dict:
    """Defaults, then config file, then explicit flags (flags win)."""
    params = dict(DEFAULTS)
    sweep: dict = {}
    if getattr(args, "config", None):
        data = load_config_file(args.config)
        sweep = data.pop("sweep", {})
        params.update({k: v for k, v in data.items()
                       if k not in ("repeats", "output")})
        for k in ("repeats", "output"):
            if k in data:
                params[k] = data[k]
    flag_map = {"pulses": "pulses", "mu": "mu", "distance_km": "distance_km",
                "attenuation_db_per_km": "attenuation_db_per_km",
                "efficiency": "efficiency", "dark": "dark_count_prob",
                "flip": "flip_prob", "eve": "eve",
                "attack_model": "attack_model",
                "sample_fraction": "sample_fraction", "margin": "margin",
                "auth_pool_bits": "auth_pool_bits", "seed": "seed"}
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            params[key] = value
    params["sweep"] = sweep
    return params


def session_config(params: dict, seed: int | None = None,
                   eve=None) -> SessionConfig:
    return SessionConfig(
        n_pulses=int(params["pulses"]),
        source=SourceModel(float(params["mu"])),
        channel=FiberChannel(float(params["distance_km"]),
                             float(params["attenuation_db_per_km"]),
                             float(params["flip_prob"])),
        detectors=DetectorPair(float(params["efficiency"]),
                               float(params["dark_count_prob"])),
        seed=int(params["seed"] if seed is None else seed),
        eve=parse_eve(params["eve"]) if eve is None else eve,
        sample_fraction=float(params["sample_fraction"]),
        attack_model=parse_attack_model(str(params["attack_model"])),
        security_margin_bits=int(params["margin"]),
        auth_pool_bits=int(params["auth_pool_bits"]))


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def csv_row(config: SessionConfig, report) -> list[str]:
    return [_fmt(v) for v in [
        config.seed, config.channel.length_km, config.source.mu,
        strategy_label(config.eve), report.pulses_sent, report.clicks,
        report.raw_len, report.sifted_len, float(report.e_hat),
        report.leak_ec_bits, report.final_len,
        float(report.eve_info_fraction), report.auth_bits_consumed,
        report.secret_growth, report.outcome.value]]


def exit_code_for(outcome: SessionOutcome) -> int:
    return {SessionOutcome.SUCCESS: EXIT_OK,
            SessionOutcome.ABORT_QBER: EXIT_ABORT_QBER,
            SessionOutcome.ABORT_RECONCILIATION:
                EXIT_ABORT_RECONCILIATION}[outcome]


def cmd_run(args: argparse.Namespace) -> int:
    params = merge_params(args)
    config = session_config(params)
    report = run_session(config)
    print(f"session seed {config.seed}: {config.n_pulses} pulses, "
          f"mu={config.source.mu:g}, {config.channel.length_km:g} km @ "
          f"{config.channel.attenuation_db_per_km:g} dB/km (1550 nm "
          f"window), eve={strategy_label(config.eve)}")
    rows = [("pulses sent", report.pulses_sent),
            ("clicks", report.clicks),
            ("raw key bits", report.raw_len),
            ("sifted key bits", report.sifted_len),
            ("QBER estimate", f"{report.e_hat:.6g}"),
            ("EC leakage bits", report.leak_ec_bits),
            ("final key bits", report.final_len),
            ("Eve info fraction", f"{report.eve_info_fraction:.6g}"),
            ("auth bits consumed", report.auth_bits_consumed),
            ("secret growth", f"{report.secret_growth:+d}"),
            ("outcome", report.outcome.value)]
    for label, value in rows:
        print(f"  {label:<20} {value}")
    return exit_code_for(report.outcome)


def _sweep_points(params: dict) -> list[dict]:
    sweep = params.get("sweep") or {}
    if not sweep:
        raise ConfigError("sweep needs at least one axis "
                          "(sweep.distance_km / sweep.mu / "
                          "sweep.eve_fraction)")
    distances = sweep.get("distance_km", [params["distance_km"]])
    mus = sweep.get("mu", [params["mu"]])
    fractions = sweep.get("eve_fraction", [None])
    points = []
    for d in distances:
        for m in mus:
            for f in fractions:
                point = dict(params)
                point["distance_km"] = d
                point["mu"] = m
                if f is not None:
                    point["eve"] = f"intercept:{f}"
                points.append(point)
    return points


def _run_point(job) -> tuple[int, list[str]]:
    order, params, seed = job
    config = session_config(params, seed=seed)
    return order, csv_row(config, run_session(config))


def cmd_sweep(args: argparse.Namespace) -> int:
    params = merge_params(args)
    output = args.output or params.get("output")
    if not output:
        raise ConfigError("sweep needs --output (or \"output\" in config)")
    if os.path.exists(output) and not args.force:
        raise ConfigError(f"refusing to overwrite {output}; pass --force")
    repeats = int(args.repeats or params.get("repeats", 1))
    points = _sweep_points(params)

    jobs = []
    master = int(params["seed"])
    for i, point in enumerate(points):
        for r in range(repeats):
            # Per-session seed from a documented 64-bit mix so any subset
            # of the sweep reproduces the exact same sessions.
            jobs.append((len(jobs), point, mix64(master, i * repeats + r)))

    results: list[list[str] | None] = [None] * len(jobs)
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(args.jobs) as pool:
            for order, row in pool.map(_run_point, jobs, chunksize=1):
                results[order] = row
    else:
        for job in jobs:
            order, row = _run_point(job)
            results[order] = row

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(results)
    with open(output, "w", encoding="utf-8", newline="") as fh:
        fh.write(buffer.getvalue())
    print(f"wrote {len(jobs)} rows to {output}")
    return EXIT_OK


def load_scenario(path: str) -> dict:
    path = _resolve_config_path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno}, column "
            f"{exc.colno}: {exc.msg}") from exc
    for key in ("nodes", "links", "relays"):
        if key not in data:
            raise ConfigError(f"{path}: scenario needs \"{key}\"")
    return data


def cmd_network(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    net = Network()
    for node_id in scenario["nodes"]:
        net.node(str(node_id))
    for spec in scenario["links"]:
        a, b = str(spec["a"]), str(spec["b"])
        if "stub" in spec:
            stub = spec["stub"]
            source = StubKeySource(int(stub["seed"]), int(stub["bits"]))
        elif "session" in spec:
            cfg = dict(DEFAULTS)
            cfg.update(spec["session"])
            source = session_config(cfg)
        else:
            raise ConfigError(
                f"link {a}-{b} needs a \"stub\" or \"session\" key source")
        net.add_link(a, b, source,
                     auth_pool_bits=int(spec.get("auth_pool_bits", 4096)))

    try:
        net.provision_all()
    except SessionAborted as exc:
        print(f"link provisioning failed: {exc}", file=sys.stderr)
        return EXIT_ABORT_QBER

    rows = []
    relayed_keys = []
    for i, spec in enumerate(scenario["relays"]):
        path_ids = [str(x) for x in spec["path"]]
        key_len = int(spec["key_len"])
        rand = RandomSource(int(spec.get("seed", i))).split("relay")
        try:
            transcript = net.relay(path_ids, key_len, rand)
        except InsufficientLinkKey as exc:
            print(f"relay {i} failed: {exc}", file=sys.stderr)
            return EXIT_INSUFFICIENT_LINK_KEY
        relayed_keys.append(transcript.end_key)
        rows.append([str(i), "-".join(transcript.path), str(key_len),
                     str(len(transcript.hop_messages)),
                     "-".join(path_ids[1:-1]) or "(none)", "ok"])
        print(f"relay {i}: {' -> '.join(path_ids)}, {key_len} bits "
              f"delivered over {len(transcript.hop_messages)} hops")

    print("trust exposure:")
    for node_id in sorted(net.nodes):
        node = net.nodes[node_id]
        print(f"  {node_id}: saw {len(node.knowledge_log)} relayed "
              f"key(s) in plaintext")
    print("link key accounting:")
    for link in net.links:
        a, b = link.endpoints
        store = a.store_for(b.id)
        print(f"  {a.id}-{b.id}: {store.cursor} consumed, "
              f"{store.remaining} remaining")

    if args.csv:
        if os.path.exists(args.csv) and not args.force:
            raise ConfigError(f"refusing to overwrite {args.csv}; "
                              "pass --force")
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["relay", "path", "key_len", "hops",
                             "interior", "status"])
            writer.writerows(rows)
        print(f"wrote {len(rows)} relay rows to {args.csv}")
    return EXIT_OK


def _selftest_checks():
    from . import selftest as checks
    return checks.all_checks()


def cmd_selftest(_args: argparse.Namespace) -> int:
    failures = 0
    for name, ok, detail in _selftest_checks():
        status = "ok" if ok else "FAIL"
        line = f"selftest: {name:<36} {status}"
        if detail:
            line += f"  ({detail})"
        print(line)
        failures += 0 if ok else 1
    if failures:
        print(f"selftest: {failures} check(s) failed", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdsim",
        description="Deterministic BB84 key-distribution simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_session_flags(p):
        p.add_argument("--config", help="JSON config file (flags override)")
        p.add_argument("--pulses", type=int)
        p.add_argument("--mu", type=float)
        p.add_argument("--distance-km", dest="distance_km", type=float)
        p.add_argument("--attenuation-db-per-km",
                       dest="attenuation_db_per_km", type=float)
        p.add_argument("--efficiency", type=float)
        p.add_argument("--dark", type=float,
                       help="dark count probability per detector per gate")
        p.add_argument("--flip", type=float,
                       help="bit flip probability at matched-basis readout")
        p.add_argument("--eve",
                       help="none | pns | intercept | intercept:<fraction>")
        p.add_argument("--attack-model", dest="attack_model",
                       help="coherent | individual")
        p.add_argument("--sample-fraction", dest="sample_fraction",
                       type=float)
        p.add_argument("--margin", type=int)
        p.add_argument("--auth-pool-bits", dest="auth_pool_bits", type=int)
        p.add_argument("--seed", type=int)

    p_run = sub.add_parser("run", help="run one session")
    add_session_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="parameter sweep to CSV")
    add_session_flags(p_sweep)
    p_sweep.add_argument("--output", help="CSV output path")
    p_sweep.add_argument("--force", action="store_true",
                         help="overwrite an existing output file")
    p_sweep.add_argument("--repeats", type=int,
                         help="sessions per sweep point (default 1)")
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="parallel workers; output is identical "
                              "at any level")
    p_sweep.set_defaults(func=cmd_sweep)

    p_net = sub.add_parser("network", help="trusted-node scenario")
    p_net.add_argument("scenario", help="JSON scenario file")
    p_net.add_argument("--csv", help="per-relay CSV output path")
    p_net.add_argument("--force", action="store_true")
    p_net.set_defaults(func=cmd_network)

    p_self = sub.add_parser("selftest", help="fast invariant battery")
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
