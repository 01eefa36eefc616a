"""Command line front-end: ``ifomsim run`` and ``ifomsim campaign``."""

from __future__ import annotations

import argparse
import os
import sys

from .campaign import run_campaign
from .config import parse_config, resolve_load
from .engine import Simulation
from .errors import ConfigError, IfomSimError
from .metrics import write_report
from .steering import POLICIES


def _load_arg(text: str) -> str:
    try:
        resolve_load(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text.strip().lower()


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="INI scenario file")
    p.add_argument("--scenario", type=int, choices=(1, 2))
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float, metavar="SECONDS")
    p.add_argument("--out", metavar="DIR", default="ifomsim-out")
    p.add_argument("--trace-packets", action="store_true", help="write packets.csv")
    p.add_argument("--trace-bindings", action="store_true",
                   help="write bindings.csv and switch_events.csv")
    p.add_argument("--header-bytes", type=int, choices=(24, 68),
                   help="IFOM tunnel header size")
    p.add_argument("--backend", choices=("auto", "python", "cython"))
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifomsim",
                                     description="LTE/WLAN flow-mobility simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single run")
    _common(run)
    run.add_argument("--policy", choices=POLICIES)
    run.add_argument("--load", type=_load_arg, help="light, medium, heavy or an IeU count")

    camp = sub.add_parser("campaign", help="policy x load grid with replications")
    _common(camp)
    camp.add_argument("--policy", default="none-dual-static,tmax,ee",
                      help="comma-separated policies")
    camp.add_argument("--load", default="light,medium,heavy",
                      help="comma-separated loads")
    camp.add_argument("--reps", type=int)
    camp.add_argument("--reference", default="none-all-lte",
                      help="policy the gain columns compare against")
    return parser


def _overrides(args) -> dict:
    ov = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        ov[key.strip()] = value.strip()
    if args.scenario is not None:
        ov["run.scenario"] = str(args.scenario)
    if args.seed is not None:
        ov["run.seed"] = str(args.seed)
    if args.duration is not None:
        ov["run.duration_s"] = str(args.duration)
    if args.header_bytes is not None:
        ov["ifom.header_bytes"] = str(args.header_bytes)
    if args.backend is not None:
        ov["run.backend"] = args.backend
    if args.trace_packets:
        ov["trace.packets"] = "true"
    if args.command == "run":
        if args.policy is not None:
            ov["run.policy"] = args.policy
        if args.load is not None:
            ov["run.load"] = args.load
    elif args.reps is not None:
        ov["run.reps"] = str(args.reps)
    return ov


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, _overrides(args))
        if args.command == "run":
            rep = Simulation(cfg).run()
            write_report(rep, args.out, bindings=args.trace_bindings)
            s = rep.summary
            print(f"{cfg.run.policy} load={cfg.run.load} seed={cfg.run.seed}: "
                  f"throughput/IeU {s['mean_ieu_throughput_bps'] / 1e6:.3f} Mb/s, "
                  f"energy/IeU {s['mean_ieu_energy_j']:.2f} J, "
                  f"blocking {s['blocking_probability']:.3f}, loss {s['loss_fraction']:.4f} "
                  f"-> {os.path.abspath(args.out)}")
        else:
            policies = _split(args.policy)
            for p in policies:
                if p not in POLICIES:
                    raise ConfigError(f"unknown policy {p!r}", key="policy")
            loads = _split(args.load)
            for x in loads:
                resolve_load(x)
            cells = run_campaign(cfg, policies, loads, cfg.run.reps, args.out,
                                 reference=args.reference, bindings=args.trace_bindings)
            failed = [c for c in cells if "error" in c]
            for c in cells:
                if "error" in c:
                    print(f"{c['policy']:17s} {c['load']:7s} FAILED {c['error']}")
                else:
                    print(f"{c['policy']:17s} {c['load']:7s} "
                          f"{c['throughput_bps'] / 1e6:7.3f} Mb/s  {c['energy_j']:8.2f} J  "
                          f"blocking {c['blocking']:.3f}")
            print(f"comparison table: {os.path.join(os.path.abspath(args.out), 'comparison.csv')}")
            if failed:
                return 1
    except (IfomSimError, ValueError, OSError) as exc:
        print(f"ifomsim: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
