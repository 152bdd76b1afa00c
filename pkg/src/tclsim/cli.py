"""Command-line entry point: ``tclsim simulate | trace | bench``.

Exit codes: 0 success, 2 invalid configuration, 3 signal file unreadable or malformed.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numba as nb
import numpy as np

from .model import NOMINAL_MODEL, ConfigurationError
from .population import (
    TRACE_COLUMNS, FleetSpec, StepPolicy, aggregate_metrics, generate_fleet, simulate,
)
from .signals import DEMO_HORIZON, ReferenceSignal, SignalParseError, demo_signal, parse_signal

EXIT_OK, EXIT_CONFIG, EXIT_SIGNAL = 0, 2, 3


@dataclass(frozen=True)
class RunConfig:
    fleet_size: int = 1000
    seed: int = 0
    signal: str = "demo"
    step: float = 10.0
    jitter: float = 0.0
    heterogeneity: float = 0.2
    w: float = 0.9
    horizon: float = DEMO_HORIZON
    output: str = "-"
    per_appliance: bool = False
    index: int = 0
    workers: int = 1

    def fleet_spec(self) -> FleetSpec:
        return FleetSpec(self.fleet_size, NOMINAL_MODEL, self.heterogeneity, self.w, self.seed)

    def policy(self) -> StepPolicy:
        if self.jitter > 0:
            return StepPolicy("jittered", self.step, self.jitter, seed=self.seed)
        return StepPolicy("fixed", self.step)

    def load_signal(self) -> ReferenceSignal:
        if self.signal == "demo":
            return demo_signal()
        try:
            text = Path(self.signal).read_text(encoding="utf-8")
        except OSError as exc:
            raise SignalParseError(0, f"cannot read {self.signal}: {exc.strerror}") from None
        return parse_signal(text)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


def write_csv(path: str, header, columns) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in zip(*columns)]
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_simulate(cfg: RunConfig) -> int:
    fleet = generate_fleet(cfg.fleet_spec())
    trace = simulate(fleet, cfg.load_signal(), cfg.policy(), cfg.horizon, seed=cfg.seed,
                     record_appliances=cfg.per_appliance, workers=cfg.workers)
    cols = trace.columns()
    write_csv(cfg.output, TRACE_COLUMNS, [cols[c] for c in TRACE_COLUMNS])
    if cfg.per_appliance:
        stem = "appliances" if cfg.output == "-" else str(Path(cfg.output).with_suffix(""))
        n = trace.n_appliances
        write_csv(f"{stem}_temperature.csv", ["t_s"] + [f"a{i}" for i in range(n)],
                  [trace.t_s] + list(trace.appliance_temperature.T))
        write_csv(f"{stem}_compressor.csv", ["t_s"] + [f"a{i}" for i in range(n)],
                  [trace.t_s] + list(trace.appliance_compressor.T))
    out = sys.stderr if cfg.output == "-" else sys.stdout
    print(aggregate_metrics(trace).summary(), file=out)
    return EXIT_OK


def cmd_trace(cfg: RunConfig) -> int:
    if not 0 <= cfg.index < cfg.fleet_size:
        raise ConfigurationError(f"--index {cfg.index} outside fleet of {cfg.fleet_size}")
    fleet = generate_fleet(cfg.fleet_spec())
    trace = simulate(fleet, cfg.load_signal(), cfg.policy(), cfg.horizon, seed=cfg.seed,
                     record_appliances=True, workers=cfg.workers)
    a = cfg.index
    write_csv(cfg.output, ("t_s", "pi", "compressor", "temp_c"),
              [trace.t_s, trace.appliance_pi[:, a], trace.appliance_compressor[:, a],
               trace.appliance_temperature[:, a]])
    return EXIT_OK


def cmd_bench(cfg: RunConfig) -> int:
    fleet = generate_fleet(cfg.fleet_spec())
    signal, policy = cfg.load_signal(), cfg.policy()
    # compile outside the timed region
    simulate(fleet.subset(slice(0, 1)), signal, StepPolicy("explicit", times=(1.0,)), 1.0, workers=cfg.workers)
    start = time.perf_counter()
    trace = simulate(fleet, signal, policy, cfg.horizon, seed=cfg.seed, workers=cfg.workers)
    wall = time.perf_counter() - start
    steps = len(trace) * len(fleet)
    threads = nb.get_num_threads() if cfg.workers > 1 else 1
    print(f"appliances={len(fleet)} steps={len(trace)} appliance_steps={steps} wall_s={wall:.3f} "
          f"appliance_steps_per_s={steps / wall:.4g} workers={cfg.workers} threads={threads}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "trace": cmd_trace, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tclsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    d = RunConfig()
    for name, size in (("simulate", d.fleet_size), ("trace", 1), ("bench", 100_000)):
        p = sub.add_parser(name)
        p.add_argument("--fleet-size", type=int, default=size)
        p.add_argument("--seed", type=int, default=d.seed)
        p.add_argument("--signal", default=d.signal, help="'demo' or a t_s,pi CSV file")
        p.add_argument("--step", type=float, default=d.step, help="nominal step in seconds")
        p.add_argument("--jitter", type=float, default=d.jitter, help="uniform +/- step jitter in seconds")
        p.add_argument("--heterogeneity", type=float, default=d.heterogeneity)
        p.add_argument("--w", type=float, default=d.w, help="operating-range fraction")
        p.add_argument("--horizon", type=float, default=d.horizon, help="seconds")
        p.add_argument("--workers", type=int, default=d.workers)
        if name != "bench":
            p.add_argument("--output", "-o", default=d.output, help="CSV path, '-' for stdout")
        if name == "simulate":
            p.add_argument("--per-appliance", action="store_true", help="also write per-appliance traces")
        if name == "trace":
            p.add_argument("--index", type=int, default=d.index, help="appliance to report")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(args).items() if k != "command"}
    try:
        cfg = RunConfig(**opts)
        if cfg.workers < 1 or cfg.horizon <= 0:
            raise ConfigurationError("workers must be >= 1 and horizon positive")
        return COMMANDS[args.command](cfg)
    except SignalParseError as exc:
        print(f"tclsim: signal error: {exc}", file=sys.stderr)
        return EXIT_SIGNAL
    except ConfigurationError as exc:
        print(f"tclsim: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
