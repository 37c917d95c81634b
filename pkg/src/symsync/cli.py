"""Command-line front end: ``symsync {run,sweep,energy-table,validate}``.

Exit codes: 0 success, 2 configuration error, 3 I/O error. Simulation
outcomes never change the exit status.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Sequence

from . import __version__
from .energy import REFERENCE_STATE_VALUES, expected_state_energy
from .engine import CampaignResult, default_workers, run_campaign, run_sweep
from .errors import ConfigError
from .params import CampaignConfig, dump_config, load_config
from .relay import SymbolStateKind
from .stats import SCHEMA_VERSION, emit_csv, render_table

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

STATE_LABELS = {
    SymbolStateKind.ONE_BIT_RELAY: "1-bit relay",
    SymbolStateKind.ZERO_BIT_RELAY: "0-bit relay",
    SymbolStateKind.SLEEP: "sleep",
    SymbolStateKind.LISTEN_EMPTY: "listen-empty",
    SymbolStateKind.LISTEN_DETECT: "listen-detect",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors already; keep the message on stderr
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser, multi: bool) -> None:
    p.add_argument("--config", metavar="PATH", help="YAML configuration file")
    p.add_argument("--area-m", type=float, dest="area_m", help="side of the square deployment area (m)")
    if multi:
        p.add_argument("--nodes", type=int, nargs="+", help="node counts (perfect squares)")
        p.add_argument("--P", type=float, nargs="+", dest="P", help="wake-up probabilities")
    else:
        p.add_argument("--nodes", type=int, help="node count (perfect square)")
        p.add_argument("--P", type=float, dest="P", help="wake-up probability")
    p.add_argument("--packets", type=int, help="packets per campaign")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--workers", type=int, help="worker processes (default: $SYMSYNC_WORKERS or 1)")
    p.add_argument("--backend", choices=("python", "cython"), help="trial kernel backend")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="symsync", description="Symbol-synchronous multi-hop flooding simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one campaign")
    _add_common(run, multi=False)
    run.add_argument("--out", metavar="PATH", help="output table (default: stdout)")
    run.add_argument("--format", choices=("csv", "gnuplot"), default="csv")

    sweep = sub.add_parser("sweep", help="run campaigns over densities x wake-up probabilities")
    _add_common(sweep, multi=True)
    sweep.add_argument("--out", metavar="PATH", help="output table (default: stdout)")
    sweep.add_argument("--format", choices=("csv", "gnuplot"), default="csv")
    sweep.add_argument("--progress", action="store_true", help="per-cell progress on stderr")

    et = sub.add_parser("energy-table", help="per-state energy: closed form vs published values")
    _add_common(et, multi=False)
    et.add_argument("--measure", action="store_true",
                    help="also run a campaign and report the simulated per-state distribution")

    val = sub.add_parser("validate", help="check a configuration and print the effective values")
    _add_common(val, multi=False)
    return parser


def effective_config(args: argparse.Namespace) -> CampaignConfig:
    config = load_config(args.config) if args.config else CampaignConfig()
    changes = {}
    if args.area_m is not None:
        changes["area_side_m"] = args.area_m
    if args.packets is not None:
        changes["n_packets"] = args.packets
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.nodes is not None and not isinstance(args.nodes, list):
        changes["n_nodes"] = args.nodes
    if args.P is not None and not isinstance(args.P, list):
        changes["wake_probability"] = args.P
    if isinstance(args.nodes, list) and args.nodes:
        changes["n_nodes"] = args.nodes[0]
    if isinstance(args.P, list) and args.P:
        changes["wake_probability"] = args.P[0]
    try:
        return dataclasses.replace(config, **changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _workers(args) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        return args.workers
    try:
        return default_workers()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def header_lines(config: CampaignConfig, command: str, extra: Sequence[str] = ()) -> list[str]:
    lines = [
        f"symsync {__version__} {command} table, schema {SCHEMA_VERSION}",
        f"base_seed: {config.base_seed}",
        *extra,
        "effective config:",
    ]
    lines += ["  " + ln for ln in dump_config(config).splitlines()]
    return lines


def _write(text_rows, config, command, args, extra: Sequence[str] = ()) -> None:
    header = header_lines(config, command, extra)
    if args.out:
        emit_csv(text_rows, args.out, args.format, header)
    else:
        sys.stdout.write(render_table(text_rows, args.format, header))


def _summary(res: CampaignResult) -> str:
    per, lo, hi = res.per()
    e = res.energy()
    return (
        f"n_nodes={res.config.n_nodes} P={res.config.wake_probability:g} packets={res.n_packets} "
        f"PER={per:.4g} [{lo:.4g}, {hi:.4g}] PrLR={res.prlr()[0]:.4g} BER={res.ber:.4g} "
        f"energy/packet/relay={e.mean_total_uj:.2f} uJ (tx {e.mean_tx_uj:.2f}, rx {e.mean_rx_uj:.2f}, "
        f"sleep {e.mean_sleep_uj:.2f})"
    )


def cmd_run(args) -> int:
    config = effective_config(args)
    res = run_campaign(config, workers=_workers(args), backend=args.backend)
    _write([res.metric_row()], config, "run", args)
    print(_summary(res), file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = effective_config(args)
    p_values = args.P if args.P is not None else [config.wake_probability]
    densities = args.nodes if args.nodes is not None else [config.n_nodes]
    for n in densities:
        dataclasses.replace(config, n_nodes=n)  # validates every density up front
    for p in p_values:
        dataclasses.replace(config, wake_probability=p)

    def progress(res):
        if args.progress:
            print(_summary(res), file=sys.stderr, flush=True)

    results = run_sweep(config, p_values, densities, workers=_workers(args), backend=args.backend,
                        progress=progress)
    grid = [f"sweep nodes: {' '.join(str(n) for n in densities)}",
            f"sweep P: {' '.join(repr(float(p)) for p in p_values)}",
            "n_nodes and wake_probability below are overridden per row"]
    _write([r.metric_row() for r in results], config, "sweep", args, grid)
    return EXIT_OK


def _fmt_energy(j: float) -> str:
    if j != j:  # nan
        return "n/a"
    return f"{j * 1e9:.1f} nJ" if j < 1e-6 else f"{j * 1e6:.3f} uJ"


def cmd_energy_table(args) -> int:
    config = effective_config(args)
    phy = config.phy
    measured = None
    if args.measure:
        res = run_campaign(config, workers=_workers(args), backend=args.backend)
        measured = res.ledger.state_statistics(phy)
    head = f"{'state':<14} {'model mW':>9} {'model energy':>13} {'model std':>11} {'published':>22}"
    if measured:
        head += f" {'simulated (mean +- std, periods)':>40}"
    print(head)
    order = [SymbolStateKind.ONE_BIT_RELAY, SymbolStateKind.ZERO_BIT_RELAY, SymbolStateKind.SLEEP,
             SymbolStateKind.LISTEN_EMPTY, SymbolStateKind.LISTEN_DETECT]
    for kind in order:
        model = expected_state_energy(kind, phy)
        ref_mw, _, ref_j, ref_std = REFERENCE_STATE_VALUES[kind]
        pub = f"{ref_mw:.2f} mW / {_fmt_energy(ref_j)}"
        line = (f"{STATE_LABELS[kind]:<14} {model.mean_mw:>9.2f} {_fmt_energy(model.mean_j):>13} "
                f"{_fmt_energy(model.std_j) if model.std_j else '0':>11} {pub:>22}")
        if measured:
            n, mean, std = measured[kind]
            line += f" {_fmt_energy(mean) + ' +- ' + _fmt_energy(std):>32} {n:>7}"
        print(line)
    print("model: listen-detect listens t ~ U[0, Ts]; 1-bit relay listens t ~ U[0, window]; "
          "forwarding states transmit Tp, then sleep.")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = effective_config(args)
    phy = config.phy
    print(dump_config(config), end="")
    print(f"# samples: Ts={phy.ts_samples} Tp={phy.tp_samples} window={phy.window_samples} "
          f"vote={phy.vote_samples} turnaround={phy.turnaround_samples} lead={phy.window_lead_samples}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "energy-table": cmd_energy_table, "validate": cmd_validate}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"symsync: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"symsync: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
