"""Command line interface: ``qalsearch <subcommand> ...``."""
import argparse
import logging
import sys
from pathlib import Path

from . import _backend
from .config import DEFAULT_GEOMETRY, load_config
from .descriptors import read_xyz
from .driver import (
    aggregate_runs,
    read_aggregate_csv,
    read_run_csv,
    run_experiment,
    write_aggregate_csv,
)
from .errors import QalError
from .space import CandidateSpace, ToyOracle, enumerate_homotops, write_energy_table


def cmd_enumerate(args):
    for h in enumerate_homotops(args.n_sites, args.n_dopants):
        print(h.id)
    return 0


def cmd_gen_table(args):
    host = read_xyz(args.geometry)
    space = CandidateSpace(host, args.n_dopants, args.dopant)
    oracle = ToyOracle(args.j_sisi, args.j_sial, args.j_alal, args.rho,
                       host_element=host.elements[0], dopant_element=args.dopant)
    table = oracle.tabulate(space)
    write_energy_table(table, args.out)
    print(f"wrote {len(table)} energies to {args.out}", file=sys.stderr)
    return 0


def cmd_run(args):
    config = load_config(args.config)
    if args.out_dir:
        config.out_dir = args.out_dir
    if args.runs is not None:
        config.runs = args.runs
    logging.info("running %s (%d runs, backend %s)", config.label, config.runs, _backend.BACKEND)
    result = run_experiment(config, out_dir=config.out_dir)
    for run in result.runs:
        final = run.history[-1].best_energy if run.history else run.initial_best
        status = f"ERROR {run.error}" if run.error else "ok"
        print(f"run {run.run_index:2d} seed {run.seed}: best {final:.6f} Ha after "
              f"{run.history[-1].n_new_calcs_cum if run.history else 0} new calcs [{status}]")
    print(f"outputs in {config.out_dir}")
    return 1 if result.failures else 0


def cmd_aggregate(args):
    histories = [read_run_csv(p) for p in args.run_csvs]
    agg = aggregate_runs(histories)
    write_aggregate_csv(agg, args.out, comments=[f"sources={len(histories)}"])
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def _label_of(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# label="):
                return line.split("=", 1)[1].strip()
            if not line.startswith("#"):
                break
    return Path(path).parent.name or Path(path).stem


def cmd_plot(args):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in args.aggregate_csvs:
        agg = read_aggregate_csv(path)
        ax.plot(agg["n_new_calcs"], agg["mean"], marker="o", markersize=3, label=_label_of(path))
    ax.set_xlabel("new calculations")
    ax.set_ylabel("mean best energy (Hartree)")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.out, format="svg")
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="qalsearch", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("enumerate", help="print homotop ids in lexicographic order")
    e.add_argument("--n-sites", type=int, default=11)
    e.add_argument("--n-dopants", type=int, default=4)
    e.set_defaults(func=cmd_enumerate)

    g = sub.add_parser("gen-table", help="tabulate toy-oracle energies to CSV")
    g.add_argument("--geometry", default=str(DEFAULT_GEOMETRY))
    g.add_argument("--n-dopants", type=int, default=4)
    g.add_argument("--dopant", default="Al")
    g.add_argument("--j-sisi", type=float, default=0.0)
    g.add_argument("--j-sial", type=float, default=-0.3)
    g.add_argument("--j-alal", type=float, default=0.5)
    g.add_argument("--rho", type=float, default=2.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_table)

    r = sub.add_parser("run", help="run a full experiment from a config file")
    r.add_argument("config")
    r.add_argument("--out-dir")
    r.add_argument("--runs", type=int)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("aggregate", help="merge per-run CSVs into an aggregate curve")
    a.add_argument("run_csvs", nargs="+")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_aggregate)

    pl = sub.add_parser("plot", help="SVG chart of mean best energy vs new calculations")
    pl.add_argument("aggregate_csvs", nargs="+")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (QalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
