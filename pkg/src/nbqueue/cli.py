"""Command-line entry point: ``nbqueue {table,hedge,compare,roots}``."""

from __future__ import annotations

import argparse
import sys

from .errors import ConvergenceError, ModelError
from .metrics import METHODS
from .report import (
    COMPARE_COLUMNS,
    FORMATS,
    HEDGE_COLUMNS,
    ROOTS_COLUMNS,
    SPREADS,
    TABLE_COLUMNS,
    RunSpec,
    build,
    parse_list,
    render,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

_EPILOG = f"""\
csv columns (fixed order):
  table    {','.join(TABLE_COLUMNS)}
           (with --spread root-sd the sd_* columns are named rsd_*)
  hedge    {','.join(HEDGE_COLUMNS)}
  compare  {','.join(COMPARE_COLUMNS)}
  roots    {','.join(ROOTS_COLUMNS)}

exit codes: 0 success, 2 validation error, 3 numerical failure
"""


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--beta", type=float, default=1.0, help="hedge beta in s = n + beta n^delta")
    common.add_argument("--delta", default=None,
                        help="regime exponent in (1/2, 1); hedge accepts a comma list")
    common.add_argument("--a", type=float, default=None, help="Gamma shape (raw instance, with --b)")
    common.add_argument("--b", type=float, default=None, help="Gamma scale (raw instance, with --a)")
    common.add_argument("--format", choices=FORMATS, default="csv", dest="output")
    common.add_argument("--tol", type=float, default=1e-12, help="series/chain tolerance")
    common.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
    common.add_argument("--out", default=None, help="write to PATH instead of stdout")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for table rows")

    p = argparse.ArgumentParser(
        prog="nbqueue",
        description="Stationary metrics of a slotted queue with negative binomial arrivals.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table", parents=[common], help="exact vs heavy-traffic approximations",
                       epilog=_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    t.add_argument("--s-list", required=True, help="comma-separated capacities")
    t.add_argument("--spread", choices=SPREADS, default="sd",
                   help="dispersion column: standard deviation or its square root")

    h = sub.add_parser("hedge", parents=[common], help="robust hedge curves over n",
                       epilog=_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    h.add_argument("--n-min", type=float, default=2.0)
    h.add_argument("--n-max", type=float, default=200.0)
    h.add_argument("--n-step", type=float, default=1.0)

    for name, helptext in (("compare", "all methods on one instance"),
                           ("roots", "zeros of z^s - A(z) in the unit disk")):
        c = sub.add_parser(name, parents=[common], help=helptext,
                           epilog=_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
        c.add_argument("--s", type=int, required=True, help="capacity")
        if name == "compare":
            c.add_argument("--methods", default=",".join(METHODS),
                           help=f"comma list from {','.join(METHODS)}")
            c.add_argument("--periods", type=int, default=1_000_000, help="Monte Carlo periods")
    return p


def _spec(ns: argparse.Namespace) -> RunSpec:
    if ns.delta is None:
        delta = (0.6, 0.75, 0.9) if ns.command == "hedge" else (0.6,)
    else:
        delta = parse_list(ns.delta)
    kw = dict(command=ns.command, beta=ns.beta, delta=delta, output=ns.output, tol=ns.tol,
              seed=ns.seed, a=ns.a, b=ns.b, jobs=ns.jobs)
    if ns.command == "table":
        kw.update(s_list=parse_list(ns.s_list, int), spread=ns.spread)
    elif ns.command == "hedge":
        kw.update(n_range=(ns.n_min, ns.n_max, ns.n_step))
    else:
        kw.update(s_list=(ns.s,))
        if ns.command == "compare":
            kw.update(methods=parse_list(ns.methods, str), periods=ns.periods)
    return RunSpec(**kw)


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    try:
        spec = _spec(ns)
        rep = build(spec)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = render(rep, spec)
    if ns.out:
        with open(ns.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_NUMERIC if rep.failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
