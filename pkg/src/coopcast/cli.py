"""coopcast command line.

Exit codes: 0 ok, 2 parse error, 3 invariant violation, 64 unknown flag,
65 infeasible configuration.  Results go to stdout (CSV or JSON), diagnostics
to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import common, degraded, dfsim, general, io, optimize
from .prob import InvalidDistribution, binary_entropy, is_physically_degraded

EXIT_PARSE, EXIT_INVARIANT, EXIT_UNKNOWN_FLAG, EXIT_INFEASIBLE = 2, 3, 64, 65


class UsageError(Exception):
    def __init__(self, msg, code=EXIT_PARSE):
        super().__init__(msg)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _c_grid(text):
    """'start:stop:step' (stop included when on the grid) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            k = int(np.floor((stop - start) / step + 1e-9))
            return [round(start + i * step, 12) for i in range(k + 1)]
        return [float(t) for t in text.split(",")]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {e}") from None


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _channel_args(p):
    p.add_argument("channel", help="channel JSON file or builtin:bsbc?p1=..&p2=.. / builtin:bsbc2?p=..")
    p.add_argument("--c12", type=float, help="conference capacity Rx1 -> Rx2 (bits/use)")
    p.add_argument("--c21", type=float, help="conference capacity Rx2 -> Rx1 (bits/use)")


def _budget_args(p):
    d = optimize.OptBudget()
    p.add_argument("--lambda-count", type=int, default=d.lambda_count,
                   help="number of sweep weights (default %(default)s)")
    p.add_argument("--grid-res", type=int, default=d.grid_res,
                   help="points per simplex edge in the seeding grid (default %(default)s)")
    p.add_argument("--restarts", type=int, default=d.restarts,
                   help="ascent chains per weight (default %(default)s)")
    p.add_argument("--tol", type=float, default=d.tol,
                   help="stop a chain once a sweep gains less than this (default %(default)s)")
    p.add_argument("--seed", type=int, default=d.seed, help="PRNG seed (default %(default)s)")


def _out_args(p, witnesses=True):
    p.add_argument("-o", "--out", help="write the main result here instead of stdout")
    if witnesses:
        p.add_argument("--witness-out", help="write the witness JSON to this file")


def build_parser():
    top = _Parser(prog="coopcast", description="Rate regions of broadcast channels "
                  "with conferencing receivers.")
    sub = top.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    region = sub.add_parser("region", help="trace an inner-bound frontier")
    rsub = region.add_subparsers(dest="which", required=True, parser_class=_Parser)
    for name in ("degraded", "nocoop-degraded", "marton", "marton-coop"):
        p = rsub.add_parser(name)
        _channel_args(p)
        _budget_args(p)
        if name.startswith("marton"):
            p.add_argument("--card-u", type=int, help="|U| (default |X|)")
            p.add_argument("--card-v", type=int, help="|V| (default |X|)")
        else:
            p.add_argument("--card-u", type=int, help="|U| (default and maximum: the cardinality bound)")
        _out_args(p)

    bound = sub.add_parser("bound", help="outer bounds")
    bsub = bound.add_subparsers(dest="which", required=True, parser_class=_Parser)
    p = bsub.add_parser("cutset")
    _channel_args(p)
    _budget_args(p)
    _out_args(p)

    rate = sub.add_parser("rate", help="single-rate computations")
    rtsub = rate.add_subparsers(dest="which", required=True, parser_class=_Parser)
    p = rtsub.add_parser("common")
    _channel_args(p)
    _budget_args(p)
    p.add_argument("--scheme", default="two-step",
                   choices=["none", "single-step", "two-step", "corollary", "upper"])
    _out_args(p, witnesses=False)

    curve = sub.add_parser("curve", help="rate versus symmetric link capacity")
    csub = curve.add_subparsers(dest="which", required=True, parser_class=_Parser)
    p = csub.add_parser("common")
    _channel_args(p)
    _budget_args(p)
    p.add_argument("--scheme", default="two-step",
                   choices=["none", "single-step", "two-step", "upper"],
                   help="two-step uses Uh = Y2, Vh = Y1 (default %(default)s)")
    p.add_argument("--c-grid", type=_c_grid, required=True,
                   help="start:stop:step or comma-separated capacities")
    p.add_argument("--closed-form", action="store_true",
                   help="bsbc2 builtin only: evaluate the two-step curve in closed form")
    _out_args(p, witnesses=False)

    check = sub.add_parser("check", help="structural checks")
    chsub = check.add_subparsers(dest="which", required=True, parser_class=_Parser)
    p = chsub.add_parser("degraded")
    _channel_args(p)
    p.add_argument("--tol", type=float, default=degraded.DEGRADED_TOL)

    sim = sub.add_parser("simulate", help="Monte Carlo simulation")
    ssub = sim.add_subparsers(dest="which", required=True, parser_class=_Parser)
    p = ssub.add_parser("df")
    _channel_args(p)
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--r2", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.25,
                   help="U uniform on the input alphabet, X = U with prob 1-alpha "
                        "(default %(default)s)")
    p.add_argument("--code-law", help="JSON file with p_u and p_x_given_u (overrides --alpha)")
    p.add_argument("--n-grid", type=_int_list, default=(4, 8, 12, 16))
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--decoder", choices=["ml", "typicality"], default="ml")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--strict", action="store_true", help="ties at Rx2 count as errors")
    p.add_argument("--ensemble", action="store_true",
                   help="draw a fresh code for every trial")
    p.add_argument("--seed", type=int, default=0)
    _out_args(p, witnesses=False)

    p = sub.add_parser("audit", help="re-evaluate a frontier from its witnesses")
    p.add_argument("frontier")
    p.add_argument("witnesses")
    return top


def _budget(a):
    try:
        return optimize.OptBudget(lambda_count=a.lambda_count, grid_res=a.grid_res,
                                  restarts=a.restarts, tol=a.tol, seed=a.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _channel(a):
    ch = io.load_channel(a.channel)
    return ch.with_links(a.c12, a.c21)


def _emit(a, text, extra=None):
    if getattr(a, "out", None):
        with open(a.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    if extra and getattr(a, "witness_out", None):
        with open(a.witness_out, "w") as f:
            f.write(extra())


def _cmd_region(a):
    ch = _channel(a)
    b = _budget(a)
    if a.which in ("degraded", "nocoop-degraded"):
        f = degraded.degraded_region if a.which == "degraded" else degraded.nocoop_degraded_region
        fr = f(ch, b, a.card_u)
    elif a.which == "marton":
        fr = general.marton_nocoop_region(ch, a.card_u, a.card_v, b)
    else:
        fr = general.marton_coop_region(ch, a.card_u, a.card_v, b)
    _emit(a, io.frontier_csv(fr), lambda: io.witness_json(fr, ch))


def _cmd_bound(a):
    ch = _channel(a)
    fr = general.cutset_bound(ch, _budget(a))
    _emit(a, io.frontier_csv(fr), lambda: io.witness_json(fr, ch))


def _report_dict(rep: common.CommonRateReport):
    w = rep.witness
    return {"scheme": rep.scheme, "rate": rep.rate, "feasible": rep.feasible,
            "upper": rep.upper, "slack12": rep.slack12, "slack21": rep.slack21,
            "witness": {"p_x": np.asarray(w.p_x).tolist(),
                        "p_uhat_given_y2": np.asarray(w.q_uhat).tolist(),
                        "p_vhat_given_y1": np.asarray(w.q_vhat).tolist()}}


def _cmd_rate(a):
    ch = _channel(a)
    b = _budget(a)
    if a.scheme == "upper":
        doc = {"scheme": "upper", "rate": common.common_upper_bound(ch, b)}
    else:
        doc = _report_dict(common.optimize_common(ch, a.scheme.replace("-", "_"), b))
    _emit(a, json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _cmd_curve(a):
    ch = _channel(a)
    b = _budget(a)
    rows = []
    if a.closed_form:
        if not a.channel.startswith("builtin:bsbc2") or a.scheme != "two-step":
            raise UsageError("--closed-form needs builtin:bsbc2 and --scheme two-step",
                             EXIT_INFEASIBLE)
        p = float(ch.w1[0, 1])
        hp = binary_entropy(p)
        if min(a.c_grid) < hp:
            raise UsageError(f"closed form holds for C >= h(p) = {hp:.9f}", EXIT_INFEASIBLE)
        for c, r, _ in common.bsbc2_curve_closed_form(p, a.c_grid):
            rows.append((c, r, "two_step"))
    elif a.scheme == "two-step":
        for c, rep in common.corollary_two_step_curve(ch, a.c_grid, b):
            rows.append((c, rep.rate, rep.scheme))
    else:
        for c in a.c_grid:
            chc = ch.with_links(c, c)
            if a.scheme == "upper":
                rows.append((c, common.common_upper_bound(chc, b), "upper"))
            else:
                rep = common.optimize_common(chc, a.scheme.replace("-", "_"), b)
                rows.append((c, rep.rate, rep.scheme))
    lines = ["c,rate,scheme"] + [f"{io.fmt(c)},{io.fmt(r)},{s}" for c, r, s in rows]
    _emit(a, "\n".join(lines) + "\n")


def _cmd_check(a):
    ch = _channel(a)
    res = is_physically_degraded(ch, a.tol)
    print(f"residual: {res.residual:.3g}", file=sys.stderr)
    _emit(a, f"degraded: {'yes' if res.degraded else 'no'}\n")


def _code_law(a, ch):
    if a.code_law:
        try:
            with open(a.code_law) as f:
                d = json.load(f)
            return np.ravel(d["p_u"]), np.asarray(d["p_x_given_u"], float)
        except (OSError, json.JSONDecodeError, KeyError) as e:
            raise UsageError(f"cannot read code law {a.code_law}: {e}") from None
    k = ch.nx
    if not 0.0 <= a.alpha <= 1.0:
        raise UsageError("--alpha must lie in [0, 1]")
    off = a.alpha / (k - 1) if k > 1 else 0.0
    m = np.full((k, k), off)
    np.fill_diagonal(m, 1 - a.alpha if k > 1 else 1.0)
    return np.full(k, 1.0 / k), m


SIM_COLUMNS = ("n", "r1", "r2", "c12", "r1_real", "r2_real", "c12_real", "trials",
               "errors1", "errors2", "errors", "pe1", "pe1_lo", "pe1_hi", "pe2", "pe2_lo",
               "pe2_hi", "pe", "pe_lo", "pe_hi", "mean_list", "list_bound")


def _cmd_simulate(a):
    ch = _channel(a)
    try:
        cfg = dfsim.SimConfig(blocks=a.blocks, trials=a.trials, seed=a.seed,
                              decoder=a.decoder, epsilon=a.epsilon, n_grid=a.n_grid,
                              strict=a.strict, ensemble=a.ensemble)
    except ValueError as e:
        raise UsageError(str(e)) from None
    p_u, p_xu = _code_law(a, ch)
    rep = dfsim.simulate(p_u, p_xu, ch, a.r1, a.r2, cfg)
    lines = [",".join(SIM_COLUMNS)]
    for e in rep.entries:
        vals = [e.n, e.r1, e.r2, e.c12, *e.realized, e.trials, e.errors1, e.errors2, e.errors,
                e.pe1, *e.ci1, e.pe2, *e.ci2, e.pe, *e.ci, e.mean_list, e.list_bound]
        lines.append(",".join(str(v) if isinstance(v, (int, np.integer)) else io.fmt(v)
                              for v in vals))
        for note in e.notes:
            print(f"n={e.n}: {note}", file=sys.stderr)
    _emit(a, "\n".join(lines) + "\n")


def _cmd_audit(a):
    try:
        with open(a.frontier) as f:
            text = f.read()
        with open(a.witnesses) as f:
            wtext = f.read()
    except OSError as e:
        raise UsageError(str(e)) from None
    rows, dev = io.audit(text, wtext)
    dev = float(dev)
    ok = dev <= io.AUDIT_TOL
    sys.stdout.write(json.dumps({"rows": rows, "max_deviation": dev, "ok": ok}) + "\n")
    return 0 if ok else EXIT_INVARIANT


COMMANDS = {"region": _cmd_region, "bound": _cmd_bound, "rate": _cmd_rate,
            "curve": _cmd_curve, "check": _cmd_check, "simulate": _cmd_simulate,
            "audit": _cmd_audit}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args, unknown = parser.parse_known_args(argv)
        if unknown:
            raise UsageError(f"coopcast: unknown arguments: {' '.join(unknown)}",
                             EXIT_UNKNOWN_FLAG)
        return COMMANDS[args.cmd](args) or 0
    except UsageError as e:
        print(e, file=sys.stderr)
        return e.code
    except io.ChannelParseError as e:
        print(f"coopcast: parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidDistribution as e:
        loc = f" at index {e.location}" if e.location is not None else ""
        print(f"coopcast: invalid distribution{loc}: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (degraded.NotDegraded, degraded.CardinalityError, general.CardinalityError,
            dfsim.CodeTooLarge, ValueError) as e:
        print(f"coopcast: infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
