"""``auction-lab`` command line.

Exit codes: 0 success, 2 usage or validation error, 3 degenerate regime
(reserve at or above the mean value), 4 unwritable output path.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import pricing
from .dist import make_distribution
from .equilibrium import AuctionSpec, bid_function, solve, solve_threshold, solve_threshold_alpha
from .errors import AuctionLabError, DegenerateRegime
from .pricing import GbmParams
from .sim import SimReport, audit_alice, audit_bob, estimate
from .svg import line_chart

EXIT_USAGE, EXIT_DEGENERATE, EXIT_OUTPUT = 2, 3, 4


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """CSV cell text: 9 significant digits for floats, blank for missing."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def write_csv(stream, header, rows):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(c) for c in r])


def read_config(path: str) -> dict:
    """Flat ``key=value`` file; blank lines and ``#`` comments ignored."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise UsageError(f"{path}:{n}: expected key=value")
        out[key.strip().lstrip("-").replace("-", "_")] = val.strip()
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")


def cmd_solve(args, out):
    _require(args, "dist")
    d = make_distribution(args.dist)
    spec = AuctionSpec(d, args.limit, args.alpha)
    if spec.alpha > 0:
        th = solve_threshold_alpha(d, spec.alpha)
        out.write(f"v_bar_alpha={fmt(th.v_bar)}\n")
    else:
        th = solve_threshold(d, spec.limit_L)
        if not th.interior:
            raise DegenerateRegime(
                f"degenerate regime: limit {spec.limit_L} >= E[v] = {d.mean()}; "
                f"no interior threshold, Bob bids L whenever v > L"
            )
        out.write(f"v_bar={fmt(th.v_bar)}\n")
    out.write(f"residual={fmt(th.residual)}\n")
    out.write(f"interior={fmt(th.interior)}\n")
    lo, hi = float(d.quantile(0.001)), float(d.quantile(0.999))
    v = np.linspace(lo, hi, 200)
    bids = bid_function(spec, th)(v)
    write_csv(out, ["v", "bid"], zip(v, bids))
    return 0


PRICE_FIELDS = ["pi_b_quadrature", "pi_b_margrabe_when_L0", "pi_m_call", "theta_b_fd", "theta_b_closed",
                "theta_m", "v_bar"]


def cmd_price(args, out):
    _require(args, "sigma", "horizon")
    g = GbmParams(args.p0, args.sigma, args.horizon)
    L = args.limit
    if L < 0:
        raise UsageError("--limit must be >= 0")
    if L >= g.p0:
        # no interior threshold: Bob bids L whenever v > L, so he earns the monopolist's call
        pi_b, theta_fd, theta_closed, v_bar = pricing.bs_call(g, L), pricing.monopolist_theta(g, L), None, None
    else:
        pi_b = pricing.profit_last_mover_gbm(g, L)
        theta_fd = pricing.theta_last_mover_fd(g, L)
        theta_closed = pricing.theta_last_mover_closed(g, L)
        v_bar = pricing.gbm_threshold(g, L)
    row = [
        pi_b,
        pricing.margrabe_exchange(g) if L == 0 else None,
        pricing.bs_call(g, L),
        theta_fd,
        theta_closed,
        pricing.monopolist_theta(g, L),
        v_bar,
    ]
    write_csv(out, PRICE_FIELDS, [row])
    return 0


def cmd_simulate(args, out):
    _require(args, "dist", "paths", "seed")
    d = make_distribution(args.dist)
    spec = AuctionSpec(d, args.limit, args.alpha, args.bidders)
    report = estimate(spec, args.paths, args.seed)
    if args.format == "json":
        out.write(json.dumps(report.as_dict(), indent=2) + "\n")
    else:
        row = report.row()
        write_csv(out, SimReport.FIELDS, [[row[k] for k in SimReport.FIELDS]])
    return 0


def _grid(args):
    if args.grid is not None:
        items = [x for x in args.grid.split(",") if x.strip()]
        try:
            return [float(x) for x in items]
        except ValueError as exc:
            raise UsageError(f"bad --grid: {exc}") from exc
    if args.grid_from is not None and args.grid_to is not None and args.grid_steps is not None:
        if args.grid_steps < 1:
            raise UsageError("--grid-steps must be >= 1")
        return list(np.linspace(args.grid_from, args.grid_to, args.grid_steps))
    return []


def _z(diff, se):
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def cmd_audit(args, out):
    _require(args, "dist", "player", "paths", "seed")
    grid = _grid(args)
    if not grid:
        raise UsageError("audit grid is empty")
    d = make_distribution(args.dist)
    spec = AuctionSpec(d, args.limit, args.alpha, args.bidders)
    th = solve(spec)
    rows = []
    if args.player == "alice":
        ref = pricing.alice_profit_uncertain(d, spec.alpha)
        for b, mean, se in audit_alice(spec, th, grid, args.paths, args.seed):
            rows.append((b, mean, se, _z(mean - ref, se)))
    else:
        if 0.0 not in grid:
            grid = sorted(grid + [0.0])
        table = audit_bob(spec, th, grid, args.paths, args.seed)
        base = next(m for sh, m, _, _ in table if sh == 0.0)
        for sh, mean, se, dse in table:
            rows.append((sh, mean, se, _z(mean - base, dse)))
    write_csv(out, ["point", "mean", "se", "z_vs_reference"], rows)
    return 0


T_SWEEP_FIELDS = ["T", "pi_b_analytic", "revenue_analytic", "pi_b_mc", "pi_b_mc_se", "revenue_mc",
                  "revenue_mc_se", "total_check"]
L_SWEEP_FIELDS = ["L", "v_bar", "theta_lastmover_fd", "theta_lastmover_closed", "theta_monopolist"]


def sweep_rows(param, grid, p0=1.0, sigma=1.0, horizon=1.0, limit=0.0, mc_paths=0, seed=0):
    """Rows for a T or L sweep (see the *_SWEEP_FIELDS headers)."""
    rows = []
    if param == "horizon_T":
        for T in grid:
            g = GbmParams(p0, sigma, T)
            pi_b = pricing.profit_last_mover_gbm(g, limit)
            rev = pricing.revenue_expected(g.distribution(), limit)
            mc = [None] * 4
            if mc_paths:
                rep = estimate(AuctionSpec(g.distribution(), limit), mc_paths, seed)
                mc = [rep.bob_payoff.mean, rep.bob_payoff.se, rep.revenue.mean, rep.revenue.se]
            rows.append([T, pi_b, rev, *mc, pi_b + rev])
    else:
        for L in grid:
            g = GbmParams(p0, sigma, horizon)
            rows.append([
                L,
                pricing.gbm_threshold(g, L),
                pricing.theta_last_mover_fd(g, L),
                pricing.theta_last_mover_closed(g, L),
                pricing.monopolist_theta(g, L),
            ])
    return rows


def cmd_sweep(args, out):
    _require(args, "param", "from_", "to", "steps", "out")
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    if not args.from_ < args.to:
        raise UsageError("--from must be < --to")
    if args.mc_paths and args.mc_paths < 1000:
        raise UsageError("--mc-paths must be 0 or >= 1000")
    grid = list(np.linspace(args.from_, args.to, args.steps))
    rows = sweep_rows(args.param, grid, args.p0, args.sigma, args.horizon, args.limit, args.mc_paths, args.seed)
    header = T_SWEEP_FIELDS if args.param == "horizon_T" else L_SWEEP_FIELDS
    buf = io.StringIO()
    write_csv(buf, header, rows)
    try:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
        if args.svg:
            x = [r[0] for r in rows]
            cols = [1, 2, 3, 5] if args.param == "horizon_T" else [2, 3, 4]
            series = {header[c]: [None if r[c] is None else float(r[c]) for r in rows] for c in cols}
            series = {k: ys for k, ys in series.items() if any(y is not None for y in ys)}
            title = "Profit and revenue vs latency advantage" if args.param == "horizon_T" else "Timing pressure vs limit price"
            with open(args.svg, "w") as fh:
                fh.write(line_chart(x, series, title=title, xlabel=header[0]))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    out.write(f"wrote {len(rows)} rows to {args.out}\n")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="auction-lab", description="Latency-advantage common-value auction toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="flat key=value file; flags override it")
        sp.set_defaults(func=fn)
        return sp

    sp = add("solve", cmd_solve, "reserve threshold and Bob's bid curve")
    sp.add_argument("--dist")
    sp.add_argument("--limit", type=float, default=0.0)
    sp.add_argument("--alpha", type=float, default=0.0)

    sp = add("price", cmd_price, "GBM profit, revenue-side options and thetas")
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--limit", type=float, default=0.0)
    sp.add_argument("--p0", type=float, default=1.0)

    sp = add("simulate", cmd_simulate, "Monte Carlo equilibrium payoffs")
    sp.add_argument("--dist")
    sp.add_argument("--limit", type=float, default=0.0)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--bidders", type=int, default=1, help="number of period-1 bidders")
    sp.add_argument("--paths", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = add("audit", cmd_audit, "deviation payoffs for Alice's bids or Bob's shifts")
    sp.add_argument("--player", choices=("alice", "bob"))
    sp.add_argument("--dist")
    sp.add_argument("--limit", type=float, default=0.0)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--bidders", type=int, default=1)
    sp.add_argument("--grid", help="comma-separated bids (alice) or shifts (bob)")
    sp.add_argument("--grid-from", type=float)
    sp.add_argument("--grid-to", type=float)
    sp.add_argument("--grid-steps", type=int)
    sp.add_argument("--paths", type=int)
    sp.add_argument("--seed", type=int)

    sp = add("sweep", cmd_sweep, "sweep T or L and write CSV (+ SVG)")
    sp.add_argument("--param", choices=("horizon_T", "limit_L"))
    sp.add_argument("--from", dest="from_", type=float)
    sp.add_argument("--to", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--horizon", type=float, default=1.0)
    sp.add_argument("--limit", type=float, default=0.0)
    sp.add_argument("--p0", type=float, default=1.0)
    sp.add_argument("--mc-paths", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--svg")
    return p, sub


def _apply_config(parser, subparsers, argv):
    """Re-parse with config-file values installed as defaults under the flags."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = read_config(args.config)
    sp = subparsers.choices[args.command]
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, raw in cfg.items():
        dest = "from_" if key == "from" else key
        if dest not in actions or dest in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        conv = actions[dest].type or str
        try:
            defaults[dest] = conv(raw)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {raw!r}") from exc
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser, subparsers = build_parser()
    try:
        args = _apply_config(parser, subparsers, argv)
        return args.func(args, out)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except DegenerateRegime as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, AuctionLabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
