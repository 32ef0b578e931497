"""Command-line front end: ``lognsum <command> [options]``.

Exit codes: 0 ok, 2 usage error, 3 domain error, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from typing import Callable, Dict, List, Optional, Sequence

from .cramer import gamma_of_x, theta_solve, theta_tilde
from .errors import ConvergenceError, DomainError, SamplerCapError
from .laplace import (STRATEGIES, LognormalModel, laplace_is_estimate,
                      laplace_power_estimate, log_laplace_asymptotic, log_laplace_k)
from .montecarlo import (LAPLACE_MODES, DegenerateSampleWarning, cdf_is_estimate,
                         pdf_is_estimate)
from .saddlepoint import B6_DIVISOR, TABLE_B6_DIVISOR, saddlepoint
from .tilted import ALGORITHMS, choose_sampler, sample, tilted_mean_exact

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_CONVERGENCE = 0, 2, 3, 4

Row = Dict[str, object]


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def render(rows: List[Row], fmt: str, meta: Optional[dict] = None) -> str:
    """Format ``rows`` (dicts sharing the same keys) as csv, json or plain text."""
    cols = list(rows[0]) if rows else []
    if fmt == "json":
        doc = dict(meta or {})
        doc["rows"] = [{k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                        for k, v in r.items()} for r in rows]
        return json.dumps(doc, indent=2) + "\n"
    cells = [[_fmt(r[c]) for c in cols] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerows(cells)
        return buf.getvalue()
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(wd) for c, wd in zip(cols, widths))]
    lines += ["  ".join(v.rjust(wd) for v, wd in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------

def _positive(s: str) -> float:
    v = float(s)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s!r}")
    return v


def _nonnegative(s: str) -> float:
    v = float(s)
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {s!r}")
    return v


def _count(minimum: int) -> Callable[[str], int]:
    def parse(s: str) -> int:
        v = int(float(s)) if "e" in s.lower() else int(s)
        if v < minimum:
            raise argparse.ArgumentTypeError(f"expected an integer >= {minimum}, got {s!r}")
        return v
    return parse


def _grid(s: str) -> List[float]:
    return [_positive(p) for p in s.split(",") if p.strip()]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_laplace(a) -> List[Row]:
    m = LognormalModel(a.sigma)
    n = a.power
    if a.is_R is not None:
        if n == 1:
            vals = laplace_is_estimate(m, a.theta, a.seed, size=a.is_R)
            mean = float(vals.mean())
            hw = 1.96 * float(vals.std(ddof=1)) / math.sqrt(a.is_R)
            return [{"theta": a.theta, "power": 1, "value": mean, "half_width": hw}]
        est = laplace_power_estimate(m, a.theta, n, a.is_R, a.strategy, a.seed)
        return [{"theta": a.theta, "power": n, "value": est.value,
                 "half_width": est.half_width, "log_value": est.log_value}]
    if a.asymptotic:
        if a.k != 0:
            raise DomainError("--asymptotic supports --k 0 only")
        log_v = n * log_laplace_asymptotic(m, a.theta, with_root=not a.no_root)
    else:
        if a.theta == 0.0:
            raise DomainError("the numeric transform needs theta > 0")
        log_v = n * log_laplace_k(m, a.theta, a.k)
    return [{"theta": a.theta, "k": a.k, "power": n, "value": math.exp(log_v), "log_value": log_v}]


def cmd_theta(a) -> List[Row]:
    m = LognormalModel(a.sigma)
    rows = []
    for x in a.x:
        row: Row = {"x": x, "gamma": gamma_of_x(m, x), "theta_tilde": theta_tilde(m, x)}
        if a.refine:
            sol = theta_solve(m, x)
            row.update(theta=sol.theta, iterations=sol.iterations)
        rows.append(row)
    return rows


def _xs(a) -> List[float]:
    if a.x_grid:
        return a.x_grid
    if a.x is None:
        raise DomainError("give --x or --x-grid")
    return [a.x]


def cmd_cdf(a) -> List[Row]:
    m = LognormalModel(a.sigma)
    rows = []
    for x in _xs(a):
        if a.method == "mc":
            e = cdf_is_estimate(m, a.n, x, a.R, a.laplace_mode, a.seed, a.workers)
            rows.append({"x": x, "nx": a.n * x, "value": e.value, "half_width": e.half_width})
        else:
            r = saddlepoint(m, a.n, x, b6_divisor=a.b6_divisor)
            v = r.cdf1 if a.method == "saddle1" else r.cdf2
            rows.append({"x": x, "nx": a.n * x, "theta": r.theta_x, "value": v})
    return rows


def cmd_pdf(a) -> List[Row]:
    m = LognormalModel(a.sigma)
    rows = []
    for x in _xs(a):
        if a.method == "mc":
            e = pdf_is_estimate(m, a.n, x, a.R, a.variant, a.seed, a.workers)
            rows.append({"x": x, "nx": a.n * x, "value": e.value, "half_width": e.half_width})
        else:
            r = saddlepoint(m, a.n, x, correction=a.correction)
            v = r.pdf1 if a.method == "saddle1" else r.pdf2
            rows.append({"x": x, "nx": a.n * x, "theta": r.theta_x, "value": v})
    return rows


def cmd_sample(a) -> List[Row]:
    m = LognormalModel(a.sigma)
    algo = choose_sampler(m, a.theta) if a.algo == "auto" else a.algo
    draws, rep = sample(m, a.theta, a.seed, size=a.count, algo=algo)
    a._report = rep
    return [{"draw": float(d)} for d in draws]


# ---------------------------------------------------------------------------
# table reproduction
# ---------------------------------------------------------------------------

T1_X = (1.0, 0.9, 0.8, 0.7, 0.5, 0.3, 0.1)

# (n, sigma, grid of n x); x is n x / n except for saddle-n64, listed by x
SADDLE_N64_X = (0.90, 0.91, 0.92, 0.93, 0.95, 0.97, 0.99)
TABLE_GRIDS = {
    "cdf-n4": (4, 0.25, (2.6, 2.8, 3.0, 3.2, 3.4, 3.6)),
    "saddle-n64": (64, 0.25, None),
    "cdf-n64": (64, 0.25, (59.0, 59.75, 60.5, 61.25, 62.0, 62.75)),
    "cdf-n256": (256, 0.25, (249.0, 251.0, 252.0, 253.0, 254.0, 256.0)),
    "cdf-s0125": (64, 0.125, (60.8, 61.2, 61.6, 62.0, 62.4, 62.8)),
    "cdf-s0072": (64, 0.072, (62.1, 62.3, 62.5, 62.7, 62.9, 63.1)),
}
for _name in ("n4", "n64", "n256", "s0125", "s0072"):
    TABLE_GRIDS["pdf-" + _name] = TABLE_GRIDS["cdf-" + _name]

LAPLACE_N256_NX = tuple(float(v) for v in range(249, 257))

TABLES = ("t1",) + tuple(TABLE_GRIDS) + ("laplace-n256",)


def table_t1(a) -> List[Row]:
    m = LognormalModel(0.25)
    rows = []
    for x in T1_X:
        sol = theta_solve(m, x)
        rows.append({"x": x, "mean_at_theta_tilde": tilted_mean_exact(m, sol.theta_tilde),
                     "theta_tilde": sol.theta_tilde, "theta": sol.theta,
                     "iterations": sol.iterations})
    return rows


def table_grid(a) -> List[Row]:
    n, sigma, nxs = TABLE_GRIDS[a.table]
    m = LognormalModel(sigma)
    is_pdf = a.table.startswith("pdf-")
    pairs = [(n * x, x) for x in SADDLE_N64_X] if nxs is None else [(v, v / n) for v in nxs]
    rows = []
    for nx, x in pairs:
        r = saddlepoint(m, n, x, b6_divisor=a.b6_divisor)
        row: Row = {"x": x, "nx": nx, "theta_tilde": theta_tilde(m, x), "theta": r.theta_x}
        if is_pdf:
            row.update(saddle1=r.pdf1, saddle2=r.pdf2)
        else:
            row.update(saddle1=r.cdf1, saddle2=r.cdf2)
        if not a.deterministic and a.table != "saddle-n64":
            if is_pdf:
                e = pdf_is_estimate(m, n, x, a.R, "B", a.seed, a.workers)
            else:
                e = cdf_is_estimate(m, n, x, a.R, "numeric", a.seed, a.workers)
            row.update(mc=e.value, half_width=e.half_width)
            if a.table == "cdf-n4":
                s = cdf_is_estimate(m, n, x, a.R, "is_single", a.seed, a.workers)
                row.update(mc_single=s.value, half_width_single=s.half_width)
        rows.append(row)
    return rows


def table_laplace(a) -> List[Row]:
    m = LognormalModel(0.25)
    n = 256
    rows = []
    for nx in LAPLACE_N256_NX:
        th = theta_tilde(m, nx / n)
        row: Row = {"nx": nx, "theta": th,
                    "lt_power": math.exp(n * log_laplace_asymptotic(m, th, with_root=True)),
                    "numeric_power": math.exp(n * log_laplace_k(m, th, 0))}
        if not a.deterministic:
            for strat, key in (("plain_power", "plain"), ("bias_corrected", "corrected"),
                               ("product", "product")):
                e = laplace_power_estimate(m, th, n, a.R, strat, a.seed)
                row[key] = e.value
                row[key + "_hw"] = e.half_width
        rows.append(row)
    return rows


def cmd_tables(a) -> List[Row]:
    if a.table == "t1":
        return table_t1(a)
    if a.table == "laplace-n256":
        return table_laplace(a)
    return table_grid(a)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json", "plain"), default="plain")
    common.add_argument("--seed", type=_count(0), default=0)
    common.add_argument("--workers", type=_count(1), default=1,
                        help="worker processes for Monte Carlo runs (results do not depend on it)")

    p = argparse.ArgumentParser(prog="lognsum",
                                description="Left-tail probabilities and densities of lognormal sums.")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("laplace", parents=[common], help="Laplace transform E[X^k e^{-theta X}]")
    q.add_argument("--sigma", type=_positive, required=True)
    q.add_argument("--theta", type=_nonnegative, required=True)
    q.add_argument("--k", type=int, default=0, choices=range(5))
    q.add_argument("--power", type=_count(1), default=1, help="raise the value to this power")
    g = q.add_mutually_exclusive_group()
    g.add_argument("--numeric", action="store_true", help="quadrature (default)")
    g.add_argument("--asymptotic", action="store_true", help="Lambert-W closed form")
    g.add_argument("--is", dest="is_R", type=_count(2), metavar="R",
                   help="importance sampling with R replications")
    q.add_argument("--no-root", action="store_true",
                   help="drop the (1+W)^(-1/2) factor of the closed form")
    q.add_argument("--strategy", choices=STRATEGIES, default="product")
    q.set_defaults(func=cmd_laplace)

    q = sub.add_parser("theta", parents=[common], help="saddlepoint theta(x) and its closed-form start")
    q.add_argument("--sigma", type=_positive, required=True)
    q.add_argument("--x", type=_grid, required=True, help="one value or a comma-separated list")
    q.add_argument("--refine", action="store_true", help="also run Newton-Raphson")
    q.set_defaults(func=cmd_theta)

    for name, func, help_ in (("cdf", cmd_cdf, "P(S_n <= n x)"), ("pdf", cmd_pdf, "density of S_n at n x")):
        q = sub.add_parser(name, parents=[common], help=help_)
        q.add_argument("--sigma", type=_positive, required=True)
        q.add_argument("--n", type=_count(2 if name == "pdf" else 1), required=True)
        xg = q.add_mutually_exclusive_group(required=True)
        xg.add_argument("--x", type=_positive)
        xg.add_argument("--x-grid", type=_grid)
        q.add_argument("--method", choices=("saddle1", "saddle2", "mc"), default="saddle2")
        q.add_argument("--R", type=_count(2), default=100_000)
        if name == "cdf":
            q.add_argument("--laplace-mode", choices=LAPLACE_MODES, default="numeric")
            q.add_argument("--b6-divisor", type=_positive, default=B6_DIVISOR)
        else:
            q.add_argument("--variant", choices=("A", "B"), default="B")
            q.add_argument("--correction", choices=("daniels", "plus"), default="daniels")
        q.set_defaults(func=func)

    q = sub.add_parser("sample", parents=[common], help="draws from the tilted law F_theta")
    q.add_argument("--sigma", type=_positive, required=True)
    q.add_argument("--theta", type=_nonnegative, required=True)
    q.add_argument("--count", type=_count(1), default=10)
    q.add_argument("--algo", choices=ALGORITHMS, default="auto")
    q.set_defaults(func=cmd_sample)

    q = sub.add_parser("tables", parents=[common], help="reproduce a reference table")
    q.add_argument("--table", choices=TABLES, required=True)
    q.add_argument("--R", type=_count(2), default=100_000)
    q.add_argument("--deterministic", action="store_true",
                   help="emit only the columns that do not depend on the seed")
    q.add_argument("--b6-divisor", type=_positive, default=TABLE_B6_DIVISOR)
    q.set_defaults(func=cmd_tables)
    return p


def _meta(a) -> dict:
    meta = {"command": a.command, "seed": a.seed}
    for key in ("R", "table", "sigma", "n", "method"):
        if hasattr(a, key):
            meta[key] = getattr(a, key)
    return meta


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateSampleWarning)
            rows = a.func(a)
    except DomainError as exc:
        print(f"lognsum: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConvergenceError, SamplerCapError) as exc:
        print(f"lognsum: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    for w in caught:
        print(f"lognsum: warning: {w.message}", file=sys.stderr)
    meta = _meta(a)
    rep = getattr(a, "_report", None)
    if rep is not None:
        meta.update(algorithm=rep.algorithm, draws_accepted=rep.draws_accepted,
                    proposals_used=rep.proposals_used,
                    empirical_acceptance=rep.empirical_acceptance)
        if a.format != "json":
            print(f"# algorithm={rep.algorithm} accepted={rep.draws_accepted} "
                  f"proposals={rep.proposals_used} "
                  f"acceptance={_fmt(rep.empirical_acceptance)}", file=sys.stderr)
    sys.stdout.write(render(rows, a.format, meta))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
