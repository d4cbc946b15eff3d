"""Command-line interface.

Every command writes one JSON document (or CSV with ``--format csv``)::

    {"command", "inputs_digest", "parameters", "results", "diagnostics", "timing"}

Exit status is 0 on success, 2 for bad input and 3 for a numerical failure.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
import warnings

import numpy as np

from . import _accel, regression
from .bandwidth import BandwidthSearchSpec, CrossValidation, select_bandwidth
from .contingency import Table2x2, _log_poly, fit, null_loglik_terms, table_probability
from .data import Grid, Sample, build_grid, count_at
from .errors import EmptyFile, IdentifiabilityWarning, InputError, NumericalError, ParseError, RaggedRow
from .estimator import (
    DEFAULT_MAX_GRID_POINTS,
    CdfEstimate,
    fhat_from_counts,
    fhat_on_grid,
    likelihood_oracle,
)
from .kde import as_bandwidth, density_at, weights_md
from .multinomial import (
    DiscreteCensoredCounts,
    SimplexEstimate,
    binomial_censored_mle,
    exact_multinomial_mle,
    known_q_loglik,
    known_q_mle,
    multinomial_normalized_estimate,
    partial_known_q_mle,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


# --------------------------------------------------------------------------
# input
# --------------------------------------------------------------------------

def _parse_token(token, line, column):
    t = token.strip()
    exact = t.startswith("=")
    if exact:
        t = t[1:].strip()
    low = t.lower()
    if low in ("-inf", "inf", "+inf"):
        if exact:
            raise ParseError(line, column, "an exact value must be finite")
        return (-math.inf if low == "-inf" else math.inf), False
    try:
        value = float(t)
    except ValueError:
        raise ParseError(line, column, f"cannot read {token!r} as a number") from None
    if not math.isfinite(value):
        raise ParseError(line, column, f"{token!r} is not a valid endpoint")
    return value, exact


def _check_header(header):
    if len(header) % 2 or not header:
        raise ParseError(1, None, "header must list (l, r) column pairs")
    names = [h.strip() for h in header]
    for k in range(0, len(names), 2):
        lo, hi = names[k], names[k + 1]
        want = str(k // 2 + 1)
        last = k == len(names) - 2
        ok = (lo, hi) == ("l" + want, "r" + want) or (last and (lo, hi) == ("lY", "rY"))
        if not ok:
            raise ParseError(1, lo, f"expected columns l{want},r{want}, got {lo},{hi}")
    return names


def parse_interval_csv(path) -> Sample:
    """Read a sample from the interval CSV format.

    The header names ``l1,r1,...,lM,rM`` (the last pair may be ``lY,rY``).
    Endpoints may be ``-inf``/``inf``; an exact coordinate repeats the value
    with a leading ``=`` in both columns. Line numbers in errors are 1-based
    and count the header.
    """
    with open(path, newline="") as fh:
        text = fh.read()
    return parse_interval_text(text)


def parse_interval_text(text) -> Sample:
    rows = [(i + 1, r) for i, r in enumerate(csv.reader(io.StringIO(text))) if any(c.strip() for c in r)]
    if not rows:
        raise EmptyFile("input has no header")
    _, header = rows[0]
    names = _check_header(header)
    if len(rows) == 1:
        raise EmptyFile("input has a header but no observations")
    width = len(names)
    lower, upper, exact = [], [], []
    for line, row in rows[1:]:
        if len(row) != width:
            raise RaggedRow(line, None, f"expected {width} fields, got {len(row)}")
        lo_row, hi_row, ex_row = [], [], []
        for k in range(0, width, 2):
            lo, lo_exact = _parse_token(row[k], line, names[k])
            hi, hi_exact = _parse_token(row[k + 1], line, names[k + 1])
            if lo_exact != hi_exact:
                raise ParseError(line, names[k], "an exact value needs '=' in both columns")
            if lo_exact:
                if lo != hi:
                    raise ParseError(line, names[k], f"exact value written as {lo!r} and {hi!r}")
            elif lo == hi:
                raise ParseError(line, names[k], f"degenerate interval ({lo!r}, {hi!r}]; write exact values as '=x'")
            elif lo > hi:
                raise ParseError(line, names[k], f"lower endpoint {lo!r} exceeds upper {hi!r}")
            lo_row.append(lo)
            hi_row.append(hi)
            ex_row.append(lo_exact)
        lower.append(lo_row)
        upper.append(hi_row)
        exact.append(ex_row)
    return Sample.from_arrays(np.array(lower), np.array(upper), np.array(exact))


def _floats(text, what):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ParseError(None, what, f"cannot read {text!r} as numbers") from None


def _ints(text, what):
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ParseError(None, what, f"cannot read {text!r} as integers") from None
    return out


def parse_points(text, dim):
    """``"1.5"`` or ``"0,1;2,3"``: points separated by ``;``, coordinates by ``,``."""
    pts = [_floats(p, "--points") for p in text.split(";") if p.strip()]
    if not pts:
        raise ParseError(None, "--points", "no points given")
    if dim == 1 and len(pts) == 1:
        # "1,2,3" lists three scalar points
        pts = [[v] for v in pts[0]]
    for p in pts:
        if len(p) != dim:
            raise ParseError(None, "--points", f"point {p} has {len(p)} coordinates, expected {dim}")
    return np.array(pts, dtype=np.float64)


# --------------------------------------------------------------------------
# grid CSV
# --------------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def grid_csv_text(est: CdfEstimate) -> str:
    """Long-format grid CSV: one row per grid point in C order."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([f"x{m + 1}" for m in range(est.dim)] + ["fhat", "d", "u", "a"])
    pts = est.grid.points()
    for x, f, d, u, a in zip(pts, est.values.ravel(), est.d.ravel(), est.u.ravel(), est.a.ravel()):
        w.writerow([_fmt(v) for v in x] + [_fmt(f), int(d), int(u), int(a)])
    return out.getvalue()


def read_grid_csv(path) -> CdfEstimate:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise EmptyFile(f"{path}: grid CSV has no rows")
    header = rows[0]
    dim = len(header) - 4
    if dim < 1 or header[dim:] != ["fhat", "d", "u", "a"]:
        raise ParseError(1, None, "grid CSV header must be x1,...,xM,fhat,d,u,a")
    body = rows[1:]
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise RaggedRow(i + 2, None, f"expected {len(header)} fields, got {len(r)}")
    try:
        xs = np.array([[float(v) for v in r[:dim]] for r in body])
        f = np.array([float(r[dim]) for r in body])
        cnt = np.array([[int(v) for v in r[dim + 1:]] for r in body], dtype=np.int64)
    except ValueError as exc:
        raise ParseError(None, None, f"bad grid CSV value: {exc}") from None
    grid = Grid(tuple(np.unique(xs[:, m]) for m in range(dim)))
    if grid.size != len(body):
        raise ParseError(None, None, "grid CSV rows do not form a full Cartesian grid")
    n = int(cnt[0].sum())
    return CdfEstimate(grid, f.reshape(grid.shape), cnt[:, 0].reshape(grid.shape),
                       cnt[:, 1].reshape(grid.shape), n)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _load(args):
    if not args.input:
        raise InputError("--input is required for this command")
    try:
        return parse_interval_csv(args.input)
    except FileNotFoundError:
        raise InputError(f"input file {args.input!r} does not exist") from None


def _grid_for(args, sample):
    if args.grid in (None, "endpoints"):
        return build_grid(sample)
    axes = read_grid_csv(args.grid).grid.axes
    if len(axes) != sample.dim:
        raise InputError(f"grid has {len(axes)} dimensions, sample has {sample.dim}")
    return Grid(axes)


def _pt(x):
    x = [float(v) for v in x]
    return x[0] if len(x) == 1 else x


def cmd_cdf(args):
    sample = _load(args)
    diag = {}
    if args.points:
        pts = parse_points(args.points, sample.dim)
        triples = [count_at(sample, x) for x in pts]
        d = np.array([t.d for t in triples])
        u = np.array([t.u for t in triples])
        vals = fhat_from_counts(d, u, sample.n - d - u)
        results = [{"point": _pt(x), "fhat": float(v), "d": int(t.d), "u": int(t.u), "a": int(t.a)}
                   for x, v, t in zip(pts, vals, triples)]
        triples = [tuple(t) for t in triples]
        table = None
    else:
        est = fhat_on_grid(sample, _grid_for(args, sample), args.max_grid_points)
        results = {"axes": [a.tolist() for a in est.grid.axes], "shape": list(est.grid.shape),
                   "fhat": est.values.ravel().tolist()}
        triples = list(zip(est.d.ravel().tolist(), est.u.ravel().tolist(), est.a.ravel().tolist()))
        table = est
    if args.self_check:
        uniq = sorted(set(triples))
        deltas = [abs(float(fhat_from_counts(*t)) - likelihood_oracle(t, 10**5)) for t in uniq]
        diag["oracle_max_delta"] = max(deltas)
    return results, diag, table


def cmd_kde(args):
    sample = _load(args)
    h = as_bandwidth(_floats(args.bandwidth, "--bandwidth"), sample.dim)
    cdf = fhat_on_grid(sample, _grid_for(args, sample), args.max_grid_points)
    w = weights_md(cdf, args.boundary)
    diag = {"clamped_mass": w.clamped_mass, "total_weight": w.total, "boundary": w.boundary}
    pts = parse_points(args.points, sample.dim) if args.points else cdf.grid.points()
    dens = np.atleast_1d(density_at(w, args.kernel, h, pts))
    results = [{"point": _pt(x), "density": float(v)} for x, v in zip(pts, dens)]
    return results, diag, None


def cmd_bandwidth(args):
    sample = _load(args)
    cands = args.candidates or "32"
    if "," in cands:
        search = BandwidthSearchSpec(candidates=[_floats(cands, "--candidates")] * sample.dim)
    else:
        search = BandwidthSearchSpec(n_candidates=int(cands))
    cv = CrossValidation(sample, args.kernel, args.boundary)
    h = select_bandwidth(sample, args.kernel, search, args.boundary, cv)
    table = [{"bandwidth": list(k), "score": v} for k, v in search.scores.items()]
    results = {"bandwidth": h.tolist(), "score": cv.score(h).score, "scores": table}
    diag = {"clamped_mass": cv.full.clamped_mass, "loo_clamped_mass": cv.loo_clamped_mass}
    return results, diag, None


def cmd_regress(args):
    sample = _load(args)
    h = _floats(args.bandwidth, "--bandwidth")
    model = regression.fit(sample, args.kernel, h, args.boundary, args.max_grid_points)
    pts = parse_points(args.points, sample.dim - 1) if args.points else Grid(model.weights.grid.axes[:-1]).points()
    pred = np.atleast_1d(regression.predict(model, pts))
    results = [{"point": _pt(x), "prediction": float(v)} for x, v in zip(pts, pred)]
    return results, {"clamped_mass": model.weights.clamped_mass}, None


def _q_values(text, m):
    out, known = [], []
    for tok in text.split(","):
        tok = tok.strip()
        if tok in ("?", ""):
            out.append(math.nan)
            known.append(False)
        else:
            out.append(float(tok))
            known.append(True)
    if len(out) != m:
        raise InputError(f"--q has {len(out)} entries, expected {m}")
    return np.array(out), np.array(known)


def cmd_multinomial(args):
    if args.counts is None:
        raise InputError("--counts is required")
    c = _ints(args.counts, "--counts")
    u = int(args.unobserved or 0)
    counts = DiscreteCensoredCounts(tuple(c), u)
    diag = {}
    results = {}
    if args.q:
        q, known = _q_values(args.q, counts.m)
        if known.all():
            est = known_q_mle(counts, q)
            diag["iterations"] = est.diagnostics["iterations"]
            if args.self_check and counts.m == 2:
                g = np.linspace(0.0, 1.0, 10**4)
                ll = known_q_loglik(counts, np.stack([g, 1 - g], axis=1), q)
                diag["oracle_max_delta"] = abs(float(g[np.argmax(ll)]) - est.probabilities[0])
        elif counts.m == 2 and known.sum() == 1 and known[1]:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", IdentifiabilityWarning)
                est, q1 = partial_known_q_mle(counts, q[1])
            results["q1"] = q1
            diag["identifiability_warnings"] = [str(w.message) for w in caught]
        else:
            raise InputError("--q must be fully known, or have only the first of two entries unknown ('?')")
    elif args.exact:
        est = exact_multinomial_mle(counts)
    elif counts.m == 2:
        p = binomial_censored_mle(counts)
        est = SimplexEstimate(np.array([p, 1.0 - p]), "ClosedForm")
    else:
        est = multinomial_normalized_estimate(counts)
    results["pi_hat"] = est.probabilities.tolist()
    results["method"] = est.method
    if est.approximate:
        diag["approximate"] = True
    return results, diag, None


def cmd_contingency(args):
    if args.counts is None:
        raise InputError("--counts is required (c11,c12,c21,c22)")
    c = _ints(args.counts, "--counts")
    if len(c) != 4:
        raise InputError(f"--counts needs 4 entries, got {len(c)}")
    cells = np.array(c).reshape(2, 2)
    if args.column_totals:
        table = Table2x2(cells, tuple(_ints(args.column_totals, "--column-totals")))
    else:
        if args.unobserved is None:
            raise InputError("give --column-totals or --unobserved")
        table = Table2x2(cells, n=int(cells.sum()) + int(args.unobserved))
    example = int(args.example)
    est = fit(table, example, null=args.null)
    q = [[None if math.isnan(v) else float(v) for v in row] for row in est.q_hat]
    results = {
        "pi_hat": est.pi_hat.tolist(),
        "alpha_hat": est.alpha_hat.tolist(),
        "q_hat": q,
        "p_null": est.p_null,
        "table_probability": table_probability(table, est, example),
    }
    diag = {k: v for k, v in est.diagnostics.items() if k != "q_above_one"}
    if "q_above_one" in est.diagnostics:
        diag["q_above_one"] = [list(ix) for ix in est.diagnostics["q_above_one"]]
    if args.self_check and args.null:
        ks, coef = null_loglik_terms(table, example)
        g = np.linspace(0.0, 1.0, 10**6)
        diag["oracle_max_delta"] = abs(float(g[np.argmax(_log_poly(g, ks, coef, table.n))]) - est.p_null)
    return results, diag, None


COMMANDS = {
    "cdf": cmd_cdf,
    "kde": cmd_kde,
    "bandwidth": cmd_bandwidth,
    "regress": cmd_regress,
    "multinomial": cmd_multinomial,
    "contingency": cmd_contingency,
}


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _digest(args):
    h = hashlib.sha256()
    if getattr(args, "input", None):
        try:
            with open(args.input, "rb") as fh:
                h.update(fh.read())
        except OSError:
            pass
    for key in ("grid", "counts", "unobserved", "q", "column_totals"):
        val = getattr(args, key, None)
        if val is not None:
            h.update(f"{key}={val}\n".encode())
    return h.hexdigest()


def _rows_csv(results):
    if isinstance(results, list) and results and isinstance(results[0], dict):
        keys = list(results[0])
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(keys)
        for r in results:
            w.writerow([_csv_cell(r[k]) for k in keys])
        return out.getvalue()
    raise InputError("--format csv is only available for point-wise or grid results")


def _csv_cell(v):
    if isinstance(v, list):
        return ";".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return _fmt(v)
    return v


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".orcdf-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser():
    p = argparse.ArgumentParser(prog="orcdf", description="Estimation from interval-censored data.")
    p.add_argument("--version", action="version", version="orcdf 0.1.0")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--input")
        s.add_argument("--output")
        s.add_argument("--format", choices=("json", "csv"), default="json")
        s.add_argument("--points")
        s.add_argument("--grid", nargs="?", const="endpoints",
                       help="evaluate on the endpoint grid, or on the axes of a grid CSV")
        s.add_argument("--kernel", choices=("gaussian", "epanechnikov", "uniform"), default="gaussian")
        s.add_argument("--bandwidth", default="1.0")
        s.add_argument("--boundary", choices=("pad", "zero"), default="pad")
        s.add_argument("--candidates")
        s.add_argument("--counts")
        s.add_argument("--unobserved")
        s.add_argument("--q")
        s.add_argument("--exact", action="store_true", help="exact multinomial MLE (M <= 4)")
        s.add_argument("--column-totals")
        s.add_argument("--example", choices=("1", "2", "3"), default="1")
        s.add_argument("--null", action="store_true")
        s.add_argument("--self-check", action="store_true")
        s.add_argument("--max-grid-points", type=int, default=DEFAULT_MAX_GRID_POINTS)
        s.add_argument("--seed", type=int, default=0, help="recorded only; all searches are deterministic")
        s.add_argument("--no-timing", action="store_true", help="omit wall-clock timing for reproducible output")
    return p


def _parameters(args):
    keep = ("points", "grid", "kernel", "bandwidth", "boundary", "candidates", "counts", "unobserved", "q",
            "exact", "column_totals", "example", "null", "self_check", "max_grid_points", "seed")
    out = {k: getattr(args, k) for k in keep}
    out["backend"] = _accel.backend()
    return out


def _error(exc):
    body = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        body.update(line=exc.line, column=exc.column, reason=exc.reason)
    print(json.dumps(body), file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        results, diag, grid_est = COMMANDS[args.command](args)
        if args.format == "csv":
            text = grid_csv_text(grid_est) if grid_est is not None else _rows_csv(_clean(results))
        else:
            doc = {
                "command": args.command,
                "inputs_digest": _digest(args),
                "parameters": _parameters(args),
                "results": results,
                "diagnostics": diag,
                "timing": None if args.no_timing else {"seconds": time.perf_counter() - start},
            }
            text = json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"
        if args.output:
            write_atomic(args.output, text)
        else:
            sys.stdout.write(text)
    except NumericalError as exc:
        _error(exc)
        return EXIT_NUMERICAL
    except (InputError, ValueError, OSError) as exc:
        _error(exc)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
