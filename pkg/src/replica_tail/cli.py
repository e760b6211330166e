"""Command-line entry point ``replica-tail``.

Exit codes: 0 success, 2 invalid input, 3 resource limit or infeasible
problem, 4 numerical failure.  Floats are printed with 12 significant
digits.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import graphon as gmod
from .errors import ConvergenceError, InfeasibleError, NoBreakingPossible, ResourceLimitError
from .hypergraph import (
    Hypergraph,
    circulant_regular_graph,
    complete_hypergraph,
    example_family_a2,
    graph_hypergraph,
    read_graph_json,
    read_hypergraph_json,
)
from .rate import region_csv, region_scan, relative_entropy
from .schemas import SCHEMAS
from .varsolve import (
    SolverOptions,
    VariationalProblem,
    build_breaking_certificate,
    concave_pair_certificate,
    grid_search_oracle,
    replica_value,
    solve_full,
)
from .verify import exact_tail, meanfield_report, monte_carlo_tail, tilted_monte_carlo

EXIT_OK, EXIT_INVALID, EXIT_RESOURCE, EXIT_NUMERIC = 0, 2, 3, 4


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (stop excluded, up to rounding), a comma list, or one value."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must look like start:stop:step")
        start, stop, step = (float(v) for v in parts)
        if not step > 0:
            raise ValueError(f"grid step must be positive, got {step}")
        count = math.ceil((stop - start) / step - 1e-9)
        values = [float(f"{start + k * step:.12g}") for k in range(max(count, 0))]
    else:
        values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ValueError(f"grid {text!r} is empty")
    return values


def _round(obj):
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(f"{v:.12g}") if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    return obj


def _emit(args, payload) -> None:
    text = payload if isinstance(payload, str) else json.dumps(_round(payload), indent=2) + "\n"
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _load_hypergraph(path: str) -> Hypergraph:
    return read_hypergraph_json(_read_text(path))


def _solver_options(args) -> SolverOptions:
    return SolverOptions(random_starts=args.random_starts, seed=args.seed)


def _set_threads(value: int | None) -> None:
    if value is None:
        env = os.environ.get("REPLICA_TAIL_THREADS")
        if not env:
            return
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"REPLICA_TAIL_THREADS must be an integer, got {env!r}") from None
    if value < 1:
        raise ValueError("thread count must be at least 1")
    import numba

    numba.set_num_threads(min(value, numba.config.NUMBA_NUM_THREADS))


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------


def cmd_region(args) -> int:
    rows = region_scan(args.s, parse_grid(args.p), parse_grid(args.r), args.tol)
    if args.format == "json":
        _emit(args, [row._asdict() for row in rows])
    else:
        _emit(args, region_csv(rows))
    return EXIT_OK


def cmd_solve(args) -> int:
    h = _load_hypergraph(args.hypergraph)
    problem = VariationalProblem(h, args.p, args.r)
    sol = solve_full(problem, _solver_options(args))
    out = sol.to_json()
    out["threshold"] = problem.threshold
    out["replica_value"] = replica_value(problem)
    if args.oracle_check:
        if h.num_vertices > 3:
            raise ValueError("--oracle-check needs a hypergraph with at most 3 vertices")
        grid = grid_search_oracle(problem)
        diff = sol.objective - grid
        out["oracle"] = {"grid_objective": grid, "difference": diff, "agree": abs(diff) <= 1e-4}
    _emit(args, out)
    return EXIT_OK


def cmd_certificate(args) -> int:
    build = concave_pair_certificate if args.concave_pair else build_breaking_certificate
    try:
        cert = build(args.s, args.p, args.r, args.n_hint)
    except NoBreakingPossible as exc:
        _emit(args, {"symmetric": True, "message": f"no symmetry breaking: {exc}"})
        return EXIT_OK
    _emit(args, cert.to_json())
    return EXIT_OK


def cmd_graphon(args) -> int:
    w = gmod.read_block_graphon_json(_read_text(args.graphon))
    motif = gmod.MotifGraph(read_graph_json(_read_text(args.motif)))
    if args.mode == "slope":
        if args.r is None:
            raise ValueError("--r is required for mode slope")
        sol = gmod.solve_block_variational(motif, w, args.r, args.p, seed=args.seed)
        out = {
            "mode": "slope",
            "value": sol.objective,
            "assignment": sol.assignment,
            "replica_value": relative_entropy(args.p, args.r),
            "homomorphism_density": gmod.homomorphism_density(motif, w),
            "status": sol.status,
        }
    else:
        if args.epsilon is None:
            raise ValueError("--epsilon is required for mode two-sided")
        value = gmod.two_sided_slope(motif, w, args.epsilon, args.p, seed=args.seed)
        out = {"mode": "two-sided", "value": value, "epsilon": args.epsilon,
               "homomorphism_density": gmod.homomorphism_density(motif, w)}
    _emit(args, out)
    return EXIT_OK


def cmd_tail(args) -> int:
    h = _load_hypergraph(args.hypergraph)
    if args.method == "exact":
        est = exact_tail(h, args.p, args.r)
    elif args.method == "plain-mc":
        est = monte_carlo_tail(h, args.p, args.r, args.samples, args.seed)
    else:
        if args.tilt is not None:
            tilt = np.full(h.num_vertices, args.tilt)
        else:
            sol = solve_full(VariationalProblem(h, args.p, args.r), _solver_options(args))
            tilt = np.clip(sol.assignment, 1e-6, 1 - 1e-6)
        est = tilted_monte_carlo(h, args.p, args.r, tilt, args.samples, args.seed)
    _emit(args, est.to_json())
    return EXIT_OK


_FAMILIES = {
    "a2": lambda n, args: example_family_a2(n, args.s, args.a),
    "regular": lambda n, args: graph_hypergraph(circulant_regular_graph(n, math.ceil(math.sqrt(n) - 1e-9))),
    "complete": lambda n, args: complete_hypergraph(n, args.s),
}


def cmd_meanfield(args) -> int:
    if args.family is None:
        if args.hypergraph is None:
            raise ValueError("give a hypergraph file or --family")
        report = meanfield_report(_load_hypergraph(args.hypergraph)).to_json()
        if args.format == "csv":
            _emit(args, _csv([report]))
        else:
            _emit(args, report)
        return EXIT_OK
    if not args.sizes:
        raise ValueError("--sizes is required with --family")
    sizes = [int(v) for v in args.sizes.split(",")]
    rows = []
    for n in sizes:
        row = {"size": n, **meanfield_report(_FAMILIES[args.family](n, args)).to_json()}
        rows.append(row)
    _emit(args, rows if args.format == "json" else _csv(rows))
    return EXIT_OK


def _csv(rows: list[dict]) -> str:
    keys = list(rows[0])
    lines = [",".join(keys)]
    for row in rows:
        cells = []
        for k in keys:
            v = row[k]
            cells.append("" if v is None else (f"{v:.12g}" if isinstance(v, float) else str(v)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_schema(args) -> int:
    _emit(args, SCHEMAS[args.name])
    return EXIT_OK


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="replica-tail", description="Upper tails of vertex-percolated hypergraph counts.")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default: REPLICA_TAIL_THREADS or all cores)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt=None):
        p.add_argument("--out", default=None, help="output file (default stdout)")
        if fmt:
            p.add_argument("--format", choices=["json", "csv"], default=fmt)

    def solver_flags(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--random-starts", type=int, default=2)

    p = sub.add_parser("region", help="replica-symmetry verdicts over a (p, r) grid")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--p", required=True, help="grid start:stop:step, list a,b,c, or value")
    p.add_argument("--r", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    common(p, "csv")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("solve", help="solve the mean-field variational problem")
    p.add_argument("hypergraph", help="hypergraph JSON file or - for stdin")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--oracle-check", action="store_true", help="compare with exhaustive grid search (n <= 3)")
    solver_flags(p)
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certificate", help="symmetry-breaking certificate for regular hypergraphs")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--n-hint", type=int, default=None)
    p.add_argument("--concave-pair", action="store_true", help="two-block certificate from a concave pair")
    common(p)
    p.set_defaults(func=cmd_certificate)

    p = sub.add_parser("graphon", help="block-graphon slopes")
    p.add_argument("graphon", help="block graphon JSON")
    p.add_argument("motif", help="motif graph JSON")
    p.add_argument("--mode", choices=["slope", "two-sided"], default="slope")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_graphon)

    p = sub.add_parser("tail", help="tail probability of the surviving edge count")
    p.add_argument("hypergraph")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--method", choices=["exact", "plain-mc", "tilted-mc"], default="exact")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--tilt", type=float, default=None, help="constant tilt (default: solver optimum)")
    solver_flags(p)
    common(p)
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("meanfield", help="mean-field sufficient-condition ratios")
    p.add_argument("hypergraph", nargs="?", default=None)
    p.add_argument("--family", choices=sorted(_FAMILIES), default=None)
    p.add_argument("--sizes", default=None, help="comma-separated sizes")
    p.add_argument("--s", type=int, default=3)
    p.add_argument("--a", type=float, default=0.3)
    common(p, "json")
    p.set_defaults(func=cmd_meanfield)

    p = sub.add_parser("schema", help="print the JSON schema of an output")
    p.add_argument("name", choices=sorted(SCHEMAS))
    common(p)
    p.set_defaults(func=cmd_schema)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _set_threads(args.threads)
        return args.func(args)
    except (ResourceLimitError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
