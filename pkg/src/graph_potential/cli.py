"""Command-line interface.

One subcommand per capability: validate, boundary, ends, solve, green,
schwarz, walk.  Graphs come from an edge-list file (--input) or a built-in
family (--family + --radius).  Numeric output uses 12 significant digits and
every run starts with a `# meta:` line restating the parameters, so byte
identity of reruns certifies determinism.

Exit codes: 0 success, 1 domain error (singular system, unstable ends, no
convergence, validation failures), 2 input/usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import dirichlet, ends, families, graph_core, montecarlo, schwarz
from .errors import DomainError, GraphPotentialError, InputError

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2


def _meta_line(**fields) -> str:
    parts = [f"{k}={v}" for k, v in fields.items() if v is not None]
    return "# meta: " + " ".join(parts)


def _thread_cap() -> int:
    # current implementation is serial; the cap is parsed and recorded so
    # configurations stay portable
    raw = os.environ.get("GRAPH_POTENTIAL_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise InputError(f"GRAPH_POTENTIAL_THREADS must be an integer, got {raw!r}")
    if cap < 0:
        raise InputError("GRAPH_POTENTIAL_THREADS must be >= 0")
    return cap


def _load_window(args) -> tuple[graph_core.WeightedGraph, dict, dict]:
    """Resolve --input/--family into (window, end_map, meta fields)."""
    if bool(args.input) == bool(args.family):
        raise InputError("give exactly one of --input or --family")
    if args.input:
        return graph_core.load_graph(args.input), {}, {"input": args.input}
    if not args.radius:
        raise InputError("--family needs --radius")
    g = families.make_family(args.family)
    trunc = ends.truncate(g, args.radius)
    meta = {"family": args.family, "radius": args.radius}
    return trunc.window, trunc.end_of_frontier, meta


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_validate(args) -> int:
    window, _, meta = _load_window(args)
    report = graph_core.validate(window)
    lines = [_meta_line(subcommand="validate", **meta,
                        vertices=len(window), threads=_thread_cap())]
    lines += report.format_lines()
    lines.append("ok" if report.ok else f"violations {len(report.violations)}")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK if report.ok else EXIT_DOMAIN


def _cmd_boundary(args) -> int:
    window, _, meta = _load_window(args)
    boundary = graph_core.kiselman_boundary(window)
    lines = [_meta_line(subcommand="boundary", **meta,
                        count=len(boundary), threads=_thread_cap())]
    lines += boundary
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def _cmd_ends(args) -> int:
    if not args.family:
        raise InputError("ends detection needs --family")
    if not args.radius:
        raise InputError("--family needs --radius")
    g = families.make_family(args.family)
    radii = args.radii or ends.default_radius_ladder(args.radius)
    dec = ends.detect_ends(g, radii)
    lines = [_meta_line(subcommand="ends", family=args.family,
                        radius=args.radius,
                        radii=",".join(str(r) for r in radii),
                        stable=dec.stable, threads=_thread_cap())]
    lines += dec.format_lines()
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK if dec.stable else EXIT_DOMAIN


def _cmd_solve(args) -> int:
    data = dirichlet.load_boundary_data(args.data) if args.data \
        else dirichlet.BoundaryData()
    meta_extra = {"subcommand": "solve", "method": args.method,
                  "tol": args.tol, "data": args.data,
                  "threads": _thread_cap()}
    if args.method == "one-ended":
        if not args.family:
            raise InputError("one-ended solve needs --family")
        if not args.radius:
            raise InputError("--family needs --radius")
        g = families.make_family(args.family)
        ladder = args.r_ladder or dirichlet.solve_radius_ladder(args.radius)
        solution = dirichlet.solve_one_ended(g, data, tol=args.tol,
                                             r_ladder=ladder)
        meta_extra.update({"family": args.family, "radius": args.radius,
                           "r_ladder": ",".join(str(r) for r in ladder)})
    else:
        window, end_map, meta = _load_window(args)
        meta_extra.update(meta)
        if args.method == "iterative":
            solution = dirichlet.solve_iterative(window, data, end_map,
                                                 tol=args.tol,
                                                 max_iter=args.max_iter)
        else:
            solution = dirichlet.solve_direct(window, data, end_map)
    _emit(dirichlet.solution_to_csv(solution, meta_extra), args.output)
    return EXIT_OK


def _cmd_green(args) -> int:
    window, _, meta = _load_window(args)
    table = dirichlet.greens_function(window, args.source, args.target,
                                      max_order=args.max_order,
                                      tail_tol=args.tail_tol)
    lines = [
        _meta_line(subcommand="green", **meta, source=args.source,
                   target=args.target, max_order=args.max_order,
                   tail_tol=args.tail_tol, threads=_thread_cap()),
        "value,order,tail_bound,decay",
        f"{table.value:.12g},{table.order},{table.tail_bound:.12g},{table.decay}",
    ]
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def _cmd_schwarz(args) -> int:
    if not args.family:
        raise InputError("schwarz solve needs --family")
    if not args.radius:
        raise InputError("--family needs --radius")
    g = families.make_family(args.family)
    data = dirichlet.load_boundary_data(args.data) if args.data \
        else dirichlet.BoundaryData()
    solution, trace = schwarz.schwarz_solve(
        g, data, radius=args.radius, r_in=args.r_in, r_out=args.r_out,
        tol=args.tol, max_sweeps=args.max_sweeps)
    meta_extra = {"subcommand": "schwarz", "family": args.family,
                  "radius": args.radius, "r_in": solution.metadata["r_in"],
                  "r_out": solution.metadata["r_out"], "tol": args.tol,
                  "sweeps": solution.metadata["sweeps"], "data": args.data,
                  "threads": _thread_cap()}
    _emit(dirichlet.solution_to_csv(solution, meta_extra), args.output)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(trace.to_csv())
    return EXIT_OK


def _cmd_walk(args) -> int:
    window, end_map, meta = _load_window(args)
    data = dirichlet.load_boundary_data(args.data) if args.data \
        else dirichlet.BoundaryData()
    est = montecarlo.estimate_harmonic(window, data, end_map, args.start,
                                       n_walks=args.walks, seed=args.seed,
                                       max_steps=args.max_steps)
    lines = [
        _meta_line(subcommand="walk", **meta, start=args.start,
                   walks=args.walks, seed=args.seed,
                   max_steps=args.max_steps, rng=est.metadata["rng"],
                   threads=_thread_cap()),
        f"{est.mean:.12g} {est.half_width_95:.12g} {est.n_walks} "
        f"{est.censored_fraction:.12g} {est.seed}",
    ]
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def _add_source_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="edge-list graph file")
    p.add_argument("--family",
                   help="built-in family: half-plane | ladder | tree:<b> | line")
    p.add_argument("--radius", type=int, help="truncation radius for --family")
    p.add_argument("--output", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graph-potential",
        description="Dirichlet problems on weighted directed graphs with "
                    "absorbing boundaries and ends")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="check the weight-function axioms")
    _add_source_args(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("boundary", help="list absorbing boundary vertices")
    _add_source_args(p)
    p.set_defaults(func=_cmd_boundary)

    p = sub.add_parser("ends", help="detect ends of a family graph")
    _add_source_args(p)
    p.add_argument("--radii", type=int, nargs="+",
                   help="explicit probe ladder (default derived from --radius)")
    p.set_defaults(func=_cmd_ends)

    p = sub.add_parser("solve", help="solve the Dirichlet problem")
    _add_source_args(p)
    p.add_argument("--data", help="boundary data file (vertex/end lines)")
    p.add_argument("--method", choices=["iterative", "direct", "one-ended"],
                   default="iterative")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=10 ** 6)
    p.add_argument("--r-ladder", type=int, nargs="+",
                   help="truncation radii for --method one-ended")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("green", help="interior-killed Green's function entry")
    _add_source_args(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--max-order", type=int, default=500)
    p.add_argument("--tail-tol", type=float, default=None)
    p.set_defaults(func=_cmd_green)

    p = sub.add_parser("schwarz", help="alternating solve for multi-ended graphs")
    _add_source_args(p)
    p.add_argument("--data", help="boundary data file")
    p.add_argument("--r-in", type=int, default=None)
    p.add_argument("--r-out", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-sweeps", type=int, default=50)
    p.add_argument("--trace", help="write the sweep trace CSV here")
    p.set_defaults(func=_cmd_schwarz)

    p = sub.add_parser("walk", help="Monte Carlo estimate of a harmonic value")
    _add_source_args(p)
    p.add_argument("--data", help="boundary data file")
    p.add_argument("--start", required=True)
    p.add_argument("--walks", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=10 ** 6)
    p.set_defaults(func=_cmd_walk)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except GraphPotentialError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
