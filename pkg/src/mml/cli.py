"""Command-line front end: pack, family, risk, bound, verify.

Every command takes --seed, prints a JSON document {"manifest": ..., "result":
...} to stdout by default, and with --out writes files instead (CSV chosen by
extension for tabular results).  The manifest records all inputs, seeds and
derived parameters, so a rerun with the same arguments is byte-identical.
Exit codes: 0 success, 2 validation error, 3 check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import __version__
from .bounds import FanoInputs, VcInputs, fano_lower_bound, sample_complexity, vc_upper_bound
from .estimation import RiskExperiment, fit_rate, risk_curve
from .gaussian import hard_gaussian_family
from .graphs import Graph, standard_graph
from .ising import hard_ising_family, product_ising_family
from .packing import SignPacking, build_packing, randomized_packing
from .verify import CHECK_NAMES, run_all, run_check

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CHECK_FAILURE = 3

_GRAPH_KINDS = ("path", "cycle", "complete", "star", "empty")


_CONVENTIONS = {
    "normal_transform": "box-muller on the seeded uniform stream",
    "configuration_index": "bit j set means coordinate j is +1",
    "seed_derivation": "blake2b over (master_seed, key parts)",
}


def _manifest(command: str, params: dict, derived: dict | None = None) -> dict:
    return {
        "command": command,
        "params": params,
        "derived": derived or {},
        "conventions": _CONVENTIONS,
        "version": __version__,
    }


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(manifest: dict, result, out: str | None, csv_rows=None):
    """JSON to stdout, or files under --out (CSV by extension, manifest beside)."""
    document = {"manifest": manifest, "result": result}
    if out is None:
        sys.stdout.write(_dump_json(document))
        return
    path = Path(out)
    if path.suffix == ".csv":
        if csv_rows is None:
            raise ValueError("this command has no CSV form; use a .json output path")
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(csv_rows)
        with open(path.with_suffix(".manifest.json"), "w") as fh:
            fh.write(_dump_json(manifest))
    else:
        with open(path, "w") as fh:
            fh.write(_dump_json(document))


def _parse_graph(spec: str) -> Graph:
    if ":" in spec:
        kind, _, dstr = spec.partition(":")
        if kind not in _GRAPH_KINDS:
            raise ValueError(
                f"unknown graph kind {kind!r} in {spec!r}; expected one of {_GRAPH_KINDS}"
            )
        try:
            d = int(dstr)
        except ValueError:
            raise ValueError(f"bad vertex count {dstr!r} in graph spec {spec!r}") from None
        return standard_graph(kind, d)
    try:
        with open(spec) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read graph file {spec!r}: {exc}") from None
    for key in ("d", "edges"):
        if key not in obj:
            raise ValueError(f"graph file {spec!r} is missing field {key!r}")
    return Graph.from_json(obj)


def _cmd_pack(args) -> int:
    if args.mode == "exhaustive":
        packing = build_packing(args.m, target_size=args.target)
    else:
        if args.target is None:
            raise ValueError("random mode requires --target")
        packing = randomized_packing(args.m, args.target, args.seed)
    manifest = _manifest(
        "pack",
        {"m": args.m, "target": args.target, "mode": args.mode, "seed": args.seed},
        {"size": packing.size, "min_l1": str(packing.min_l1)},
    )
    _emit(manifest, packing.to_json(), args.out)
    return EXIT_OK


def _cmd_family(args) -> int:
    params = {
        "family": args.family,
        "graph": args.graph,
        "n": args.n,
        "c2": args.c2,
        "fixed_delta": args.fixed_delta,
        "packing_mode": args.packing_mode,
        "packing_target": args.packing_target,
        "seed": args.seed,
    }
    graph = _parse_graph(args.graph)

    def packing_for(m: int):
        if m == 0:
            return None
        if args.packing_mode == "random":
            target = args.packing_target
            if target is None:
                target = max(2, math.ceil(2 ** (m / 5)))
            return randomized_packing(m, target, args.seed)
        return build_packing(m, target_size=args.packing_target)

    if args.family == "product":
        d = graph.d
        if args.fixed_delta is not None:
            delta = args.fixed_delta
        else:
            if args.n is None or args.c2 is None:
                raise ValueError("need --n and --c2 (or --fixed-delta)")
            delta = args.c2 / math.sqrt(args.n)
        if args.packing_mode is None and args.packing_target is None:
            fam = product_ising_family(d, delta, seed=args.seed)
        else:
            fam = product_ising_family(d, delta, packing=packing_for(d), seed=args.seed)
    else:
        builder = hard_ising_family if args.family == "ising" else hard_gaussian_family
        if args.fixed_delta is not None:
            delta = args.fixed_delta
        else:
            if args.n is None or args.c2 is None:
                raise ValueError("need --n and --c2 (or --fixed-delta)")
            delta = args.c2 / math.sqrt(args.n)
            if delta * delta * graph.m > 1.0 / 8.0:
                raise ValueError(
                    f"n={args.n} too small for m={graph.m} at c2={args.c2}: need "
                    f"n >= {8 * args.c2**2 * graph.m:.3g} so that delta*sqrt(2m) <= 1/2"
                )
        fam = builder(graph, delta, packing_for(graph.m))
    manifest = _manifest("family", params, {"delta": fam.delta, "size": fam.size})
    _emit(manifest, fam.to_json(), args.out)
    return EXIT_OK


def _parse_grid(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise ValueError(f"bad n-grid {text!r}; expected comma-separated integers") from None


def _cmd_risk(args) -> int:
    n_grid = _parse_grid(args.n_grid)
    params = {
        "family": args.family,
        "n_grid": n_grid,
        "trials": args.trials,
        "seed": args.seed,
        "fixed_delta": args.fixed_delta,
        "inject": args.inject,
        "jobs": args.jobs,
    }
    if args.inject is not None:
        if not args.inject.startswith("n^"):
            raise ValueError(f"bad inject expression {args.inject!r}; expected n^<power>")
        power = float(args.inject[2:])
        points = [(n, float(n) ** power) for n in n_grid]
        slope, intercept, r2 = fit_rate(points)
        result = {
            "per_n": [{"n": n, "mean_risk": r} for n, r in points],
            "fitted_slope": slope,
            "fitted_intercept": intercept,
            "fitted_r_squared": r2,
        }
        manifest = _manifest("risk", params, {"mode": "inject"})
        rows = [["n", "mean_risk"]] + [[n, repr(r)] for n, r in points]
        _emit(manifest, result, args.out, csv_rows=rows)
        return EXIT_OK

    if args.trials < 1:
        raise ValueError("trials must be positive")
    if args.family is None:
        raise ValueError("need --family (or --inject)")
    with open(args.family) as fh:
        doc = json.load(fh)
    fam = doc.get("result", doc)
    fam_manifest = doc.get("manifest", {})
    kind = fam["kind"]
    packing = None if fam.get("packing") is None else SignPacking.from_json(fam["packing"])
    if kind == "product":
        graph, d = None, fam["d"]
    else:
        graph, d = Graph.from_json(fam["graph"]), None
    fixed_delta = args.fixed_delta
    c2 = fam_manifest.get("params", {}).get("c2")
    if fixed_delta is None and c2 is None:
        fixed_delta = fam["delta"]  # family file pins delta; reuse it across the grid
    experiment = RiskExperiment(
        kind=kind,
        graph=graph,
        d=d,
        c2=None if fixed_delta is not None else c2,
        fixed_delta=fixed_delta,
        packing=packing,
    )
    curve = risk_curve(experiment, n_grid, args.trials, args.seed, jobs=args.jobs)
    manifest = _manifest("risk", params, {"experiment": experiment.manifest()})
    result = curve.manifest()
    rows = curve.plot_rows() if args.plot_data else curve.csv_rows()
    _emit(manifest, result, args.out, csv_rows=list(rows))
    return EXIT_OK


def _cmd_bound(args) -> int:
    params = {k: getattr(args, k, None) for k in
              ("which", "family", "d", "m", "n", "c", "eps", "alpha", "beta", "size")}
    params["seed"] = args.seed
    if args.which == "fano":
        for name in ("alpha", "beta", "size", "n"):
            if getattr(args, name) is None:
                raise ValueError(f"fano bound needs --{name}")
        value = fano_lower_bound(FanoInputs(args.alpha, args.beta, args.size, args.n))
        row = {
            "bound_type": "fano",
            "alpha": args.alpha,
            "beta": args.beta,
            "size": args.size,
            "n": args.n,
            "value": value,
        }
    else:
        if args.family is None or args.d is None or args.m is None:
            raise ValueError(f"{args.which} bound needs --family, --d and --m")
        family = args.family.replace("-", "_")
        if args.which == "vc":
            if args.n is None:
                raise ValueError("vc bound needs --n")
            value = vc_upper_bound(VcInputs(family, args.d, args.m, args.n), args.c)
            row = {
                "bound_type": "vc",
                "family": family,
                "d": args.d,
                "m": args.m,
                "n": args.n,
                "c": args.c,
                "value": value,
            }
        else:
            if args.eps is None:
                raise ValueError("sample-complexity needs --eps")
            value = sample_complexity(family, args.d, args.m, args.eps, args.c)
            row = {
                "bound_type": "sample_complexity",
                "family": family,
                "d": args.d,
                "m": args.m,
                "eps": args.eps,
                "c": args.c,
                "value": value,
            }
    manifest = _manifest("bound", params)
    header = list(row.keys())
    csv_rows = [header, [repr(v) if isinstance(v, float) else v for v in row.values()]]
    _emit(manifest, row, args.out, csv_rows=csv_rows)
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.check == "all":
        reports = run_all(seed=args.seed)
    else:
        reports = [run_check(args.check, seed=args.seed)]
    manifest = _manifest("verify", {"check": args.check, "seed": args.seed})
    document = {"manifest": manifest, "result": {"checks": reports}}
    text = _dump_json(document)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    failed = [r["check"] for r in reports if r["status"] != "PASS"]
    if failed:
        print(f"FAILED checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK_FAILURE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mml",
        description="Hard graphical-model families, minimum-distance estimation, "
        "risk bounds and numerical verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pack", help="build a separated sign packing")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--target", type=int, default=None)
    p.add_argument("--mode", choices=("exhaustive", "random"), default="exhaustive")
    p.set_defaults(func=_cmd_pack)

    p = sub.add_parser("family", help="build a hard model family")
    p.add_argument("family", choices=("gaussian", "ising", "product"))
    p.add_argument("--graph", required=True, help="kind:d (e.g. path:8) or a JSON file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--c2", type=float, default=None)
    p.add_argument("--fixed-delta", type=float, default=None)
    p.add_argument("--packing-mode", choices=("exhaustive", "random"), default=None)
    p.add_argument("--packing-target", type=int, default=None)
    p.set_defaults(func=_cmd_family)

    p = sub.add_parser("risk", help="run a risk-versus-n experiment")
    p.add_argument("--family", default=None, help="family JSON produced by `mml family`")
    p.add_argument("--n-grid", required=True, help="comma-separated sample sizes")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--fixed-delta", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--inject", default=None, help="synthetic risks n^<power> (diagnostic)")
    p.add_argument("--plot-data", action="store_true", help="CSV rows (n, mean_risk, stderr)")
    p.set_defaults(func=_cmd_risk)

    p = sub.add_parser("bound", help="closed-form bound tables")
    p.add_argument("which", choices=("fano", "vc", "sample-complexity"))
    p.add_argument("--family", default=None, help="gaussian|ising|ising-no-field|...")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--size", type=int, default=None)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("verify", help="run numerical checks")
    p.add_argument("--check", default="all", help=f"all or one of: {', '.join(CHECK_NAMES)}")
    p.add_argument("--report", default=None, help="also write the JSON report here")
    p.set_defaults(func=_cmd_verify)

    for sp in sub.choices.values():
        sp.add_argument("--seed", type=int, default=0)
        if sp.prog.split()[-1] != "verify":
            sp.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
