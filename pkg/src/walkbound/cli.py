"""Command-line front end: reproducible experiments with JSON reports.

Four subcommands wire the library together:

  spectral     eigenvalue sweep of the affine-torus family, plus a K4 self test
  verify-beta  product-form independence check for walk position projections
  bound        conditional-expectation tail bounds on generated or loaded instances
  amplify      end-to-end hardness amplification with its reduction

Reports go to stdout as JSON with sorted keys; ``--out`` copies the JSON to a
file and ``--csv`` writes per-row tables for sweep-style commands.  Exit status
is 0 when every check in the run holds, 1 when some check fails, and 2 for
usage, parse, or resource errors.  Randomized commands require ``--seed``;
rerunning any command with identical flags reproduces every number except the
wall time.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BudgetError, ParameterError, StructuralError, WalkboundError
from .expander import (
    ALPHA_FAMILY_BOUND,
    adjacency_text,
    k4_rotation,
    mgg_rotation,
    second_eigenvalue_magnitude,
    transition_matrix,
)
from .owf import (
    AdversaryOracle,
    BlockwiseInverter,
    ExperimentConfig,
    WalkChainInverter,
    direct_power,
    image_distribution,
    measure_inversion,
    planted_profile,
    random_permutation,
    reduce_direct,
    reduce_walk,
    repeat_amplify,
    walk_permutation,
)
from .prob import (
    FiniteSpace,
    RandomObject,
    RandomVariable,
    cube_instance,
    percoord_bound,
    pooled_bound,
    random_product_instance,
)
from .walks import (
    HybridGraph,
    family_event_probs,
    family_event_probs_matrix,
    terminal_vector,
    verify_walk_independence,
)

SPECTRAL_M_MAX = 9            # eigensolver budget: N = 4**m vertices
ROUTE_AGREE_TOL = 1e-12
EXACT_CHECK_TOL = 1e-9


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _check(name: str, holds: bool, **extra) -> dict:
    row = {"name": name, "holds": bool(holds)}
    row.update(extra)
    return row


def _report(command: str, config: dict, seed, results: dict, checks: list, t0: float) -> dict:
    return {
        "command": command,
        "config": config,
        "seed": seed,
        "results": results,
        "checks": checks,
        "all_hold": all(c["holds"] for c in checks),
        "wall_time_s": time.perf_counter() - t0,
        "version": __version__,
    }


def _write_csv(path: str, fieldnames: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def cmd_spectral(args) -> dict:
    t0 = time.perf_counter()
    if args.m < args.m_min:
        raise ParameterError(f"--m must be >= --m-min, got {args.m} < {args.m_min}")
    if args.m > SPECTRAL_M_MAX:
        raise BudgetError(f"m={args.m} exceeds the eigensolver budget (m <= {SPECTRAL_M_MAX})")
    rows = []
    checks = []

    k4 = second_eigenvalue_magnitude(transition_matrix(k4_rotation()))
    rows.append({"graph": "K4", "m": 0, "n_vertices": 4, "degree": 3, **k4.to_dict()})
    checks.append(
        _check(
            "K4-alpha-exact",
            abs(k4.alpha - 1.0 / 3.0) <= EXACT_CHECK_TOL,
            measured=k4.alpha,
            target=1.0 / 3.0,
        )
    )

    last_rot = None
    for m in range(args.m_min, args.m + 1):
        rot = mgg_rotation(m)
        rep = second_eigenvalue_magnitude(transition_matrix(rot))
        rows.append(
            {"graph": f"torus-m{m}", "m": m, "n_vertices": rot.n_vertices, "degree": 8, **rep.to_dict()}
        )
        checks.append(
            _check(
                f"alpha-bound-m{m}",
                rep.alpha <= ALPHA_FAMILY_BOUND + args.tol,
                measured=rep.alpha,
                bound=ALPHA_FAMILY_BOUND,
                slack=ALPHA_FAMILY_BOUND + args.tol - rep.alpha,
            )
        )
        last_rot = rot

    if args.dump_graph:
        Path(args.dump_graph).write_text(adjacency_text(last_rot))
    if args.csv:
        _write_csv(
            args.csv,
            ["graph", "m", "n_vertices", "degree", "alpha", "beta", "lambda_second",
             "lambda_min", "method", "iterations", "converged"],
            rows,
        )
    config = {"m_min": args.m_min, "m_max": args.m, "tol": args.tol}
    return _report("spectral", config, None, {"rows": rows}, checks, t0)


def cmd_verify_beta(args) -> dict:
    t0 = time.perf_counter()
    rot = mgg_rotation(args.m)
    spectral = second_eigenvalue_magnitude(transition_matrix(rot))
    perm = np.random.default_rng(args.seed).permutation(rot.n_vertices)
    g = HybridGraph(rot, perm)
    rep = verify_walk_independence(
        g, args.t, spectral.beta, mode=args.mode, trials=args.trials, seed=args.seed
    )
    checks = [
        _check("product-bound", rep.holds, worst_ratio=rep.worst_ratio),
    ]

    # Dual-route agreement on a fresh batch of sampled families.
    agreement = 0.0
    if args.agree > 0:
        rng = np.random.default_rng([args.seed, 17])
        masks = rng.integers(0, 2, size=(args.agree, args.t + 1, g.n_vertices)).astype(bool)
        by_matrix = family_event_probs_matrix(g, args.t, masks)
        by_enum = family_event_probs(g, args.t, masks)
        agreement = float(np.max(np.abs(by_matrix - by_enum)))
        checks.append(_check("route-agreement", agreement <= ROUTE_AGREE_TOL, max_diff=agreement))

    full = [np.ones(g.n_vertices, dtype=bool)] * (args.t + 1)
    prob_full = terminal_vector(g, args.t, full).total
    checks.append(_check("full-family-probability-one", abs(prob_full - 1.0) <= ROUTE_AGREE_TOL,
                         measured=prob_full))
    empty = [np.zeros(g.n_vertices, dtype=bool)] + full[1:]
    prob_empty = terminal_vector(g, args.t, empty).total
    checks.append(_check("empty-set-probability-zero", prob_empty == 0.0, measured=prob_empty))

    config = {"m": args.m, "t": args.t, "mode": args.mode, "trials": args.trials,
              "agree": args.agree}
    results = {
        "n_vertices": g.n_vertices,
        "degree": g.d,
        "spectral": spectral.to_dict(),
        "independence": rep.to_dict(),
        "route_agreement_max_diff": agreement,
    }
    return _report("verify-beta", config, args.seed, results, checks, t0)


def _instance_from_file(path: str) -> tuple:
    with open(path) as fh:
        data = json.load(fh)
    for field in ("weights", "objects", "z"):
        if field not in data:
            raise StructuralError(f"instance file is missing the {field!r} field")
    weights = np.asarray(data["weights"], dtype=float)
    space = FiniteSpace(tuple(range(weights.size)), weights)
    objects = []
    for index_map in data["objects"]:
        arr = np.asarray(index_map, dtype=np.int64)
        if arr.size == 0:
            raise StructuralError("an object's index map is empty")
        objects.append(RandomObject(space, tuple(range(int(arr.max()) + 1)), arr))
    z = RandomVariable(space, np.asarray(data["z"], dtype=float))
    beta = float(data.get("beta", 1.0))
    eps = data.get("eps", 0.01)
    variant = data.get("variant", "pooled")
    return z, objects, beta, eps, variant


def _run_bound(z, objects, variant, eps, beta):
    if variant == "pooled":
        eps_val = float(eps[0]) if isinstance(eps, (list, tuple)) else float(eps)
        return pooled_bound(z, objects, eps_val, beta)
    if isinstance(eps, (int, float)):
        eps_list = [float(eps)] * len(objects)
    else:
        eps_list = [float(e) for e in eps]
        if len(eps_list) == 1:
            eps_list = eps_list * len(objects)
    return percoord_bound(z, objects, eps_list, beta)


def cmd_bound(args) -> dict:
    t0 = time.perf_counter()
    checks = []
    results = {}
    seed = args.seed

    if args.instance_file:
        z, objects, beta, eps, variant = _instance_from_file(args.instance_file)
        rep = _run_bound(z, objects, variant, eps, beta)
        results["bound"] = rep.to_dict()
        checks.append(_check("bound-holds", rep.holds, slack=rep.slack))
        config = {"preset": "file", "instance_file": args.instance_file}
    elif args.preset == "cube":
        z, objects = cube_instance(args.p, args.t)
        rep = _run_bound(z, objects, args.variant, args.eps, args.beta)
        results["bound"] = rep.to_dict()
        checks.append(_check("bound-holds", rep.holds, slack=rep.slack))
        # below the conditional's single nonzero level the bound is tight up to t*eps
        eps0 = args.eps[0]
        if eps0 < args.p ** (1.0 - 1.0 / args.t):
            gap = abs(rep.bound_value - (rep.expectation + args.t * eps0))
            checks.append(_check("cube-tightness", gap <= ROUTE_AGREE_TOL, gap=gap))
        config = {"preset": "cube", "p": args.p, "t": args.t, "eps": args.eps,
                  "beta": args.beta, "variant": args.variant}
    elif args.preset == "random":
        if seed is None:
            raise ParameterError("--seed is required for randomized presets")
        z, objects = random_product_instance(
            args.t, args.psi, seed, identical=args.variant == "pooled"
        )
        rep = _run_bound(z, objects, args.variant, args.eps, args.beta)
        results["bound"] = rep.to_dict()
        checks.append(_check("bound-holds", rep.holds, slack=rep.slack))
        config = {"preset": "random", "t": args.t, "psi": args.psi, "eps": args.eps,
                  "beta": args.beta, "variant": args.variant}
    else:  # sweep
        if seed is None:
            raise ParameterError("--seed is required for randomized presets")
        seeds = np.random.default_rng(seed).integers(0, 1 << 62, size=args.count)
        rows = []
        for i, s in enumerate(seeds):
            z, objects = random_product_instance(
                args.t, args.psi, int(s), identical=args.variant == "pooled"
            )
            rep = _run_bound(z, objects, args.variant, args.eps, args.beta)
            rows.append(
                {"index": i, "seed": int(s), "expectation": rep.expectation,
                 "bound": rep.bound_value, "slack": rep.slack, "holds": rep.holds}
            )
        n_bad = sum(1 for r in rows if not r["holds"])
        checks.append(_check("sweep-all-hold", n_bad == 0, violations=n_bad, count=len(rows)))
        results["rows"] = rows
        if args.csv:
            _write_csv(args.csv, ["index", "seed", "expectation", "bound", "slack", "holds"], rows)
        config = {"preset": "sweep", "t": args.t, "psi": args.psi, "eps": args.eps,
                  "beta": args.beta, "variant": args.variant, "count": args.count}
    return _report("bound", config, seed, results, checks, t0)


def _mc_tolerance(p: float, trials: int) -> float:
    # four-sigma binomial band plus one count of slop
    return 4.0 * float(np.sqrt(max(p * (1.0 - p), 1e-12) / trials)) + 1.0 / trials


def cmd_amplify(args) -> dict:
    t0 = time.perf_counter()
    checks = []
    if args.construction == "walk":
        if args.m is None:
            raise ParameterError("walk construction requires --m")
        rot = mgg_rotation(args.m)
        n = 2 * args.m
        if args.n is not None and args.n != n:
            raise ParameterError(f"walk construction at m={args.m} fixes n={n}")
        if args.t < 2:
            raise ParameterError("walk construction needs t >= 2 for its reduction")
    else:
        if args.n is None:
            raise ParameterError("direct construction requires --n")
        n = args.n
    cfg = ExperimentConfig(
        n=n, t=args.t, k=args.k, delta=args.delta, eps=args.eps, seed=args.seed,
        mode=args.mode, trials=args.trials, m=args.m if args.construction == "walk" else None,
    )
    base_seed, mc_seed, red_seed, mc_seed2 = (
        int(v) for v in np.random.SeedSequence(cfg.seed).generate_state(4, np.uint64)
    )

    func = random_permutation(cfg.n, cfg.seed)
    profile = planted_profile(func, cfg.delta)
    base = AdversaryOracle(func, profile, seed=base_seed)
    tail = float(image_distribution(func) @ (profile > cfg.eps))

    if args.construction == "direct":
        big = direct_power(func, cfg.t)
        amplified = BlockwiseInverter(base, cfg.t, power=big)
        alpha, beta = 0.0, 1.0
        reduced = reduce_direct(amplified, func, cfg.t, red_seed)
        amplified_bits = cfg.n * cfg.t
        spectral_row = None
    else:
        spectral = second_eigenvalue_magnitude(transition_matrix(rot))
        alpha, beta = spectral.alpha, spectral.beta
        g = HybridGraph(rot, func.table)
        big = walk_permutation(g, cfg.t)
        amplified = WalkChainInverter(base, g, cfg.t, permutation=big)
        reduced = reduce_walk(amplified, g, cfg.t, red_seed)
        amplified_bits = big.n
        spectral_row = spectral.to_dict()

    bound = (alpha + beta * tail) ** cfg.t + cfg.t * cfg.eps
    base_rep = measure_inversion(func, base, mode="exact")
    amp_exact = measure_inversion(big, amplified, mode="exact")
    red_exact = measure_inversion(func, reduced, mode="exact")
    repeated = repeat_amplify(reduced, cfg.k)
    rep_exact = measure_inversion(func, repeated, mode="exact")

    checks.append(
        _check(
            "amplified-bound",
            amp_exact.success <= bound + EXACT_CHECK_TOL,
            measured=amp_exact.success,
            bound=bound,
            slack=bound - amp_exact.success,
        )
    )

    results = {
        "construction": args.construction,
        "base_bits": cfg.n,
        "amplified_bits": amplified_bits,
        "alpha": alpha,
        "beta": beta,
        "tail": tail,
        "base": base_rep.to_dict(),
        "amplified": amp_exact.to_dict(),
        "reduced": red_exact.to_dict(),
        "repeated": rep_exact.to_dict(),
        "k": cfg.k,
    }
    if spectral_row is not None:
        results["spectral"] = spectral_row

    if cfg.mode == "mc":
        before = amplified.query_count
        red_mc = measure_inversion(func, reduced, mode="mc", trials=cfg.trials, seed=mc_seed)
        inner_queries = amplified.query_count - before
        checks.append(
            _check(
                "single-inner-query",
                inner_queries == cfg.trials,
                inner_queries=inner_queries,
                trials=cfg.trials,
            )
        )
        checks.append(
            _check("reduction-soundness", red_mc.soundness_violations == 0,
                   violations=red_mc.soundness_violations)
        )
        tol = _mc_tolerance(red_exact.success, cfg.trials)
        checks.append(
            _check(
                "mc-matches-exact",
                abs(red_mc.success - red_exact.success) <= tol,
                mc=red_mc.success,
                exact=red_exact.success,
                tol=tol,
            )
        )
        amp_mc = measure_inversion(big, amplified, mode="mc", trials=cfg.trials, seed=mc_seed2)
        checks.append(
            _check("amplified-soundness", amp_mc.soundness_violations == 0,
                   violations=amp_mc.soundness_violations)
        )
        results["reduced_mc"] = red_mc.to_dict()
        results["amplified_mc"] = amp_mc.to_dict()

    config = cfg.to_dict()
    config["construction"] = args.construction
    return _report("amplify", config, cfg.seed, results, checks, t0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="walkbound",
        description="Reproducible tail-bound, expander, and amplification experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectral", help="eigenvalue sweep of the affine-torus family")
    sp.add_argument("--m", type=int, required=True, help="largest torus parameter (N = 4**m)")
    sp.add_argument("--m-min", type=int, default=2)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--dump-graph", metavar="PATH", help="write the largest graph's adjacency list")
    sp.add_argument("--out", metavar="PATH")
    sp.add_argument("--csv", metavar="PATH")
    sp.set_defaults(func=cmd_spectral)

    vb = sub.add_parser("verify-beta", help="independence bound for walk position projections")
    vb.add_argument("--m", type=int, required=True)
    vb.add_argument("--t", type=int, required=True)
    vb.add_argument("--seed", type=int, required=True)
    vb.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    vb.add_argument("--trials", type=int, default=10_000)
    vb.add_argument("--agree", type=int, default=100,
                    help="families for the matrix-vs-enumeration agreement check")
    vb.add_argument("--out", metavar="PATH")
    vb.set_defaults(func=cmd_verify_beta)

    bd = sub.add_parser("bound", help="tail bounds on generated or loaded instances")
    bd.add_argument("--preset", choices=["cube", "random", "sweep"], default="cube")
    bd.add_argument("--instance-file", metavar="PATH", help="JSON instance (overrides --preset)")
    bd.add_argument("--p", type=float, default=0.25, help="corner mass for the cube preset")
    bd.add_argument("--t", type=int, default=2)
    bd.add_argument("--psi", type=int, default=4, help="per-coordinate space size (random/sweep)")
    bd.add_argument("--eps", type=float, nargs="+", default=[0.01])
    bd.add_argument("--beta", type=float, default=1.0)
    bd.add_argument("--variant", choices=["pooled", "percoord"], default="pooled")
    bd.add_argument("--count", type=int, default=100, help="instances in a sweep")
    bd.add_argument("--seed", type=int)
    bd.add_argument("--out", metavar="PATH")
    bd.add_argument("--csv", metavar="PATH")
    bd.set_defaults(func=cmd_bound)

    am = sub.add_parser("amplify", help="hardness amplification end to end")
    am.add_argument("--construction", choices=["direct", "walk"], default="direct")
    am.add_argument("--n", type=int, help="input bits of the base function (direct)")
    am.add_argument("--m", type=int, help="torus parameter (walk; fixes n = 2m)")
    am.add_argument("--t", type=int, required=True)
    am.add_argument("--k", type=int, default=1, help="repetitions of the reduced inverter")
    am.add_argument("--delta", type=float, default=0.25)
    am.add_argument("--eps", type=float, default=1.0 / 64.0)
    am.add_argument("--seed", type=int, required=True)
    am.add_argument("--mode", choices=["exact", "mc"], default="exact")
    am.add_argument("--trials", type=int, default=10_000)
    am.add_argument("--out", metavar="PATH")
    am.set_defaults(func=cmd_amplify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except json.JSONDecodeError as exc:
        print(f"parse error: line {exc.lineno} column {exc.colno}: {exc.msg}", file=sys.stderr)
        return 2
    except WalkboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default)
    print(text)
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text + "\n")
    return 0 if report["all_hold"] else 1


if __name__ == "__main__":
    sys.exit(main())
