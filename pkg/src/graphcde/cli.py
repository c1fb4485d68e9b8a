"""graphcde command line.

Exit codes: 0 all verifications pass, 1 failure or error, 2 hypothesis
unverified, 64 usage error (bad flag, malformed input file).
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__, _config
from .curvature import Condition, n_label, normalize_n, optimal_cd_k, optimal_cde_k
from .cutoff import make_distance_cutoff, make_zd_strong_cutoff, verify_strong_cutoff
from .errors import GraphCDEError, ParseError
from .generators import make_hypercube, make_named, make_torus, make_tree, random_weights
from .graph import VertexMeasure
from .harnack import AgmonQuery, HarnackConstants, agmon_search, verify_harnack
from .heat import Potential, heat_semigroup, heat_with_potential
from .io import load_graph, load_solution, save_edgelist, save_graph, save_solution
from .liyau import THEOREMS, verify_gradient_estimate
from .reports import dumps
from .spectral import cheeger_constant, spectrum, verify_buser, verify_heat_kernel_bounds, HeatKernelBoundConstants

EXIT_OK, EXIT_FAIL, EXIT_HYP, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _rng(seed, *keys):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *keys])))


def _floats_spec(spec, n=None, rng=None, what="values"):
    """linspace:a:b:N | random:lo:hi | const:c | point:v:eps | comma list."""
    try:
        kind, _, rest = spec.partition(":")
        parts = rest.split(":") if rest else []
        if kind == "linspace":
            a, b, N = float(parts[0]), float(parts[1]), int(parts[2])
            return np.linspace(a, b, N)
        if kind == "random":
            lo, hi = float(parts[0]), float(parts[1])
            return rng.uniform(lo, hi, n)
        if kind == "const":
            return np.full(n, float(parts[0]))
        if kind == "point":
            v, eps = int(parts[0]), float(parts[1])
            out = np.full(n, eps)
            out[v] += 1.0
            return out
        vals = np.array([float(s) for s in spec.split(",")])
    except (ValueError, IndexError):
        raise UsageError(f"cannot parse {what} spec {spec!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{what}: expected {n} values, got {len(vals)}")
    return vals


def _n_arg(s):
    try:
        return normalize_n(s)
    except GraphCDEError:
        raise argparse.ArgumentTypeError(f"invalid dimension {s!r}") from None


def _emit(args, result, status, csv=None):
    params = {k: (n_label(v) if k == "n" else v) for k, v in vars(args).items() if k not in ("func", "output")}
    if args.format == "csv" and csv is not None:
        text = csv
    else:
        text = dumps({"command": args.command, "params": params, "version": __version__, "status": status,
                      "result": result})
    if getattr(args, "output", None) and args.command not in ("generate", "heat"):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return {"pass": EXIT_OK, "hypothesis-unverified": EXIT_HYP}.get(status, EXIT_FAIL)


def _combine(statuses):
    if any(s == "fail" for s in statuses):
        return "fail"
    if any(s == "hypothesis-unverified" for s in statuses):
        return "hypothesis-unverified"
    return "pass"


# ----------------------------------------------------------------- commands

def cmd_generate(args):
    fam = args.family
    S = None
    if fam == "torus":
        G, mu, S = make_torus(args.d, args.m, args.weights, args.measure)
    elif fam == "tree":
        G = make_tree(args.D, args.L)
    elif fam == "hypercube":
        G, S = make_hypercube(args.d, args.weights)
    else:
        G = make_named(fam, args.size)
    if args.random_weights:
        lo, hi = args.random_weights
        G = random_weights(G, _rng(args.seed, 1), lo, hi)
    mu = VertexMeasure.of_kind(G, args.measure)
    if not args.output:
        raise UsageError("generate needs -o")
    if args.edgelist:
        save_edgelist(args.output, G)
    else:
        save_graph(args.output, G, mu)
    return _emit(args, {"n": G.n, "edges": G.num_edges, "symmetric": G.symmetric, "file": args.output}, "pass")


def cmd_curvature(args):
    G, mu = load_graph(args.graph)
    cond = Condition.parse(args.condition)
    verts = range(G.n) if args.all or args.vertex is None else [args.vertex]
    reps = []
    for x in verts:
        if cond is Condition.CD:
            reps.append(optimal_cd_k(G, mu, x, args.n))
        else:
            reps.append(optimal_cde_k(G, mu, x, args.n, condition=cond, starts=args.starts, seed=args.seed))
    status = "pass"
    if args.require_k is not None:
        status = "pass" if all(r.optimal_k >= args.require_k - args.tol for r in reps) else "fail"
    csv = "vertex,optimal_k,boundary_approach\n" + "".join(
        f"{r.vertex},{float(r.optimal_k)!r},{r.boundary_approach}\n" for r in reps)
    return _emit(args, {"reports": reps, "min_k": min(r.optimal_k for r in reps)}, status, csv)


def _potential(G, mu, spec, seed):
    if spec is None:
        return None
    return Potential(G, mu, _floats_spec(spec, G.n, _rng(seed, 3), "potential"))


def cmd_heat(args):
    G, mu = load_graph(args.graph)
    u0 = _floats_spec(args.u0, G.n, _rng(args.seed, 2), "u0")
    times = _floats_spec(args.times, what="times")
    q = _potential(G, mu, args.q, args.seed)
    sol = heat_semigroup(G, mu, u0, times) if q is None else heat_with_potential(G, mu, u0, q, times)
    if args.output:
        save_solution(args.output, sol)
    if args.format == "csv":
        sys.stdout.write(sol.to_csv())
        return EXIT_OK
    return _emit(args, sol.header(), "pass")


def _cutoff(G, args):
    if args.cutoff is None:
        return None
    if args.cutoff == "distance":
        return make_distance_cutoff(G, args.x0, args.R)
    cf = make_zd_strong_cutoff(args.d, args.R, args.torus_m)
    if len(cf.phi) != G.n:
        raise UsageError("zd_strong cut-off does not match the graph size")
    return cf


def cmd_liyau(args):
    sol = load_solution(args.solution)
    G, mu = sol.graph, sol.mu
    rep = verify_gradient_estimate(G, mu, sol, args.theorem, args.n, K=args.K, alpha=args.alpha, R=args.R,
                                   x0=args.x0, cutoff=_cutoff(G, args), epsilon=args.epsilon,
                                   check_hypothesis=args.check_hypothesis, tol=args.tol)
    csv = "t,max_F,bound,margin\n" + "".join(f"{float(r['t'])!r},{float(r['max_F'])!r},{float(r['bound'])!r},{float(r['margin'])!r}\n"
                                             for r in rep.per_time)
    return _emit(args, rep, rep.status, csv)


def _pairs(args, sol):
    if args.pairs:
        out = []
        for item in args.pairs.split(";"):
            try:
                x, y, t1, t2 = item.split(",")
                out.append((int(x), int(y), float(t1), float(t2)))
            except ValueError:
                raise UsageError(f"bad pair {item!r}; expected x,y,T1,T2") from None
        return out
    rng = _rng(args.seed, 4)
    T = sol.times[sol.times > 0]
    out = []
    for _ in range(args.random_pairs):
        x, y = (int(v) for v in rng.integers(0, sol.graph.n, 2))
        j1, j2 = sorted(int(v) for v in rng.choice(len(T), 2, replace=False))
        out.append((x, y, float(T[j1]), float(T[j2])))
    return out


def cmd_harnack(args):
    sol = load_solution(args.solution)
    k = HarnackConstants(args.c1, args.c2)
    reps = []
    for x, y, t1, t2 in _pairs(args, sol):
        q = AgmonQuery(x, y, t1, t2, args.x0, args.R, args.alpha)
        reps.append(verify_harnack(sol.graph, sol.mu, sol, k, q, form=args.form))
    status = _combine([r.status for r in reps])
    worst = min(r.margin for r in reps) if reps else math.inf
    csv = "x,y,T1,T2,margin\n" + "".join(
        f"{r.witness['x']},{r.witness['y']},{float(r.witness['T1'])!r},{float(r.witness['T2'])!r},{float(r.margin)!r}\n" for r in reps)
    return _emit(args, {"min_margin": worst, "reports": reps}, status, csv)


def cmd_agmon(args):
    G, mu = load_graph(args.graph)
    q = _potential(G, mu, args.q, args.seed)
    query = AgmonQuery(args.x, args.y, args.T1, args.T2, args.x0, args.R, args.alpha, q, args.cap)
    res = agmon_search(G, mu, query)
    return _emit(args, {"query": query, "distance": res.value, "path": res.path, "search": res}, "pass")


def cmd_spectral(args):
    G, mu = load_graph(args.graph)
    sp = spectrum(G, mu)
    return _emit(args, sp, "pass", sp.to_csv())


def cmd_cheeger(args):
    G, mu = load_graph(args.graph)
    h, cut = cheeger_constant(G, mu, args.method)
    csv = None
    if "sweep_curve" in cut.details:
        csv = "subset_size,ratio\n" + "".join(f"{k},{float(r)!r}\n" for k, r in cut.details["sweep_curve"])
    return _emit(args, {"h": h, "cut": cut}, "pass", csv)


def cmd_buser(args):
    G, mu = load_graph(args.graph)
    rep = verify_buser(G, mu, args.n, args.K, args.alpha, check_hypothesis=not args.no_hypothesis,
                       cheeger_method=args.method)
    return _emit(args, rep, rep.status)


def cmd_hkbounds(args):
    G, mu = load_graph(args.graph)
    consts = None
    if not args.fit:
        if args.constants is None:
            raise UsageError("hkbounds needs --fit or --constants C C' C''")
        consts = HeatKernelBoundConstants(*args.constants, args.n)
    t_grid = _floats_spec(args.t_grid, what="t-grid")
    rep = verify_heat_kernel_bounds(G, mu, args.n, consts, t_grid=t_grid, seed=args.seed,
                                    check_hypothesis=args.check_hypothesis)
    return _emit(args, rep, rep.status)


def cmd_cutoff(args):
    G, mu = load_graph(args.graph)
    args.cutoff = args.kind
    cf = _cutoff(G, args)
    result = {"cutoff": cf}
    status = "pass"
    if args.verify:
        c = args.c if args.c is not None else (cf.c if cf.c is not None else 100.0)
        rep = verify_strong_cutoff(G, mu, cf, c, args.R, args.K)
        result["verification"] = rep
        status = rep.status
    csv = "vertex,phi\n" + "".join(f"{i},{float(v)!r}\n" for i, v in enumerate(cf.phi))
    return _emit(args, result, status, csv)


# ------------------------------------------------------------------ parser

def build_parser():
    p = _Parser(prog="graphcde", description="Curvature and heat-equation verifiers on weighted graphs.")
    p.add_argument("--version", action="version", version=f"graphcde {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, func, help):
        sp = sub.add_parser(name, help=help, description=help)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("-o", "--output")
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--dense-threshold", type=int, default=None)
        sp.set_defaults(func=func)
        return sp

    g = cmd("generate", cmd_generate, "write a graph file for a named family")
    g.add_argument("--family", required=True,
                   choices=("torus", "tree", "path", "cycle", "complete", "star", "hypercube"))
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--m", type=int, default=5)
    g.add_argument("--D", type=int, default=3)
    g.add_argument("--L", type=int, default=2)
    g.add_argument("--size", type=int, default=4)
    g.add_argument("--weights", type=float, nargs="+")
    g.add_argument("--measure", choices=("unit", "degree"), default="unit")
    g.add_argument("--random-weights", type=float, nargs=2, metavar=("LOW", "HIGH"))
    g.add_argument("--edgelist", action="store_true")

    c = cmd("curvature", cmd_curvature, "optimal curvature constants")
    c.add_argument("graph")
    c.add_argument("--condition", choices=("cd", "cde", "cdeprime"), default="cde")
    c.add_argument("--n", type=_n_arg, required=True)
    grp = c.add_mutually_exclusive_group()
    grp.add_argument("--vertex", type=int)
    grp.add_argument("--all", action="store_true")
    c.add_argument("--starts", type=int, default=64)
    c.add_argument("--require-k", type=float)

    h = cmd("heat", cmd_heat, "solve the heat equation (optionally with potential)")
    h.add_argument("graph")
    h.add_argument("--u0", required=True)
    h.add_argument("--times", required=True)
    h.add_argument("--q")

    li = cmd("liyau", cmd_liyau, "verify a gradient estimate on a stored solution")
    li.add_argument("solution")
    li.add_argument("--theorem", choices=THEOREMS, required=True)
    li.add_argument("--n", type=float, required=True)
    li.add_argument("--K", type=float, default=0.0)
    li.add_argument("--alpha", type=float)
    li.add_argument("--R", type=float)
    li.add_argument("--x0", type=int, default=0)
    li.add_argument("--epsilon", type=float, default=0.5)
    li.add_argument("--cutoff", choices=("distance", "zd_strong"))
    li.add_argument("--d", type=int, default=2)
    li.add_argument("--torus-m", type=int)
    li.add_argument("--check-hypothesis", action="store_true")

    hk = cmd("harnack", cmd_harnack, "verify Harnack inequalities on a stored solution")
    hk.add_argument("solution")
    hk.add_argument("--pairs", help="x,y,T1,T2;...")
    hk.add_argument("--random-pairs", type=int, default=20)
    hk.add_argument("--c1", type=float, required=True)
    hk.add_argument("--c2", type=float, default=0.0)
    hk.add_argument("--form", choices=("sqrt", "corollary"), default="sqrt")
    hk.add_argument("--alpha", type=float, default=0.0)
    hk.add_argument("--x0", type=int)
    hk.add_argument("--R", type=float, default=math.inf)

    a = cmd("agmon", cmd_agmon, "discrete Agmon distance and a minimising path")
    a.add_argument("graph")
    a.add_argument("--x", type=int, required=True)
    a.add_argument("--y", type=int, required=True)
    a.add_argument("--T1", type=float, required=True)
    a.add_argument("--T2", type=float, required=True)
    a.add_argument("--x0", type=int)
    a.add_argument("--R", type=float, default=math.inf)
    a.add_argument("--alpha", type=float, default=0.0)
    a.add_argument("--q")
    a.add_argument("--cap", type=int)

    s = cmd("spectral", cmd_spectral, "spectrum of -Delta")
    s.add_argument("graph")

    ch = cmd("cheeger", cmd_cheeger, "Cheeger constant")
    ch.add_argument("graph")
    ch.add_argument("--method", choices=("exact", "milp", "sweep"), default="exact")

    b = cmd("buser", cmd_buser, "verify the Buser-type upper bound")
    b.add_argument("graph")
    b.add_argument("--n", type=float, required=True)
    b.add_argument("--K", type=float, default=0.0)
    b.add_argument("--alpha", type=float)
    b.add_argument("--method", choices=("exact", "milp", "sweep"), default="exact")
    b.add_argument("--no-hypothesis", action="store_true")

    hb = cmd("hkbounds", cmd_hkbounds, "two-sided heat-kernel bounds")
    hb.add_argument("graph")
    hb.add_argument("--n", type=float, required=True)
    hb.add_argument("--fit", action="store_true")
    hb.add_argument("--constants", type=float, nargs=3, metavar=("C", "CP", "CPP"))
    hb.add_argument("--t-grid", default="linspace:2:10:9")
    hb.add_argument("--check-hypothesis", action="store_true")

    cu = cmd("cutoff", cmd_cutoff, "build (and verify) a cut-off function")
    cu.add_argument("graph")
    cu.add_argument("--kind", choices=("distance", "zd_strong"), required=True)
    cu.add_argument("--R", type=float, required=True)
    cu.add_argument("--x0", type=int, default=0)
    cu.add_argument("--d", type=int, default=2)
    cu.add_argument("--torus-m", type=int)
    cu.add_argument("--c", type=float)
    cu.add_argument("--K", type=float, default=0.0)
    cu.add_argument("--verify", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.dense_threshold is not None:
        _config.DENSE_THRESHOLD = args.dense_threshold
    try:
        return args.func(args)
    except (UsageError, ParseError, OSError) as exc:
        sys.stderr.write(f"graphcde {args.command}: {exc}\n")
        return EXIT_USAGE
    except (GraphCDEError, ValueError, AssertionError) as exc:
        sys.stderr.write(f"graphcde {args.command}: error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
