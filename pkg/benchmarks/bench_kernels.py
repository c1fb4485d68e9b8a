"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter (the backend is fixed at import
time by GRAPHCDE_PURE_NUMPY).  Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from graphcde import _kernels
from graphcde.curvature import build_stencil, inv_dim, optimal_cde_k
from graphcde.generators import make_torus, random_weights
from graphcde.graph import VertexMeasure
from graphcde.spectral import cheeger_constant

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
G, mu, _ = make_torus(2, 30)
F = rng.normal(size=(64, G.n))
H, hmu, _ = make_torus(2, 4)
H = random_weights(H, rng)
st = build_stencil(G, mu, 0)
S = rng.normal(size=(256, len(st.nbrs)))
args = st.args(inv_dim(4.0), 0)

cases = {
    "laplacian_batch": lambda: _kernels.laplacian_batch(G.indptr, G.indices, G.weights, mu.values, F),
    "gamma_batch": lambda: _kernels.gamma_batch(G.indptr, G.indices, G.weights, mu.values, F, F),
    "reduced_objective": lambda: _kernels.reduced_objective(S, *args),
    "cheeger_exact_16": lambda: cheeger_constant(H, hmu, "exact"),
    "optimal_cde_k": lambda: optimal_cde_k(G, mu, 0, 4),
}
out = {"backend": _kernels.BACKEND}
for name, fn in cases.items():
    fn()  # warm-up, includes JIT compilation
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    out[name] = best
print(json.dumps(out))
"""


def run(pure, repeat):
    env = dict(os.environ)
    env.pop("GRAPHCDE_PURE_NUMPY", None)
    if pure:
        env["GRAPHCDE_PURE_NUMPY"] = "1"
    r = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                       check=True)
    return json.loads(r.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    fast, slow = run(False, a.repeat), run(True, a.repeat)
    print(f"{'kernel':<20}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for k in fast:
        if k == "backend":
            continue
        print(f"{k:<20}{fast[k] * 1e3:>10.2f}ms{slow[k] * 1e3:>10.2f}ms{slow[k] / fast[k]:>9.1f}x")


if __name__ == "__main__":
    main()
