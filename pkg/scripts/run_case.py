"""Run one junction case and dump everything needed for offline analysis."""
import argparse
import pickle
import sys
import time

import numpy as np

from wearsim.constitutive import MaterialParams, SplitKind
from wearsim.geometry import JunctionParams, build_double_junction, build_single_junction
from wearsim.meshing import triangulate
from wearsim.solver import SolverConfig, run_quasistatic

ap = argparse.ArgumentParser()
ap.add_argument("name")
ap.add_argument("--split", default="ph")
ap.add_argument("--J", type=float, required=True)
ap.add_argument("--HD", type=float, required=True)
ap.add_argument("--ell", type=float, default=0.04)
ap.add_argument("--gap", type=float, default=None)
ap.add_argument("--fine-length", type=float, default=3.0)
ap.add_argument("--max-steps", type=int, default=200)
ap.add_argument("--du-factor", type=float, default=0.02)
ap.add_argument("--out", default="/tmp/runs")
args = ap.parse_args()

mat = MaterialParams(ell=args.ell)
params = JunctionParams(D=1.0, H_over_D=args.HD, J=args.J,
                        delta_gap=args.gap,
                        fine_length_over_D=args.fine_length)
geom = build_double_junction(params) if args.gap is not None \
    else build_single_junction(params)
t0 = time.time()
mesh = triangulate(geom, delta_fine=args.ell / 4, seed=0, ell=args.ell)
t_mesh = time.time() - t0
print(f"[{args.name}] mesh {mesh.n_nodes} nodes {mesh.n_triangles} tris "
      f"({t_mesh:.0f}s)", flush=True)

cfg = SolverConfig(max_steps=args.max_steps, du_factor=args.du_factor)


def prog(r):
    print(f"[{args.name}] step {r.step} u={r.u_t:.4f} el={r.elastic:.5f} "
          f"fr={r.fracture:.6f} R={r.reaction_top:.4f} maxA={r.max_alpha:.3f} "
          f"it={r.altmin_iters}", flush=True)


res = run_quasistatic(mesh, mat, SplitKind.parse(args.split), cfg,
                      progress=prog)
print(f"[{args.name}] failure={res.failure_step} ({res.failure_reason}) "
      f"wall={res.meta['wall_time']:.0f}s", flush=True)

import os
os.makedirs(args.out, exist_ok=True)
pre = res.snapshots.get((res.failure_step or 0) - 1)
with open(f"{args.out}/{args.name}.pkl", "wb") as f:
    pickle.dump({
        "params": params, "ell": args.ell, "split": args.split,
        "double": args.gap is not None,
        "nodes": mesh.nodes, "triangles": mesh.triangles,
        "region": mesh.region, "boundary_edges": mesh.boundary_edges,
        "boundary_tag": mesh.boundary_tag,
        "delta_fine": mesh.delta_fine, "delta_coarse": mesh.delta_coarse,
        "alpha": res.state.alpha, "u": res.state.u,
        "u_pre": None if pre is None else pre[0],
        "alpha_pre": None if pre is None else pre[1],
        "tick": res.first_cross_tick, "step_cross": res.first_cross_step,
        "failure_step": res.failure_step, "reason": res.failure_reason,
        "history": [(r.step, r.u_t, r.elastic, r.fracture, r.reaction_top,
                     r.max_alpha) for r in res.history],
    }, f)
print(f"[{args.name}] saved", flush=True)
