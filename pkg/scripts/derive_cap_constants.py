#!/usr/bin/env python3
"""Derive conservative spherical-cap modulus constants C_n.

C_n lower-bounds t * M_n(two-point curve family on S(p, t)) over the cap
configurations that can arise in the dichotomy argument; the worst case is
the antipodal pair on the full sphere.  Two independent estimates:

1. zonal reduction: by rotational symmetry the extremal density depends on
   the polar angle only, giving C_n = omega_{n-2} / J^{n-1} with
   J = int_0^pi sin(theta)^{-(n-2)/(n-1)} d theta (closed Beta form,
   cross-checked by quadrature);

2. discrete modulus oracle: on a triangulated sphere (n-gon for n = 2,
   subdivided icosahedron for n = 3) minimize sum sigma_e rho_e^n subject
   to rho-length >= 1 on every path joining the marked antipodes, by
   shortest-path constraint generation (Dijkstra) around a convex solve.

The pinned default is half of the smaller estimate, rounded down: the
injectivity radius shrinks with C_n, so undershooting is safe.

Writes src/ringinj/data/cap_constants.json; run from the repo root:

    python scripts/derive_cap_constants.py [--subdiv 3] [--out PATH]
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy import integrate as sp_integrate
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra


def zonal_constant(n):
    a = -(n - 2) / (n - 1)
    J_closed = math.sqrt(math.pi) * math.gamma((a + 1) / 2) / \
        math.gamma(a / 2 + 1)
    J_quad, _ = sp_integrate.quad(lambda th: math.sin(th) ** a, 0.0, math.pi)
    if abs(J_quad - J_closed) > 1e-8 * J_closed:
        raise RuntimeError(f"zonal quadrature disagrees for n={n}")
    omega_low = 2.0 * math.pi ** ((n - 1) / 2.0) / math.gamma((n - 1) / 2.0)
    return omega_low / J_closed ** (n - 1)


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------

def circle_graph(num):
    """Unit circle as an num-gon; returns vertices, edges, edge weights."""
    ang = 2 * math.pi * np.arange(num) / num
    verts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    edges = [(min(i, (i + 1) % num), max(i, (i + 1) % num))
             for i in range(num)]
    lengths = np.array([np.linalg.norm(verts[i] - verts[j])
                        for i, j in edges])
    # 1-d "surface": the area weight of an edge is its length
    return verts, edges, lengths, lengths.copy()


def icosphere(subdiv):
    """Subdivided icosahedron on the unit 2-sphere."""
    phi = (1 + math.sqrt(5)) / 2
    raw = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
           (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
           (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in raw]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = verts[i] + verts[j]
            m /= np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(m)
        return cache[key]

    for _ in range(subdiv):
        new_faces = []
        for i, j, k in faces:
            a, b, c = midpoint(i, j), midpoint(j, k), midpoint(k, i)
            new_faces += [(i, a, c), (a, j, b), (c, b, k), (a, b, c)]
        faces = new_faces

    verts = np.array(verts)
    edge_faces = {}
    for fi, (i, j, k) in enumerate(faces):
        for e in ((i, j), (j, k), (k, i)):
            key = (min(e), max(e))
            edge_faces.setdefault(key, []).append(fi)
    areas = np.array([
        0.5 * np.linalg.norm(np.cross(verts[j] - verts[i],
                                      verts[k] - verts[i]))
        for i, j, k in faces])
    edges = sorted(edge_faces)
    lengths = np.array([np.linalg.norm(verts[i] - verts[j])
                        for i, j in edges])
    sigma = np.array([sum(areas[f] for f in edge_faces[e]) / 3.0
                      for e in edges])
    return verts, edges, lengths, sigma


# ---------------------------------------------------------------------------
# discrete modulus by constraint generation
# ---------------------------------------------------------------------------

def discrete_modulus(verts, edges, lengths, sigma, p, src, dst,
                     max_rounds=400, tol=1e-3, paths_per_round=8):
    """min sum sigma rho^p s.t. rho-length >= 1 over src-dst paths.

    Constraint generation: solve on the active path set, add the most
    violated shortest paths (diversified by penalizing freshly used edges),
    stop when the rho-shortest path has length >= 1 - tol.
    """
    import cvxpy as cp
    from scipy import sparse

    m = len(edges)
    nv = len(verts)
    lookup = {e: i for i, e in enumerate(edges)}

    def shortest_path(weights):
        w = np.maximum(weights, 1e-14)
        idx = np.array(edges)
        graph = csr_matrix(
            (np.concatenate([w, w]),
             (np.concatenate([idx[:, 0], idx[:, 1]]),
              np.concatenate([idx[:, 1], idx[:, 0]]))),
            shape=(nv, nv))
        dist, pred = dijkstra(graph, indices=src, return_predecessors=True)
        if math.isinf(dist[dst]):
            raise RuntimeError("marked vertices disconnected")
        nodes = [dst]
        while nodes[-1] != src:
            nodes.append(int(pred[nodes[-1]]))
        path = [lookup[(min(a, b), max(a, b))]
                for a, b in zip(nodes[:-1], nodes[1:])]
        return float(dist[dst]), path

    rho = cp.Variable(m, nonneg=True)
    rows, cols, data = [], [], []
    n_paths = 0

    def add_path(path):
        nonlocal n_paths
        for e in path:
            rows.append(n_paths)
            cols.append(e)
            data.append(lengths[e])
        n_paths += 1

    add_path(shortest_path(lengths)[1])
    value = None
    for _ in range(max_rounds):
        P = sparse.csr_matrix((data, (rows, cols)), shape=(n_paths, m))
        prob = cp.Problem(
            cp.Minimize(cp.sum(cp.multiply(sigma, cp.power(rho, p)))),
            [P @ rho >= 1])
        value = prob.solve(solver=cp.CLARABEL)
        if rho.value is None:
            raise RuntimeError("convex solve failed")
        w = np.maximum(rho.value, 0.0) * lengths
        short_len, short_edges = shortest_path(w)
        if short_len >= 1.0 - tol:
            return float(value), n_paths
        # add several diversified violated paths before re-solving
        w_pen = w.copy()
        for _k in range(paths_per_round):
            length_k, path_k = shortest_path(w_pen)
            if length_k >= 1.0 - tol:
                break
            add_path(path_k)
            w_pen = w_pen.copy()
            w_pen[path_k] += 0.5 / len(path_k)
    raise RuntimeError("constraint generation did not converge")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--subdiv", type=int, default=3,
                    help="icosphere subdivision level for n=3 (default 3)")
    ap.add_argument("--ngon", type=int, default=512,
                    help="polygon size for n=2 (default 512)")
    ap.add_argument("--skip-discrete", action="store_true",
                    help="pin from the zonal values only")
    ap.add_argument("--out", type=Path,
                    default=Path(__file__).resolve().parents[1]
                    / "src" / "ringinj" / "data" / "cap_constants.json")
    args = ap.parse_args(argv)

    table = {"method": "0.5 * min(zonal closed form, discrete graph modulus "
                       "via shortest-path constraint generation)",
             "constants": {}}
    for n in range(2, 9):
        zonal = zonal_constant(n)
        entry = {"zonal": zonal, "discrete": None, "safety_factor": 0.5}
        estimates = [zonal]
        if not args.skip_discrete and n == 2:
            verts, edges, lengths, sigma = circle_graph(args.ngon)
            disc, npaths = discrete_modulus(verts, edges, lengths, sigma,
                                            p=2, src=0, dst=args.ngon // 2)
            entry["discrete"] = disc
            entry["discrete_paths"] = npaths
            estimates.append(disc)
            print(f"n=2  zonal={zonal:.6f}  discrete({args.ngon}-gon)={disc:.6f}")
        elif not args.skip_discrete and n == 3:
            verts, edges, lengths, sigma = icosphere(args.subdiv)
            north = int(np.argmax(verts @ verts[0]))
            south = int(np.argmin(verts @ verts[0]))
            disc, npaths = discrete_modulus(verts, edges, lengths, sigma,
                                            p=3, src=north, dst=south)
            entry["discrete"] = disc
            entry["discrete_paths"] = npaths
            entry["mesh"] = {"subdiv": args.subdiv, "edges": len(edges)}
            estimates.append(disc)
            print(f"n=3  zonal={zonal:.6f}  discrete(subdiv {args.subdiv})="
                  f"{disc:.6f}  ({npaths} active paths)")
        else:
            print(f"n={n}  zonal={zonal:.6f}  (zonal reduction only)")
        pinned = 0.5 * min(estimates)
        entry["pinned"] = float(f"{pinned:.6g}")
        table["constants"][str(n)] = entry

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(table, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
