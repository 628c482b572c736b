"""Freeze reference values from a symbolic oracle.

Everything is computed in the coordinates (x, v) of TM with exact sympy
derivatives of the coordinate matrix of G; the package code is not used.
The output is read by tests/test_submanifold.py.

    python3 scripts/freeze_oracles.py [--out tests/data/frozen_oracles.json]
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import sympy as sp

x1, x2, v1, v2, s = sp.symbols("x1 x2 v1 v2 s", real=True)
T = sp.Symbol("t", real=True)
X = sp.Matrix([x1, x2])
V = sp.Matrix([v1, v2])


def base_christoffel(g):
    gi = g.inv()
    return [[[sp.simplify(sum(gi[k, l] * (sp.diff(g[l, i], X[j]) + sp.diff(g[l, j], X[i]) - sp.diff(g[i, j], X[l]))
                              for l in range(2)) / 2)
              for j in range(2)] for i in range(2)] for k in range(2)]


def coordinate_metric(g, gens):
    """G in (x, v) coordinates, built from lifts: L^T G_split L."""
    gam = base_christoffel(g)
    t = (V.T * g * V)[0]
    ev = {k: f.subs(T, t) for k, f in gens.items()}
    A = ev["a1"] + ev["a3"]
    B = ev["b1"] + ev["b3"]
    gu = g * V
    uu = gu * gu.T
    hh = A * g + B * uu
    hv = ev["a2"] * g + ev["b2"] * uu
    vv = ev["a1"] * g + ev["b1"] * uu
    Gs = sp.BlockMatrix([[hh, hv], [hv, vv]]).as_explicit()
    Gu = sp.Matrix(2, 2, lambda r, c: sum(V[q] * gam[r][q][c] for q in range(2)))
    L = sp.BlockMatrix([[sp.eye(2), sp.zeros(2)], [Gu, sp.eye(2)]]).as_explicit()
    return L.T * Gs * L, gam


def evaluate(config):
    g = sp.Matrix(config["metric"])
    gens = {k: sp.sympify(config["generators"].get(k, "0"), locals={"t": T})
            for k in ("a1", "a2", "a3", "b1", "b2", "b3")}
    u = sp.Matrix([sp.sympify(c, locals={"x1": x1, "x2": x2}) for c in config["field"]])
    G, gam = coordinate_metric(g, gens)
    Z = [x1, x2, v1, v2]
    p = config["point"]
    at = {x1: p[0], x2: p[1]}
    up = [sp.N(c.subs(at), 30) for c in u]
    at_z = {**at, v1: up[0], v2: up[1]}
    Gz = G.subs(at_z).evalf(30)
    Gi = Gz.inv()
    dG = [[[sp.diff(G[a, b], Z[c]).subs(at_z).evalf(30) for c in range(4)] for b in range(4)] for a in range(4)]
    Gam = [[[sum(Gi[a, l] * (dG[l][b][c] + dG[l][c][b] - dG[b][c][l]) for l in range(4)) / 2
             for c in range(4)] for b in range(4)] for a in range(4)]
    Du = u.jacobian(X)
    Dup = Du.subs(at).evalf(30)
    tang = [sp.Matrix([1 if k == i else 0 for k in range(2)] + list(Dup[:, i])) for i in range(2)]
    Tm = sp.Matrix.hstack(*tang)

    def conn(cdot, W, dW):
        return sp.Matrix([dW[a] + sum(Gam[a][b][c] * cdot[b] * W[c] for b in range(4) for c in range(4))
                          for a in range(4)])

    out = {"sff_norm": {}, "lifted": {}}
    E = [sp.Matrix([1, 0]), sp.Matrix([0, 1])]
    for i in range(2):
        for j in range(i, 2):
            # d/ds of (e_j, Du(p + s e_i) e_j) at s = 0
            dDu = Du.applyfunc(lambda f: sp.diff(f, X[i])).subs(at).evalf(30)
            dW = sp.Matrix([0, 0] + list(dDu * E[j]))
            D = conn(tang[i], tang[j], dW)
            N = D - Tm * (Tm.T * Gz * Tm).inv() * (Tm.T * Gz * D)
            out["sff_norm"][f"{i}{j}"] = float(sp.sqrt((N.T * Gz * N)[0]))
    W = sp.Matrix(config["W"])
    Vv = sp.Matrix(config["V"])
    for i in range(2):
        # eta = W^h + V^v with constant base components, along s -> (p + s e_i, u(p + s e_i))
        q = {x1: p[0] + (s if i == 0 else 0), x2: p[1] + (s if i == 1 else 0)}
        uq = u.subs(q)
        gq = [[[gam[r][a][b].subs(q) for b in range(2)] for a in range(2)] for r in range(2)]
        eta_s = sp.Matrix(list(W) + [Vv[r] - sum(gq[r][a][b] * uq[a] * W[b] for a in range(2) for b in range(2))
                                     for r in range(2)])
        eta0 = eta_s.subs(s, 0).evalf(30)
        deta = eta_s.diff(s).subs(s, 0).evalf(30)
        D = conn(tang[i], eta0, deta)
        out["lifted"][str(i)] = float((D.T * Gz * tang[i])[0])
    return out


CONFIGS = {
    "sphere_cheeger_gromoll": {
        "metric": [[1, 0], [0, sp.sin(x1) ** 2]],
        "generators": {"a1": "1/(1+t)", "a3": "1-1/(1+t)", "b1": "1/(1+t)", "b3": "1-1/(1+t)"},
        "field": ["3/10 + sin(x1 + x2)/5", "2/5*cos(x2)"],
        "point": [1.0, 0.7],
        "W": [0.3, -0.2],
        "V": [0.1, 0.5],
    },
    "poincare_mixed": {
        "metric": [[1 / x2**2, 0], [0, 1 / x2**2]],
        "generators": {"a1": "1+t", "a2": "3/10", "a3": "1-t", "b1": "1/(2*(1+t))",
                       "b2": "t/10", "b3": "-1/(2*(1+t))"},
        "field": ["x2/2 + x1/5", "x1*x2/4"],
        "point": [0.4, 1.3],
        "W": [0.25, 0.1],
        "V": [-0.3, 0.2],
    },
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests/data/frozen_oracles.json"))
    args = ap.parse_args()
    frozen = {}
    for name, cfg in CONFIGS.items():
        res = evaluate(cfg)
        frozen[name] = {
            "metric": [[str(e) for e in r] for r in cfg["metric"]],
            "generators": cfg["generators"],
            "field": cfg["field"],
            "point": cfg["point"],
            "W": cfg["W"],
            "V": cfg["V"],
            **res,
        }
        print(name, res)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(frozen, indent=2) + "\n")


if __name__ == "__main__":
    main()
