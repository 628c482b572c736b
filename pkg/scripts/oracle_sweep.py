"""Compare the closed-form lifted derivative and the T_W / T_V pairing with the oracle.

    python3 scripts/oracle_sweep.py [--points 20] [--seed 0]

For each base manifold and g-natural metric the graph of a generic field is
sampled; the table lists the worst relative residual of both identities and
the largest second fundamental form seen.
"""

from __future__ import annotations

import argparse
import time

from tangeo import cheeger_gromoll, euclidean, poincare_half_plane, random_polynomial_family, sasaki, sphere
from tangeo.expr import scalar_fn
from tangeo.gnatural import construct_concircular_family
from tangeo.manifold import cone, perturbed
from tangeo.scenarios import FIELDS
from tangeo.submanifold import SamplingConfig, totally_geodesic_test


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    manifolds = [euclidean(2), euclidean(3), sphere(), poincare_half_plane(), perturbed(0.2, 2), cone(0.8)]
    metrics = [sasaki(), cheeger_gromoll(), random_polynomial_family(1),
               construct_concircular_family(1.0, scalar_fn("1+0.5*t"), C=1.0, flat_variant=0.5)]
    print(f"{'manifold':14s} {'metric':22s} {'lifted':>9s} {'pairing':>9s} {'max |II|':>9s} {'excl':>4s} {'s':>5s}")
    for M in manifolds:
        u = FIELDS["generic"](M).u
        for gen in metrics:
            start = time.perf_counter()
            rep = totally_geodesic_test(M, gen, u, SamplingConfig(n_points=args.points, seed=args.seed))
            worst = {name: max([0.0] + [r.residual for r in rep.records if r.check == name])
                     for name in ("lifted_derivative", "tw_tv_pairing")}
            print(f"{M.name:14s} {gen.name[:22]:22s} {worst['lifted_derivative']:9.2e} "
                  f"{worst['tw_tv_pairing']:9.2e} {rep.max_sff_norm:9.2e} {len(rep.excluded):4d} {time.perf_counter() - start:5.1f}")


if __name__ == "__main__":
    main()
