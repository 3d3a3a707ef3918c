"""Smoke test for the `acns` extension module.

Build and install it first, for example with
`maturin develop -m crates/python/Cargo.toml`, then run this script.
"""

import math
import random

import acns

CONFIG = """
[geometry]
extents = [4.0, 4.0]
cells = [32, 32]

[geometry.obstacle]
shape = "ball"
center = [1.0, 2.0]
radius = 0.3

[solver]
epsilon = 1e-2
dt = 1e-3
t_end = 0.05
snapshot_every = 10

[initial_data]
kind = "random_solenoidal"
seed = 42
"""


def main():
    cfg = acns.Config.parse(CONFIG)
    geo = cfg.geometry()
    print(geo)

    run = acns.run(cfg)
    assert run.error is None, run.error
    t, energy, dissipation, residual = run.ledger()
    print(f"{len(run)} snapshots, E(0) = {energy[0]:.4f}, E(T) = {energy[-1]:.4f}")
    print(f"relative energy residual {run.relative_residual():.3e}")
    assert run.relative_residual() < 0.05

    coarse = [acns.run(cfg, epsilon=eps) for eps in (1e-1, 1e-2)]
    assert all(r.error is None for r in coarse)

    rng = random.Random(0)
    u = [[rng.uniform(-1.0, 1.0) for _ in range(n)] for n in geo.face_counts()]
    sol, grad = acns.leray_split(geo, u)
    total = acns.velocity_norm(geo, u, 2.0)
    parts = math.hypot(acns.velocity_norm(geo, sol, 2.0), acns.velocity_norm(geo, grad, 2.0))
    print(f"|u| = {total:.6f}, sqrt(|Pu|^2 + |Qu|^2) = {parts:.6f}")
    assert abs(total - parts) < 1e-6 * total

    slope, lo, hi = acns.fit_rate([(x, 2.0 * x**0.5) for x in (1e-1, 1e-2, 1e-3)])
    assert abs(slope - 0.5) < 1e-9
    print("smoke test passed")


if __name__ == "__main__":
    main()
