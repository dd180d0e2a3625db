"""
Approximating measures by weighted Dirac sums
=============================================

Quantize a few target measures on the unit disk by lattice balls with
rational weights, estimate their Frostman dimension and measure the
Wasserstein-1 error of the approximation as the cells shrink.
"""

import math

from vortexlab import DiskMeasure, dirac_approximate, estimate_frostman, w1_distance

targets = {
    "uniform disk": DiskMeasure.uniform_disk(),
    "segment": DiskMeasure.uniform_segment((-0.6, 0.0), (0.6, 0.0)),
    "Cantor 1/3": DiskMeasure.product_cantor(1 / 3, 6, (-0.8, 0.0), (0.8, 0.0)),
}

for name, m in targets.items():
    radii = [0.2, 0.1, 0.05, 0.025] if name != "Cantor 1/3" else [0.8 * 3.0 ** -k for k in range(1, 5)]
    d, C = estimate_frostman(m, radii)
    print(f"{name}: Frostman d_hat={d:.3f}, C_hat={C:.3f}")
    for eps in (0.3, 0.15, 0.08):
        a = dirac_approximate(m, eps, 2000)
        print(f"   cell {eps:4.2f}: N={a.N:4d} atoms={len(a.points):3d} captured={a.captured_mass:.3f} "
              f"separation={a.epsilon:.3f} W1={w1_distance(m, a.as_measure()):.4f}")

print(f"log 2 / log 3 = {math.log(2) / math.log(3):.3f}")
