"""High-resolution numeric check of the bivariate Gaussian purity formula

    P = 2 s+ s- / (s+^2 + s-^2)

for f ~ exp(-(we+wo)^2/(4 s+^2)) exp(-(we-wo)^2/(4 s-^2)).
"""
import numpy as np


def numeric_purity(ratio, n=1200):
    sp, sm = ratio, 1.0
    half = 7.0 * max(sp, sm)
    w = np.linspace(-half, half, n)
    we, wo = np.meshgrid(w, w, indexing="ij")
    f = np.exp(-((we + wo) ** 2) / (4 * sp**2) - ((we - wo) ** 2) / (4 * sm**2))
    s = np.linalg.svd(f, compute_uv=False)
    c2 = s**2 / np.sum(s**2)
    return float(np.sum(c2**2))


for r in (0.2, 0.5, 1.0, 2.0, 5.0):
    closed = 2 * r / (r * r + 1)
    num = numeric_purity(r)
    print(f"ratio={r:4.1f} closed={closed:.10f} numeric={num:.10f} diff={abs(closed - num):.2e}")
