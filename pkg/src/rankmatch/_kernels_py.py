"""numpy versions of the compiled kernels (same signatures and results)."""
import numpy as np

from .noise import NoiseModel

_FAMILY = {0: "gaussian", 1: "t3", 2: "cauchy"}


def cdf_sums(U, a, b, z, family, scale, reflect=False):
    cdf = NoiseModel(_FAMILY[int(family)], scale).cdf
    U, a, b = (np.asarray(x, dtype=float) for x in (U, a, b))
    diff = U[None, :] - U[:, None]
    S0 = np.empty((U.size, len(z)))
    S1 = np.empty((U.size, len(z)))
    for k, zk in enumerate(z):
        c = 1.0 - cdf(-(zk + diff)) if reflect else cdf(zk + diff)
        S0[:, k] = c @ a
        S1[:, k] = c @ b
    return S0, S1
