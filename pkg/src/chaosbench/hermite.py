"""Complex Hermite (Hermite-Laguerre-Ito) polynomials.

``H_{p,q}`` is defined by the generating function

    exp(lam * conj(z) + conj(lam) * z - 2 |lam|^2)
        = sum_{p,q} conj(lam)^p lam^q / (p! q!) H_{p,q}(z),

which gives the recurrences

    H_{p+1,q} = z H_{p,q} - 2 q H_{p,q-1}
    H_{p,q+1} = conj(z) H_{p,q} - 2 p H_{p-1,q}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class HermiteTable:
    z: complex
    values: np.ndarray  # (pmax + 1, qmax + 1)

    @property
    def pmax(self) -> int:
        return self.values.shape[0] - 1

    @property
    def qmax(self) -> int:
        return self.values.shape[1] - 1

    def __getitem__(self, pq) -> complex:
        return complex(self.values[pq])


def hermite_values(z, pmax: int, qmax: int) -> np.ndarray:
    """Vectorized table: for ``z`` of shape ``S`` returns ``S + (pmax+1, qmax+1)``."""
    z = np.asarray(z, dtype=np.complex128)
    zc = np.conj(z)
    out = np.empty(z.shape + (pmax + 1, qmax + 1), dtype=np.complex128)
    out[..., 0, 0] = 1.0
    for q in range(qmax):
        # p = 0 row: the -2p correction vanishes
        out[..., 0, q + 1] = zc * out[..., 0, q]
    for p in range(pmax):
        out[..., p + 1, 0] = z * out[..., p, 0]
        for q in range(1, qmax + 1):
            out[..., p + 1, q] = z * out[..., p, q] - 2 * q * out[..., p, q - 1]
    return out


def hermite_table(z: complex, pmax: int, qmax: int) -> HermiteTable:
    values = hermite_values(complex(z), pmax, qmax)
    values.setflags(write=False)
    return HermiteTable(complex(z), values)


def normalized_hermite(z, pmax: int, qmax: int) -> np.ndarray:
    """``2^{-(p+q)/2} H_{p,q}(sqrt(2) z)``, the one-coordinate factor of the Ito map."""
    vals = hermite_values(np.sqrt(2.0) * np.asarray(z, dtype=np.complex128), pmax, qmax)
    p = np.arange(pmax + 1)[:, None]
    q = np.arange(qmax + 1)[None, :]
    return vals * 2.0 ** (-(p + q) / 2.0)
