"""Dense float64 matrices and deterministic, label-splittable random streams.

numpy supplies the arithmetic; this module pins the conventions everything
else relies on: 2-D float64 matrices with explicit dimension checks, and a
seed-derivation scheme that maps hierarchical work keys (dataset, fold, loss,
capacity ratio) to independent streams without any global draw ordering.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = [
    "Matrix",
    "RngState",
    "identity",
    "matmul",
    "rng_derive",
    "shuffled_indices",
]

# A Matrix is a 2-D, row-major float64 ndarray throughout the library.
Matrix = np.ndarray

_U64 = 0xFFFFFFFFFFFFFFFF


def _require_matrix(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.float64)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product with 64-bit accumulation; raises on dimension mismatch."""
    a = _require_matrix(a, "a")
    b = _require_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(
            f"matmul dimension mismatch: {a.shape[0]}x{a.shape[1]} @ {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


class RngState:
    """Deterministic random stream: PCG64 keyed by a 64-bit unsigned seed.

    Children are derived by hashing (seed, label) with SHA-256, so distinct
    derivation paths yield statistically independent streams, re-deriving the
    same path reproduces the same sequence, and derivation never consumes
    state from the parent.
    """

    __slots__ = ("seed", "_gen")

    def __init__(self, seed: int):
        self.seed = int(seed) & _U64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def derive(self, label: str) -> "RngState":
        if not label:
            raise ValueError("derivation label must be nonempty")
        digest = hashlib.sha256(
            self.seed.to_bytes(8, "little") + b"/" + label.encode("utf-8")
        ).digest()
        return RngState(int.from_bytes(digest[:8], "little"))

    def normal(self, shape, scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(0.0, scale, size=shape)

    def __repr__(self) -> str:
        return f"RngState(seed={self.seed})"


def rng_derive(parent: RngState, label: str) -> RngState:
    """Child stream deterministic in (parent seed, label); independent across labels."""
    return parent.derive(label)


def shuffled_indices(rng: RngState, n: int) -> np.ndarray:
    """Uniform random permutation of 0..n-1 (Fisher-Yates via the generator)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return rng.generator.permutation(n)
