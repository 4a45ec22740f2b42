"""Phase-tracked Pauli strings in symplectic (x_mask, z_mask, phase) form.

A string represents ``i**phase_exp * X**x_mask * Z**z_mask`` where the X part
stands to the left of the Z part. With this ordering ``Y = i X Z``, so a bare
``Y`` on one site carries ``phase_exp = 1``. Site ``j`` corresponds to bit ``j``
of a computational basis index, with bit value 0 meaning spin up.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

_AXES = ("x", "y", "z")
_PHASES = (1, 1j, -1, -1j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


def parity(arr):
    """Bit parity of every entry of a non-negative int64 array."""
    a = np.asarray(arr, dtype=np.int64).copy()
    for shift in (32, 16, 8, 4, 2, 1):
        a ^= a >> shift
    return a & 1


@dataclass(frozen=True)
class PauliString:
    n: int
    x_mask: int = 0
    z_mask: int = 0
    phase_exp: int = 0

    def __post_init__(self):
        full = (1 << self.n) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError("mask has bits outside the register")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exp]

    @property
    def weight(self) -> int:
        return _popcount(self.x_mask | self.z_mask)

    @property
    def support(self) -> list[int]:
        m = self.x_mask | self.z_mask
        return [j for j in range(self.n) if m >> j & 1]

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def is_hermitian(self) -> bool:
        return self.phase_exp % 2 == _popcount(self.x_mask & self.z_mask) % 2

    def axis(self, site: int) -> str | None:
        xb, zb = self.x_mask >> site & 1, self.z_mask >> site & 1
        return {(0, 0): None, (1, 0): "x", (1, 1): "y", (0, 1): "z"}[(xb, zb)]

    def scaled(self, k: int) -> "PauliString":
        """Multiply by ``i**k``."""
        return PauliString(self.n, self.x_mask, self.z_mask, self.phase_exp + k)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        # Render with the Y factors pulled out of the phase, e.g. "i^1 · X0 Y3".
        k = (self.phase_exp - _popcount(self.x_mask & self.z_mask)) % 4
        ops = [f"{self.axis(j).upper()}{j}" for j in self.support]
        return f"i^{k} · " + (" ".join(ops) if ops else "I")

    def to_dense(self) -> np.ndarray:
        """Dense ``2**n`` matrix; only for small registers."""
        if self.n > 12:
            raise ValueError("dense materialization limited to n <= 12")
        dim = 1 << self.n
        idx = np.arange(dim)
        out, ph = apply_many(self, idx)
        m = np.zeros((dim, dim), dtype=complex)
        m[out, idx] = ph
        return m


def identity(n: int) -> PauliString:
    return PauliString(n)


def single(n: int, site: int, axis: str) -> PauliString:
    """Weight-one Pauli operator ``sigma^axis`` on ``site``."""
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for n={n}")
    b = 1 << site
    if axis == "x":
        return PauliString(n, b, 0, 0)
    if axis == "y":
        return PauliString(n, b, b, 1)
    if axis == "z":
        return PauliString(n, 0, b, 0)
    raise ValueError(f"unknown axis {axis!r}")


def from_sites(n: int, ops: dict[int, str] | list[tuple[int, str]], phase_exp: int = 0) -> PauliString:
    """Tensor product of single-site Paulis (they act on distinct sites)."""
    items = ops.items() if isinstance(ops, dict) else ops
    p = reduce(multiply, (single(n, s, a) for s, a in items), identity(n))
    return p.scaled(phase_exp)


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact operator product ``a @ b``."""
    if a.n != b.n:
        raise ValueError("register sizes differ")
    # Z^z1 X^x2 = (-1)^{|z1 & x2|} X^x2 Z^z1
    e = a.phase_exp + b.phase_exp + 2 * _popcount(a.z_mask & b.x_mask)
    return PauliString(a.n, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask, e)


def product(strings, n: int | None = None) -> PauliString:
    strings = list(strings)
    if not strings:
        if n is None:
            raise ValueError("empty product needs n")
        return identity(n)
    return reduce(multiply, strings)


def commutation_phase(a: PauliString, b: PauliString) -> int:
    """+1 if ``a`` and ``b`` commute, -1 if they anticommute."""
    if a.n != b.n:
        raise ValueError("register sizes differ")
    k = _popcount(a.x_mask & b.z_mask) + _popcount(a.z_mask & b.x_mask)
    return -1 if k & 1 else 1


def apply(p: PauliString, basis_index: int) -> tuple[int, complex]:
    """Act on a computational basis state; returns (new index, phase)."""
    sign = -1 if _popcount(p.z_mask & basis_index) & 1 else 1
    return basis_index ^ p.x_mask, p.phase * sign


def apply_many(p: PauliString, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`apply` over an array of basis indices."""
    idx = np.asarray(idx, dtype=np.int64)
    sign = 1 - 2 * parity(idx & p.z_mask)
    return idx ^ p.x_mask, p.phase * sign


def apply_to_vector(p: PauliString, vec: np.ndarray) -> np.ndarray:
    """Return ``p @ vec`` for a dense state vector of length ``2**n``."""
    idx = np.arange(vec.shape[0], dtype=np.int64)
    out = np.empty(vec.shape, dtype=complex)
    new, ph = apply_many(p, idx)
    out[new] = ph * vec
    return out
