"""Block diagonalization of Pauli-sum Hamiltonians by commuting Pauli symmetries.

A set of independent, mutually commuting Hermitian Pauli strings that commute
with every term splits the ``2**n`` space into ``2**m`` sectors of dimension
``2**(n-m)``. Each sector is spanned by symmetrized basis states
``|r, chi> ~ prod_g (1 + chi_g g)/2 |r>`` built from one representative ``r``
per orbit of the generators' bit flips.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .pauli import PauliString, apply_many, multiply, parity
from .spectra import OperatorHandle, SpectrumResult, lowest_eigenvalues


def _vec(p: PauliString) -> int:
    return p.x_mask | (p.z_mask << p.n)


def _pauli(v: int, n: int) -> PauliString:
    """Hermitian tensor product of X/Y/Z (coefficient +1) for a symplectic vector."""
    x, z = v & ((1 << n) - 1), v >> n
    return PauliString(n, x, z, bin(x & z).count("1"))


def _symp(u: int, v: int, n: int) -> int:
    full = (1 << n) - 1
    return (bin((u & full) & (v >> n)).count("1") + bin((u >> n) & (v & full)).count("1")) & 1


def _nullspace(rows: list[int], nbits: int) -> list[int]:
    """Basis of {v : popcount(v & r) even for every row r} over GF(2)."""
    piv_rows: dict[int, int] = {}
    for r in rows:
        for b, pr in piv_rows.items():
            if r >> b & 1:
                r ^= pr
        if r == 0:
            continue
        b = r.bit_length() - 1
        for ob in list(piv_rows):
            if piv_rows[ob] >> b & 1:
                piv_rows[ob] ^= r
        piv_rows[b] = r
    free = [b for b in range(nbits) if b not in piv_rows]
    out = []
    for f in free:
        v = 1 << f
        for b, r in piv_rows.items():
            if r >> f & 1:
                v |= 1 << b
        out.append(v)
    return out


class _Span:
    """Incremental GF(2) span membership with coordinates."""

    def __init__(self):
        self.rows: dict[int, tuple[int, int]] = {}  # pivot -> (vector, combination bits)
        self.count = 0

    def reduce(self, v: int) -> tuple[int, int]:
        comb = 0
        for b in sorted(self.rows, reverse=True):
            if v >> b & 1:
                r, c = self.rows[b]
                v ^= r
                comb ^= c
        return v, comb

    def add(self, v: int) -> bool:
        r, comb = self.reduce(v)
        if r == 0:
            return False
        self.rows[r.bit_length() - 1] = (r, comb ^ (1 << self.count))
        self.count += 1
        return True


def commuting_generators(terms, n: int, preferred=()) -> list[PauliString]:
    """Maximal independent set of commuting Pauli symmetries of ``terms``.

    ``preferred`` strings (e.g. conserved fluxes) are placed first and kept
    verbatim when they lie in the radical of the symmetry group.
    """
    term_vecs = [_vec(p) for _, p in terms]
    # v commutes with t iff popcount(v & (z_t | x_t << n)) is even
    rows = [p.z_mask | (p.x_mask << n) for _, p in terms]
    centralizer = _nullspace(rows, 2 * n)
    span = _Span()
    basis: list[tuple[int, PauliString | None]] = []
    for p in preferred:
        v = _vec(p)
        if not p.is_hermitian():
            raise ValueError("preferred symmetries must be Hermitian")
        if any(_symp(v, t, n) for t in term_vecs):
            raise ValueError(f"{p} does not commute with the operator")
        if span.add(v):
            basis.append((v, p))
    for v in centralizer:
        if span.add(v):
            basis.append((v, None))
    # symplectic Gram-Schmidt: keep one member of every hyperbolic pair plus the radical
    iso = []
    work = list(basis)
    while work:
        v, p = work.pop(0)
        partner = next((i for i, (w, _) in enumerate(work) if _symp(v, w, n)), None)
        if partner is None:
            iso.append(p if p is not None else _pauli(v, n))
            continue
        w, _ = work.pop(partner)
        iso.append(p if p is not None else _pauli(v, n))
        work = [
            (u ^ (v if _symp(u, w, n) else 0) ^ (w if _symp(u, v, n) else 0), None if (_symp(u, w, n) or _symp(u, v, n)) else q)
            for u, q in work
        ]
    return iso


@dataclass
class SectorBlock:
    """Hermitian block of one symmetry sector, usable by :func:`lowest_eigenvalues`."""

    label: int
    reps: np.ndarray
    matrix: sp.csr_matrix
    levels: tuple | None = None  # (eigenvalues, residuals) once fully diagonalized

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dtype(self):
        return self.matrix.dtype

    def matvec(self, v):
        return self.matrix @ v


class SectorBasis:
    """Symmetry-adapted basis for a set of commuting Hermitian Pauli generators.

    Sector labels are integers whose bit ``i`` is set when generator ``i`` of
    :attr:`generators` has eigenvalue -1.
    """

    def __init__(self, n: int, generators):
        self.n = n
        gens = list(generators)
        for g in gens:
            if not g.is_hermitian():
                raise ValueError("symmetry generators must be Hermitian")
        # reduced echelon form on the X parts, tracking operator products
        flip: list[tuple[int, PauliString]] = []
        diag: list[PauliString] = []
        for g in gens:
            for b, e in flip:
                if g.x_mask >> b & 1:
                    g = multiply(g, e)
            if g.x_mask == 0:
                if g.z_mask == 0:
                    raise ValueError("generators are not independent")
                diag.append(g)
                continue
            b = g.x_mask.bit_length() - 1
            flip = [(bb, multiply(e, g) if e.x_mask >> b & 1 else e) for bb, e in flip]
            flip.append((b, g))
        self.flip = flip
        self.diag = diag
        self.generators = [e for _, e in flip] + diag
        self.m = len(self.generators)
        self._span = _Span()
        for g in self.generators:
            self._span.add(_vec(g))

        dim = 1 << n
        s = np.arange(dim, dtype=np.int64)
        rep = s.copy()
        used = np.zeros(dim, dtype=np.int64)
        for i, (b, e) in enumerate(flip):
            hit = (rep >> b) & 1
            rep = rep ^ (hit * e.x_mask)
            used |= hit << i
        st = rep.copy()
        ph = np.ones(dim, dtype=complex)
        for i, (b, e) in enumerate(flip):
            hit = ((used >> i) & 1).astype(bool)
            new, p = apply_many(e, st)
            st = np.where(hit, new, st)
            ph = np.where(hit, ph * p, ph)
        assert np.array_equal(st, s)
        self.rep_of = rep
        self.used = used
        self.ph_base = ph
        self.is_rep = rep == s
        self._dvals = [np.real(apply_many(d, s)[1]).astype(np.int8) for d in diag]

    @property
    def n_sectors(self) -> int:
        return 1 << self.m

    @property
    def sector_dim(self) -> int:
        return 1 << (self.n - self.m)

    def chi(self, label: int) -> np.ndarray:
        return np.array([-1 if label >> i & 1 else 1 for i in range(self.m)])

    def reps(self, label: int) -> np.ndarray:
        ok = self.is_rep.copy()
        nf = len(self.flip)
        for j, dv in enumerate(self._dvals):
            want = -1 if label >> (nf + j) & 1 else 1
            ok &= dv == want
        return np.flatnonzero(ok)

    def block(self, op: OperatorHandle, label: int) -> SectorBlock:
        reps = self.reps(label)
        pos = np.full(1 << self.n, -1, dtype=np.int64)
        pos[reps] = np.arange(len(reps))
        neg_flip = label & ((1 << len(self.flip)) - 1)
        rows, cols, vals = [], [], []
        cidx = np.arange(len(reps))
        for w, t in op.terms:
            tgt, om = apply_many(t, reps)
            sign = 1 - 2 * parity(self.used[tgt] & neg_flip)
            rows.append(pos[self.rep_of[tgt]])
            cols.append(cidx)
            vals.append(w * om * sign * np.conj(self.ph_base[tgt]))
        r = np.concatenate(rows)
        if np.any(r < 0):
            raise ValueError("operator does not commute with the sector generators")
        v = np.concatenate(vals)
        if np.all(v.imag == 0):
            v = v.real
        m = sp.csr_matrix((v, (r, np.concatenate(cols))), shape=(len(reps), len(reps)))
        m.sum_duplicates()
        return SectorBlock(label, reps, m)

    def embed(self, label: int, reps: np.ndarray, amps: np.ndarray) -> np.ndarray:
        """Full ``2**n`` vector of a sector state given by amplitudes on the representatives."""
        neg_flip = label & ((1 << len(self.flip)) - 1)
        pos = np.full(1 << self.n, -1, dtype=np.int64)
        pos[reps] = np.arange(len(reps))
        k = pos[self.rep_of]
        mask = k >= 0
        out = np.zeros(1 << self.n, dtype=complex)
        sign = 1 - 2 * parity(self.used[mask] & neg_flip)
        out[mask] = amps[k[mask]] * sign * self.ph_base[mask]
        return out / np.sqrt(1 << len(self.flip))

    def eigenvalue(self, g: PauliString, label: int) -> int:
        """Eigenvalue of a group element ``g`` in sector ``label``."""
        r, comb = self._span.reduce(_vec(g))
        if r:
            raise ValueError("string is not in the symmetry group")
        prod = PauliString(self.n)
        val = 1
        for i, gen in enumerate(self.generators):
            if comb >> i & 1:
                prod = multiply(prod, gen)
                val *= -1 if label >> i & 1 else 1
        d = (g.phase_exp - prod.phase_exp) % 4
        if d % 2:
            raise ValueError("string is not Hermitian")
        return val * (1 if d == 0 else -1)


DENSE_LIMIT = 1024


def block_levels(b: SectorBlock, k: int, tol: float = 1e-10, seed: int = 0) -> SpectrumResult:
    """Lowest ``k`` levels of one block; dense below :data:`DENSE_LIMIT` states, Lanczos above."""
    if b.dim > DENSE_LIMIT:
        return lowest_eigenvalues(b, min(k, b.dim), tol=tol, seed=seed)
    if b.levels is None:
        A = b.matrix.toarray()
        w, U = np.linalg.eigh(A)
        b.levels = (w, np.linalg.norm(A @ U - U * w, axis=0))
    w, res = b.levels
    return SpectrumResult(w[:k], res[:k], 0)


def sector_minima(op: OperatorHandle, basis: SectorBasis, tol: float = 1e-10, seed: int = 0, cache=None):
    """Lowest level of every sector.

    ``cache`` (a dict) keeps blocks between calls on the same operator and basis.

    Returns
    -------
    (ndarray of minima indexed by label, dict of blocks, total iterations)
    """
    blocks = {} if cache is None else cache
    mins = np.empty(basis.n_sectors)
    iters = 0
    for lab in range(basis.n_sectors):
        if lab not in blocks:
            blocks[lab] = basis.block(op, lab)
        b = blocks[lab]
        r = block_levels(b, 1, tol=tol, seed=seed)
        iters += r.iterations
        mins[lab] = r.eigenvalues[0]
    return mins, blocks, iters


def sector_spectrum(
    op: OperatorHandle,
    k: int,
    generators=None,
    preferred=(),
    tol: float = 1e-10,
    seed: int = 0,
    basis: SectorBasis | None = None,
    cache: dict | None = None,
) -> tuple[SpectrumResult, SectorBasis]:
    """Lowest ``k`` levels of ``op`` assembled sector by sector.

    The lowest level of every sector is found first; only sectors whose
    minimum lies at or below the ``k``-th smallest minimum can contribute to
    the lowest ``k`` levels, and only those are refined.
    Level labels are sector integers of the returned basis. Pass the same
    ``basis`` and ``cache`` dict to reuse blocks when asking again with a larger ``k``.
    """
    if basis is None:
        if generators is None:
            generators = commuting_generators(op.terms, op.n, preferred)
        basis = SectorBasis(op.n, generators)
    mins, blocks, iters = sector_minima(op, basis, tol=tol, seed=seed, cache=cache)
    kk = min(k, basis.n_sectors)
    threshold = np.sort(mins)[kk - 1]
    vals, res, labels = [], [], []
    for lab in np.flatnonzero(mins <= threshold + tol):
        b = blocks[int(lab)]
        r = block_levels(b, k, tol=tol, seed=seed)
        iters += r.iterations
        vals.extend(r.eigenvalues)
        res.extend(r.residuals)
        labels.extend([int(lab)] * len(r))
    order = np.argsort(vals, kind="stable")[:k]
    out = SpectrumResult(
        np.array(vals)[order], np.array(res)[order], iters, labels=[labels[i] for i in order]
    )
    out.converged = bool(np.all(out.residuals <= 10 * max(tol, 1e-12)))
    return out, basis
