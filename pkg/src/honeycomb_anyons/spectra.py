"""Matrix-free Pauli-sum operators, a deflating Lanczos solver and gap analysis."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lattice import EffectiveLattice, HoneycombLattice, LinkType
from .pauli import from_sites, parity

CSV_SCHEMA = "# schema: spectrum v1"
_CACHE_LIMIT = 1 << 26  # cached gather entries (groups * dim)


@dataclass(frozen=True)
class CouplingConfig:
    jx: float
    jy: float
    jz: float
    overrides: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.jx, self.jy, self.jz, *self.overrides.values()]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("couplings must be finite")

    def coupling(self, link_type: LinkType | str) -> float:
        return {"x": self.jx, "y": self.jy, "z": self.jz}[LinkType(link_type).value]

    @property
    def j_eff(self) -> float:
        return j_eff(self.jx, self.jy, self.jz)


def j_eff(jx: float, jy: float, jz: float) -> float:
    """Fourth-order plaquette coupling ``jx^2 jy^2 / (16 jz^3)``."""
    if jz == 0:
        raise ValueError("jz must be nonzero")
    return jx**2 * jy**2 / (16.0 * jz**3)


def perturbative_gap(c: CouplingConfig, kind: str = "YZ") -> float:
    """Lowest pair-creation cost in the effective model: 4 J_eff (Y/Z) or 8 J_eff (X)."""
    if c.jz == 0:
        raise ValueError("jz must be nonzero")
    factor = {"YZ": 4.0, "X": 8.0}.get(kind.upper())
    if factor is None:
        raise ValueError(f"unknown excitation kind {kind!r}")
    return factor * c.j_eff


class OperatorHandle:
    """Hermitian operator ``sum_k w_k P_k`` acting on a ``2**n`` basis without storing a matrix.

    Terms are grouped by X mask; each group acts as a permutation times a
    diagonal, which is evaluated in gather form so that any output slice can
    be computed independently.

    Parameters
    ----------
    n : int
        Number of spins.
    terms : list of (float, PauliString)
        Real weights and Hermitian strings.
    """

    def __init__(self, n: int, terms):
        self.n = n
        self.terms = [(float(w), p) for w, p in terms]
        for w, p in self.terms:
            if p.n != n:
                raise ValueError("term acts on a different register size")
            if not p.is_hermitian():
                raise ValueError(f"term {p} is not Hermitian")
        groups: dict[int, list[tuple[int, complex]]] = {}
        for w, p in self.terms:
            groups.setdefault(p.x_mask, []).append((p.z_mask, w * p.phase))
        self._groups = [
            (x, np.array([z for z, _ in g], dtype=np.int64), np.array([c for _, c in g]))
            for x, g in sorted(groups.items())
        ]
        self.is_real = all(abs(np.imag(c)).max() == 0 for _, _, c in self._groups) if self._groups else True
        self._cache = None

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def dtype(self):
        return np.float64 if self.is_real else np.complex128

    def _diag(self, z, c, idx):
        d = np.zeros(idx.shape, dtype=self.dtype)
        for zk, ck in zip(z, c):
            s = 1 - 2 * parity(idx & zk)
            d += (ck.real if self.is_real else ck) * s
        return d

    def _build_cache(self):
        idx = np.arange(self.dim, dtype=np.int64)
        self._cache = []
        for x, z, c in self._groups:
            perm = idx ^ x
            self._cache.append((perm, self._diag(z, c, perm)))

    def _apply_range(self, v, lo, hi):
        out = np.zeros(hi - lo, dtype=np.result_type(self.dtype, v.dtype))
        if self._cache is not None:
            for perm, d in self._cache:
                src = perm[lo:hi]
                out += d[lo:hi] * v[src]
            return out
        idx = np.arange(lo, hi, dtype=np.int64)
        for x, z, c in self._groups:
            src = idx ^ x
            out += self._diag(z, c, src) * v[src]
        return out

    def matvec(self, v: np.ndarray, workers: int = 1) -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise ValueError(f"vector of length {self.dim} expected")
        if self._cache is None and len(self._groups) * self.dim <= _CACHE_LIMIT:
            self._build_cache()
        if workers <= 1:
            return self._apply_range(v, 0, self.dim)
        bounds = np.linspace(0, self.dim, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda b: self._apply_range(v, *b), zip(bounds[:-1], bounds[1:])))
        return np.concatenate(parts)

    __matmul__ = matvec

    def expectation(self, v: np.ndarray) -> float:
        return float(np.vdot(v, self.matvec(v)).real)

    def to_sparse(self) -> sp.csr_matrix:
        idx = np.arange(self.dim, dtype=np.int64)
        rows, cols, vals = [], [], []
        for x, z, c in self._groups:
            src = idx ^ x
            rows.append(idx)
            cols.append(src)
            vals.append(self._diag(z, c, src))
        m = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(self.dim, self.dim)
        )
        m.sum_duplicates()
        return m

    def to_dense(self) -> np.ndarray:
        if self.n > 12:
            raise ValueError("dense materialization limited to n <= 12")
        return self.to_sparse().toarray()


def assemble_honeycomb(lat: HoneycombLattice, c: CouplingConfig) -> OperatorHandle:
    """Link Hamiltonian ``-sum J_type sigma^a sigma^a`` with optional per-link overrides."""
    bad = [k for k in c.overrides if not 0 <= k < len(lat.links)]
    if bad:
        raise ValueError(f"override on nonexistent link(s) {bad}")
    terms = []
    for l in lat.links:
        j = c.overrides.get(l.index, c.coupling(l.type))
        a = l.type.value
        terms.append((-j, from_sites(lat.n_sites, {l.a: a, l.b: a})))
    return OperatorHandle(lat.n_sites, terms)


def assemble_effective(eff: EffectiveLattice, j_p) -> OperatorHandle:
    """Plaquette Hamiltonian ``-sum_p j_p Q_p``; a scalar ``j_p`` means uniform coupling."""
    if np.isscalar(j_p):
        j_p = [float(j_p)] * eff.n_plaquettes
    j_p = list(j_p)
    if len(j_p) != eff.n_plaquettes:
        raise ValueError(f"expected {eff.n_plaquettes} couplings, got {len(j_p)}")
    return OperatorHandle(eff.n_eff, [(-j, q) for j, q in zip(j_p, eff.plaquette_strings)])


# ---------------------------------------------------------------------------
# eigensolver


class ConvergenceError(RuntimeError):
    pass


@dataclass
class SpectrumResult:
    """Lowest eigenvalues with convergence data.

    ``labels`` optionally tags each level (e.g. with its symmetry sector).
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool = True
    vectors: np.ndarray | None = None
    labels: list | None = None

    def __post_init__(self):
        order = np.argsort(self.eigenvalues, kind="stable")
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)[order]
        self.residuals = np.asarray(self.residuals, dtype=float)[order]
        if self.vectors is not None:
            self.vectors = self.vectors[:, order]
        if self.labels is not None:
            self.labels = [self.labels[i] for i in order]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def ground_multiplet(self, cluster_tol: float = 1e-3) -> tuple[int, float]:
        """(size of the lowest cluster, gap above it); see :func:`gap_above_ground_multiplet`."""
        return _multiplet(self.eigenvalues, cluster_tol)

    @property
    def gap(self) -> float:
        return self.ground_multiplet()[1]

    @property
    def ground_multiplicity(self) -> int:
        return self.ground_multiplet()[0]


def _orthonormalize(W, bases, drop=1e-8):
    """Orthonormalize columns of ``W`` against ``bases`` and each other, dropping dependent ones."""
    norms = np.linalg.norm(W, axis=0)
    W = W[:, norms > 0] / norms[norms > 0]
    scale = 1.0
    if not W.shape[1]:
        return W
    for _ in range(2):
        for B in bases:
            if B is not None and B.shape[1]:
                W -= B @ (B.conj().T @ W)
    U, sv, _ = np.linalg.svd(W, full_matrices=False)
    U = U[:, sv > drop * scale]
    # the kept directions are normalized now; one more pass removes amplified leakage
    for B in bases:
        if B is not None and B.shape[1]:
            U -= B @ (B.conj().T @ U)
    U, sv, _ = np.linalg.svd(U, full_matrices=False)
    return U[:, sv > 0.5]


def _block_krylov(matvec, start, m, locked, dtype, keep=None, keep_h=None):
    """Orthonormal basis ``Q`` (at most ``m`` columns) and ``H Q``.

    The basis opens with the retained vectors ``keep`` (whose images
    ``keep_h`` are known) and grows by block Krylov steps from ``start``.
    """
    dim = start.shape[0]
    Q = np.zeros((dim, m), dtype=dtype)
    HQ = np.zeros((dim, m), dtype=dtype)
    col = 0
    if keep is not None and keep.shape[1]:
        col = keep.shape[1]
        Q[:, :col] = keep
        HQ[:, :col] = keep_h
    X = _orthonormalize(start.astype(dtype), [locked, Q[:, :col]])
    while X.shape[1] and col < m:
        X = X[:, : m - col]
        bj = X.shape[1]
        Q[:, col : col + bj] = X
        for c in range(bj):
            HQ[:, col + c] = matvec(X[:, c])
        col += bj
        X = _orthonormalize(HQ[:, col - bj : col], [locked, Q[:, :col]])
    exhausted = X.shape[1] == 0
    return Q[:, :col], HQ[:, :col], exhausted


def lowest_eigenvalues(
    op,
    k: int = 1,
    tol: float = 1e-10,
    seed: int = 0,
    block: int | None = None,
    krylov_dim: int | None = None,
    max_cycles: int | None = None,
    return_vectors: bool = False,
) -> SpectrumResult:
    """Lowest ``k`` eigenvalues of a Hermitian operator by thick-restarted block Lanczos.

    Every cycle extends the retained Ritz vectors by block Krylov steps with
    full reorthogonalization and performs a Rayleigh-Ritz projection.
    Converged pairs are locked and deflated from later cycles. Once ``k``
    pairs are locked, cycles from fresh random blocks in the orthogonal
    complement confirm that no lower level (such as a missed degenerate
    partner) remains.

    Parameters
    ----------
    op : object
        Anything with ``dim``, ``dtype`` and ``matvec``.
    k : int
        Number of levels.
    tol : float
        Bound on the residual norm ``||H y - theta y||``.
    seed : int
        Seed for the random start blocks.
    block : int, optional
        Block size, default ``min(k, 8)``.

    Raises
    ------
    ConvergenceError
        If the restart budget runs out.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    dim = op.dim
    if k > dim:
        raise ValueError(f"k={k} exceeds dimension {dim}")
    dtype = np.dtype(op.dtype)
    rng = np.random.default_rng(seed)
    b = block or min(k, 8)
    m_base = krylov_dim or max(2 * k + 3 * b, 80)
    max_cycles = max_cycles or 100 + 4 * k

    def rand(cols):
        v = rng.standard_normal((dim, cols))
        if dtype.kind == "c":
            v = v + 1j * rng.standard_normal((dim, cols))
        return v

    vecs: list[np.ndarray] = []  # exact pairs from exhausted (invariant) Krylov spaces
    vals: list[float] = []
    iterations = 0
    start = rand(b)
    keep = keep_h = None
    trial = None  # converged candidate set under verification: (Y, HY, theta)
    checks = 0

    for _ in range(max_cycles):
        fixed = np.column_stack(vecs) if vecs else None
        locked = fixed if trial is None else (
            trial[0] if fixed is None else np.column_stack([fixed, trial[0]]))
        nlock = 0 if locked is None else locked.shape[1]
        room = dim - nlock
        if room <= 0:
            break
        kept = 0 if keep is None else keep.shape[1]
        m = min(max(m_base, kept + 4 * b), room)
        Q, HQ, exhausted = _block_krylov(op.matvec, start, m, locked, dtype, keep, keep_h)
        iterations += Q.shape[1] - (0 if keep is None else keep.shape[1])
        exhausted = exhausted or Q.shape[1] == room
        T = Q.conj().T @ HQ
        theta, S = np.linalg.eigh((T + T.conj().T) / 2)
        need = k - len(vals)
        r = min(len(theta), (b if trial is not None else need + b))
        Y = Q @ S[:, :r]
        HY = HQ @ S[:, :r]
        R = HY - Y * theta[:r]
        res = np.linalg.norm(R, axis=0)

        if trial is not None:
            # verification in the complement of the candidate set
            top = max([*vals, *trial[2]])
            low = [i for i in range(r) if theta[i] < top - tol]
            if low:
                # lower levels were missed: merge them into the working set and
                # evict exact pairs that no longer belong to the lowest k
                keep = np.column_stack([trial[0], Y[:, low]])
                keep_h = np.column_stack([trial[1], HY[:, low]])
                while vals and len(vals) + keep.shape[1] > k and max(vals) > theta[0]:
                    j = int(np.argmax(vals))
                    vecs.pop(j)
                    vals.pop(j)
                start = np.column_stack([R[:, low], rand(b)])
                trial = None
                continue
            checks += 1
            # an eigenvalue lies within res[0] of theta[0]; twice clear of top is enough
            clear = checks >= 2 and theta[0] - res[0] > top + max(tol, 1e-8 * max(1.0, abs(top)))
            if exhausted or res[0] <= 1e3 * tol or clear:
                for i in range(trial[0].shape[1]):
                    vecs.append(trial[0][:, i])
                    vals.append(float(trial[2][i]))
                break
            keep, keep_h = Y, HY
            U, _, _ = np.linalg.svd(R, full_matrices=False)
            start = U[:, :b]
            continue

        if exhausted:
            # exact pairs; a group with b members may be incomplete, so stop after it
            i = taken = 0
            while i < r and taken < need:
                j = i
                while j + 1 < len(theta) and theta[j + 1] - theta[i] <= 1e-8 * max(1.0, abs(theta[i])):
                    j += 1
                for c in range(i, min(j + 1, r, i + need - taken)):
                    vecs.append(Y[:, c])
                    vals.append(float(theta[c]))
                    taken += 1
                if j + 1 - i >= b:
                    break
                i = j + 1
            keep = keep_h = None
            start = rand(b)
            if len(vals) >= k:
                trial = (np.zeros((dim, 0), dtype=dtype), np.zeros((dim, 0), dtype=dtype), np.zeros(0))
                checks = 0
            continue
        if np.all(res[:need] <= tol):
            trial = (Y[:, :need], HY[:, :need], theta[:need])
            checks = 0
            keep = keep_h = None
            start = rand(b)
            continue
        keep, keep_h = Y, HY
        # residuals of Ritz vectors from one Krylov space share a b-dimensional span
        U, _, _ = np.linalg.svd(R, full_matrices=False)
        start = U[:, :b]
    else:
        raise ConvergenceError(f"Lanczos did not converge in {max_cycles} cycles ({len(vals)}/{k} exact)")

    Y = np.column_stack(vecs)
    HY = np.column_stack([op.matvec(Y[:, i]) for i in range(Y.shape[1])])
    # Rayleigh-Ritz on the locked space tidies up nearly degenerate pairs
    G = Y.conj().T @ HY
    w, U = np.linalg.eigh((G + G.conj().T) / 2)
    Y = Y @ U
    resid = np.linalg.norm(HY @ U - Y * w, axis=0)
    return SpectrumResult(
        w, resid, iterations, converged=bool(np.all(resid <= 10 * max(tol, 1e-12))),
        vectors=Y if return_vectors else None,
    )


def dense_eigenvalues(op) -> np.ndarray:
    """Full spectrum by dense diagonalization (oracle; ``n <= 12``)."""
    return np.linalg.eigvalsh(op.to_dense())


# ---------------------------------------------------------------------------
# gap analysis


def _multiplet(evals, cluster_tol):
    e = np.sort(np.asarray(evals, dtype=float))
    d = np.diff(e)
    prev = 0.0
    for i, di in enumerate(d):
        if di > 1e-9 and prev < max(1e-9, cluster_tol * di):
            return i + 1, float(di)
        prev = max(prev, di)
    raise ValueError("all computed levels fall in one cluster; increase k to resolve the gap")


def gap_above_ground_multiplet(s: SpectrumResult | np.ndarray, cluster_tol: float = 1e-3) -> float:
    """Spacing between the top of the lowest eigenvalue cluster and the next level.

    The lowest cluster ends at the first spacing that exceeds every spacing
    below it by the factor ``1 / cluster_tol`` (and exceeds 1e-9 in absolute
    terms).

    Raises
    ------
    ValueError
        If the computed levels form a single cluster.
    """
    evals = s.eigenvalues if isinstance(s, SpectrumResult) else s
    return _multiplet(evals, cluster_tol)[1]


def cluster_bands(evals, rel_tol: float = 0.05) -> list[np.ndarray]:
    """Group sorted levels into bands; a new band starts where the spacing exceeds ``rel_tol`` times the span."""
    e = np.sort(np.asarray(evals, dtype=float))
    span = e[-1] - e[0]
    if span == 0:
        return [e]
    cuts = np.where(np.diff(e) > rel_tol * span)[0] + 1
    return np.split(e, cuts)


def spectrum_csv(rows, path=None) -> str:
    """Write ``(jx, jy, jz, level_index, energy, residual)`` rows; returns the text."""
    buf = io.StringIO()
    buf.write(CSV_SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["jx", "jy", "jz", "level_index", "energy", "residual"])
    for r in sorted(rows, key=lambda r: (r[0], r[1], r[2], r[3])):
        w.writerow([repr(float(r[0])), repr(float(r[1])), repr(float(r[2])), int(r[3]), repr(float(r[4])), repr(float(r[5]))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text


def spectrum_rows(c: CouplingConfig, s: SpectrumResult):
    return [(c.jx, c.jy, c.jz, i, e, r) for i, (e, r) in enumerate(zip(s.eigenvalues, s.residuals))]
