import numpy as np
import pytest

from honeycomb_anyons.lattice import build_honeycomb, effective_lattice
from honeycomb_anyons.pauli import PauliString, from_sites
from honeycomb_anyons.spectra import (
    CSV_SCHEMA,
    ConvergenceError,
    CouplingConfig,
    OperatorHandle,
    SpectrumResult,
    assemble_effective,
    assemble_honeycomb,
    cluster_bands,
    dense_eigenvalues,
    gap_above_ground_multiplet,
    j_eff,
    lowest_eigenvalues,
    perturbative_gap,
    spectrum_csv,
    spectrum_rows,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def kron_pair(n, a, b, m):
    """Dense m_a m_b on sites a, b; site 0 is the least significant bit."""
    out = np.array([[1.0 + 0j]])
    for j in reversed(range(n)):
        out = np.kron(out, m if j in (a, b) else np.eye(2))
    return out


def random_hermitian_terms(n, count, rng):
    terms = []
    for _ in range(count):
        x, z = int(rng.integers(0, 1 << n)), int(rng.integers(0, 1 << n))
        p = PauliString(n, x, z, bin(x & z).count("1"))
        terms.append((float(rng.normal()), p))
    return terms


def test_honeycomb_operator_matches_kron():
    lat = build_honeycomb(2, 2)
    c = CouplingConfig(0.3, 0.7, 1.1)
    H = np.zeros((256, 256), dtype=complex)
    mats = {"x": SX, "y": SY, "z": SZ}
    for l in lat.links:
        H -= c.coupling(l.type) * kron_pair(8, l.a, l.b, mats[l.type.value])
    op = assemble_honeycomb(lat, c)
    assert op.is_real
    assert np.allclose(op.to_dense(), H, atol=1e-14)


def test_matvec_gather_cache_and_threads_agree():
    rng = np.random.default_rng(3)
    op = OperatorHandle(9, random_hermitian_terms(9, 30, rng))
    v = rng.normal(size=512) + 1j * rng.normal(size=512)
    ref = op.to_dense() @ v
    assert np.allclose(op.matvec(v), ref)
    assert np.allclose(op.matvec(v, workers=3), ref)
    assert np.isclose(op.expectation(v), np.vdot(v, ref).real)


def test_operator_rejects_bad_terms():
    with pytest.raises(ValueError):
        OperatorHandle(2, [(1.0, PauliString(2, 1, 1, 0))])  # X Z is anti-Hermitian
    with pytest.raises(ValueError):
        OperatorHandle(2, [(1.0, from_sites(3, {0: "x"}))])
    with pytest.raises(ValueError):
        OperatorHandle(2, []).matvec(np.ones(3))


@pytest.mark.parametrize("coup", [(0.0, 0.0, 1.0), (0.3, 0.5, 1.0), (1.0, 1.0, 1.0), (0.9, 0.2, 0.4)])
def test_lanczos_matches_dense_honeycomb_8(coup):
    op = assemble_honeycomb(build_honeycomb(2, 2), CouplingConfig(*coup))
    d = dense_eigenvalues(op)
    r = lowest_eigenvalues(op, k=12, tol=1e-11, seed=1)
    assert r.converged
    assert np.max(np.abs(r.eigenvalues - d[:12])) < 1e-10


@pytest.mark.parametrize("shape", [(2, 2), (2, 4), (4, 2)])
def test_lanczos_matches_dense_effective(shape):
    eff = effective_lattice(build_honeycomb(*shape))
    rng = np.random.default_rng(0)
    op = assemble_effective(eff, rng.uniform(0.5, 1.5, eff.n_plaquettes))
    d = dense_eigenvalues(op)
    k = min(10, op.dim)
    r = lowest_eigenvalues(op, k=k, tol=1e-11)
    assert np.max(np.abs(r.eigenvalues - d[:k])) < 1e-10


@pytest.mark.parametrize("n", [6, 8, 10])
def test_lanczos_matches_dense_random(n):
    rng = np.random.default_rng(n)
    op = OperatorHandle(n, random_hermitian_terms(n, 3 * n, rng))
    d = dense_eigenvalues(op)
    r = lowest_eigenvalues(op, k=6, tol=1e-11, return_vectors=True)
    assert np.max(np.abs(r.eigenvalues - d[:6])) < 1e-10
    H = op.to_dense()
    for i in range(6):
        v = r.vectors[:, i]
        assert np.linalg.norm(H @ v - r.eigenvalues[i] * v) < 1e-9


def test_lanczos_finds_degenerate_multiplet():
    # decoupled z-links: 2**4 degenerate ground states
    op = assemble_honeycomb(build_honeycomb(2, 2), CouplingConfig(0, 0, 1))
    r = lowest_eigenvalues(op, k=20, tol=1e-10)
    assert np.allclose(r.eigenvalues[:16], -4)
    assert np.allclose(r.eigenvalues[16:], -2)
    assert r.ground_multiplet() == (16, pytest.approx(2.0))


def test_lanczos_errors():
    op = assemble_effective(effective_lattice(build_honeycomb(2, 2)), 1.0)
    with pytest.raises(ValueError):
        lowest_eigenvalues(op, k=0)
    with pytest.raises(ValueError):
        lowest_eigenvalues(op, k=17)
    rng = np.random.default_rng(5)
    hard = OperatorHandle(10, random_hermitian_terms(10, 40, rng))
    with pytest.raises(ConvergenceError):
        lowest_eigenvalues(hard, k=4, tol=1e-14, krylov_dim=12, max_cycles=1)


def test_effective_model_exact_levels():
    for shape in [(2, 2), (2, 4)]:
        eff = effective_lattice(build_honeycomb(*shape))
        je = 0.37
        op = assemble_effective(eff, je)
        d = dense_eigenvalues(op)
        assert abs(d[0] + eff.n_plaquettes * je) < 1e-12
        mult, gap = SpectrumResult(d, np.zeros_like(d), 0).ground_multiplet()
        assert abs(gap - 4 * je) < 1e-12


def test_j_eff_and_perturbative_gap():
    assert j_eff(0.1, 0.1, 1.0) == pytest.approx(1e-4 / 16)
    c = CouplingConfig(0.2, 0.3, 1.5)
    assert perturbative_gap(c) == pytest.approx(4 * c.j_eff)
    assert perturbative_gap(c, "X") == pytest.approx(8 * c.j_eff)
    with pytest.raises(ValueError):
        j_eff(1, 1, 0)
    with pytest.raises(ValueError):
        perturbative_gap(c, "W")


def test_coupling_overrides():
    lat = build_honeycomb(2, 2)
    base = assemble_honeycomb(lat, CouplingConfig(0.5, 0.5, 1.0))
    mod = assemble_honeycomb(lat, CouplingConfig(0.5, 0.5, 1.0, {0: 3.0}))
    diff = base.to_dense() - mod.to_dense()
    assert np.allclose(diff, 2.0 * kron_pair(8, 0, 1, SZ))
    with pytest.raises(ValueError):
        assemble_honeycomb(lat, CouplingConfig(0.5, 0.5, 1.0, {99: 1.0}))
    with pytest.raises(ValueError):
        CouplingConfig(float("nan"), 0, 1)
    with pytest.raises(ValueError):
        assemble_effective(effective_lattice(lat), [1.0, 2.0])


def test_gap_rule():
    assert gap_above_ground_multiplet(np.array([0.0, 1e-12, 1.0, 1.1])) == pytest.approx(1.0)
    assert gap_above_ground_multiplet(np.array([0.0, 0.5, 1.0])) == pytest.approx(0.5)
    # a resolved splitting above 1e-9 is itself the first gap
    assert gap_above_ground_multiplet(np.array([0.0, 1e-6, 1.0])) == pytest.approx(1e-6)
    with pytest.raises(ValueError):
        gap_above_ground_multiplet(np.zeros(5))


def test_cluster_bands():
    bands = cluster_bands([0, 0, 4, 4.01, 8, 8])
    assert [len(b) for b in bands] == [2, 2, 2]
    assert len(cluster_bands([1.0, 1.0])) == 1


def test_spectrum_csv_is_canonical(tmp_path):
    r = SpectrumResult(np.array([1.0, -1.0]), np.array([1e-12, 2e-12]), 3)
    c = CouplingConfig(0.1, 0.2, 1.0)
    path = tmp_path / "s.csv"
    text = spectrum_csv(reversed(spectrum_rows(c, r)), path)
    lines = text.splitlines()
    assert lines[0] == CSV_SCHEMA
    assert lines[1] == "jx,jy,jz,level_index,energy,residual"
    assert lines[2].split(",")[4] == "-1.0"
    assert path.read_text() == text


def test_verification_with_close_levels_above_target():
    # the 13th and 14th levels sit 0.04 apart just above the 12th; verification used to stall
    eff = effective_lattice(build_honeycomb(3, 3))
    j = [0.59610843, 0.86583991, 0.96017931, 1.21898864, 1.36702487, 0.55183565, 1.45609591, 1.22010143, 1.4887736]
    op = assemble_effective(eff, j)
    r = lowest_eigenvalues(op, k=12, tol=1e-11, seed=1)
    assert np.max(np.abs(r.eigenvalues - dense_eigenvalues(op)[:12])) < 1e-10
