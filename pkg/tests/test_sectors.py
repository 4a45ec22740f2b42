import numpy as np
import pytest

from honeycomb_anyons import sectors
from honeycomb_anyons.lattice import build_honeycomb, effective_lattice
from honeycomb_anyons.pauli import commutation_phase, from_sites, multiply
from honeycomb_anyons.sectors import SectorBasis, commuting_generators, sector_minima, sector_spectrum
from honeycomb_anyons.spectra import CouplingConfig, assemble_effective, assemble_honeycomb, dense_eigenvalues


def honeycomb_8(jx=0.3, jy=0.5, jz=1.0):
    lat = build_honeycomb(2, 2)
    op = assemble_honeycomb(lat, CouplingConfig(jx, jy, jz))
    W = [lat.plaquette_operator(p) for p in range(lat.n_cells)]
    return lat, op, W


def test_generators_commute_and_keep_preferred():
    lat, op, W = honeycomb_8()
    gens = commuting_generators(op.terms, op.n, W)
    for g in gens:
        assert g.is_hermitian()
        assert all(commutation_phase(g, t) == 1 for _, t in op.terms)
        assert all(commutation_phase(g, h) == 1 for h in gens)
    # the first three fluxes are independent and kept verbatim
    assert gens[:3] == W[:3]


def test_preferred_must_commute():
    lat, op, W = honeycomb_8()
    with pytest.raises(ValueError):
        commuting_generators(op.terms, op.n, [from_sites(op.n, {0: "x"})])


@pytest.mark.parametrize("coup", [(0.3, 0.5, 1.0), (1.0, 1.0, 1.0), (0.0, 0.2, 1.0)])
def test_all_blocks_reproduce_dense_spectrum(coup):
    lat, op, W = honeycomb_8(*coup)
    gens = commuting_generators(op.terms, op.n, W)
    basis = SectorBasis(op.n, gens)
    assert basis.n_sectors * basis.sector_dim == op.dim
    levels = np.sort(np.concatenate([np.linalg.eigvalsh(basis.block(op, l).matrix.toarray())
                                     for l in range(basis.n_sectors)]))
    assert np.max(np.abs(levels - dense_eigenvalues(op))) < 1e-12


def test_sector_spectrum_matches_dense_and_labels():
    lat, op, W = honeycomb_8()
    d = dense_eigenvalues(op)
    r, basis = sector_spectrum(op, 40, preferred=W)
    assert np.max(np.abs(r.eigenvalues - d[:40])) < 1e-12
    assert len(r.labels) == 40
    # every level's sector fixes the flux eigenvalues
    for lab in set(r.labels):
        for w in W:
            assert basis.eigenvalue(w, lab) in (1, -1)


def test_lanczos_path_for_large_blocks(monkeypatch):
    lat, op, W = honeycomb_8(0.4, 0.6, 1.0)
    monkeypatch.setattr(sectors, "DENSE_LIMIT", 4)
    r, _ = sector_spectrum(op, 10, preferred=W[:2], tol=1e-11)
    assert np.max(np.abs(r.eigenvalues - dense_eigenvalues(op)[:10])) < 1e-10


def test_embed_gives_eigenvectors():
    lat, op, W = honeycomb_8()
    basis = SectorBasis(op.n, commuting_generators(op.terms, op.n, W))
    H = op.to_dense()
    for lab in (0, 3, basis.n_sectors - 1):
        blk = basis.block(op, lab)
        w, U = np.linalg.eigh(blk.matrix.toarray())
        v = basis.embed(lab, blk.reps, U[:, 0])
        assert np.isclose(np.linalg.norm(v), 1)
        assert np.linalg.norm(H @ v - w[0] * v) < 1e-12
        for i, g in enumerate(basis.generators):
            gv = g.to_dense() @ v
            assert np.allclose(gv, basis.chi(lab)[i] * v)


def test_eigenvalue_of_group_products():
    lat, op, W = honeycomb_8()
    basis = SectorBasis(op.n, commuting_generators(op.terms, op.n, W))
    g = multiply(W[0], W[1])
    for lab in range(basis.n_sectors):
        assert basis.eigenvalue(g, lab) == basis.eigenvalue(W[0], lab) * basis.eigenvalue(W[1], lab)
    with pytest.raises(ValueError):
        basis.eigenvalue(from_sites(op.n, {0: "x"}), 0)


def test_effective_model_sectors_are_flux_configurations():
    eff = effective_lattice(build_honeycomb(2, 4))
    op = assemble_effective(eff, 1.0)
    r, basis = sector_spectrum(op, 8, preferred=eff.plaquette_strings)
    mins, _, _ = sector_minima(op, basis)
    # with Q_p conserved each sector energy is -sum_p q_p
    for lab, e in enumerate(mins):
        q = [basis.eigenvalue(Q, lab) for Q in eff.plaquette_strings]
        assert np.isclose(e, -sum(q))


def test_basis_rejects_dependent_generators():
    lat, op, W = honeycomb_8()
    with pytest.raises(ValueError):
        SectorBasis(op.n, [W[0], W[0]])
    with pytest.raises(ValueError):
        SectorBasis(op.n, [from_sites(op.n, {0: "x"}).scaled(1)])
