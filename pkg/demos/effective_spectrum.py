"""Low-energy levels of the honeycomb cluster against the four-spin plaquette model.

Run: python3 demos/effective_spectrum.py
"""
import numpy as np

from honeycomb_anyons import CouplingConfig, assemble_effective, assemble_honeycomb, build_honeycomb, effective_lattice
from honeycomb_anyons.sectors import sector_spectrum
from honeycomb_anyons.spectra import cluster_bands, dense_eigenvalues

lat = build_honeycomb(2, 4)
eff = effective_lattice(lat)
c = CouplingConfig(0.1, 0.1, 1.0)
print(f"{lat.n_sites} spins, {eff.n_eff} effective spins, J_eff = {c.j_eff:.3e}")

# the plaquette model is solved exactly: every level is -J_eff times a sum of +-1 fluxes
levels = dense_eigenvalues(assemble_effective(eff, c.j_eff))
print("effective bands (J_eff):", [(round(float(b[0] / c.j_eff), 6), len(b)) for b in cluster_bands(levels - levels[0])])

# the microscopic model, block-diagonalized by its conserved hexagon fluxes
W = [lat.plaquette_operator(p) for p in range(lat.n_cells)]
res, _ = sector_spectrum(assemble_honeycomb(lat, c), 30, preferred=W)
rel = res.eigenvalues - res.eigenvalues[0]
print("microscopic bands (J_eff):", [(round(float(b[0] / c.j_eff), 3), len(b)) for b in cluster_bands(rel, 0.05)])
print("largest residual:", float(np.max(res.residuals)))
