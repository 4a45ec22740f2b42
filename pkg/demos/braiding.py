"""Create anyon pairs, braid an X particle around them and run the two gates.

Run: python3 demos/braiding.py
"""
import math

from honeycomb_anyons import build_honeycomb, effective_lattice
from honeycomb_anyons import toric
from honeycomb_anyons.lattice import loop_around, string_between

# phases follow from string commutation alone, so large lattices cost nothing
eff = effective_lattice(build_honeycomb(8, 8))
c = eff.index(3, 4)
for kind, far in (("Z", eff.index(6, 4)), ("Y", eff.index(1, 8))):
    conf = toric.AnyonConfiguration.from_path(eff, string_between(eff, c, far, kind))
    print(f"{kind} pair at {sorted(conf.excited)}: X loop phase {toric.braid_phase(loop_around(eff, c, 'X'), conf):+d}")

# the same phase read off a 16-spin state vector
mid = effective_lattice(build_honeycomb(4, 4))
g = toric.ground_state(mid)
a = mid.index(1, 2)
state, conf = toric.create_pair(g, string_between(mid, a, mid.index(3, 2), "Z"))
loop = loop_around(mid, a, "X")
print(f"state vector: <psi|L|psi> = {toric.state_braid_phase(loop, state, g).real:+.0f}, "
      f"algebra: {toric.braid_phase(loop, conf):+d}")

print("fusion X x Y =", toric.fuse("X", "Y"), "| Y x Z =", toric.fuse("Y", "Z"))

cp = toric.controlled_phase_experiment(eff, toric.RegisterLayout(eff.index(1, 1), eff.index(4, 4)))
print("controlled phase table:", cp["table"], "vacuum:", cp["vacuum"])

small = effective_lattice(build_honeycomb(2, 4))
g2 = toric.ground_state(small)
x, y = toric.logical_state(g2, 0, "X"), toric.logical_state(g2, 0, "Y")
for th in (0.0, math.pi / 4, math.pi / 2):
    r = toric.one_qubit_rotation(x, 0, th)
    print(f"theta={th:.3f}: |<X|psi>|^2={x.fidelity(r):.3f}  |<Y|psi>|^2={y.fidelity(r):.3f}")
