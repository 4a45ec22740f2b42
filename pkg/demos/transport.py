"""Drag a trapped anyon one plaquette and watch the fidelity grow with the ramp time.

Run: python3 demos/transport.py
"""
from honeycomb_anyons import build_honeycomb, effective_lattice
from honeycomb_anyons.dynamics import TrapSchedule, adiabatic_transport, trapped_coupling, trapped_state

print("trap coupling at jz' = 3 jz:", trapped_coupling(1, 1, 1, 3), "= J_eff / 12")

eff = effective_lattice(build_honeycomb(2, 4))
for T in (2.0, 20.0, 200.0):
    sched = TrapSchedule([0, 4], depth=0.5, ramp_time=T, steps=50, hopping=0.1, partner=6)
    res = adiabatic_transport(eff, trapped_state(eff, sched), sched)
    q = res.state.plaquette_values()
    print(f"T={T:6.1f}: fidelity {res.fidelity:.5f}, steps {res.steps}, <Q_4> = {q[4]:+.4f}, <Q_6> = {q[6]:+.4f}")
