"""Anyons of the effective plaquette model: creation, fusion, braiding and a logical layer.

States live on the effective register (one spin per z-link, bit 0 = up).
All statistical phases are computed symbolically from Pauli commutation and
can be cross-checked on explicit state vectors for small lattices.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .lattice import EffectiveLattice, StringPath, _make_path, plaquette_at, rectangle_loop, string_between
from .pauli import PauliString, apply_to_vector, commutation_phase, identity, multiply, product, single

TYPES = ("1", "X", "Y", "Z")


# ---------------------------------------------------------------------------
# states


@dataclass
class StateVector:
    """Amplitudes over the ``2**n_eff`` effective basis, tied to its lattice."""

    lattice: EffectiveLattice
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.lattice.n_eff,):
            raise ValueError("amplitude vector has the wrong length")

    @property
    def n_eff(self) -> int:
        return self.lattice.n_eff

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def apply(self, op: PauliString) -> "StateVector":
        return StateVector(self.lattice, apply_to_vector(op, self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2

    def expectation(self, op: PauliString) -> complex:
        return complex(np.vdot(self.amplitudes, apply_to_vector(op, self.amplitudes)))

    def plaquette_values(self) -> np.ndarray:
        """<Q_p> for every plaquette."""
        return np.array([self.expectation(q).real for q in self.lattice.plaquette_strings])


def ground_state(eff: EffectiveLattice) -> StateVector:
    """Project the all-up state onto Q_p = +1 for every plaquette and normalize.

    Raises
    ------
    ValueError
        If the projection vanishes (inconsistent plaquette roles).
    """
    v = np.zeros(1 << eff.n_eff, dtype=complex)
    v[0] = 1.0
    for q in eff.plaquette_strings:
        v = 0.5 * (v + apply_to_vector(q, v))
    nrm = np.linalg.norm(v)
    if nrm < 1e-12:
        raise ValueError("plaquette projector annihilates the reference state")
    return StateVector(eff, v / nrm)


# ---------------------------------------------------------------------------
# configurations


@dataclass(frozen=True)
class Particle:
    type: str
    plaquettes: tuple[int, ...]
    path: StringPath


@dataclass
class AnyonConfiguration:
    """Plaquette occupations (Q_p eigenvalues) and the ledger of created particles."""

    occupations: tuple[int, ...]
    particles: list[Particle] = field(default_factory=list)

    def __post_init__(self):
        if sum(1 for o in self.occupations if o == -1) % 2:
            raise ValueError("odd number of excited plaquettes")

    @classmethod
    def from_path(cls, eff: EffectiveLattice, path: StringPath) -> "AnyonConfiguration":
        """Configuration left on the vacuum by one string, without building a state vector."""
        ends = set(eff.excited(path.operator()))
        occ = tuple(-1 if p in ends else 1 for p in range(eff.n_plaquettes))
        return cls(occ, [Particle(path.kind, q, path) for q in _split_particles(eff, path)])

    @property
    def excited(self) -> list[int]:
        return [p for p, o in enumerate(self.occupations) if o == -1]

    def ledger_occupations(self) -> tuple[int, ...]:
        """Occupations implied by the particle ledger alone."""
        occ = [1] * len(self.occupations)
        for part in self.particles:
            for p in part.plaquettes:
                occ[p] *= -1
        return tuple(occ)

    def creation_operator(self, n_eff: int) -> PauliString:
        paths = []
        for part in self.particles:
            if all(part.path is not q for q in paths):
                paths.append(part.path)
        return product([q.operator() for q in paths], n=n_eff)

    def to_dict(self) -> dict:
        return {
            "occupations": {str(p): o for p, o in enumerate(self.occupations)},
            "particles": [
                {"type": part.type, "plaquettes": list(part.plaquettes),
                 "path": [[s, a] for s, a in part.path.elements]}
                for part in self.particles
            ],
        }


def occupations(state: StateVector, tol: float = 1e-12) -> tuple[int, ...]:
    """Sharp plaquette eigenvalues of ``state``; raises if any <Q_p> is not +-1."""
    vals = state.plaquette_values()
    if np.any(np.abs(np.abs(vals) - 1) > tol):
        raise ValueError("state is not a plaquette eigenstate")
    return tuple(int(round(v)) for v in vals)


def _split_particles(eff: EffectiveLattice, path: StringPath) -> list[tuple[int, ...]]:
    ends = list(path.endpoints)
    if path.kind in ("Y", "Z"):
        return [(p,) for p in ends]
    # X: pair up endpoint plaquettes that share a spin and sit on different sublattices
    members = {p: set(eff.plaquettes[p]) for p in ends}
    for a, b, c, d in itertools.permutations(ends):
        if a < b and c < d and a < c:
            if members[a] & members[b] and members[c] & members[d] and eff.sublattice(a) != eff.sublattice(b) \
                    and eff.sublattice(c) != eff.sublattice(d):
                return [(a, b), (c, d)]
    return [tuple(ends)]


def create_pair(state: StateVector, path: StringPath, config: AnyonConfiguration | None = None):
    """Apply a string operator and record the particles at its endpoints.

    Returns
    -------
    (StateVector, AnyonConfiguration)
    """
    eff = state.lattice
    if path.n_eff != eff.n_eff:
        raise ValueError("path belongs to a different lattice")
    if path.closed:
        raise ValueError("a closed string creates no particles")
    out = state.apply(path.operator())
    parts = list(config.particles) if config is not None else []
    for plaqs in _split_particles(eff, path):
        parts.append(Particle(path.kind, plaqs, path))
    conf = AnyonConfiguration(occupations(out), parts)
    if conf.ledger_occupations() != conf.occupations:
        raise RuntimeError("occupations disagree with the particle ledger")
    return out, conf


def single_spin_path(eff: EffectiveLattice, spin: int, axis: str) -> StringPath:
    """One-element string: sigma~z, sigma~y or i*sigma~x on ``spin``."""
    return _make_path(eff, axis.upper(), [(spin, axis.lower())])


# ---------------------------------------------------------------------------
# fusion


@dataclass(frozen=True)
class FusionTable:
    table: dict

    def __call__(self, a: str, b: str) -> str:
        return self.table[(a, b)]

    def entries(self):
        return sorted(self.table.items())


def _build_fusion() -> FusionTable:
    # every type is its own inverse; two distinct nontrivial types give the third
    t = {}
    for a, b in itertools.product(TYPES, TYPES):
        if a == "1" or b == "1":
            t[(a, b)] = b if a == "1" else a
        elif a == b:
            t[(a, b)] = "1"
        else:
            t[(a, b)] = ({"X", "Y", "Z"} - {a, b}).pop()
    return FusionTable(t)


FUSION = _build_fusion()


def fuse(a: str, b: str) -> str:
    """Fusion product of two anyon types in {1, X, Y, Z}."""
    try:
        return FUSION(a, b)
    except KeyError:
        raise ValueError(f"unknown anyon types {a!r}, {b!r}") from None


# ---------------------------------------------------------------------------
# statistics


def braid_phase(loop: StringPath, target: AnyonConfiguration) -> int:
    """Phase from carrying the loop's particle around the target anyons.

    Raises
    ------
    ValueError
        If ``loop`` is not closed.
    """
    if not loop.closed:
        raise ValueError("braiding loop must be closed")
    return commutation_phase(loop.operator(), target.creation_operator(loop.n_eff))


def state_braid_phase(loop: StringPath, state: StateVector, reference: StateVector) -> complex:
    """State-vector cross-check: <psi|L|psi> / <0|L|0>."""
    op = loop.operator()
    return state.expectation(op) / reference.expectation(op)


def exchange_legs(eff: EffectiveLattice, center, arms) -> list[StringPath]:
    """X strings from a junction fermion ``center`` to each fermion in ``arms``."""
    return [string_between(eff, center, a, "X") for a in arms]


def exchange_phase_xx(s1: StringPath, s2: StringPath, s3: StringPath) -> int:
    """Exchange phase of two X particles from three legs meeting at one fermion.

    With legs ``l1, l2, l3`` leaving a junction in counterclockwise order,
    swapping the particles at the ends of ``l1`` and ``l2`` using ``l3`` as the
    spare site multiplies the state by ``W3 W2 W1 (W1 W2 W3)^-1``, which for Pauli
    strings is the product of the three pairwise commutation phases.

    Raises
    ------
    ValueError
        If the legs are not X strings sharing exactly one endpoint fermion.
    """
    legs = (s1, s2, s3)
    if any(s.kind != "X" for s in legs):
        raise ValueError("exchange legs must be X strings")
    ends = [set(s.endpoints) for s in legs]
    common = ends[0] & ends[1] & ends[2]
    if len(common) != 2 or any(len(e) != 4 for e in ends):
        raise ValueError("legs do not share a single junction fermion")
    tips = [e - common for e in ends]
    if tips[0] & tips[1] or tips[0] & tips[2] or tips[1] & tips[2]:
        raise ValueError("leg ends coincide; the legs do not realize an exchange")
    w = [s.operator() for s in legs]
    return commutation_phase(w[0], w[1]) * commutation_phase(w[0], w[2]) * commutation_phase(w[1], w[2])


def exchange_overlap(s1: StringPath, s2: StringPath, s3: StringPath) -> int:
    """Effective sites where two exchange legs carry anticommuting Paulis.

    Each effective spin is two microscopic spins, so the microscopic overlap
    is twice this count; an odd count gives the fermionic sign.
    """
    w = [s.operator() for s in (s1, s2, s3)]
    count = 0
    for a, b in ((w[0], w[1]), (w[0], w[2]), (w[1], w[2])):
        count += sum(1 for q in set(a.support) & set(b.support) if a.axis(q) != b.axis(q))
    return count


# ---------------------------------------------------------------------------
# logical layer


def logical_state(ground: StateVector, spin: int, label: str) -> StateVector:
    """|X> = i sigma~x_j |0>, |Y> = sigma~y_j |0>, |Z> = sigma~z_j |0>."""
    eff = ground.lattice
    label = label.upper()
    if label not in ("X", "Y", "Z"):
        raise ValueError(f"unknown logical label {label!r}")
    return ground.apply(single_spin_path(eff, spin, label.lower()).operator())


def one_qubit_rotation(state: StateVector, eff_spin: int, theta: float) -> StateVector:
    """Apply ``exp(-i theta sigma~z_j)`` exactly as ``cos(theta) - i sin(theta) sigma~z_j``."""
    if not 0 <= eff_spin < state.n_eff:
        raise ValueError(f"effective spin {eff_spin} out of range")
    z = apply_to_vector(single(state.n_eff, eff_spin, "z"), state.amplitudes)
    return StateVector(state.lattice, np.cos(theta) * state.amplitudes - 1j * np.sin(theta) * z)


@dataclass
class RegisterLayout:
    """Two logical qubits, each a particle pair created on one spin.

    The braiding loop encloses the target fermion made of the plaquette
    below ``target_spin`` and the plaquette to its right; ``margin`` widens
    the loop by that many plaquette steps on every side.
    """

    control_spin: int
    target_spin: int
    margin: int = 1


def target_loops(eff: EffectiveLattice, layout: RegisterLayout) -> dict[str, StringPath]:
    """Closed X loop around the target fermion and its two single-sublattice halves."""
    i, j = eff.cell(layout.target_spin)
    Xt, Yt = 2 * i + j, j
    a = layout.margin
    # encloses the right plaquette, left edge runs through the target spin
    right_half = rectangle_loop(eff, plaquette_at(eff, Xt, Yt - 1 - 2 * a), a + 1, 2 * a + 1)
    # encloses the bottom plaquette, top edge runs through the target spin
    below_half = rectangle_loop(eff, plaquette_at(eff, Xt - 1 - 2 * a, Yt - 2 - 2 * a), 2 * a + 1, a + 1)
    halves = {}
    for name, elems in (("right", right_half), ("below", below_half)):
        halves[name] = _make_path(eff, "E", elems)
    op = multiply(halves["right"].operator(), halves["below"].operator())
    x_loop = _make_path(eff, "X", [(s, op.axis(s)) for s in op.support])
    for path in (x_loop, *halves.values()):
        if not path.closed:
            raise ValueError("register loop does not close on this lattice")
    return {"X": x_loop, **halves}


def controlled_phase_experiment(eff: EffectiveLattice, layout: RegisterLayout) -> dict:
    """Phases acquired when the control's particle encircles the target fermion.

    The control in logical state |X> carries an X particle around the X loop;
    in state |Y> it carries a Y particle around the single-sublattice loop on
    its own sublattice. Entries are exact +-1 values from string algebra.

    Raises
    ------
    ValueError
        If the loop touches the control pair.
    """
    loops = target_loops(eff, layout)
    cj = eff.cell(layout.control_spin)[1]
    ti, tj = eff.cell(layout.target_spin)
    # a Y particle lives on row parity cj - 1; the "right" half runs on parity tj - 1
    y_loop = loops["right"] if (cj - tj) % 2 == 0 else loops["below"]
    control_loops = {"X": loops["X"], "Y": y_loop}
    n = eff.n_eff
    for lab in ("X", "Y"):
        c_op = single_spin_path(eff, layout.control_spin, lab.lower()).operator()
        if control_loops[lab].operator().support and set(control_loops[lab].operator().support) & set(c_op.support):
            raise ValueError("loop overlaps the control pair")
    table = {}
    for c, t in itertools.product(("X", "Y"), ("X", "Y")):
        t_op = single_spin_path(eff, layout.target_spin, t.lower()).operator()
        table[c + t] = commutation_phase(control_loops[c].operator(), t_op)
    vacuum = {c: commutation_phase(control_loops[c].operator(), identity(n)) for c in ("X", "Y")}
    return {"table": table, "vacuum": vacuum, "loops": {k: [[s, a] for s, a in v.elements] for k, v in control_loops.items()}}


def to_json(obj, **kw) -> str:
    """JSON for experiment outputs (configurations, tables, fidelities)."""
    def default(o):
        if isinstance(o, AnyonConfiguration):
            return o.to_dict()
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, complex):
            return [o.real, o.imag]
        raise TypeError(type(o))

    return json.dumps(obj, default=default, **kw)
