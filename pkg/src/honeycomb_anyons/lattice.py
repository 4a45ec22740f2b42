"""Periodic honeycomb clusters and their effective square lattice.

Geometry
--------
Unit cell ``(i, j)`` holds an A site and a B site joined by a vertical z-link.
Cells are indexed row-major over an ``(nx, ny)`` array, ``c = i * ny + j``, and
sites as ``A = 2c``, ``B = 2c + 1``. In brick-wall coordinates B(i, j) sits at
``(2i + j, j)`` with A(i, j) directly above it, so every A has its x-link
partner ``B(i-1, j+1)`` on the left and its y-link partner ``B(i, j+1)`` on the
right.

Each hexagon ``p(i, j)`` has the z-links of cells ``(i, j)`` and ``(i+1, j)`` as
its left and right edges; the z-links of cells ``(i, j+1)`` and ``(i+1, j-1)``
poke into it from above and below. Those four z-links are the effective spins of
the plaquette in roles left=1, top=2, right=3, bottom=4.

Plaquette ``p(i, j)`` sits at brick position ``(2i + j + 1, j)``. Moving a
plaquette excitation right by one step is a z-rotation on spin ``(i+1, j)``;
moving it up by one step (to ``p(i-1, j+2)``) is a y-rotation on spin
``(i, j+1)``. Both moves preserve the row parity of the plaquette, which splits
the plaquettes into two sublattices when ``ny`` is even.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

from .pauli import PauliString, from_sites, identity, multiply, single


# outward link type at each ring position, in the clockwise order used below
RING_OUTWARD = ("x", "z", "y", "x", "z", "y")


class LinkType(str, Enum):
    X = "x"
    Y = "y"
    Z = "z"


class Sublattice(str, Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class Site:
    index: int
    cell: tuple[int, int]
    sublattice: Sublattice


@dataclass(frozen=True)
class Link:
    index: int
    a: int
    b: int
    type: LinkType


@dataclass(frozen=True)
class HoneycombLattice:
    nx: int
    ny: int
    sites: tuple[Site, ...]
    links: tuple[Link, ...]
    plaquettes: tuple[tuple[int, ...], ...]

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def cell_index(self, i: int, j: int) -> int:
        return (i % self.nx) * self.ny + (j % self.ny)

    def a_site(self, i: int, j: int) -> int:
        return 2 * self.cell_index(i, j)

    def b_site(self, i: int, j: int) -> int:
        return 2 * self.cell_index(i, j) + 1

    def links_of_type(self, t: LinkType | str) -> list[Link]:
        t = LinkType(t)
        return [l for l in self.links if l.type is t]

    def z_link_of_cell(self, c: int) -> Link:
        return self.links[3 * c]

    def neighbor(self, site: int, t: LinkType | str) -> int:
        t = LinkType(t)
        for l in self.links:
            if l.type is t and site in (l.a, l.b):
                return l.b if l.a == site else l.a
        raise KeyError((site, t))

    def plaquette_operator(self, p: int) -> PauliString:
        """Conserved six-spin flux: each ring site carries the Pauli of its outward link."""
        return from_sites(self.n_sites, list(zip(self.plaquettes[p], RING_OUTWARD)))

    def to_dict(self) -> dict:
        return {
            "nx": self.nx,
            "ny": self.ny,
            "sites": [{"index": s.index, "cell": list(s.cell), "sublattice": s.sublattice.value} for s in self.sites],
            "links": [{"index": l.index, "a": l.a, "b": l.b, "type": l.type.value} for l in self.links],
            "plaquettes": [list(p) for p in self.plaquettes],
        }


def build_honeycomb(nx: int, ny: int) -> HoneycombLattice:
    """Periodic ``nx`` x ``ny`` honeycomb torus with typed links."""
    if nx < 2 or ny < 2:
        raise ValueError("nx and ny must both be >= 2")

    def cell(i, j):
        return (i % nx) * ny + (j % ny)

    sites = []
    links = []
    for i in range(nx):
        for j in range(ny):
            c = cell(i, j)
            sites.append(Site(2 * c, (i, j), Sublattice.A))
            sites.append(Site(2 * c + 1, (i, j), Sublattice.B))
    for i in range(nx):
        for j in range(ny):
            a = 2 * cell(i, j)
            links.append(Link(len(links), a, a + 1, LinkType.Z))
            links.append(Link(len(links), a, 2 * cell(i, j + 1) + 1, LinkType.Y))
            links.append(Link(len(links), a, 2 * cell(i - 1, j + 1) + 1, LinkType.X))

    plaquettes = []
    for i in range(nx):
        for j in range(ny):
            A = lambda ii, jj: 2 * cell(ii, jj)
            B = lambda ii, jj: 2 * cell(ii, jj) + 1
            # clockwise from the upper-left corner
            plaquettes.append((A(i, j), B(i, j + 1), A(i + 1, j), B(i + 1, j), A(i + 1, j - 1), B(i, j)))
    return HoneycombLattice(nx, ny, tuple(sites), tuple(links), tuple(plaquettes))


# ---------------------------------------------------------------------------
# effective lattice

ROLE_AXES = ("y", "z", "y", "z")  # left, top, right, bottom


@dataclass(frozen=True)
class EffectiveLattice:
    """One effective spin per z-link; plaquette members listed as (left, top, right, bottom)."""

    lattice: HoneycombLattice
    plaquettes: tuple[tuple[int, int, int, int], ...]

    @property
    def nx(self) -> int:
        return self.lattice.nx

    @property
    def ny(self) -> int:
        return self.lattice.ny

    @property
    def n_eff(self) -> int:
        return self.lattice.n_cells

    @property
    def n_plaquettes(self) -> int:
        return len(self.plaquettes)

    def first_site(self, spin: int) -> int:
        """Microscopic A site on which the effective sigma^z acts."""
        return 2 * spin

    def cell(self, index: int) -> tuple[int, int]:
        return divmod(index, self.ny)

    def index(self, i: int, j: int) -> int:
        return (i % self.nx) * self.ny + (j % self.ny)

    def position(self, p: int) -> tuple[int, int]:
        """Brick-wall (X, Y) position of plaquette ``p``."""
        i, j = self.cell(p)
        return 2 * i + j + 1, j

    def sublattice(self, p: int) -> int | None:
        """Row parity of a plaquette; ``None`` when ``ny`` is odd (single class)."""
        if self.ny % 2:
            return None
        return self.cell(p)[1] % 2

    @cached_property
    def adjacency(self) -> dict[int, dict[str, tuple[int, int]]]:
        """For each spin, the plaquette pair excited by its ``y`` and ``z`` rotations."""
        out = {}
        for s in range(self.n_eff):
            pair = {"y": [], "z": []}
            for p, members in enumerate(self.plaquettes):
                for role, m in enumerate(members):
                    if m == s:
                        # sigma~z anticommutes with y-role factors and vice versa
                        pair["z" if ROLE_AXES[role] == "y" else "y"].append(p)
            out[s] = {k: tuple(sorted(v)) for k, v in pair.items()}
        return out

    def plaquette_string(self, p: int) -> PauliString:
        """Q_p = y(left) z(top) y(right) z(bottom) on the effective register."""
        return from_sites(self.n_eff, list(zip(self.plaquettes[p], ROLE_AXES)))

    @cached_property
    def plaquette_strings(self) -> tuple[PauliString, ...]:
        return tuple(self.plaquette_string(p) for p in range(self.n_plaquettes))

    def excited(self, op: PauliString) -> list[int]:
        """Plaquettes whose Q_p anticommutes with ``op``."""
        from .pauli import commutation_phase

        return [p for p, q in enumerate(self.plaquette_strings) if commutation_phase(op, q) < 0]

    def to_microscopic(self, op: PauliString) -> PauliString:
        """Lift an effective Pauli string to the spin lattice.

        Uses x~ = X_A X_B, y~ = Y_A X_B, z~ = Z_A; the phase of ``op`` is kept.
        """
        n = self.lattice.n_sites
        k = (op.phase_exp - bin(op.x_mask & op.z_mask).count("1")) % 4
        out = identity(n).scaled(k)
        for s in op.support:
            a, b = 2 * s, 2 * s + 1
            ax = op.axis(s)
            if ax == "x":
                f = from_sites(n, {a: "x", b: "x"})
            elif ax == "y":
                f = from_sites(n, {a: "y", b: "x"})
            else:
                f = single(n, a, "z")
            out = multiply(out, f)
        return out

    def to_dict(self) -> dict:
        d = self.lattice.to_dict()
        d["effective"] = {
            "n_eff": self.n_eff,
            "eff_sites": [{"spin": s, "z_link": 3 * s, "first_site": self.first_site(s)} for s in range(self.n_eff)],
            "plaquettes": [
                {"left": m[0], "top": m[1], "right": m[2], "bottom": m[3]} for m in self.plaquettes
            ],
            "adjacency": {str(s): {k: list(v) for k, v in a.items()} for s, a in self.adjacency.items()},
        }
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def effective_lattice(lat: HoneycombLattice) -> EffectiveLattice:
    nx, ny = lat.nx, lat.ny
    cell = lat.cell_index
    plaqs = []
    for i in range(nx):
        for j in range(ny):
            plaqs.append((cell(i, j), cell(i, j + 1), cell(i + 1, j), cell(i + 1, j - 1)))
    eff = EffectiveLattice(lat, tuple(plaqs))
    _check_roles(eff)
    return eff


def _check_roles(eff: EffectiveLattice) -> None:
    counts = {s: {"y": 0, "z": 0} for s in range(eff.n_eff)}
    for members in eff.plaquettes:
        if len(set(members)) != 4:
            raise ValueError("plaquette with repeated member spin")
        for m, ax in zip(members, ROLE_AXES):
            counts[m][ax] += 1
    for s, c in counts.items():
        if c != {"y": 2, "z": 2}:
            raise ValueError(f"spin {s} has role counts {c}")


# ---------------------------------------------------------------------------
# strings


@dataclass(frozen=True)
class StringPath:
    """Ordered product of effective rotations; ``"x"`` factors stand for i*sigma~x."""

    kind: str
    elements: tuple[tuple[int, str], ...]
    endpoints: tuple[int, ...]
    n_eff: int = field(repr=False)

    @property
    def closed(self) -> bool:
        return not self.endpoints

    def operator(self) -> PauliString:
        out = identity(self.n_eff)
        for s, ax in self.elements:
            f = single(self.n_eff, s, ax)
            if ax == "x":
                f = f.scaled(1)
            out = multiply(out, f)
        return out

    def __len__(self) -> int:
        return len(self.elements)


def _make_path(eff: EffectiveLattice, kind: str, elements) -> StringPath:
    elements = tuple(elements)
    tmp = StringPath(kind, elements, (), eff.n_eff)
    ends = tuple(eff.excited(tmp.operator()))
    return StringPath(kind, elements, ends, eff.n_eff)


def _moves(eff: EffectiveLattice, p: int, h: int, v: int) -> tuple[list[tuple[int, str]], int]:
    """Row segment of ``h`` horizontal steps, then ``v`` vertical steps, from plaquette ``p``."""
    i, j = eff.cell(p)
    out = []
    step = 1 if h >= 0 else -1
    for _ in range(abs(h)):
        spin = eff.index(i + 1, j) if step > 0 else eff.index(i, j)
        out.append((spin, "z"))
        i += step
    step = 1 if v >= 0 else -1
    for _ in range(abs(v)):
        if step > 0:
            out.append((eff.index(i, j + 1), "y"))
            i, j = i - 1, j + 2
        else:
            out.append((eff.index(i + 1, j - 1), "y"))
            i, j = i + 1, j - 2
    return out, eff.index(i, j)


def _route(eff: EffectiveLattice, a: int, b: int, allow_h: bool = True, allow_v: bool = True):
    """Shortest (h, v) with row-then-column moves from ``a`` to ``b``; ties toward positive."""
    ia, ja = eff.cell(a)
    ib, jb = eff.cell(b)
    nx, ny = eff.nx, eff.ny
    lim = nx * ny
    best = None
    vs = sorted(range(-lim, lim + 1), key=lambda v: (abs(v), -v)) if allow_v else [0]
    for v in vs:
        if (ja + 2 * v - jb) % ny:
            continue
        hs = sorted(range(-nx, nx + 1), key=lambda h: (abs(h), -h)) if allow_h else [0]
        for h in hs:
            if (ia + h - v - ib) % nx == 0:
                cost = abs(h) + abs(v)
                if best is None or cost < best[0]:
                    best = (cost, h, v)
                break
    if best is None:
        return None
    return best[1], best[2]


def string_between(eff: EffectiveLattice, p_a, p_b, kind: str) -> StringPath:
    """Deterministic open string creating excitations at the given endpoints.

    ``kind`` ``"Z"`` uses only horizontal z~ moves, ``"Y"`` only vertical y~
    moves. For ``"X"`` the endpoints are plaquette pairs (one fermion each);
    the string is the product of the two single-sublattice routes, which
    merge into i*sigma~x factors where they share a spin.
    """
    kind = kind.upper()
    if kind in ("Y", "Z"):
        p_a, p_b = int(p_a), int(p_b)
        if p_a == p_b:
            raise ValueError("pair endpoints must differ")
        r = _route(eff, p_a, p_b, allow_h=kind == "Z", allow_v=kind == "Y")
        if r is None:
            raise ValueError(f"plaquettes {p_a}, {p_b} not connected by {kind} moves")
        elements, end = _moves(eff, p_a, *r)
        assert end == p_b
        return _make_path(eff, kind, elements)
    if kind == "X":
        a, b = tuple(p_a), tuple(p_b)
        if len(a) != 2 or len(b) != 2:
            raise ValueError("X endpoints are plaquette pairs")
        pairs = _match_sublattices(eff, a, b)
        op = identity(eff.n_eff)
        for s, t in pairs:
            if s == t:
                continue
            r = _route(eff, s, t)
            if r is None:
                raise ValueError(f"plaquettes {s}, {t} are on different sublattices")
            seg, _ = _moves(eff, s, *r)
            seg_path = StringPath("E", tuple(seg), (), eff.n_eff)
            op = multiply(op, seg_path.operator())
        return _make_path(eff, "X", _elements_from_operator(op))
    raise ValueError(f"unknown string kind {kind!r}")


def _match_sublattices(eff, a, b):
    if eff.sublattice(a[0]) is None:
        return [(a[0], b[0]), (a[1], b[1])]
    if eff.sublattice(a[0]) == eff.sublattice(a[1]) or eff.sublattice(b[0]) == eff.sublattice(b[1]):
        raise ValueError("an X endpoint needs one plaquette of each sublattice")
    if eff.sublattice(a[0]) != eff.sublattice(b[0]):
        b = (b[1], b[0])
    return [(a[0], b[0]), (a[1], b[1])]


def _elements_from_operator(op: PauliString) -> list[tuple[int, str]]:
    return [(s, op.axis(s)) for s in op.support]


def rectangle_loop(eff: EffectiveLattice, corner: int, width: int, height: int) -> list[tuple[int, str]]:
    """Closed single-sublattice loop: right, up, left, down from ``corner``."""
    out = []
    seg, p = _moves(eff, corner, width, 0)
    out += seg
    seg, p = _moves(eff, p, 0, height)
    out += seg
    seg, p = _moves(eff, p, -width, 0)
    out += seg
    seg, p = _moves(eff, p, 0, -height)
    out += seg
    assert p == corner
    return out


def plaquette_at(eff: EffectiveLattice, X: int, Y: int) -> int:
    """Plaquette at brick position (X, Y); X - Y must be odd."""
    if (X - Y) % 2 == 0:
        raise ValueError("no plaquette at an even-parity position")
    j = Y
    i = (X - Y - 1) // 2
    return eff.index(i, j)


def loop_around(eff: EffectiveLattice, target: int, kind: str = "X", left: int = 1, right: int = 1,
                down: int = 1, up: int = 1) -> StringPath:
    """Closed loop encircling plaquette ``target``.

    The margins count plaquette steps on each side. ``kind`` ``"X"`` builds the
    fermion loop (one rectangle per sublattice); ``"E"`` a loop on the target's
    own sublattice and ``"M"`` a loop on the other one.
    """
    X, Y = eff.position(target)
    kind = kind.upper()
    loops = []
    if kind in ("X", "E"):
        c = plaquette_at(eff, X - 2 * left, Y - 2 * down)
        loops.append(rectangle_loop(eff, c, left + right, down + up))
    if kind in ("X", "M"):
        c = plaquette_at(eff, X - 2 * left + 1, Y - 2 * down + 1)
        loops.append(rectangle_loop(eff, c, left + right - 1, down + up - 1))
    if not loops:
        raise ValueError(f"unknown loop kind {kind!r}")
    op = identity(eff.n_eff)
    for elems in loops:
        op = multiply(op, StringPath("E", tuple(elems), (), eff.n_eff).operator())
    path = _make_path(eff, kind, _elements_from_operator(op))
    if path.endpoints:
        raise ValueError("loop does not close on this lattice (too small?)")
    return path
