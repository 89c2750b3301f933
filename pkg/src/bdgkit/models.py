"""Tight-binding lattice models: SSH, driven kagome, Hofstadter, disorder.

A model is a list of hopping/pairing generators ``(displacement, (m, m'), t)``
meaning ``<n+a, m| h |n, m'> = t``.  Hermitian closure (for h) and symmetric
closure (for delta) are applied when matrices are built, so each physical
bond is listed once.

Bloch reduction uses the convention ``S_j -> exp(-i k_j)``; all Chern and
winding signs quoted in this package are relative to it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import gcd
from typing import NamedTuple

import numpy as np

from .core import BdGOperator, assemble_bdg, one_particle, pairing
from .errors import DisorderedModelError, StructuralError


class Term(NamedTuple):
    displacement: tuple
    orbitals: tuple
    amplitude: complex


@dataclass(frozen=True)
class DisorderConfig:
    """Onsite disorder: uniform amplitudes in [-W/2, W/2], reproducible by seed."""

    amplitude: float
    kind: str = "onsite-real-only"  # or "onsite-uniform"
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise StructuralError("disorder amplitude must be >= 0")
        if self.kind not in ("onsite-real-only", "onsite-uniform"):
            raise StructuralError(f"unknown disorder kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class LatticeModel:
    name: str
    dims: tuple
    orbitals: int
    hoppings: tuple
    pairings: tuple
    bc: tuple
    chiral_grading: np.ndarray | None = None
    disorder: DisorderConfig | None = None
    onsite: np.ndarray | None = None  # realized (n_cells, L, L) Hermitian blocks
    mu: float | None = None  # suggested chemical potential (CLI default)

    @property
    def n_cells(self):
        return int(np.prod(self.dims))

    @property
    def n_sites(self):
        return self.n_cells * self.orbitals


def _closed_hoppings(terms):
    out = []
    for a, (m, mp), t in terms:
        out.append(Term(a, (m, mp), complex(t)))
        if not (all(x == 0 for x in a) and m == mp):
            out.append(Term(tuple(-x for x in a), (mp, m), np.conj(complex(t))))
    return out


def _closed_pairings(terms):
    out = []
    for a, (m, mp), t in terms:
        out.append(Term(a, (m, mp), complex(t)))
        if not (all(x == 0 for x in a) and m == mp):
            out.append(Term(tuple(-x for x in a), (mp, m), complex(t)))
    return out


def cell_coordinates(dims):
    """Integer cell coordinates, C-ordered to match the matrix layout."""
    grids = np.meshgrid(*[np.arange(n) for n in dims], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _cell_index(coords, dims):
    return int(np.ravel_multi_index(coords, dims))


def one_particle_matrix(model, bc=None):
    """Dense real-space h for the model (disorder included)."""
    dims = model.dims
    L = model.orbitals
    bc = model.bc if bc is None else tuple(bc)
    if len(bc) != len(dims):
        raise StructuralError("bc must give one entry per axis")
    ncell = model.n_cells
    h = np.zeros((ncell * L, ncell * L), dtype=complex)
    coords = cell_coordinates(dims)
    for a, (m, mp), t in _closed_hoppings(model.hoppings):
        for c in coords:
            target = c + np.array(a)
            wrapped = target.copy()
            skip = False
            for ax, n in enumerate(dims):
                if bc[ax] == "periodic":
                    wrapped[ax] %= n
                elif not (0 <= target[ax] < n):
                    skip = True
                    break
            if skip:
                continue
            i = _cell_index(tuple(wrapped), dims) * L + m
            j = _cell_index(tuple(c), dims) * L + mp
            h[i, j] += t
    if model.onsite is not None:
        for ci in range(ncell):
            h[ci * L : (ci + 1) * L, ci * L : (ci + 1) * L] += model.onsite[ci]
    return h


def pairing_matrix(model, bc=None):
    """Dense real-space delta for the model."""
    dims = model.dims
    L = model.orbitals
    bc = model.bc if bc is None else tuple(bc)
    ncell = model.n_cells
    d = np.zeros((ncell * L, ncell * L), dtype=complex)
    coords = cell_coordinates(dims)
    for a, (m, mp), t in _closed_pairings(model.pairings):
        for c in coords:
            target = c + np.array(a)
            wrapped = target.copy()
            skip = False
            for ax, n in enumerate(dims):
                if bc[ax] == "periodic":
                    wrapped[ax] %= n
                elif not (0 <= target[ax] < n):
                    skip = True
                    break
            if skip:
                continue
            i = _cell_index(tuple(wrapped), dims) * L + m
            j = _cell_index(tuple(c), dims) * L + mp
            d[i, j] += t
    return d


def assemble_model(model, mu, bc=None):
    """Real-space BdG operator of the model at chemical potential mu."""
    bc = model.bc if bc is None else tuple(bc)
    h = one_particle(
        one_particle_matrix(model, bc), dims=model.dims, orbitals=model.orbitals, bc=bc
    )
    d = pairing(pairing_matrix(model, bc))
    chiral = None
    if model.chiral_grading is not None:
        chiral = np.tile(model.chiral_grading, model.n_cells)
    return assemble_bdg(h, d, mu, chiral=chiral)


# ---------------------------------------------------------------------------
# Bloch reduction
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlochFamily:
    """Closed-form Bloch evaluators k -> (h(k), delta(k)) and their derivatives."""

    orbitals: int
    ndim: int
    hop_terms: tuple
    pair_terms: tuple
    chiral_grading: np.ndarray | None = None

    def _eval(self, terms, k, deriv=None):
        L = self.orbitals
        m = np.zeros((L, L), dtype=complex)
        for a, (i, j), t in terms:
            phase = np.exp(-1j * np.dot(k, a))
            if deriv is not None:
                phase *= -1j * a[deriv]
            m[i, j] += t * phase
        return m

    def h(self, k):
        return self._eval(self.hop_terms, np.atleast_1d(k))

    def delta(self, k):
        return self._eval(self.pair_terms, np.atleast_1d(k))

    def dh(self, k, axis):
        return self._eval(self.hop_terms, np.atleast_1d(k), deriv=axis)

    def ddelta(self, k, axis):
        return self._eval(self.pair_terms, np.atleast_1d(k), deriv=axis)

    def bdg(self, k, mu):
        """Particle-hole Bloch fiber H(k) of the BdG family."""
        k = np.atleast_1d(k)
        L = self.orbitals
        hp = self.h(k) - mu * np.eye(L)
        hh = np.conj(self.h(-k)) - mu * np.eye(L)
        dl = self.delta(k)
        dlc = np.conj(self.delta(-k))
        return np.block([[hp, dl], [-dlc, -hh]])

    def dbdg(self, k, axis):
        """Analytic derivative of the fiber along k_axis (mu-independent).

        d/dk of -conj(X(-k)) is +conj(X'(-k)), hence the hole-row signs.
        """
        k = np.atleast_1d(k)
        dp = self.dh(k, axis)
        dh_hole = np.conj(self.dh(-k, axis))
        dd = self.ddelta(k, axis)
        dd_hole = np.conj(self.ddelta(-k, axis))
        return np.block([[dp, dd], [dd_hole, dh_hole]])


def to_bloch(model):
    """Bloch family of a clean, fully periodic model."""
    if model.disorder is not None or model.onsite is not None:
        raise DisorderedModelError("Bloch reduction requires a clean model")
    if any(b != "periodic" for b in model.bc):
        raise DisorderedModelError("Bloch reduction requires periodic boundary conditions")
    return BlochFamily(
        orbitals=model.orbitals,
        ndim=len(model.dims),
        hop_terms=tuple(_closed_hoppings(model.hoppings)),
        pair_terms=tuple(_closed_pairings(model.pairings)),
        chiral_grading=model.chiral_grading,
    )


# ---------------------------------------------------------------------------
# Built-in models
# ---------------------------------------------------------------------------


def ssh_chain(t_intra, t_inter, n_cells, bc="periodic"):
    """Two-orbital SSH chain; real, chiral (grading +1 on A, -1 on B)."""
    if n_cells < 1:
        raise StructuralError("n_cells must be >= 1")
    hoppings = (
        Term((0,), (0, 1), complex(t_intra)),
        Term((1,), (0, 1), complex(t_inter)),
    )
    return LatticeModel(
        name="ssh",
        dims=(int(n_cells),),
        orbitals=2,
        hoppings=hoppings,
        pairings=(),
        bc=(bc,),
        chiral_grading=np.array([1.0, -1.0]),
    )


def kagome_driven(nu, mu=None, dims=(12, 12), bc=("periodic", "periodic"), s3="printed"):
    """Three-orbital driven kagome model.

    h couples the sublattices through 1 + S_1, 1 + S_2 and 1 + S_3; the
    parametric driving is the onsite pairing nu * diag(1, w, w^2) with
    w = exp(2 pi i / 3).

    ``s3`` picks the direction of the third bond: "printed" uses
    S_3 = S_2^* S_1 (all three positive bands are gapped pointwise but the
    lower two overlap as intervals), "laplacian" uses S_3 = S_1^* S_2, the
    nearest-neighbour kagome graph with its flat band, for which the driving
    opens a genuine spectral gap above the flat band.
    """
    if len(dims) != 2:
        raise StructuralError("kagome model is two-dimensional")
    if s3 == "printed":
        a3 = (1, -1)
    elif s3 == "laplacian":
        a3 = (-1, 1)
    else:
        raise StructuralError(f"unknown s3 convention {s3!r}")
    hoppings = (
        Term((0, 0), (1, 0), 1.0 + 0j),
        Term((0, 0), (2, 0), 1.0 + 0j),
        Term((0, 0), (2, 1), 1.0 + 0j),
        Term((1, 0), (1, 0), 1.0 + 0j),
        Term((0, 1), (2, 0), 1.0 + 0j),
        Term(a3, (2, 1), 1.0 + 0j),
    )
    w = np.exp(2j * np.pi / 3)
    pairings = tuple(Term((0, 0), (m, m), nu * w**m) for m in range(3))
    return LatticeModel(
        name=f"kagome_driven[{s3}]",
        dims=tuple(int(d) for d in dims),
        orbitals=3,
        hoppings=hoppings,
        pairings=pairings,
        bc=tuple(bc),
        mu=mu,
    )


def hofstadter(p, q, dims=(12, 12), bc=("periodic", "periodic")):
    """Square-lattice Hofstadter model, flux p/q per plaquette, Landau gauge.

    The magnetic unit cell is one plaquette column of q sites along axis 2;
    hopping along axis 1 at slot m carries the phase exp(-2 pi i p m / q).
    ``dims`` count lattice sites; dims[1] must be divisible by q.
    """
    if len(dims) != 2:
        raise StructuralError("hofstadter model is two-dimensional")
    if p == 0:
        hoppings = (
            Term((1, 0), (0, 0), 1.0 + 0j),
            Term((0, 1), (0, 0), 1.0 + 0j),
        )
        return LatticeModel(
            name="hofstadter[0]",
            dims=tuple(int(d) for d in dims),
            orbitals=1,
            hoppings=hoppings,
            pairings=(),
            bc=tuple(bc),
        )
    if q < 1 or gcd(p, q) != 1:
        raise StructuralError(f"flux p/q = {p}/{q} must be in lowest terms")
    if dims[1] % q != 0:
        raise StructuralError(
            f"dims[1] = {dims[1]} is incompatible with the magnetic cell of {q} sites"
        )
    phi = 2.0 * np.pi * p / q
    hoppings = [Term((1, 0), (m, m), np.exp(-1j * phi * m)) for m in range(q)]
    hoppings += [Term((0, 0), (m + 1, m), 1.0 + 0j) for m in range(q - 1)]
    hoppings.append(Term((0, 1), (0, q - 1), 1.0 + 0j))
    return LatticeModel(
        name=f"hofstadter[{p}/{q}]",
        dims=(int(dims[0]), int(dims[1]) // q),
        orbitals=q,
        hoppings=tuple(hoppings),
        pairings=(),
        bc=tuple(bc),
    )


def apply_disorder(model, cfg):
    """Return a copy of the model with a realized onsite disorder sample.

    Disorder enters h only (the pairing stays clean).  The "onsite-real-only"
    kind draws a real diagonal per site and preserves h = conj(h); the
    "onsite-uniform" kind draws a Hermitian intra-cell block whose
    off-diagonal entries are complex.
    """
    rng = np.random.default_rng(cfg.seed)
    ncell, L, W = model.n_cells, model.orbitals, cfg.amplitude
    blocks = np.zeros((ncell, L, L), dtype=complex)
    if W > 0:
        if cfg.kind == "onsite-real-only":
            vals = rng.uniform(-W / 2, W / 2, size=(ncell, L))
            for c in range(ncell):
                np.fill_diagonal(blocks[c], vals[c])
        else:
            raw = rng.uniform(-W / 2, W / 2, size=(ncell, L, L)) + 1j * rng.uniform(
                -W / 2, W / 2, size=(ncell, L, L)
            )
            blocks = 0.5 * (raw + np.conj(np.transpose(raw, (0, 2, 1))))
    prev = model.onsite if model.onsite is not None else 0.0
    return replace(model, disorder=cfg, onsite=prev + blocks)
