"""Particle-hole data model and BdG operator assembly.

The particle-hole space is ordered particle block first, hole block second,
site-major and orbital-minor inside each block.  With that ordering the
fundamental symmetry J = diag(1, -1) and the real structure K = offdiag(1, 1)
act by sign flips and block swaps, so they are kept as index operations and
never materialized as dense matrices.

Conventions used throughout the package:

* ``H = [[h - mu, delta], [-conj(delta), -(conj(h) - mu)]]`` acting on the
  doubled space, ``A = J H`` Hermitian.
* particle-hole symmetry: ``K conj(H) K = -H``; J-selfadjointness:
  ``H^* = J H J``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import StructuralError, ValidationError

ASSEMBLY_TOL = 1e-12
SYMMETRY_TOL = 1e-10


def opnorm(m):
    """Spectral norm (largest singular value)."""
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def j_signs(n):
    """Diagonal of J on a 2n-dimensional particle-hole space."""
    return np.concatenate([np.ones(n), -np.ones(n)])


def apply_J(m):
    """J @ m without forming J."""
    n = m.shape[0] // 2
    out = m.copy()
    out[n:] *= -1.0
    return out


def conj_K(m):
    """K @ conj(m) @ K: complex conjugation followed by the block swap."""
    n = m.shape[0] // 2
    perm = np.r_[n : 2 * n, 0:n]
    return np.conj(m)[np.ix_(perm, perm)]


def real_symplectic_form(n):
    """The real unitary I = [[0, -1], [1, 0]] on a 2n-dimensional space."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def cayley_transform(n):
    """The Cayley transform C relating J-unitaries to real symplectic matrices."""
    eye = np.eye(n)
    return np.block([[eye, -1j * eye], [eye, 1j * eye]]) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class OneParticleOperator:
    """Hermitian one-particle Hamiltonian block h on a tight-binding sample.

    ``dims`` are site extents per axis, ``orbitals`` the internal dimension,
    ``bc`` the boundary condition per axis ("periodic" or "open").
    """

    matrix: np.ndarray
    dims: tuple
    orbitals: int
    bc: tuple
    is_real: bool


@dataclass(frozen=True, eq=False)
class PairingOperator:
    """Symmetric pairing block delta, same dimension as its partner h."""

    matrix: np.ndarray


def one_particle(matrix, dims=None, orbitals=None, bc=None, tol=ASSEMBLY_TOL):
    """Validate and wrap a Hermitian matrix as a OneParticleOperator.

    ``dims``/``orbitals`` default to a single cell carrying the whole matrix
    as internal space, which is the right reading for Bloch fibers and toy
    models.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError(f"h must be a square matrix, got shape {m.shape}")
    scale = max(1.0, opnorm(m))
    herm_defect = opnorm(m - m.conj().T)
    if herm_defect > tol * scale:
        raise ValidationError(
            f"h is not Hermitian: defect {herm_defect:.3e} exceeds {tol * scale:.3e}"
        )
    m = 0.5 * (m + m.conj().T)
    if dims is None:
        dims = (1,)
    if orbitals is None:
        orbitals = m.shape[0] // int(np.prod(dims))
    if int(np.prod(dims)) * orbitals != m.shape[0]:
        raise StructuralError(
            f"dims {dims} x orbitals {orbitals} != matrix dimension {m.shape[0]}"
        )
    if bc is None:
        bc = ("periodic",) * len(dims)
    is_real = opnorm(m - m.conj()) <= tol * scale
    return OneParticleOperator(m, tuple(dims), int(orbitals), tuple(bc), bool(is_real))


def pairing(matrix, warn_tol=1e-8):
    """Symmetrize and wrap a pairing matrix.

    The antisymmetric part carries no physical content and is discarded; a
    warning is emitted when it is larger than round-off.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError(f"delta must be a square matrix, got shape {m.shape}")
    asym = 0.5 * (m - m.T)
    defect = opnorm(asym)
    if defect > warn_tol * max(1.0, opnorm(m)):
        warnings.warn(
            f"antisymmetric part of delta (norm {defect:.3e}) discarded",
            stacklevel=2,
        )
    return PairingOperator(0.5 * (m + m.T))


@dataclass(eq=False)
class BdGOperator:
    """BdG operator assembled from blocks (h, delta, mu).

    ``H`` and ``A = J H`` are materialized lazily.  ``chiral`` is an optional
    +/-1 grading vector on the one-particle space (extended diagonally to the
    particle-hole space) used by the chiral-symmetry machinery.
    """

    h: OneParticleOperator
    delta: PairingOperator
    mu: float
    chiral: np.ndarray | None = None

    @property
    def n(self):
        return self.h.matrix.shape[0]

    @property
    def dim(self):
        return 2 * self.n

    @cached_property
    def H(self):
        hm = self.h.matrix
        dl = self.delta.matrix
        H0 = np.block([[hm, dl], [-dl.conj(), -hm.conj()]])
        # H = H0 - mu*J keeps the mu-shift identity exact in floating point
        return H0 - self.mu * np.diag(j_signs(self.n))

    @cached_property
    def A(self):
        return apply_J(self.H)

    @property
    def chiral_ph(self):
        if self.chiral is None:
            return None
        return np.concatenate([self.chiral, self.chiral])


@dataclass(frozen=True)
class SymmetryDefects:
    """Operator-norm defects of the structural symmetries of a BdG operator."""

    phs: float
    j_selfadjoint: float
    chiral: float | None = None


def assemble_bdg(h, delta, mu=0.0, chiral=None):
    """Assemble H = [[h - mu, d], [-conj(d), -(conj(h) - mu)]].

    ``h`` and ``delta`` may be raw square arrays or already-wrapped operators;
    raw input is validated (h Hermitian, delta symmetrized).
    """
    if not isinstance(h, OneParticleOperator):
        h = one_particle(h)
    if not isinstance(delta, PairingOperator):
        delta = pairing(delta)
    if delta.matrix.shape != h.matrix.shape:
        raise StructuralError(
            f"h and delta dimensions differ: {h.matrix.shape} vs {delta.matrix.shape}"
        )
    if chiral is not None:
        chiral = np.asarray(chiral, dtype=float)
        if chiral.shape != (h.matrix.shape[0],):
            raise StructuralError("chiral grading must have one entry per one-particle basis state")
    return BdGOperator(h, delta, float(mu), chiral)


def check_symmetries(op):
    """Operator-norm defects of PHS, J-selfadjointness and (optionally) chirality.

    Accepts a BdGOperator or a bare particle-hole matrix.
    """
    H = op.H if isinstance(op, BdGOperator) else np.asarray(op, dtype=complex)
    phs = opnorm(conj_K(H) + H)
    js = j_signs(H.shape[0] // 2)
    jsa = opnorm(H.conj().T - js[:, None] * H * js[None, :])
    chiral = None
    if isinstance(op, BdGOperator) and op.chiral is not None:
        g = op.chiral_ph
        chiral = opnorm(g[:, None] * H * g[None, :] + H)
    return SymmetryDefects(phs=phs, j_selfadjoint=jsa, chiral=chiral)


def toy2(mu, nu):
    """2x2 Krein-collision toy model [[mu, i nu], [i nu, -mu]].

    Eigenvalues are +/- sqrt(mu^2 - nu^2): real for |mu| >= |nu|, a purely
    imaginary pair otherwise (tangent bifurcation through zero).
    """
    return assemble_bdg(np.array([[mu]], dtype=complex), np.array([[1j * nu]]), 0.0)


def toy4(lam, nu):
    """4x4 toy model of the quadruple Krein collision, eigenvalues +/-lam +/- i nu."""
    if not (lam > 0 and nu > 0):
        warnings.warn(
            f"toy4 is stated for lam, nu > 0; got lam={lam}, nu={nu}", stacklevel=2
        )
    h = np.diag([lam, -lam]).astype(complex)
    d = np.array([[0.0, 1j * nu], [1j * nu, 0.0]])
    return assemble_bdg(h, d, 0.0)


# ---------------------------------------------------------------------------
# JSON matrix schema: {dims, orbitals, bc, shape, entries as [re, im] pairs}
# ---------------------------------------------------------------------------


def matrix_to_payload(matrix, dims=(1,), orbitals=None, bc=("periodic",)):
    """Encode a complex matrix in the documented JSON-friendly schema."""
    m = np.asarray(matrix, dtype=complex)
    if orbitals is None:
        orbitals = m.shape[0] // int(np.prod(dims))
    entries = [[[float(v.real), float(v.imag)] for v in row] for row in m]
    return {
        "dims": list(int(d) for d in dims),
        "orbitals": int(orbitals),
        "bc": list(bc),
        "shape": [int(m.shape[0]), int(m.shape[1])],
        "entries": entries,
    }


def matrix_from_payload(payload):
    """Decode the JSON schema back into (matrix, dims, orbitals, bc)."""
    shape = tuple(payload["shape"])
    m = np.array(
        [[complex(re, im) for re, im in row] for row in payload["entries"]],
        dtype=complex,
    )
    if m.shape != shape:
        raise StructuralError(f"payload shape {shape} does not match entries {m.shape}")
    return m, tuple(payload["dims"]), int(payload["orbitals"]), tuple(payload["bc"])
