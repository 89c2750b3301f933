"""Explicit Bogoliubov diagonalization and the functional calculus built on it.

For thermodynamically stable operators (A = JH > 0) the similarity
T = |D|^{-1/2} U A^{1/2} brings H to a real diagonal D = diag(d, -d) with
d > 0 while preserving the particle-hole structure: T^* J T = J and
K conj(T) K = T.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import BdGOperator, conj_K, j_signs, opnorm
from .errors import DomainError, GapViolationError, StabilityError, ValidationError


def psd_sqrt(A, tol=None):
    """Unique positive-semidefinite square root of a Hermitian PSD matrix.

    Eigenvalues in [-tol, 0] are clamped to zero; anything more negative is a
    domain error.
    """
    A = np.asarray(A, dtype=complex)
    A = 0.5 * (A + A.conj().T)
    if tol is None:
        tol = 1e-12 * max(1.0, opnorm(A))
    w, V = np.linalg.eigh(A)
    if w[0] < -tol:
        raise DomainError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


@dataclass(eq=False)
class BogoliubovTransform:
    """T H T^{-1} = D with D = diag(d, -d), d > 0, and the achieved residuals."""

    T: np.ndarray
    T_inv: np.ndarray
    D: np.ndarray  # diagonal values, ordered (d_1..d_n, -d_1..-d_n)
    j_unitarity: float
    reality: float
    conjugation: float

    @property
    def D_matrix(self):
        return np.diag(self.D)


def _phase_fix(V):
    """Rotate each column so its largest-magnitude entry is real positive."""
    out = V.copy()
    for c in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, c])))
        z = out[i, c]
        if abs(z) > 0:
            out[:, c] *= np.conj(z) / abs(z)
    return out


def diagonalize(op, margin=1e-10):
    """Bogoliubov transform of a strictly thermodynamically stable operator.

    Follows the constructive route: G = A^{1/2} J A^{1/2} is Hermitian with
    K conj(G) K = -G; its positive eigenvectors V+ are completed by
    V- = K conj(V+) so that the assembled unitary U satisfies
    K conj(U) K = U, and T = |D|^{-1/2} U A^{1/2}.
    """
    H = op.H if isinstance(op, BdGOperator) else np.asarray(op, dtype=complex)
    n = H.shape[0] // 2
    js = j_signs(n)
    A = js[:, None] * H
    A = 0.5 * (A + A.conj().T)
    va, Va = np.linalg.eigh(A)
    if va[0] <= margin:
        raise StabilityError(
            f"Bogoliubov diagonalization needs A > 0; min eigenvalue {va[0]:.3e}"
        )
    R = (Va * np.sqrt(va)) @ Va.conj().T
    R_inv = (Va / np.sqrt(va)) @ Va.conj().T
    G = R @ (js[:, None] * R)
    G = 0.5 * (G + G.conj().T)
    g, Vg = np.linalg.eigh(G)
    if g[n - 1] >= 0 or g[n] <= 0:
        raise StabilityError("G = A^{1/2} J A^{1/2} lost its spectral symmetry")
    d = g[n:]
    Vp = _phase_fix(Vg[:, n:])
    perm = np.r_[n : 2 * n, 0:n]
    Vm = np.conj(Vp)[perm, :]  # K conj(V+): eigenvectors of G at -d
    W = np.hstack([Vp, Vm])
    U = W.conj().T
    dfull = np.concatenate([d, -d])
    scale = 1.0 / np.sqrt(np.abs(dfull))
    T = scale[:, None] * (U @ R)
    T_inv = R_inv @ W @ np.diag(np.sqrt(np.abs(dfull)))

    jT = opnorm(T.conj().T @ (js[:, None] * T) - np.diag(js))
    real = opnorm(conj_K(T) - T)
    conj = opnorm(T @ H @ T_inv - np.diag(dfull))
    return BogoliubovTransform(
        T=T, T_inv=T_inv, D=dfull, j_unitarity=jT, reality=real, conjugation=conj
    )


def functional_calculus(op, f, transform=None, check_tol=1e-8):
    """f(H) = T^{-1} f(D) T for a real function f sampled on the spectrum.

    For real-valued f the result satisfies f(H)^* = J f(H) J; the defect is
    verified and warned about beyond ``check_tol`` (relative).
    """
    bt = transform if transform is not None else diagonalize(op)
    vals = np.asarray([f(x) for x in bt.D], dtype=complex)
    F = bt.T_inv @ (vals[:, None] * bt.T)
    if np.abs(vals.imag).max() <= 1e-12 * max(1.0, np.abs(vals).max()):
        n = F.shape[0] // 2
        js = j_signs(n)
        defect = opnorm(F.conj().T - js[:, None] * F * js[None, :])
        if defect > check_tol * max(1.0, opnorm(F)):
            warnings.warn(
                f"functional calculus symmetry defect {defect:.2e}", stacklevel=2
            )
    return F


@dataclass(eq=False)
class ChiralBlock:
    """Off-diagonal block B of a chiral BdG operator H = [[0, B], [J B* J, 0]]."""

    B: np.ndarray
    plus_indices: np.ndarray
    minus_indices: np.ndarray
    chiral_defect: float
    min_singular_value: float

    def reconstruct(self):
        """Embed [[0, B], [J B* J, 0]] back into the original index order."""
        m = len(self.plus_indices) + len(self.minus_indices)
        js = j_signs(m // 2)
        out = np.zeros((m, m), dtype=complex)
        jp = js[self.plus_indices]
        jm = js[self.minus_indices]
        out[np.ix_(self.plus_indices, self.minus_indices)] = self.B
        out[np.ix_(self.minus_indices, self.plus_indices)] = (
            jm[:, None] * self.B.conj().T * jp[None, :]
        )
        return out


def enforce_chiral_blocks(op, grading=None, chiral_tol=1e-8, invertibility_limit=1e8):
    """Extract the chiral off-diagonal block B from an (approximately) chiral H.

    ``grading`` is the +/-1 vector on the particle-hole space (defaults to the
    operator's attached one-particle grading, extended diagonally).  The
    chiral-antisymmetric part (H - L H L)/2 is taken, so an approximate
    symmetry within ``chiral_tol`` is sufficient.
    """
    if isinstance(op, BdGOperator):
        H = op.H
        if grading is None:
            grading = op.chiral_ph
    else:
        H = np.asarray(op, dtype=complex)
    if grading is None:
        raise ValidationError("no chiral grading attached or provided")
    g = np.asarray(grading, dtype=float)
    scale = max(1.0, opnorm(H))
    defect = opnorm(g[:, None] * H * g[None, :] + H)
    if defect > chiral_tol * scale:
        raise ValidationError(
            f"chiral symmetry defect {defect:.3e} exceeds tolerance "
            f"{chiral_tol * scale:.3e}"
        )
    Hc = 0.5 * (H - g[:, None] * H * g[None, :])
    plus = np.where(g > 0)[0]
    minus = np.where(g < 0)[0]
    B = Hc[np.ix_(plus, minus)]
    sv = np.linalg.svd(B, compute_uv=False)
    smin = float(sv[-1]) if sv.size else 0.0
    if smin == 0.0 or sv[0] / smin > invertibility_limit:
        raise GapViolationError(
            f"chiral block is (numerically) singular: min singular value {smin:.3e}"
        )
    return ChiralBlock(
        B=B,
        plus_indices=plus,
        minus_indices=minus,
        chiral_defect=defect,
        min_singular_value=smin,
    )
