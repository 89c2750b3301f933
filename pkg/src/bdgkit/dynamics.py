"""Time evolution on the particle-hole space.

The propagator e^{-iHt} lies in the J-unitary group with real structure
(T^* J T = J, K conj(T) K = T); both defects are reported.  Exact
exponentiation is the primary path: eigendecomposition when the eigenbasis
is well-conditioned, scaling-and-squaring otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import BdGOperator, conj_K, j_signs, opnorm

EIG_CONDITION_LIMIT = 1e8


@dataclass(eq=False)
class Propagator:
    t: float
    U: np.ndarray
    j_unitarity_defect: float
    reality_defect: float


def _as_matrix(op):
    return op.H if isinstance(op, BdGOperator) else np.asarray(op, dtype=complex)


def propagator(op, t):
    """U_t = exp(-i H t) with its Lie-group membership defects."""
    H = _as_matrix(op)
    lam, S = np.linalg.eig(H)
    if np.linalg.cond(S) < EIG_CONDITION_LIMIT:
        U = (S * np.exp(-1j * lam * t)) @ np.linalg.inv(S)
    else:
        U = expm(-1j * t * H)
    js = j_signs(H.shape[0] // 2)
    jdef = opnorm(U.conj().T @ (js[:, None] * U) - np.diag(js))
    rdef = opnorm(conj_K(U) - U)
    return Propagator(t=float(t), U=U, j_unitarity_defect=jdef, reality_defect=rdef)


def heisenberg_evolve(op, B, t):
    """Quadratic-observable flow B(t) = e^{iHt} B e^{-iHt} solving dB/dt = i[H, B]."""
    H = _as_matrix(op)
    B = np.asarray(B, dtype=complex)
    if B.shape != H.shape:
        raise ValueError(f"observable shape {B.shape} does not match {H.shape}")
    lam, S = np.linalg.eig(H)
    if np.linalg.cond(S) < EIG_CONDITION_LIMIT:
        Sinv = np.linalg.inv(S)
        left = (S * np.exp(1j * lam * t)) @ Sinv
        right = (S * np.exp(-1j * lam * t)) @ Sinv
    else:
        left = expm(1j * t * H)
        right = expm(-1j * t * H)
    return left @ B @ right
