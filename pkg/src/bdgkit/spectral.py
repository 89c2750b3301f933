"""Non-Hermitian eigenanalysis of BdG operators.

Spectra, Krein signatures, Riesz projections (eigendecomposition route),
band clustering and the stability dichotomy: thermodynamic (A = JH >= 0)
versus dynamical (real spectrum).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .bogoliubov import psd_sqrt
from .core import BdGOperator, apply_J, conj_K, j_signs, opnorm
from .errors import GapViolationError, StabilityError

ILL_CONDITION_LIMIT = 1e12


def _as_matrix(op):
    return op.H if isinstance(op, BdGOperator) else np.asarray(op, dtype=complex)


def multiset_defect(a, b):
    """max over greedy nearest-neighbour matching of |a_i - b_j|.

    Robust multiset comparison for eigenvalue lists (order-free).
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise ValueError("multisets must have equal size")
    remaining = list(b)
    worst = 0.0
    for x in sorted(a, key=lambda z: (z.real, z.imag)):
        dists = [abs(x - y) for y in remaining]
        i = int(np.argmin(dists))
        worst = max(worst, dists[i])
        remaining.pop(i)
    return worst


@dataclass(eq=False)
class SpectralData:
    """Full eigendecomposition of a BdG operator with Krein metadata.

    ``krein_signatures`` holds +1/-1 for J-definite real eigenvalues, 0 for
    indefinite degenerate clusters; entries where ``real_mask`` is False are
    0 and mean "nonreal".
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    inverse: np.ndarray
    krein_signatures: np.ndarray
    real_mask: np.ndarray
    max_growth_rate: float
    condition: float
    reconstruction_defect: float
    fourfold_defect: float
    ill_conditioned: bool


def spectrum(op, tol=None):
    """Eigendecomposition with real-snapping and Krein signatures.

    Eigenvalues with |Im| below ``tol`` (default 1e-9 * ||H||) are snapped to
    the real axis; signatures of real eigenvalues come from the spectral
    subspace Gram matrix psi_i^* J psi_j, "indefinite" when its eigenvalues
    mix signs.
    """
    H = _as_matrix(op)
    n2 = H.shape[0]
    scale = max(opnorm(H), 1e-300)
    if tol is None:
        tol = 1e-9 * scale
    lam, S = np.linalg.eig(H)
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    S = S[:, order]
    cond = float(np.linalg.cond(S))
    ill = cond > ILL_CONDITION_LIMIT
    if ill:
        warnings.warn(
            f"eigenvector matrix is ill-conditioned (cond = {cond:.2e}); "
            "results near a Krein collision are unreliable",
            stacklevel=2,
        )
    Sinv = np.linalg.inv(S)
    real_mask = np.abs(lam.imag) < tol
    lam = np.where(real_mask, lam.real + 0j, lam)

    recon = opnorm(H - (S * lam[None, :]) @ Sinv) / scale
    ff = multiset_defect(lam, -lam)
    ff = max(ff, multiset_defect(lam, np.conj(lam)))

    js = j_signs(n2 // 2)
    sig = np.zeros(n2, dtype=int)
    idx = np.where(real_mask)[0]  # already sorted by real part
    ctol = max(tol, 1e-12 * scale)
    clusters = []
    for i in idx:
        if clusters and lam[i].real - lam[clusters[-1][-1]].real <= ctol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    for cluster in clusters:
        psi = S[:, cluster]
        gram = psi.conj().T @ (js[:, None] * psi)
        gev = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
        gtol = 1e-10 * max(1.0, np.abs(gev).max())
        if np.all(gev > gtol):
            s = 1
        elif np.all(gev < -gtol):
            s = -1
        else:
            s = 0
        for j in cluster:
            sig[j] = s
    return SpectralData(
        eigenvalues=lam,
        right_vectors=S,
        inverse=Sinv,
        krein_signatures=sig,
        real_mask=real_mask,
        max_growth_rate=float(np.abs(lam.imag).max()) if n2 else 0.0,
        condition=cond,
        reconstruction_defect=recon,
        fourfold_defect=ff,
        ill_conditioned=ill,
    )


@dataclass(frozen=True)
class StabilityVerdict:
    dynamically_stable: bool
    thermodynamically_stable: bool
    max_growth_rate: float
    min_A_eigenvalue: float
    definitizable_hint: bool


def classify_stability(op, tol=None):
    """Dynamical (real spectrum) and thermodynamical (A >= 0) stability.

    Thermodynamic stability implies dynamical stability; the implication is
    asserted whenever A is positive with a safe margin, so a violation marks
    an internal numerical inconsistency rather than physics.
    """
    H = _as_matrix(op)
    scale = max(opnorm(H), 1e-300)
    if tol is None:
        tol = 1e-9 * scale
    A = apply_J(H)
    minA = float(np.linalg.eigvalsh(0.5 * (A + A.conj().T))[0])
    sd = spectrum(op, tol=tol)
    dyn = sd.max_growth_rate <= tol
    thermo = minA >= -tol
    if minA > 1e-8 * scale and not dyn:
        raise StabilityError(
            f"A > 0 (min eig {minA:.3e}) but spectrum left the real axis "
            f"(growth {sd.max_growth_rate:.3e}); numerical inconsistency"
        )
    hint = dyn and not np.any(sd.krein_signatures[sd.real_mask] == 0)
    return StabilityVerdict(
        dynamically_stable=bool(dyn),
        thermodynamically_stable=bool(thermo),
        max_growth_rate=sd.max_growth_rate,
        min_A_eigenvalue=minA,
        definitizable_hint=bool(hint),
    )


@dataclass(eq=False)
class BandIdempotent:
    """Riesz idempotent Q of a band interval with its orthogonal range projection."""

    interval: tuple
    Q: np.ndarray
    range_projection: np.ndarray
    index: int | None = None

    @property
    def rank(self):
        return int(round(np.trace(self.Q).real))


def _range_projection(Q):
    P = Q @ np.linalg.inv(np.eye(Q.shape[0]) + (Q - Q.conj().T))
    return 0.5 * (P + P.conj().T)


def riesz_projection(op, interval, tol=None, resolvent_margin=None, _sd=None):
    """Spectral idempotent onto eigenvalues with real part inside ``interval``.

    Endpoints must sit in the resolvent set: any eigenvalue within
    ``resolvent_margin`` (default 1e-6 * ||H||) of an endpoint raises a
    GapViolationError naming it.
    """
    H = _as_matrix(op)
    scale = max(opnorm(H), 1e-300)
    if resolvent_margin is None:
        resolvent_margin = 1e-6 * scale
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise GapViolationError(f"empty interval {interval}")
    sd = _sd if _sd is not None else spectrum(op, tol=tol)
    lam = sd.eigenvalues
    for edge in (lo, hi):
        d = np.abs(lam - edge)
        i = int(np.argmin(d))
        if d[i] < resolvent_margin:
            raise GapViolationError(
                f"interval endpoint {edge} lies within {resolvent_margin:.2e} "
                f"of eigenvalue {lam[i]}",
                offending=lam[i],
            )
    sel = np.where((lam.real > lo) & (lam.real < hi) & sd.real_mask)[0]
    Q = sd.right_vectors[:, sel] @ sd.inverse[sel, :]
    idem = opnorm(Q @ Q - Q)
    if idem > 1e-9 * max(1.0, opnorm(Q) ** 2):
        warnings.warn(f"Riesz projection idempotency defect {idem:.2e}", stacklevel=2)
    return BandIdempotent(interval=(lo, hi), Q=Q, range_projection=_range_projection(Q))


def band_structure(op, gap_tol=None, tol=None):
    """Cluster a real spectrum into gap-separated bands and their idempotents.

    Bands are indexed ... I_{-2} < I_{-1} < 0 < I_1 < I_2 ...; a band that
    straddles zero gets index 0.  The particle-hole pairing K conj(Q_j) K =
    Q_{-j} is verified and warned about when violated beyond 1e-8.
    """
    H = _as_matrix(op)
    scale = max(opnorm(H), 1e-300)
    sd = spectrum(op, tol=tol)
    if not np.all(sd.real_mask):
        raise StabilityError(
            f"band structure needs a real spectrum; max growth rate "
            f"{sd.max_growth_rate:.3e}"
        )
    if gap_tol is None:
        gap_tol = 1e-8 * scale
    vals = np.sort(sd.eigenvalues.real)
    splits = np.where(np.diff(vals) > gap_tol)[0]
    groups = np.split(vals, splits + 1)
    intervals = [(g[0], g[-1]) for g in groups]

    pad = [0.25 * gap_tol] * len(intervals)
    bands = []
    for (lo, hi), eps in zip(intervals, pad):
        bands.append(riesz_projection(op, (lo - eps, hi + eps), tol=tol, resolvent_margin=0.0, _sd=sd))

    # index assignment: positive bands 1..J, negative -1..-J, zero-straddling 0
    for b in bands:
        lo, hi = b.interval
        if lo < 0 < hi:
            b.index = 0
    pos = [b for b in bands if b.interval[0] >= 0 and b.index is None]
    neg = [b for b in bands if b.interval[1] <= 0 and b.index is None]
    for i, b in enumerate(sorted(pos, key=lambda b: b.interval[0])):
        b.index = i + 1
    for i, b in enumerate(sorted(neg, key=lambda b: -b.interval[1])):
        b.index = -(i + 1)

    by_index = {b.index: b for b in bands}
    worst = 0.0
    for b in bands:
        if b.index and -b.index in by_index:
            worst = max(worst, opnorm(conj_K(b.Q) - by_index[-b.index].Q))
    if worst > 1e-8 * max(1.0, max(opnorm(b.Q) for b in bands)):
        warnings.warn(
            f"particle-hole pairing of band idempotents violated: defect {worst:.2e}",
            stacklevel=2,
        )
    return sorted(bands, key=lambda b: b.interval[0])


def hermitize(op, margin=1e-10):
    """Similarity M H M^{-1} = G with G = A^{1/2} J A^{1/2} Hermitian, M = A^{1/2}.

    Requires A = JH strictly positive; raises StabilityError naming the
    bottom of sigma(A) otherwise.  sigma(G) = sigma(H) as multisets.
    """
    H = _as_matrix(op)
    A = apply_J(H)
    A = 0.5 * (A + A.conj().T)
    evA = np.linalg.eigvalsh(A)
    if evA[0] <= margin:
        raise StabilityError(
            f"hermitization needs A > 0; min eigenvalue of A is {evA[0]:.3e}"
        )
    M = psd_sqrt(A)
    js = j_signs(H.shape[0] // 2)
    G = M @ (js[:, None] * M)
    G = 0.5 * (G + G.conj().T)
    return G, M
