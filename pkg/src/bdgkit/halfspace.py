"""Half-space restrictions: cylinder spectra, boundary currents, instabilities.

A 2D model is restricted to a strip that stays periodic along axis 1 (the
edge direction, carrying the quasimomentum k1) and is cut open along axis 2
with Dirichlet truncation of the crossing bonds.  Optionally a positive
boundary operator A~ supported near the cut is added as J A~, which preserves
thermodynamic stability by construction.

The boundary current of a bump g supported in a bulk gap is

    current = (2 pi / n_k) sum_k Tr[ w g(H(k)) dH/dk ],

with w the indicator of the lower half of the strip selecting one edge.  For
thermodynamically stable families it equals minus the sum of the Chern
numbers of the bands below the gap; g(H) is evaluated through the
Hermitization G = A^{1/2} J A^{1/2} (direct eigendecomposition available as a
cross-check).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import j_signs, opnorm
from .errors import StabilityError, StructuralError, ValidationError
from .errors import GapViolationError
from .models import _closed_hoppings, _closed_pairings, assemble_model, one_particle_matrix, to_bloch
from .topology import positive_band_intervals


@dataclass(eq=False)
class CylinderFamily:
    """k1-fibered BdG family on a width-W strip (cells along the open axis)."""

    model: object
    mu: float
    width: int
    boundary_A: np.ndarray | None = None  # PSD, particle-hole structured

    def __post_init__(self):
        L = self.model.orbitals
        self._hops = _closed_hoppings(self.model.hoppings)
        self._pairs = _closed_pairings(self.model.pairings)
        reach = max(
            [abs(t.displacement[1]) for t in self._hops + self._pairs] or [0]
        )
        if self.width < max(reach, 2):
            raise StructuralError(
                f"width {self.width} is below the model range {reach} along the cut"
            )
        self.n_strip = L * self.width
        w = np.zeros(self.n_strip)
        w[: L * (self.width // 2)] = 1.0
        self.edge_weight = w

    def _strip_block(self, terms, k1, deriv=False):
        L = self.model.orbitals
        m = np.zeros((self.n_strip, self.n_strip), dtype=complex)
        for (a1, a2), (mi, mj), t in terms:
            phase = t * np.exp(-1j * k1 * a1)
            if deriv:
                phase *= -1j * a1
            for y in range(self.width):
                yp = y + a2
                if 0 <= yp < self.width:
                    m[yp * L + mi, y * L + mj] += phase
        return m

    def h_fiber(self, k1):
        return self._strip_block(self._hops, k1)

    def hamiltonian(self, k1):
        ns = self.n_strip
        eye = np.eye(ns)
        hp = self._strip_block(self._hops, k1) - self.mu * eye
        hh = np.conj(self._strip_block(self._hops, -k1)) - self.mu * eye
        dl = self._strip_block(self._pairs, k1)
        dlc = np.conj(self._strip_block(self._pairs, -k1))
        H = np.block([[hp, dl], [-dlc, -hh]])
        if self.boundary_A is not None:
            H = H + j_signs(ns)[:, None] * self.boundary_A
        return H

    def derivative(self, k1):
        """Analytic d/dk1 of the fiber; d/dk of -conj(X(-k)) is +conj(X'(-k))."""
        dp = self._strip_block(self._hops, k1, deriv=True)
        dh_hole = np.conj(self._strip_block(self._hops, -k1, deriv=True))
        dd = self._strip_block(self._pairs, k1, deriv=True)
        dd_hole = np.conj(self._strip_block(self._pairs, -k1, deriv=True))
        return np.block([[dp, dd], [dd_hole, dh_hole]])

    @property
    def edge_weight_ph(self):
        return np.concatenate([self.edge_weight, self.edge_weight])


def restrict(model, width, mu=None, boundary_perturbation=None):
    """Half-space restriction of a model.

    2D models give a CylinderFamily (periodic along axis 1, open along
    axis 2); 1D models give the finite open-chain BdG operator directly.
    """
    if mu is None:
        mu = model.mu if model.mu is not None else 0.0
    if len(model.dims) == 2:
        return CylinderFamily(model, float(mu), int(width), boundary_perturbation)
    if len(model.dims) == 1:
        from dataclasses import replace

        chain = replace(model, dims=(int(width),), bc=("open",))
        return assemble_model(chain, mu)
    raise StructuralError("restrict supports one- and two-dimensional models")


def random_boundary_perturbation(fam, norm, depth=2, seed=0):
    """Random PSD boundary operator with the particle-hole block structure.

    Supported on the ``depth`` cells next to the lower cut; shaped
    [[x, y], [conj(y), conj(x)]] with x Hermitian and y symmetric so that
    K conj(A~) K = A~, then shifted to be PSD and scaled to ``norm``.
    """
    rng = np.random.default_rng(seed)
    L = fam.model.orbitals
    nb = min(depth, fam.width) * L
    ns = fam.n_strip
    x = rng.standard_normal((nb, nb)) + 1j * rng.standard_normal((nb, nb))
    x = 0.5 * (x + x.conj().T)
    y = rng.standard_normal((nb, nb)) + 1j * rng.standard_normal((nb, nb))
    y = 0.5 * (y + y.T)
    block = np.block([[x, y], [y.conj(), x.conj()]])
    shift = -min(0.0, float(np.linalg.eigvalsh(block)[0]))
    block = block + (shift + 1e-9) * np.eye(2 * nb)
    block *= norm / opnorm(block)
    A = np.zeros((2 * ns, 2 * ns), dtype=complex)
    idx = np.concatenate([np.arange(nb), ns + np.arange(nb)])
    A[np.ix_(idx, idx)] = block
    return A


@dataclass(eq=False)
class EdgeReport:
    """Container for edge diagnostics; unused fields stay None."""

    k_points: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None
    edge_localization: np.ndarray | None = None
    boundary_current: float | None = None
    mu_values: np.ndarray | None = None
    nu_values: np.ndarray | None = None
    edge_growth: np.ndarray | None = None
    bulk_growth: np.ndarray | None = None
    bulk_gap: float | None = None


def edge_spectrum(fam, n_k=128):
    """Per-k1 eigenvalues and their weight on the selected edge."""
    ks = 2 * np.pi * np.arange(n_k) / n_k
    dim = 2 * fam.n_strip
    eigs = np.zeros((n_k, dim), dtype=complex)
    loc = np.zeros((n_k, dim))
    w = fam.edge_weight_ph
    for i, k1 in enumerate(ks):
        lam, V = np.linalg.eig(fam.hamiltonian(k1))
        order = np.lexsort((lam.imag, lam.real))
        lam, V = lam[order], V[:, order]
        eigs[i] = lam
        dens = np.abs(V) ** 2
        loc[i] = (w @ dens) / dens.sum(axis=0)
    return EdgeReport(k_points=ks, eigenvalues=eigs, edge_localization=loc)


def _bump_values(x, a, b):
    """C^1 polynomial bump on (a, b), unit integral: 30 (x-a)^2 (b-x)^2 / (b-a)^5."""
    y = np.zeros_like(np.asarray(x, dtype=float))
    m = (x > a) & (x < b)
    y[m] = 30.0 * (x[m] - a) ** 2 * (b - x[m]) ** 2 / (b - a) ** 5
    return y


def bulk_gap_after_band(model, mu, j, grid=(40, 40)):
    """Spectral gap of the bulk family above the j-th positive pointwise band.

    Pointwise bands that overlap as intervals merge, so the gap is between
    the highest top among bands <= j and the lowest bottom among bands > j.
    """
    bands = positive_band_intervals(model, mu, grid)
    if not 1 <= j < len(bands) + 1:
        raise StructuralError(f"gap index {j} out of range for {len(bands)} bands")
    if j == len(bands):
        raise GapViolationError(f"no band above index {j}")
    lo = max(hi for (_, hi) in bands[:j])
    hi = min(lo_ for (lo_, _) in bands[j:])
    if hi - lo <= 0:
        raise GapViolationError(
            f"bands {j} and {j + 1} overlap as intervals ([{lo:.4f}, {hi:.4f}]); "
            "no spectral gap to probe"
        )
    return lo, hi


def boundary_current(
    fam,
    gap,
    n_k=200,
    bump_margin=0.2,
    method="hermitize",
    band_grid=(40, 40),
):
    """Edge current of a unit bump supported in the bulk gap.

    ``gap`` is either an explicit interval (lo, hi) inside a bulk gap or an
    integer j meaning the gap above the j-th positive band.  For stable
    families Theorem-level quantization gives minus the summed Chern numbers
    of the bands below the bump.
    """
    if isinstance(gap, (int, np.integer)):
        lo, hi = bulk_gap_after_band(fam.model, fam.mu, int(gap), band_grid)
    else:
        lo, hi = float(gap[0]), float(gap[1])
        bands = positive_band_intervals(fam.model, fam.mu, band_grid)
        for blo, bhi in bands:
            if bhi > lo and blo < hi:
                raise ValidationError(
                    f"bump support ({lo:.4f}, {hi:.4f}) intersects the bulk band "
                    f"[{blo:.4f}, {bhi:.4f}]"
                )
    a = lo + bump_margin * (hi - lo)
    b = hi - bump_margin * (hi - lo)
    ns = fam.n_strip
    js = j_signs(ns)
    w = fam.edge_weight_ph
    acc = 0.0
    for k1 in 2 * np.pi * np.arange(n_k) / n_k:
        H = fam.hamiltonian(k1)
        dH = fam.derivative(k1)
        if method == "hermitize":
            A = js[:, None] * H
            A = 0.5 * (A + A.conj().T)
            va, Va = np.linalg.eigh(A)
            if va[0] <= 1e-10:
                raise StabilityError(
                    f"cylinder fiber lost thermodynamic stability at k1 = {k1:.4f} "
                    f"(min eig A = {va[0]:.3e})"
                )
            R = (Va * np.sqrt(va)) @ Va.conj().T
            R_inv = (Va / np.sqrt(va)) @ Va.conj().T
            G = R @ (js[:, None] * R)
            vg, Vg = np.linalg.eigh(0.5 * (G + G.conj().T))
            gH = R_inv @ ((Vg * _bump_values(vg, a, b)) @ Vg.conj().T) @ R
        elif method == "eig":
            lam, S = np.linalg.eig(H)
            if np.abs(lam.imag).max() > 1e-8 * max(1.0, np.abs(lam).max()):
                raise StabilityError(f"nonreal cylinder spectrum at k1 = {k1:.4f}")
            gH = (S * _bump_values(lam.real, a, b)) @ np.linalg.inv(S)
        else:
            raise StructuralError(f"unknown method {method!r}")
        acc += float(np.real(np.trace((w[:, None] * gH) @ dH)))
    return 2 * np.pi * acc / n_k


# ---------------------------------------------------------------------------
# instability scans (scenario 1) and scenario-2 spectral conditions
# ---------------------------------------------------------------------------


def _growth_from_levels(levels, mu, nu):
    """max Im of +/- sqrt((e - mu)^2 - nu^2) over real levels e."""
    x = nu * nu - (levels - mu) ** 2
    x = x[x > 0]
    return float(np.sqrt(x.max())) if x.size else 0.0


def instability_scan(model, mu_values, nu_values, verify_points=3, seed=0):
    """Growth-rate maps of the open chain and the periodic bulk over (mu, nu).

    For real h the spectrum of the BdG operator with uniform driving i nu is
    the exact image +/- sqrt((sigma(h) - mu)^2 - nu^2) of the one-particle
    levels, so the scan diagonalizes h once per geometry.  A few grid points
    are re-checked against the dense BdG eigenproblem.  For complex h the
    scan falls back to dense eigenvalues everywhere.
    """
    if len(model.dims) != 1:
        raise StructuralError("instability scans are for one-dimensional models")
    mu_values = np.asarray(mu_values, dtype=float)
    nu_values = np.asarray(nu_values, dtype=float)
    h_open = one_particle_matrix(model, bc=("open",))
    h_per = one_particle_matrix(model, bc=("periodic",))
    real_h = opnorm(h_open - h_open.conj()) <= 1e-12 * max(1.0, opnorm(h_open))

    edge = np.zeros((len(mu_values), len(nu_values)))
    bulk = np.zeros_like(edge)
    if real_h:
        lev_open = np.linalg.eigvalsh(h_open)
        lev_per = np.linalg.eigvalsh(h_per)
        for i, mu in enumerate(mu_values):
            for j, nu in enumerate(nu_values):
                edge[i, j] = _growth_from_levels(lev_open, mu, nu)
                bulk[i, j] = _growth_from_levels(lev_per, mu, nu)
        rng = np.random.default_rng(seed)
        for _ in range(min(verify_points, edge.size)):
            i = int(rng.integers(len(mu_values)))
            j = int(rng.integers(len(nu_values)))
            g = _dense_growth(h_open, mu_values[i], nu_values[j])
            if abs(g - edge[i, j]) > 1e-8 * max(1.0, opnorm(h_open)):
                raise StabilityError(
                    f"spectral-map fast path disagrees with dense eigenvalues at "
                    f"(mu, nu) = ({mu_values[i]}, {nu_values[j]}): {edge[i, j]} vs {g}"
                )
    else:
        for i, mu in enumerate(mu_values):
            for j, nu in enumerate(nu_values):
                edge[i, j] = _dense_growth(h_open, mu, nu)
                bulk[i, j] = _dense_growth(h_per, mu, nu)

    g_bulk = float(np.abs(np.linalg.eigvalsh(h_per)).min())
    return EdgeReport(
        mu_values=mu_values,
        nu_values=nu_values,
        edge_growth=edge,
        bulk_growth=bulk,
        bulk_gap=g_bulk if real_h else None,
    )


def _dense_growth(h, mu, nu):
    n = h.shape[0]
    eye = np.eye(n)
    H = np.block(
        [
            [h - mu * eye, 1j * nu * eye],
            [1j * nu * eye, -(h.conj() - mu * eye)],
        ]
    )
    return float(np.abs(np.linalg.eigvals(H).imag).max())


@dataclass(frozen=True)
class Scenario2Report:
    bulk_disjoint: bool
    edge_overlap: bool
    gap_interval: tuple
    mu_window: tuple
    band_intervals: tuple


def scenario2_conditions(model, mu, width=24, n_k=200, pair_tol=1e-2, grid=(48, 48)):
    """Spectral-disjointness conditions for edge-only instabilities.

    Checks that the shifted bulk spectrum sigma(h - mu) avoids its reflection
    -(sigma(h) - mu) (bands of opposite Krein signature stay separated) while
    the half-space spectrum does not, and returns the signature-separating
    gap between I1' - mu and mu - I1'.
    """
    bloch = to_bloch(model)
    n1, n2 = grid
    mins = maxs = None
    for i in range(n1):
        for j in range(n2):
            k = np.array([2 * np.pi * i / n1, 2 * np.pi * j / n2])
            ev = np.linalg.eigvalsh(bloch.h(k))
            mins = ev.copy() if mins is None else np.minimum(mins, ev)
            maxs = ev.copy() if maxs is None else np.maximum(maxs, ev)
    bands = [(float(lo), float(hi)) for lo, hi in zip(mins, maxs)]

    shifted = [(lo - mu, hi - mu) for lo, hi in bands]
    reflected = [(mu - hi, mu - lo) for lo, hi in bands]
    disjoint = True
    for slo, shi in shifted:
        for rlo, rhi in reflected:
            if shi > rlo + 1e-12 and slo < rhi - 1e-12:
                disjoint = False

    fam = CylinderFamily(model, float(mu), int(width))
    levels = []
    for k1 in 2 * np.pi * np.arange(n_k) / n_k:
        levels.append(np.linalg.eigvalsh(fam.h_fiber(k1)))
    levels = np.sort(np.concatenate(levels) - mu)
    # edge overlap: some e, e' in sigma(h^ - mu) with e approximately -e'
    mirror = np.sort(-levels)
    pos = np.clip(np.searchsorted(mirror, levels), 1, len(mirror) - 1)
    minpair = float(
        np.minimum(
            np.abs(levels - mirror[pos - 1]), np.abs(levels - mirror[pos])
        ).min()
    )
    edge_overlap = minpair <= pair_tol

    i1 = bands[0]
    gap_interval = (i1[1] - mu, mu - i1[1])
    mu_window = (i1[1], 0.5 * (bands[0][0] + bands[1][0])) if len(bands) > 1 else (i1[1], np.inf)
    return Scenario2Report(
        bulk_disjoint=bool(disjoint),
        edge_overlap=bool(edge_overlap),
        gap_interval=gap_interval,
        mu_window=mu_window,
        band_intervals=tuple(bands),
    )
