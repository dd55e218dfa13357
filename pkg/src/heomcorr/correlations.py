"""Mutual information, classical correlation and quantum discord.

Classical correlation is the information about qubit A extractable by a
projective measurement on qubit B, maximized over the measurement axis
(theta, phi). The maximization runs a coarse grid followed by coordinate
descent; an exhaustive dense-grid oracle for it lives in
:mod:`heomcorr.oracles`. Quantum discord is the remainder of the mutual
information. All quantities are in bits.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .qmatrix import partial_trace, von_neumann_entropy

__all__ = [
    "OptimizerSettings",
    "MeasurementAngles",
    "CorrelationPoint",
    "measurement_projectors",
    "conditional_states",
    "mutual_information",
    "classical_correlation",
    "quantum_discord",
    "correlation_trajectory",
]

#: measurement branches with probability below this contribute zero entropy
BRANCH_FLOOR = 1e-12


@dataclass(frozen=True)
class OptimizerSettings:
    """Measurement-maximization controls.

    The coarse stage evaluates ``n_theta x n_phi`` axes; coordinate descent
    then refines from the best grid cell, its 8 neighbors and the warm-start
    angles, stopping once no move improves the objective by ``refine_tol``.
    """

    n_theta: int = 64
    n_phi: int = 128
    refine_tol: float = 1e-10


@dataclass(frozen=True)
class MeasurementAngles:
    """Measurement axis on the Bloch sphere: theta in [0, pi/2], phi in [0, 2pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (-1e-12 <= self.theta <= np.pi / 2 + 1e-12):
            raise ParameterError(f"theta {self.theta} outside [0, pi/2]")
        object.__setattr__(self, "theta", float(min(max(self.theta, 0.0), np.pi / 2)))
        object.__setattr__(self, "phi", float(np.mod(self.phi, 2.0 * np.pi)))


@dataclass(frozen=True)
class CorrelationPoint:
    """Correlations of one snapshot, plus the optimizer's argmax context.

    ``lambda_lo/hi`` are the eigenvalues of the parallel-branch conditional
    state at the optimal axis; the perpendicular branch is kept alongside
    since either one may be the physically interesting trace.
    """

    t: float
    mutual_info: float
    classical: float
    discord: float
    angles: MeasurementAngles
    lambda_lo: float
    lambda_hi: float
    lambda_lo_perp: float
    lambda_hi_perp: float


def measurement_projectors(angles):
    """The orthonormal projector pair for a measurement axis.

    Returns ``(pi_par, pi_perp)`` as 2x2 matrices in the ``|0>, |1>`` basis:
    ``pi_par = cos^2(th)|0><0| + sin^2(th)|1><1|
    + sin(th)cos(th)(e^{i phi}|1><0| + e^{-i phi}|0><1|)`` and its complement.
    """
    th, ph = angles.theta, angles.phi
    st, ct = np.sin(th), np.cos(th)
    cross = st * ct * np.exp(1j * ph)
    pi_par = np.array([[ct * ct, np.conj(cross)], [cross, st * st]], dtype=complex)
    pi_perp = np.array([[st * st, -np.conj(cross)], [-cross, ct * ct]], dtype=complex)
    return pi_par, pi_perp


def conditional_states(rho, angles):
    """Measure qubit B along ``angles``; return ``[(q_j, rho_A_j)]`` branches.

    ``q_j`` is the branch probability and ``rho_A_j`` the normalized
    conditional state of qubit A. A branch with probability below 1e-12
    gets the maximally mixed placeholder; its entropy weight vanishes anyway.
    """
    rho = np.asarray(rho, dtype=complex)
    out = []
    for proj in measurement_projectors(angles):
        full = np.kron(np.eye(2, dtype=complex), proj)
        sub = full @ rho @ full
        q = float(np.trace(sub).real)
        if q < BRANCH_FLOOR:
            out.append((q, np.eye(2, dtype=complex) / 2.0))
        else:
            out.append((q, partial_trace(sub, keep="A") / q))
    return out


def mutual_information(rho):
    """Total correlations ``S(rho_A) + S(rho_B) - S(rho_AB)`` in bits."""
    rho = np.asarray(rho, dtype=complex)
    return (
        von_neumann_entropy(partial_trace(rho, "A"))
        + von_neumann_entropy(partial_trace(rho, "B"))
        - von_neumann_entropy(rho)
    )


# ---------------------------------------------------------------------------
# batched objective machinery


def _projector_batch(theta, phi):
    """Parallel-branch projectors for angle arrays; shape (..., 2, 2)."""
    st, ct = np.sin(theta), np.cos(theta)
    cross = st * ct * np.exp(1j * phi)
    out = np.empty(np.shape(theta) + (2, 2), dtype=complex)
    out[..., 0, 0] = ct * ct
    out[..., 1, 1] = st * st
    out[..., 1, 0] = cross
    out[..., 0, 1] = np.conj(cross)
    return out


def _entropy_2x2_batch(mats):
    """Entropy in bits of normalized 2x2 Hermitian matrices, analytic eigenvalues."""
    tr = (mats[..., 0, 0] + mats[..., 1, 1]).real
    det = (mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]).real
    half_gap = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0)) / 2.0
    out = np.zeros(mats.shape[:-2])
    for lam in (tr / 2.0 - half_gap, tr / 2.0 + half_gap):
        lam = np.clip(lam, 0.0, 1.0)
        pos = lam > 0.0
        out -= np.where(pos, lam * np.log2(np.where(pos, lam, 1.0)), 0.0)
    return out


def _conditional_entropy_batch(rho_r, theta, phi):
    """``sum_j q_j S(rho_A^j)`` for angle arrays; rho_r is rho.reshape(2,2,2,2).

    Uses ``Tr_B[(I (x) P) rho (I (x) P)] = Tr_B[rho (I (x) P)]`` (P idempotent)
    so each branch is a single contraction of rho with the projector.
    """
    proj = _projector_batch(theta, phi)
    out = np.zeros(np.shape(theta))
    for branch in range(2):
        if branch == 1:
            proj = np.eye(2) - proj
        cond = np.einsum("abcd,...db->...ac", rho_r, proj)
        q = (cond[..., 0, 0] + cond[..., 1, 1]).real
        live = q > BRANCH_FLOOR
        safe_q = np.where(live, q, 1.0)
        ent = _entropy_2x2_batch(cond / safe_q[..., None, None])
        out += np.where(live, q * ent, 0.0)
    return out


def _coordinate_descent(rho_r, seeds, step0, refine_tol):
    """Minimize the conditional entropy from several seeds at once.

    Each seed walks theta/phi with a shared shrinking step; theta clamps to
    [0, pi/2], phi wraps. Returns (value, theta, phi) per seed.
    """
    theta = np.array([s[0] for s in seeds])
    phi = np.array([s[1] for s in seeds])
    value = _conditional_entropy_batch(rho_r, theta, phi)
    step = step0
    while True:
        moved = False
        for dth, dph in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            cand_th = np.clip(theta + dth, 0.0, np.pi / 2)
            cand_ph = np.mod(phi + dph, 2.0 * np.pi)
            cand_val = _conditional_entropy_batch(rho_r, cand_th, cand_ph)
            better = cand_val < value - refine_tol
            if np.any(better):
                theta = np.where(better, cand_th, theta)
                phi = np.where(better, cand_ph, phi)
                value = np.where(better, cand_val, value)
                moved = True
        if not moved:
            # quadratic around the optimum: once steps this small stop
            # clearing refine_tol the value is resolved to that tolerance
            if step <= 1e-6:
                break
            step *= 0.5
    return value, theta, phi


def classical_correlation(rho, opt=OptimizerSettings(), warm_start=None):
    """Maximal classical correlation and the measurement axis achieving it.

    Two-stage search: a coarse ``n_theta x n_phi`` grid over the full angle
    ranges, then coordinate descent seeded from the best grid cell and its
    8 neighbors (plus ``warm_start`` when given, so trajectory scans track
    the argmax branch continuously). Ties resolve to the smallest theta,
    then smallest phi.

    Returns
    -------
    (float, MeasurementAngles)
    """
    rho = np.asarray(rho, dtype=complex)
    rho_r = rho.reshape(2, 2, 2, 2)
    entropy_a = von_neumann_entropy(partial_trace(rho, "A"))

    thetas = np.linspace(0.0, np.pi / 2, opt.n_theta)
    phis = np.linspace(0.0, 2.0 * np.pi, opt.n_phi, endpoint=False)
    tgrid, pgrid = np.meshgrid(thetas, phis, indexing="ij")
    ce = _conditional_entropy_batch(rho_r, tgrid, pgrid)
    flat_best = int(np.argmin(ce))          # first minimum: smallest theta, phi
    it, ip = divmod(flat_best, opt.n_phi)

    seeds = []
    for dt in (0, -1, 1):
        for dp in (0, -1, 1):
            jt = min(max(it + dt, 0), opt.n_theta - 1)
            jp = (ip + dp) % opt.n_phi
            seeds.append((thetas[jt], phis[jp]))
    if warm_start is not None:
        seeds.append((warm_start.theta, warm_start.phi))

    step0 = max(thetas[1] - thetas[0], phis[1] - phis[0])
    value, theta, phi = _coordinate_descent(rho_r, seeds, step0, opt.refine_tol)

    order = np.lexsort((phi, theta, value))  # min value, then min theta, phi
    best = order[0]
    c = max(float(entropy_a - value[best]), 0.0)
    if c < 1e-12:
        # flat landscape (uncorrelated state): the argmax is noise, pick the
        # canonical axis
        return c, MeasurementAngles(theta=0.0, phi=0.0)
    return c, MeasurementAngles(theta=float(theta[best]), phi=float(phi[best]))


def quantum_discord(rho, opt=OptimizerSettings(), warm_start=None):
    """Quantum part of the correlations, ``Q = I - C``.

    Returns ``(Q, point)`` where ``point`` is a :class:`CorrelationPoint`
    with ``t = nan`` carrying I, C, the optimal axis and the conditional
    state eigenvalues of both measurement branches.
    """
    rho = np.asarray(rho, dtype=complex)
    info = mutual_information(rho)
    c, angles = classical_correlation(rho, opt, warm_start)
    q = info - c

    branches = conditional_states(rho, angles)
    eigs = []
    for _, cond in branches:
        lam = np.linalg.eigvalsh(cond)
        eigs.append((float(lam[0]), float(lam[1])))
    point = CorrelationPoint(
        t=float("nan"), mutual_info=info, classical=c, discord=q, angles=angles,
        lambda_lo=eigs[0][0], lambda_hi=eigs[0][1],
        lambda_lo_perp=eigs[1][0], lambda_hi_perp=eigs[1][1],
    )
    return q, point


def correlation_trajectory(times, states, opt=OptimizerSettings()):
    """Correlations along a state trajectory, one point per snapshot.

    The optimizer is warm-started from the previous snapshot's angles (and
    still grid-checked globally), so the reported argmax branch is tracked
    continuously; a branch switch is exactly what shows up downstream as a
    sudden change.
    """
    times = np.asarray(times, dtype=float)
    if len(times) != len(states):
        raise ParameterError(
            f"times ({len(times)}) and states ({len(states)}) lengths differ"
        )
    if len(times) == 0:
        raise ParameterError("empty trajectory")
    points = []
    warm = None
    for t, rho in zip(times, states):
        _, point = quantum_discord(rho, opt, warm_start=warm)
        warm = point.angles
        points.append(dataclasses.replace(point, t=float(t)))
    return points
