"""Independent brute-force oracles.

These live in the shipped library, not in the test tree, so every run can
audit itself and record the outcome in its report: hard-to-verify physics
deserves a second, dumber opinion. Each oracle deliberately avoids the code
path it checks:

* closed-system propagation goes through an exact eigendecomposition,
* the measurement maximization is re-done as an exhaustive dense grid built
  from literal projection operators and LAPACK eigenvalues,
* the hierarchy right-hand side is re-evaluated with naive dictionary
  lookups instead of precompiled coupling matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlations import MeasurementAngles
from .errors import OracleError
from .hierarchy import HierarchyState
from .qmatrix import partial_trace, von_neumann_entropy

__all__ = [
    "OracleReport",
    "closed_system_propagate",
    "grid_classical_correlation",
    "exhaustive_rhs",
    "random_x_state",
]

#: cap on exhaustive measurement-grid evaluations
GRID_BUDGET = 1 << 22

#: cap on hierarchy size for the naive right-hand-side evaluation
EXHAUSTIVE_RHS_MAX_ADOS = 100


@dataclass(frozen=True)
class OracleReport:
    """Outcome of one oracle check; passes iff deviation is within tolerance."""

    name: str
    max_deviation: float
    tolerance: float
    passed: bool
    inputs: str

    @classmethod
    def from_deviation(cls, name, max_deviation, tolerance, inputs):
        return cls(name=name, max_deviation=float(max_deviation),
                   tolerance=float(tolerance),
                   passed=bool(max_deviation <= tolerance), inputs=inputs)


def closed_system_propagate(rho0, model, t):
    """Exact unitary evolution ``exp(-iHt) rho exp(+iHt)`` via eigendecomposition."""
    rho0 = np.asarray(rho0, dtype=complex)
    energies, basis = np.linalg.eigh(model.hamiltonian)
    phases = np.exp(-1j * energies * float(t))
    evolve = (basis * phases) @ basis.conj().T
    return evolve @ rho0 @ evolve.conj().T


def grid_classical_correlation(rho, n_theta, n_phi):
    """Exhaustive measurement maximization on a uniform angle grid.

    Evaluates the classical-correlation objective at every node of an
    ``n_theta x n_phi`` grid on [0, pi/2] x [0, 2pi) by explicitly forming
    each projection operator, projecting the state and taking LAPACK
    eigenvalues, i.e. the textbook route with none of the optimizer's
    shortcuts. The result is a certified lower bound on the true maximum.

    Returns
    -------
    (float, MeasurementAngles)
    """
    if n_theta * n_phi > GRID_BUDGET:
        raise OracleError(
            f"grid {n_theta}x{n_phi} exceeds the {GRID_BUDGET} evaluation budget"
        )
    rho = np.asarray(rho, dtype=complex)
    entropy_a = von_neumann_entropy(partial_trace(rho, "A"))

    thetas = np.linspace(0.0, np.pi / 2, n_theta)
    phis = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    eye2 = np.eye(2, dtype=complex)

    best_val = np.inf
    best_it = best_ip = 0
    # evaluated in theta blocks to bound the temporaries
    block = max(1, (1 << 17) // n_phi)
    for start in range(0, n_theta, block):
        tg, pg = np.meshgrid(thetas[start:start + block], phis, indexing="ij")
        st, ct = np.sin(tg), np.cos(tg)
        cross = st * ct * np.exp(1j * pg)
        proj = np.empty(tg.shape + (2, 2), dtype=complex)
        proj[..., 0, 0] = ct * ct
        proj[..., 1, 1] = st * st
        proj[..., 1, 0] = cross
        proj[..., 0, 1] = np.conj(cross)

        cond_entropy = np.zeros(tg.shape)
        for branch in range(2):
            if branch == 1:
                proj = eye2 - proj
            big = np.einsum("ab,...cd->...acbd", eye2, proj).reshape(tg.shape + (4, 4))
            sub = big @ rho @ big
            reduced = sub.reshape(tg.shape + (2, 2, 2, 2))
            reduced = np.einsum("...abcb->...ac", reduced)
            q = np.einsum("...aa->...", reduced).real
            live = q > 1e-12
            lam = np.linalg.eigvalsh(np.where(live[..., None, None], reduced, eye2))
            lam = np.clip(lam / np.where(live, q, 1.0)[..., None], 0.0, 1.0)
            ent = -np.sum(np.where(lam > 0, lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0),
                          axis=-1)
            cond_entropy += np.where(live, q * ent, 0.0)

        flat = int(np.argmin(cond_entropy))
        it, ip = divmod(flat, n_phi)
        if cond_entropy[it, ip] < best_val:
            best_val = float(cond_entropy[it, ip])
            best_it, best_ip = start + it, ip

    value = max(float(entropy_a - best_val), 0.0)
    return value, MeasurementAngles(theta=float(thetas[best_it]), phi=float(phis[best_ip]))


def random_x_state(rng):
    """Random two-qubit X-state: diagonal plus anti-diagonal support only.

    Populations are Dirichlet-like, coherences drawn inside the positivity
    disks ``|rho_03| <= sqrt(p0 p3)``, ``|rho_12| <= sqrt(p1 p2)``.
    """
    pops = rng.exponential(size=4)
    pops /= pops.sum()
    rho = np.diag(pops).astype(complex)
    for (a, b) in ((0, 3), (1, 2)):
        r = rng.uniform(0.0, 1.0) * np.sqrt(pops[a] * pops[b])
        phase = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        rho[a, b] = r * phase
        rho[b, a] = np.conj(rho[a, b])
    return rho


def exhaustive_rhs(state, model, baths):
    """Hierarchy right-hand side by naive multi-index dictionary lookup.

    Walks every ADO in Python, resolving neighbors through the index map and
    substituting zeros outside the truncation. Only sensible for tiny
    hierarchies; guards at 100 ADOs.
    """
    hier = state.hierarchy
    if hier.size > EXHAUSTIVE_RHS_MAX_ADOS:
        raise OracleError(
            f"exhaustive evaluation capped at {EXHAUSTIVE_RHS_MAX_ADOS} ADOs, "
            f"hierarchy has {hier.size}"
        )
    baths = tuple(baths)
    h = model.hamiltonian
    zero = np.zeros((4, 4), dtype=complex)
    out = np.empty_like(state.ados)
    for i, index in enumerate(hier.indices):
        rho = state.ados[i]
        acc = -1j * (h @ rho - rho @ h)
        for m in range(2):
            v = model.couplings[m]
            gammas = baths[m].gammas
            coeffs = baths[m].coeffs
            acc = acc - baths[m].terminator * (v @ (v @ rho) - 2.0 * (v @ rho @ v) + (rho @ v) @ v)
            for k in range(hier.cutoff + 1):
                slot = m * (hier.cutoff + 1) + k
                n_mk = index[slot]
                acc = acc - n_mk * gammas[k] * rho

                lower = list(index)
                lower[slot] -= 1
                rho_lo = state.ados[hier.position[tuple(lower)]] if n_mk > 0 else zero
                acc = acc - 1j * n_mk * (coeffs[k] * (v @ rho_lo)
                                         - np.conj(coeffs[k]) * (rho_lo @ v))

                upper = list(index)
                upper[slot] += 1
                pos = hier.position.get(tuple(upper))
                rho_up = state.ados[pos] if pos is not None else zero
                acc = acc - 1j * (v @ rho_up - rho_up @ v)
        out[i] = acc
    return HierarchyState(hierarchy=hier, ados=out)
