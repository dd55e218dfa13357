"""Hierarchy of auxiliary density operators (ADOs) and its propagator.

The open-system state is extended to a family of 4x4 matrices, one per
multi-index ``n = (n_mk)`` with a slot for each (qubit m, series term k)
pair. Only the all-zero index is the physical density matrix; deeper ADOs
carry system-bath correlation information. Indices are truncated at total
depth ``sum(n_mk) <= L``; couplings that would leave the truncation read
zeros.

The right-hand side evaluated here, per ADO:

* coherent motion ``-i[H, rho_n]`` and damping ``-(sum n_mk gamma_k) rho_n``,
* a double-commutator correction ``-delta_m [V_m, [V_m, rho_n]]`` per bath
  compensating the truncated series tail,
* coupling to the shallower neighbor of each slot,
  ``-i n_mk (c_k V_m rho_{n_mk-1} - conj(c_k) rho_{n_mk-1} V_m)``,
* coupling to the deeper neighbor, ``-i [V_m, rho_{n_mk+1}]``.

Storage is one contiguous ``(N, 4, 4)`` complex block plus flat integer
neighbor tables; the tables are compiled once into sparse coupling matrices
so the hot loop is a handful of batched 4x4 products and sparse-dense
products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import sparse
from scipy.integrate import RK45

from .bath import matsubara_expansion
from .errors import (
    CapacityError,
    DimensionError,
    ParameterError,
    PropagationError,
    StiffnessError,
)
from .qmatrix import IDENTITY_2, SIGMA_X, check_density_matrix, trace_distance

__all__ = [
    "SystemModel",
    "system_hamiltonian",
    "Hierarchy",
    "build_hierarchy",
    "HierarchyState",
    "HierarchyRHS",
    "heom_rhs",
    "SolverSettings",
    "Trajectory",
    "propagate",
    "converge",
    "ConvergenceInfo",
    "DEFAULT_MAX_ADOS",
    "LOWERING_COUNT_CONVENTION",
]

#: default cap on the number of ADOs a hierarchy may hold
DEFAULT_MAX_ADOS = 100_000

#: min eigenvalue of the physical state below which propagation is declared failed
POSITIVITY_LIMIT = 1e-4

#: The coupling to shallower neighbors is scaled by the slot count before
#: the decrement (n_mk, not n_mk - 1). Recorded here because the printed
#: form of the equation leaves the evaluation order ambiguous.
LOWERING_COUNT_CONVENTION = "pre-decrement"


@dataclass(frozen=True)
class SystemModel:
    """Two-qubit system: Hamiltonian and per-qubit bath coupling operators.

    ``hamiltonian = epsilon*(n1 + n2) + zeta*(sx (x) sx)`` in the fixed
    basis; the coupling operators are ``sx (x) I`` and ``I (x) sx`` (the
    two-level truncation of position-like couplings).
    """

    epsilon: float
    zeta: float
    hamiltonian: np.ndarray = field(repr=False)
    couplings: tuple = field(repr=False)


def system_hamiltonian(epsilon, zeta):
    """Build the SystemModel for energy gap ``epsilon`` and qubit-qubit
    coupling ``zeta`` (both in units of delta)."""
    number_op = np.diag([0.0, 1.0]).astype(complex)
    h = epsilon * (np.kron(number_op, IDENTITY_2) + np.kron(IDENTITY_2, number_op))
    h = h + zeta * np.kron(SIGMA_X, SIGMA_X)
    v1 = np.kron(SIGMA_X, IDENTITY_2)
    v2 = np.kron(IDENTITY_2, SIGMA_X)
    for arr in (h, v1, v2):
        arr.setflags(write=False)
    return SystemModel(epsilon=float(epsilon), zeta=float(zeta),
                       hamiltonian=h, couplings=(v1, v2))


def _enumerate_indices(slots, depth):
    """All multi-indices with ``slots`` nonnegative entries summing to at
    most ``depth``, in lexicographic order."""
    out = []
    idx = [0] * slots

    def rec(pos, remaining):
        if pos == slots:
            out.append(tuple(idx))
            return
        for v in range(remaining + 1):
            idx[pos] = v
            rec(pos + 1, remaining - v)
        idx[pos] = 0

    rec(0, depth)
    return out


@dataclass(frozen=True)
class Hierarchy:
    """Enumerated truncated index set with precomputed neighbor tables.

    ``lower[i, m, k]`` / ``upper[i, m, k]`` hold the array position of the
    index with slot (m, k) decremented / incremented, or ``size`` (one past
    the end) when the neighbor falls outside the truncation; the propagator
    keeps a zero matrix at that sentinel row.
    """

    cutoff: int
    depth: int
    indices: tuple = field(repr=False)
    position: dict = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    @property
    def size(self):
        return len(self.indices)

    @property
    def n_slots(self):
        return 2 * (self.cutoff + 1)


def build_hierarchy(K, L, max_ados=DEFAULT_MAX_ADOS):
    """Enumerate all ADO multi-indices for Matsubara cutoff K and depth L.

    The index set has ``2*(K+1)`` slots (two baths, K+1 series terms each)
    and contains ``binomial(2*(K+1) + L, L)`` members.

    Raises
    ------
    CapacityError
        If the member count exceeds ``max_ados``; the message carries the
        computed count.
    """
    if K < 0 or L < 0:
        raise ParameterError(f"K and L must be >= 0, got K={K}, L={L}")
    slots = 2 * (K + 1)
    count = comb(slots + L, L)
    if count > max_ados:
        raise CapacityError(
            f"hierarchy with K={K}, L={L} needs {count} ADOs, "
            f"over the budget of {max_ados}"
        )
    indices = _enumerate_indices(slots, L)
    position = {t: i for i, t in enumerate(indices)}
    n = len(indices)
    lower = np.full((n, 2, K + 1), n, dtype=np.int64)
    upper = np.full((n, 2, K + 1), n, dtype=np.int64)
    for i, t in enumerate(indices):
        work = list(t)
        total = sum(t)
        for s in range(slots):
            m, k = divmod(s, K + 1)
            v = work[s]
            if v > 0:
                work[s] = v - 1
                lower[i, m, k] = position[tuple(work)]
                work[s] = v
            if total < L:
                work[s] = v + 1
                upper[i, m, k] = position[tuple(work)]
                work[s] = v
    counts = np.asarray(indices, dtype=float).reshape(n, 2, K + 1)
    for arr in (lower, upper, counts):
        arr.setflags(write=False)
    return Hierarchy(cutoff=K, depth=L, indices=tuple(indices),
                     position=position, lower=lower, upper=upper, counts=counts)


@dataclass
class HierarchyState:
    """A full hierarchy snapshot: the dense ADO block plus its structure."""

    hierarchy: Hierarchy
    ados: np.ndarray

    @classmethod
    def from_density_matrix(cls, hierarchy, rho):
        """Factorized start: the physical state at the root, zeros elsewhere."""
        ados = np.zeros((hierarchy.size, 4, 4), dtype=complex)
        ados[0] = np.asarray(rho, dtype=complex)
        return cls(hierarchy=hierarchy, ados=ados)

    @property
    def density_matrix(self):
        """The physical (all-zero-index) entry."""
        return self.ados[0]


class HierarchyRHS:
    """Precompiled right-hand-side evaluator for one (model, baths) setup.

    Callable on an ``(N, 4, 4)`` ADO block; returns its time derivative.
    The neighbor tables are compiled once into sparse coupling matrices so
    the hot loop is batched 4x4 products plus a few sparse-dense products
    over the flattened block. Pure function of the input, safe to share
    across threads.
    """

    def __init__(self, hierarchy, model, baths):
        baths = tuple(baths)
        if len(baths) != 2:
            raise DimensionError(f"expected one bath expansion per qubit, got {len(baths)}")
        for b in baths:
            if b.cutoff != hierarchy.cutoff:
                raise DimensionError(
                    f"bath expansion cutoff {b.cutoff} does not match "
                    f"hierarchy cutoff {hierarchy.cutoff}"
                )
        self.hierarchy = hierarchy
        self.model = model
        self.baths = baths
        self._h = model.hamiltonian
        self._v = model.couplings
        rates = np.stack([b.gammas for b in baths])           # (2, K+1)
        self._damping = np.einsum("nmk,mk->n", hierarchy.counts, rates)
        self._terminators = [b.terminator for b in baths]
        self._size = hierarchy.size

        # Couplings between depths, summed over series slots: row i collects
        # its K+1 neighbors of each direction in one sparse product against
        # the flattened (V rho) / (rho V) blocks. Column `size` is the zero
        # sentinel row of the extended block. Weights of the shallower links
        # are the slot count (taken before the decrement) times the series
        # amplitude; the -i prefactors are folded in here once.
        n = hierarchy.size
        rows = np.repeat(np.arange(n), hierarchy.cutoff + 1)
        self._left_coupling = []
        self._right_coupling = []
        for m in range(2):
            up = sparse.coo_matrix(
                (np.ones(rows.shape, dtype=complex),
                 (rows, hierarchy.upper[:, m, :].ravel())),
                shape=(n, n + 1),
            ).tocsr()
            weights = (hierarchy.counts[:, m, :] * baths[m].coeffs[None, :]).ravel()
            down = sparse.coo_matrix(
                (weights, (rows, hierarchy.lower[:, m, :].ravel())),
                shape=(n, n + 1),
            ).tocsr()
            self._left_coupling.append((-1j * (down + up)).tocsr())
            self._right_coupling.append((1j * (down.conj() + up)).tocsr())

    def __call__(self, ados):
        n = self._size
        ext = np.empty((n + 1, 4, 4), dtype=complex)
        ext[:n] = ados
        ext[n] = 0.0
        block = ext[:n]

        h = self._h
        out = -1j * (h @ block - block @ h)
        out -= self._damping[:, None, None] * block

        for m in range(2):
            v = self._v[m]
            va = v @ ext
            av = ext @ v
            # double commutator [V, [V, rho]] = VVrho - 2 VrhoV + rhoVV
            out -= self._terminators[m] * (v @ va[:n] - 2.0 * (va[:n] @ v) + av[:n] @ v)
            out += (self._left_coupling[m] @ va.reshape(n + 1, 16)
                    + self._right_coupling[m] @ av.reshape(n + 1, 16)).reshape(n, 4, 4)
        return out


def heom_rhs(state, model, baths):
    """Time derivative of a hierarchy snapshot (convenience wrapper).

    For repeated evaluation construct a :class:`HierarchyRHS` once instead.
    """
    evaluator = HierarchyRHS(state.hierarchy, model, baths)
    return HierarchyState(hierarchy=state.hierarchy, ados=evaluator(state.ados))


@dataclass(frozen=True)
class SolverSettings:
    """Adaptive Runge-Kutta 4(5) settings for the propagator."""

    atol: float = 1e-10
    rtol: float = 1e-8
    max_step: float = np.inf
    max_ados: int = DEFAULT_MAX_ADOS


@dataclass(frozen=True)
class Trajectory:
    """Physical-state snapshots on the output grid plus run health metrics.

    ``states[i]`` is hermitized (averaged with its conjugate transpose);
    ``max_hermiticity_residual`` is measured before that correction so it
    reflects the raw integrator output.
    """

    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    cutoff: int
    depth: int
    ado_count: int
    n_rhs_evals: int
    max_trace_drift: float
    max_hermiticity_residual: float
    min_eigenvalue: float

    def __len__(self):
        return len(self.times)


def propagate(initial, model, baths, grid, depth, solver=SolverSettings()):
    """Propagate a two-qubit state through the truncated hierarchy.

    Parameters
    ----------
    initial : (4, 4) array_like
        Physical density matrix at t = 0. All deeper ADOs start at zero
        (system and baths initially uncorrelated).
    model : SystemModel
    baths : (BathExpansion, BathExpansion)
        One expansion per qubit; both must share the hierarchy cutoff.
    grid : 1d array_like
        Strictly increasing output times starting at 0.
    depth : int
        Truncation level L.
    solver : SolverSettings

    Returns
    -------
    Trajectory

    Raises
    ------
    StiffnessError
        If the adaptive integrator cannot take a valid step.
    PropagationError
        If the output state's lowest eigenvalue drops below -1e-4.
    """
    rho0 = check_density_matrix(initial, dim=4)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 1 or np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be a strictly increasing 1d time array")
    if grid[0] < 0:
        raise ParameterError("grid times must be nonnegative")

    baths = tuple(baths)
    hier = build_hierarchy(baths[0].cutoff, depth, max_ados=solver.max_ados)
    rhs = HierarchyRHS(hier, model, baths)
    n = hier.size

    def fun(_t, y):
        return rhs(y.reshape(n, 4, 4)).reshape(-1)

    y0 = np.zeros(n * 16, dtype=complex)
    y0[:16] = rho0.reshape(-1)

    # step manually and interpolate only the physical block onto the grid;
    # materializing the full hierarchy at every output time would cost
    # len(grid) * N * 16 complex values
    stepper = RK45(fun, 0.0, y0, t_bound=float(grid[-1]),
                   rtol=solver.rtol, atol=solver.atol, max_step=solver.max_step)
    out = np.empty((len(grid), 16), dtype=complex)
    next_idx = 0
    if grid[0] == 0.0:
        out[0] = y0[:16]
        next_idx = 1
    while next_idx < len(grid):
        message = stepper.step()
        if stepper.status == "failed":
            raise StiffnessError(f"integrator failed: {message}")
        dense = None
        while next_idx < len(grid) and grid[next_idx] <= stepper.t + 1e-12:
            if dense is None:
                dense = stepper.dense_output()
            out[next_idx] = dense(grid[next_idx])[:16]
            next_idx += 1
        if stepper.status == "finished" and next_idx < len(grid):
            raise StiffnessError("integrator stopped before covering the grid")

    raw = out.reshape(-1, 4, 4)
    herm_res = float(np.max(np.abs(raw - raw.conj().transpose(0, 2, 1))))
    states = 0.5 * (raw + raw.conj().transpose(0, 2, 1))
    traces = np.einsum("tii->t", states).real
    drift = float(np.max(np.abs(traces - 1.0)))
    min_eig = float(np.min(np.linalg.eigvalsh(states)))
    if min_eig < -POSITIVITY_LIMIT:
        raise PropagationError(
            f"state positivity violated: eigenvalue {min_eig:.3e} below "
            f"-{POSITIVITY_LIMIT:g}; deepen the truncation or loosen tolerances"
        )
    states.setflags(write=False)
    return Trajectory(times=grid, states=states, cutoff=hier.cutoff,
                      depth=depth, ado_count=n, n_rhs_evals=int(stepper.nfev),
                      max_trace_drift=drift, max_hermiticity_residual=herm_res,
                      min_eigenvalue=min_eig)


@dataclass(frozen=True)
class ConvergenceInfo:
    """Escalation record: stages visited and the final successive distance."""

    cutoff: int
    depth: int
    stages: tuple
    final_distance: float
    tolerance: float


def _max_trace_distance(a, b):
    return max(trace_distance(x, y) for x, y in zip(a.states, b.states))


def converge(initial, model, bath_params, grid, solver=SolverSettings(),
             start=(0, 0), tol=1e-5, max_stages=40, terminator_mode="closed-form"):
    """Escalate the truncation until the trajectory stops moving.

    Alternates ``K -> K+1`` and ``L -> L+2`` steps from ``start``, comparing
    successive physical-state trajectories in trace distance over the grid.
    A direction whose step changes the trajectory by less than ``tol`` is
    frozen (further escalation there is pointless and would exhaust the ADO
    budget); the run is converged once every active direction's last step is
    below ``tol``. Both baths use the same parameters.

    Returns
    -------
    (ConvergenceInfo, Trajectory)
        The certified pair (its trajectory differs from every next-step
        refinement by less than ``tol``) and the trajectory computed at it.

    Raises
    ------
    CapacityError
        If escalation exceeds the ADO budget before converging.
    ParameterError
        If ``max_stages`` runs out first.
    """

    def run(k, ell):
        baths = (matsubara_expansion(bath_params, k, terminator_mode),) * 2
        return propagate(initial, model, baths, grid, ell, solver)

    k, ell = start
    current = run(k, ell)
    stages = [(k, ell)]
    frozen = {"K": False, "L": False}
    distances = {}
    turn = 0
    for _ in range(max_stages):
        if all(frozen.values()):
            break
        direction = ("K", "L")[turn] if not frozen[("K", "L")[turn]] else ("K", "L")[1 - turn]
        turn = 1 - turn
        nk, nl = (k + 1, ell) if direction == "K" else (k, ell + 2)
        candidate = run(nk, nl)
        dist = _max_trace_distance(current, candidate)
        distances[direction] = dist
        if dist < tol:
            # (k, ell) is certified against refinement in this direction;
            # an escalated direction stays frozen so the ladder cannot walk
            # expensive, already-irrelevant probes back up the budget
            frozen[direction] = True
        else:
            k, ell = nk, nl
            current = candidate
            stages.append((k, ell))
    else:
        raise ParameterError(
            f"no convergence after {max_stages} escalation stages "
            f"(last successive distances {distances})"
        )
    info = ConvergenceInfo(cutoff=k, depth=ell, stages=tuple(stages),
                           final_distance=max(distances.values()),
                           tolerance=tol)
    return info, current
