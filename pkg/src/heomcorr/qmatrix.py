"""Dense complex-matrix primitives for two-qubit states.

Everything here operates on plain ``numpy`` arrays. The two-qubit basis is
fixed once and for all as ``|00>, |01>, |10>, |11>`` with qubit A the slow
(left) index, so ``index = 2*a + b``. All entropies are in bits (log base 2).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, PositivityError

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENTITY_2",
    "tensor_product",
    "partial_trace",
    "hermitian_eigenvalues",
    "von_neumann_entropy",
    "hermiticity_residual",
    "check_density_matrix",
    "bell_odd_state",
    "bell_even_state",
    "trace_distance",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

#: eigenvalues in [-ENTROPY_CLIP, 0) are treated as exact zeros before the log;
#: anything more negative signals integrator breakdown and raises.
ENTROPY_CLIP = 1e-6


def _as_square(mat, name="matrix"):
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def tensor_product(a, b):
    """Kronecker product of two single-qubit operators.

    The composite acts as ``(a (x) b)(|x> (x) |y>) = a|x> (x) b|y>`` in the
    fixed ``|00>,|01>,|10>,|11>`` ordering.
    """
    a = _as_square(a, "a")
    b = _as_square(b, "b")
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise DimensionError(
            f"tensor_product expects two 2x2 operators, got {a.shape} and {b.shape}"
        )
    return np.kron(a, b)


def partial_trace(rho, keep):
    """Trace out one qubit of a two-qubit operator.

    Parameters
    ----------
    rho : (4, 4) array_like
        Two-qubit operator. The trace need not be 1; conditional
        (unnormalized) states are traced as-is and renormalization is the
        caller's job.
    keep : {"A", "B"}
        Which subsystem survives.

    Returns
    -------
    (2, 2) ndarray
        Reduced operator; its trace equals the input trace up to rounding.
    """
    rho = _as_square(rho, "rho")
    if rho.shape != (4, 4):
        raise DimensionError(f"partial_trace expects a 4x4 matrix, got {rho.shape}")
    r = rho.reshape(2, 2, 2, 2)
    if keep == "A":
        return np.einsum("abcb->ac", r)
    if keep == "B":
        return np.einsum("abad->bd", r)
    raise DimensionError(f"keep must be 'A' or 'B', got {keep!r}")


def hermitian_eigenvalues(rho, herm_tol=1e-8):
    """Real eigenvalues of a Hermitian matrix, sorted ascending."""
    rho = _as_square(rho, "rho")
    if hermiticity_residual(rho) > herm_tol:
        raise DimensionError(
            f"matrix is not Hermitian within {herm_tol:g} "
            f"(residual {hermiticity_residual(rho):.3e})"
        )
    return np.linalg.eigvalsh(rho)


def von_neumann_entropy(rho):
    """Von Neumann entropy in bits, ``-sum(lam * log2(lam))``.

    Eigenvalues in ``[-1e-6, 0)`` are clipped to zero (roundoff slack);
    anything more negative raises :class:`PositivityError`, which signals
    a broken state coming from upstream rather than harmless noise.
    ``0*log2(0)`` is taken as 0.
    """
    lam = hermitian_eigenvalues(rho)
    low = float(lam[0])
    if low < -ENTROPY_CLIP:
        raise PositivityError(
            f"eigenvalue {low:.3e} below -{ENTROPY_CLIP:g}; state is not positive"
        )
    lam = np.clip(lam, 0.0, 1.0)
    nz = lam > 0.0
    return float(-np.sum(lam[nz] * np.log2(lam[nz])))


def hermiticity_residual(rho):
    """Max-norm distance between ``rho`` and its conjugate transpose."""
    rho = np.asarray(rho)
    return float(np.max(np.abs(rho - rho.conj().T)))


def check_density_matrix(rho, dim=None, herm_tol=1e-10, trace_tol=1e-8, eig_floor=-1e-8):
    """Validate the density-matrix invariants; returns the array on success.

    Checks hermiticity, unit trace and eigenvalue positivity (with slack
    ``eig_floor`` for roundoff).
    """
    rho = _as_square(rho, "rho")
    if dim is not None and rho.shape != (dim, dim):
        raise DimensionError(f"expected a {dim}x{dim} matrix, got {rho.shape}")
    if rho.shape[0] not in (2, 4):
        raise DimensionError(f"density matrices here are 2x2 or 4x4, got {rho.shape}")
    res = hermiticity_residual(rho)
    if res > herm_tol:
        raise DimensionError(f"not Hermitian: residual {res:.3e} > {herm_tol:g}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise DimensionError(f"trace {tr:.12g} differs from 1 by more than {trace_tol:g}")
    lam_min = float(np.linalg.eigvalsh(rho)[0])
    if lam_min < eig_floor:
        raise PositivityError(f"eigenvalue {lam_min:.3e} below {eig_floor:g}")
    return rho


def bell_odd_state():
    """Density matrix of ``(|10> - |01>)/sqrt(2)``."""
    psi = np.zeros(4, dtype=complex)
    psi[2] = 1.0 / np.sqrt(2.0)
    psi[1] = -1.0 / np.sqrt(2.0)
    return np.outer(psi, psi.conj())


def bell_even_state():
    """Density matrix of ``(|11> - |00>)/sqrt(2)``."""
    psi = np.zeros(4, dtype=complex)
    psi[3] = 1.0 / np.sqrt(2.0)
    psi[0] = -1.0 / np.sqrt(2.0)
    return np.outer(psi, psi.conj())


def trace_distance(rho, sigma):
    """Trace distance ``0.5 * ||rho - sigma||_1`` for Hermitian inputs."""
    diff = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))
