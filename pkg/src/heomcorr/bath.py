"""Lorentzian bath spectral density and its exponential-series expansion.

The bath correlation function is represented as a truncated series
``F(t) = sum_k c_k exp(-gamma_k |t|)`` whose rates are the bath cutoff
(``k = 0``) followed by the thermal Matsubara frequencies ``2*pi*k/beta``.
The truncated tail is folded into a scalar prefactor that multiplies a
double-commutator correction in the propagator.

All rates are in units of the energy scale delta, times in 1/delta
(hbar = 1), so coefficients carry delta**2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma

from .errors import ParameterError

__all__ = [
    "BathParameters",
    "BathExpansion",
    "spectral_density",
    "matsubara_expansion",
    "bath_correlation",
]

#: distance (in radians) from a cotangent pole at which construction refuses
POLE_GUARD = 1e-9


@dataclass(frozen=True)
class BathParameters:
    """Lorentzian bath: coupling strength, cutoff frequency, inverse temperature.

    ``eta`` scales the system-bath coupling, ``gamma`` is the characteristic
    (cutoff) frequency of the bath, ``beta`` the inverse temperature.
    """

    eta: float
    gamma: float
    beta: float

    def __post_init__(self):
        if self.eta < 0:
            raise ParameterError(f"eta must be >= 0, got {self.eta}")
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")
        if self.beta <= 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        x = self.beta * self.gamma / 2.0
        if abs(x - np.pi * round(x / np.pi)) < POLE_GUARD:
            raise ParameterError(
                f"beta*gamma/2 = {x:.12g} sits on a cotangent pole "
                f"(within {POLE_GUARD:g} of a multiple of pi)"
            )


@dataclass(frozen=True)
class BathExpansion:
    """Truncated exponential series for one bath's correlation function.

    Attributes
    ----------
    gammas : ndarray, shape (K+1,)
        Decay rates; entry 0 is the bath cutoff, entries 1..K the Matsubara
        frequencies ``2*pi*k/beta`` (strictly increasing).
    coeffs : complex ndarray, shape (K+1,)
        Series amplitudes. Only entry 0 has an imaginary part, ``-eta*gamma/2``.
    terminator : complex
        Prefactor of the double-commutator correction compensating the
        truncated tail of the series.
    params : BathParameters
        Source parameters.
    """

    gammas: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    terminator: complex
    params: BathParameters

    @property
    def cutoff(self):
        """Largest retained series index K."""
        return len(self.gammas) - 1

    @property
    def terms(self):
        """Ordered (rate, amplitude) pairs, k = 0..K."""
        return list(zip(self.gammas.tolist(), self.coeffs.tolist()))


def spectral_density(omega, params):
    """Lorentzian spectral density ``omega*eta*gamma / (omega**2 + gamma**2)``.

    Odd in omega; peaks at ``omega = gamma`` with value ``eta/2``. Accepts
    scalars or arrays.
    """
    omega = np.asarray(omega, dtype=float)
    out = omega * params.eta * params.gamma / (omega**2 + params.gamma**2)
    return float(out) if out.ndim == 0 else out


def _series_tail(params, K):
    """Exact sum of ``c_k/gamma_k`` over k > K via the digamma function.

    For k >= 1, ``c_k/gamma_k = 2*eta*gamma0 / (beta*(gamma_k**2 - gamma0**2))``
    with ``gamma_k = 2*pi*k/beta``, so the tail reduces to
    ``sum 1/(k**2 - x**2)`` with ``x = beta*gamma0/(2*pi)``, which telescopes
    into digamma values.
    """
    x = params.beta * params.gamma / (2.0 * np.pi)
    m = K + 1
    s = (digamma(m + x) - digamma(m - x)) / (2.0 * x)
    return params.eta * params.gamma * params.beta / (2.0 * np.pi**2) * s


def matsubara_expansion(params, K, terminator_mode="closed-form"):
    """Expand the bath correlation function to Matsubara index K.

    Parameters
    ----------
    params : BathParameters
    K : int
        Highest retained Matsubara index (>= 0). Term 0 carries the bath
        cutoff rate; terms 1..K the thermal rates ``2*pi*k/beta``.
    terminator_mode : {"closed-form", "tail-sum"}
        How the tail-compensation prefactor is computed. "closed-form"
        subtracts the retained ``c_k/gamma_k`` from the known value of the
        full series; "tail-sum" sums the discarded terms k > K directly.
        The two agree to roundoff for this spectral density (the full-series
        value is exactly the infinite sum); both are kept so runs can record
        the agreement as a diagnostic.

    Returns
    -------
    BathExpansion

    Raises
    ------
    ParameterError
        If K < 0, a Matsubara rate collides with the cutoff rate, or the
        inverse temperature sits on a cotangent pole.
    """
    if K < 0:
        raise ParameterError(f"Matsubara cutoff K must be >= 0, got {K}")
    if terminator_mode not in ("closed-form", "tail-sum"):
        raise ParameterError(f"unknown terminator_mode {terminator_mode!r}")
    eta, gamma, beta = params.eta, params.gamma, params.beta

    ks = np.arange(1, K + 1, dtype=float)
    rates = 2.0 * np.pi * ks / beta
    if np.any(np.abs(rates - gamma) < 1e-9 * gamma):
        k_bad = int(ks[np.argmin(np.abs(rates - gamma))])
        raise ParameterError(
            f"Matsubara rate at k={k_bad} coincides with the bath cutoff "
            f"gamma={gamma:g}; the series coefficient is singular there"
        )

    gammas = np.concatenate(([gamma], rates))
    c0 = 0.5 * eta * gamma * (1.0 / np.tan(beta * gamma / 2.0) - 1.0j)
    # negative for rates below the cutoff; kept verbatim, the propagator
    # diagnostics report it
    ck = 2.0 * eta * gamma * rates / (beta * (rates**2 - gamma**2))
    coeffs = np.concatenate(([c0], ck.astype(complex)))

    if terminator_mode == "closed-form":
        total = (1.0 / (beta * gamma) - 0.5j) * eta
        terminator = complex(total - np.sum(coeffs / gammas))
    else:
        terminator = complex(_series_tail(params, K))

    gammas.setflags(write=False)
    coeffs.setflags(write=False)
    return BathExpansion(gammas=gammas, coeffs=coeffs,
                         terminator=terminator, params=params)


def bath_correlation(t, expansion):
    """Evaluate the truncated correlation series ``sum c_k exp(-gamma_k |t|)``.

    Diagnostic only; the propagator never calls this. Accepts scalar or
    array ``t``.
    """
    t = np.asarray(t, dtype=float)
    out = np.sum(
        expansion.coeffs * np.exp(-np.outer(np.abs(t).ravel(), expansion.gammas)),
        axis=1,
    ).reshape(t.shape)
    return complex(out) if out.ndim == 0 else out
