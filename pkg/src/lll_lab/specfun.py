"""Special functions and Gaussian lattice sums.

The Jacobi-type theta function used throughout is

    Theta_tau(z) = -i sum_n (-1)^n exp(i pi tau (n+1/2)^2) exp(i (2n+1) pi z),

which is odd, anti-periodic under z -> z+1 and vanishes exactly on Z + tau Z.
The Fourier symbols ell, h and g are cosine series with Gaussian weights
exp(-pi^2 k^2 / gamma^2); every truncation stops on an explicit tail bound.
"""
from dataclasses import dataclass

import numpy as np

from .errors import TailNotMet

__all__ = [
    "TruncationPolicy",
    "DEFAULT_POLICY",
    "theta",
    "theta_quasi_period",
    "gauss_sum",
    "symbol_ell",
    "symbol_h",
    "symbol_g",
    "symbol_drop",
    "poisson_residual",
    "gaussian_integral",
]


@dataclass(frozen=True)
class TruncationPolicy:
    """Absolute tail tolerance and hard term cap for every series."""

    eps: float = 1e-14
    max_terms: int = 512

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if int(self.max_terms) < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_POLICY = TruncationPolicy()


def _theta_cutoff(im_tau, im_z, policy):
    """Largest |n + 1/2| whose term bound still exceeds eps, plus one."""
    # bound: exp(-pi Im(tau) m^2 + 2 pi |Im z| m) with m = |n + 1/2|
    log_eps = np.log(policy.eps)
    m = (im_z + np.sqrt(im_z**2 - im_tau * log_eps / np.pi)) / im_tau
    n_max = int(np.ceil(m)) + 1
    if 2 * (n_max + 1) > policy.max_terms:
        raise TailNotMet(
            f"theta needs {2 * (n_max + 1)} terms (Im tau={im_tau:.3g}, "
            f"|Im z|={im_z:.3g}) but max_terms={policy.max_terms}"
        )
    return n_max


def theta(z, tau, policy=DEFAULT_POLICY):
    """Evaluate Theta_tau(z); z may be a scalar or an array."""
    tau = complex(tau)
    if not tau.imag > 0:
        raise ValueError(f"Im tau must be positive, got {tau}")
    z = np.asarray(z, dtype=complex)
    im_z = float(np.max(np.abs(z.imag))) if z.size else 0.0
    n_max = _theta_cutoff(tau.imag, im_z, policy)
    total = np.zeros(z.shape, dtype=complex)
    for n in range(-n_max - 1, n_max + 1):
        h = n + 0.5
        sign = -1.0 if n % 2 else 1.0
        total += sign * np.exp(1j * np.pi * tau * h * h + 1j * (2 * n + 1) * np.pi * z)
    out = -1j * total
    return out[()] if out.ndim == 0 else out


def theta_quasi_period(z, tau):
    """Multiplier m(z) with Theta_tau(z + tau) = m(z) Theta_tau(z)."""
    z = np.asarray(z, dtype=complex)
    out = -np.exp(-1j * np.pi * complex(tau) - 2j * np.pi * z)
    return out[()] if out.ndim == 0 else out


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")


def _weights(gamma, k):
    return np.exp(-np.pi**2 * np.asarray(k, dtype=float) ** 2 / gamma**2)


def _frequency_cutoff(gamma, order, scale, policy):
    """First integer k past the peak where (scale k)^order e^{-pi^2 k^2/gamma^2} < eps."""
    k = max(1, int(np.ceil(gamma * np.sqrt(order / 2.0) / np.pi)))
    while True:
        bound = (scale * k) ** order * np.exp(-np.pi**2 * k**2 / gamma**2)
        if bound < policy.eps:
            return k
        k += 1
        if k > policy.max_terms:
            raise TailNotMet(f"Gaussian series for gamma={gamma} exceeds max_terms={policy.max_terms}")


def gauss_sum(order, gamma, parity="all", policy=DEFAULT_POLICY):
    """T_order = sum over q in Z (or odd q) of q^order exp(-pi^2 q^2 / gamma^2)."""
    _check_gamma(gamma)
    if order < 0 or int(order) != order:
        raise ValueError(f"order must be a nonnegative integer, got {order}")
    if parity not in ("all", "odd"):
        raise ValueError(f"parity must be 'all' or 'odd', got {parity!r}")
    order = int(order)
    if order % 2:
        # q and -q cancel term by term
        return 0.0
    q_max = _frequency_cutoff(gamma, order, 1.0, policy)
    q = np.arange(1, q_max + 1)
    if parity == "odd":
        q = q[q % 2 == 1]
    total = 2.0 * float(np.sum(q.astype(float) ** order * _weights(gamma, q)))
    if parity == "all" and order == 0:
        total += 1.0
    return total


# d^m/dx^m cos(x) for m mod 4
_COS_DERIVS = (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin)


def _cosine_series(xi, gamma, deriv, parity, policy):
    """2 sum_{k in K} w_k d^deriv/dxi^deriv cos(2 pi k xi) over the selected k >= 1."""
    _check_gamma(gamma)
    if deriv not in (0, 1, 2, 3, 4):
        raise ValueError(f"deriv must be in 0..4, got {deriv}")
    xi = np.asarray(xi, dtype=float)
    k_max = _frequency_cutoff(gamma, deriv, 2 * np.pi, policy)
    k = np.arange(1, k_max + 1)
    if parity == "odd":
        k = k[k % 2 == 1]
    elif parity == "even":
        k = k[k % 2 == 0]
    coef = 2.0 * _weights(gamma, k) * (2 * np.pi * k) ** deriv
    phase = 2 * np.pi * np.multiply.outer(xi, k)
    return _COS_DERIVS[deriv % 4](phase) @ coef


def _finish(values, deriv, constant):
    if deriv == 0:
        values = values + constant
    return values[()] if np.ndim(values) == 0 else values


def symbol_ell(xi, gamma, deriv=0, policy=DEFAULT_POLICY):
    """ell(xi) = 1 + 2 sum_{k>=1} exp(-pi^2 k^2/gamma^2) cos(2 pi k xi), or a derivative."""
    return _finish(_cosine_series(xi, gamma, deriv, "all", policy), deriv, 1.0)


def symbol_h(xi, gamma, deriv=0, policy=DEFAULT_POLICY):
    """Odd-index part of ell: 2 sum_{k odd} exp(-pi^2 k^2/gamma^2) cos(2 pi k xi)."""
    return _finish(_cosine_series(xi, gamma, deriv, "odd", policy), deriv, 0.0)


def symbol_g(xi, gamma, deriv=0, policy=DEFAULT_POLICY):
    """Even-index part of ell, so that ell = g + h."""
    return _finish(_cosine_series(xi, gamma, deriv, "even", policy), deriv, 1.0)


def symbol_drop(xi, gamma, which="ell", policy=DEFAULT_POLICY):
    """ell(xi) - ell(0) (or h(xi) - h(0)) summed as -4 sum w_k sin^2(pi k xi).

    Written without subtraction so it keeps full relative accuracy near xi = 0.
    """
    _check_gamma(gamma)
    if which not in ("ell", "h"):
        raise ValueError(f"which must be 'ell' or 'h', got {which!r}")
    xi = np.asarray(xi, dtype=float)
    k = np.arange(1, _frequency_cutoff(gamma, 0, 1.0, policy) + 1)
    if which == "h":
        k = k[k % 2 == 1]
    out = np.sin(np.pi * np.multiply.outer(xi, k)) ** 2 @ (-4.0 * _weights(gamma, k))
    return out[()] if np.ndim(out) == 0 else out


def _integer_window(center, radius, policy):
    lo = int(np.floor(center - radius)) - 1
    hi = int(np.ceil(center + radius)) + 1
    if hi - lo + 1 > policy.max_terms:
        raise TailNotMet(f"lattice sum needs {hi - lo + 1} terms but max_terms={policy.max_terms}")
    return np.arange(lo, hi + 1)


def poisson_residual(alpha, z, policy=DEFAULT_POLICY):
    """|sum_n e^{-alpha (z+n)^2} - sqrt(pi/alpha) sum_n e^{-pi^2 n^2/alpha + 2 i pi n z}|."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    z = complex(z)
    x, y = z.real, z.imag
    log_inv = -np.log(policy.eps)
    # |e^{-alpha (z+n)^2}| = e^{-alpha((x+n)^2 - y^2)}
    n_left = _integer_window(-x, np.sqrt(y * y + log_inv / alpha), policy)
    left = np.sum(np.exp(-alpha * (z + n_left) ** 2))
    # |term| = e^{-pi^2 n^2/alpha - 2 pi n y}; solve pi^2 n^2/alpha - 2 pi |y| n = log_inv
    a2 = np.pi**2 / alpha
    radius = (np.pi * abs(y) + np.sqrt(np.pi**2 * y * y + a2 * log_inv)) / a2
    n_right = _integer_window(0.0, radius, policy)
    right = np.sqrt(np.pi / alpha) * np.sum(np.exp(-a2 * n_right**2 + 2j * np.pi * n_right * z))
    return float(abs(left - right))


def gaussian_integral(a, b):
    """Closed form of the integral over R of exp(-a t^2 + b t)."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    return np.sqrt(np.pi / a) * np.exp(b * b / (4 * a))
