"""Simply periodic strips: the orthonormal basis psi_k, coefficient states,
strip quadrature, the projector kernel and the interaction coefficients.

The strip is S = {-gamma/2 < Re z < gamma/2}.  With phase(k) = i pi tau k^2,

    psi_k(z) = (2/(pi gamma^2))^{1/4} exp(2 i k pi z/gamma + phase(k) + z^2/2 - |z|^2/2),

where tau = i pi/gamma^2 for the rectangular convention (phase -pi^2 k^2/gamma^2)
and tau = exp(2 i pi/3) for the hexagonal one.  In both cases
|psi_k(x + iy)| = (2/(pi gamma^2))^{1/4} exp(-(y + k pi/gamma)^2).
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPeriodic
from .lattice import HEXAGONAL_GAMMA, LatticeParams
from .specfun import DEFAULT_POLICY, theta

__all__ = [
    "BasisConvention",
    "CoeffState",
    "StripQuadrature",
    "psi",
    "synthesize",
    "analyze",
    "strip_kernel",
    "strip_kernel_apply",
    "interaction_coeff",
    "strip_norm",
    "strip_momentum",
    "sup_norm",
    "gamma1_apply",
]


@dataclass(frozen=True)
class BasisConvention:
    """Which psi-basis a coefficient vector refers to: 'rect' or 'hexa'."""

    tag: str
    params: LatticeParams

    def __post_init__(self):
        if self.tag not in ("rect", "hexa"):
            raise ValueError(f"convention tag must be 'rect' or 'hexa', got {self.tag!r}")
        if self.params.N != 1:
            raise ValueError("strip bases are defined for N = 1 lattices")

    @classmethod
    def rect(cls, gamma):
        return cls("rect", LatticeParams.rectangular(gamma))

    @classmethod
    def hexa(cls):
        return cls("hexa", LatticeParams.hexagonal())

    @classmethod
    def from_tag(cls, tag, gamma=None):
        if tag == "hexa":
            if gamma is not None and abs(gamma - HEXAGONAL_GAMMA) > 1e-12:
                raise ValueError(f"hexagonal convention needs gamma={HEXAGONAL_GAMMA}, got {gamma}")
            return cls.hexa()
        if gamma is None:
            raise ValueError("rectangular convention needs gamma")
        return cls.rect(gamma)

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def tau(self):
        return self.params.tau


@dataclass(frozen=True)
class CoeffState:
    """Coefficients c_k, k = kmin..kmax, of u = sum c_k psi_k; zero outside the window."""

    kmin: int
    values: np.ndarray
    convention: BasisConvention

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).ravel()
        if vals.size == 0:
            raise ValueError("a coefficient window cannot be empty")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kmin", int(self.kmin))

    @property
    def kmax(self):
        return self.kmin + self.values.size - 1

    @property
    def ks(self):
        return np.arange(self.kmin, self.kmax + 1)

    @property
    def gamma(self):
        return self.convention.gamma

    def with_values(self, values):
        return CoeffState(self.kmin, values, self.convention)

    def coeff(self, k):
        return self.values[k - self.kmin] if self.kmin <= k <= self.kmax else 0j

    @classmethod
    def zeros(cls, kmin, kmax, convention):
        return cls(kmin, np.zeros(kmax - kmin + 1, dtype=complex), convention)

    @classmethod
    def unit(cls, k, kmin, kmax, convention, amplitude=1.0):
        vals = np.zeros(kmax - kmin + 1, dtype=complex)
        vals[k - kmin] = amplitude
        return cls(kmin, vals, convention)

    def to_json(self):
        payload = {
            "schema": 1,
            "convention": self.convention.tag,
            "gamma": float(self.gamma),
            "kmin": self.kmin,
            "values": [[float(v.real), float(v.imag)] for v in self.values],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        conv = BasisConvention.from_tag(data["convention"], data["gamma"])
        vals = np.array([complex(re, im) for re, im in data["values"]])
        return cls(int(data["kmin"]), vals, conv)


def _psi_exponent(k, z, gamma, tau):
    return 2j * np.pi * k * z / gamma + 1j * np.pi * tau * k * k + 0.5 * z * z - 0.5 * np.abs(z) ** 2


def psi(k, z, conv):
    """psi_k(z) in the given convention; k and z broadcast."""
    k = np.asarray(k)
    z = np.asarray(z, dtype=complex)
    norm = (2.0 / (np.pi * conv.gamma**2)) ** 0.25
    out = norm * np.exp(_psi_exponent(k, z, conv.gamma, conv.tau))
    return out[()] if out.ndim == 0 else out


def synthesize(state, z):
    """u(z) = sum_k c_k psi_k(z)."""
    z = np.asarray(z, dtype=complex)
    basis = psi(state.ks, z[..., None], state.convention)
    out = basis @ state.values
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class StripQuadrature:
    """Periodic trapezoid rule in x times a uniform trapezoid rule in y.

    The y-range covers |y + k pi/gamma| <= margin for every k in the window; both
    rules are spectrally accurate for the Gaussian-times-entire integrands met here.
    """

    gamma: float
    kmin: int
    kmax: int
    nx: int = 128
    dy: float = 0.125
    margin: float = 7.0
    x: np.ndarray = field(init=False, repr=False, compare=False)
    y: np.ndarray = field(init=False, repr=False, compare=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kmax < self.kmin:
            raise ValueError("empty window")
        x = -0.5 * self.gamma + self.gamma * np.arange(self.nx) / self.nx
        y_lo = -self.kmax * np.pi / self.gamma - self.margin
        y_hi = -self.kmin * np.pi / self.gamma + self.margin
        ny = int(np.ceil((y_hi - y_lo) / self.dy)) + 1
        y = np.linspace(y_lo, y_hi, ny)
        X, Y = np.meshgrid(x, y, indexing="ij")
        w = np.full(X.shape, (self.gamma / self.nx) * (y[1] - y[0]))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "nodes", (X + 1j * Y).ravel())
        object.__setattr__(self, "weights", w.ravel())

    @property
    def ny(self):
        return self.y.size

    def integrate(self, values):
        return np.sum(np.asarray(values) * self.weights)


def _quad_for(state_or_window, gamma, quad):
    if quad is not None:
        return quad
    kmin, kmax = state_or_window
    return StripQuadrature(gamma, kmin, kmax)


def _check_periodic(u, gamma, window, tol):
    kmin, kmax = window
    y = np.linspace(-kmax * np.pi / gamma - 2, -kmin * np.pi / gamma + 2, 7)
    z = np.add.outer(np.array([-0.31, 0.07, 0.23]) * gamma, 1j * y).ravel()
    uz = u(z)
    shifted = np.exp(-1j * gamma * z.imag) * u(z + gamma)
    scale = max(float(np.max(np.abs(uz))), 1e-300)
    if np.max(np.abs(shifted - uz)) > tol * scale:
        raise NotPeriodic("R_gamma u differs from u at probe points")


def analyze(u, window, conv, quad=None, tol=1e-8):
    """Coefficients <u, psi_k> for k in window = (kmin, kmax), by strip quadrature."""
    kmin, kmax = window
    _check_periodic(u, conv.gamma, window, tol)
    quad = _quad_for(window, conv.gamma, quad)
    uz = u(quad.nodes) * quad.weights
    ks = np.arange(kmin, kmax + 1)
    coeffs = np.array([np.sum(uz * np.conj(psi(k, quad.nodes, conv))) for k in ks])
    return CoeffState(kmin, coeffs, conv)


def strip_kernel(z, w, gamma, policy=DEFAULT_POLICY):
    """Kernel of the orthogonal projector onto R_gamma-invariant LLL functions on the strip."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    wc = np.conj(w)
    pref = np.sqrt(2.0 / (np.pi * gamma**2)) * np.exp(-np.pi**2 / (2 * gamma**2))
    expo = 0.5 * z * z - 0.5 * np.abs(z) ** 2 + 0.5 * wc * wc - 0.5 * np.abs(w) ** 2 - 1j * np.pi * (z - wc) / gamma
    arg = (z - wc - 1j * np.pi / gamma + 0.5 * gamma) / gamma
    out = pref * np.exp(expo) * theta(arg, 2j * np.pi / gamma**2, policy)
    return out[()] if out.ndim == 0 else out


def strip_kernel_apply(u_values, quad, points, chunk=64):
    """(K u)(z) = int_S K(z, w) u(w) dw for z in points; u given on quad.nodes."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    uw = np.asarray(u_values) * quad.weights
    out = np.empty(points.shape, dtype=complex)
    for start in range(0, points.size, chunk):
        z = points[start : start + chunk, None]
        out[start : start + chunk] = strip_kernel(z, quad.nodes[None, :], quad.gamma) @ uw
    return out


def _tag(conv):
    return conv.tag if isinstance(conv, BasisConvention) else str(conv)


def interaction_coeff(k1, k2, k3, gamma, conv):
    """Overlap of psi_k1 conj(psi_k2) psi_k3 conj(psi_k4) over the strip, k4 = k1 - k2 + k3."""
    d1 = np.asarray(k2) - np.asarray(k1)
    d3 = np.asarray(k2) - np.asarray(k3)
    value = np.exp(-np.pi**2 * (d1 * d1 + d3 * d3) / gamma**2) / (gamma * np.sqrt(np.pi))
    if _tag(conv) == "hexa":
        value = np.where((d1 * d3) % 2 == 0, value, -value)
    return value[()] if np.ndim(value) == 0 else value


def strip_norm(u, p=2, alpha=0.0, quad=None, route="auto"):
    """||<z>^alpha u||_{L^p(S)} for a CoeffState or a callable.

    For a CoeffState with p = 2 and alpha = 0 the default route is Parseval;
    route='quadrature' forces the strip quadrature.
    """
    if isinstance(u, CoeffState):
        if p == 2 and alpha == 0 and route != "quadrature":
            return float(np.linalg.norm(u.values))
        quad = _quad_for((u.kmin, u.kmax), u.gamma, quad)
        vals = synthesize(u, quad.nodes)
    else:
        if quad is None:
            raise ValueError("a quadrature is needed for pointwise functions")
        vals = u(quad.nodes)
    weighted = np.abs(vals) * (1.0 + np.abs(quad.nodes) ** 2) ** (0.5 * alpha)
    if np.isinf(p):
        return float(np.max(weighted))
    return float(np.sum(weighted**p * quad.weights) ** (1.0 / p))


def strip_momentum(u, quad):
    """i int_S (z - conj z) |u|^2, the momentum in physical space."""
    vals = u(quad.nodes) if callable(u) else synthesize(u, quad.nodes)
    return float(np.real(np.sum(-2.0 * quad.nodes.imag * np.abs(vals) ** 2 * quad.weights)))


def sup_norm(state, nx=16, per_mode=8, reach=6, threshold=0.05):
    """Estimate of sup_S |u| for u = sum c_k psi_k, sampled near the large coefficients.

    Near height y = -(k0 + s) pi/gamma only psi_{k0+d} with |d| <= reach matter, and
    relative to k0 their exponents are exact small numbers:
    -(pi/gamma)^2 (d - s)^2 + i (2 pi d x/gamma + pi Re(tau) d (2 k0 + d)).
    """
    vals = state.values
    mags = np.abs(vals)
    if not np.any(mags):
        return 0.0
    conv = state.convention
    gamma, tau1 = conv.gamma, conv.tau.real
    centers = np.nonzero(mags >= threshold * mags.max())[0]
    d = np.arange(-reach, reach + 1)
    s = np.arange(per_mode) / per_mode
    x = -0.5 * gamma + gamma * np.arange(nx) / nx
    padded = np.concatenate([np.zeros(reach, complex), vals, np.zeros(reach, complex)])
    local = padded[centers[:, None] + reach + d[None, :]]
    k0 = (state.kmin + centers)[:, None]
    phase_k = np.exp(1j * np.pi * tau1 * d[None, :] * (2 * k0 + d[None, :]))
    coeff = local * phase_k
    modulus = np.exp(-((np.pi / gamma) ** 2) * (d[None, :] - s[:, None]) ** 2)
    wave = np.exp(2j * np.pi * np.outer(x, d) / gamma)
    # sum over d for every (center, s, x)
    field_ = np.einsum("cd,sd,xd->csx", coeff, modulus, wave)
    return float((2.0 / (np.pi * gamma**2)) ** 0.25 * np.max(np.abs(field_)))


def gamma1_apply(state):
    """Gamma_1 is diagonal: psi_k -> (2 pi k/gamma) psi_k."""
    return state.with_values(2 * np.pi * state.ks / state.gamma * state.values)
