"""Doubly periodic cells: lattice parameters, magnetic translations, the
functions Phi_k, multiplicative-form solutions, cell quadrature and lambda0.

A cell is the parallelogram K = {gamma (r1 + r2 tau) : r1, r2 in [0, 1]} and the
lattice is gamma (Z + tau Z).  Nonzero periodic LLL functions exist only when
gamma^2 Im(tau) = pi N, with N the number of zeros per cell.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConstraintViolated, ProbeAtZero, ZeroCountMismatch
from .specfun import DEFAULT_POLICY, gauss_sum, theta

__all__ = [
    "LatticeParams",
    "CellQuadrature",
    "ZeroSet",
    "FockFunction",
    "magnetic_translate",
    "phi_k",
    "periodicity_defects",
    "build_doubly_periodic",
    "reduce_to_cell",
    "lattice_distance",
    "find_zeros_in_cell",
    "winding_number",
    "normalize_phase_shift",
    "cell_inner",
    "cell_lp",
    "cell_project",
    "cell_kernel_apply",
    "lambda0",
    "translate_fock",
    "gamma_apply",
]

HEXAGONAL_TAU = complex(np.exp(2j * np.pi / 3))
HEXAGONAL_GAMMA = float(np.sqrt(2 * np.pi / np.sqrt(3)))


@dataclass(frozen=True)
class LatticeParams:
    """Cell shape (gamma, tau) and flux number N with gamma^2 Im(tau) = pi N."""

    gamma: float
    tau: complex
    N: int = 1
    kind: str = "general"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not complex(self.tau).imag > 0:
            raise ValueError(f"Im tau must be positive, got {self.tau}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        defect = self.gamma**2 * complex(self.tau).imag - np.pi * self.N
        if abs(defect) > 1e-12 * max(1.0, np.pi * self.N):
            raise ValueError(f"quantization gamma^2 Im(tau) = pi N fails by {defect:.3e}")
        object.__setattr__(self, "tau", complex(self.tau))
        object.__setattr__(self, "N", int(self.N))

    @classmethod
    def rectangular(cls, gamma):
        return cls(float(gamma), 1j * np.pi / gamma**2, 1, "rect")

    @classmethod
    def hexagonal(cls):
        return cls(HEXAGONAL_GAMMA, HEXAGONAL_TAU, 1, "hexa")

    @classmethod
    def from_shape(cls, tau_real, gamma, N=1):
        """Lattice with Re(tau) given and Im(tau) fixed by quantization."""
        return cls(float(gamma), complex(tau_real, np.pi * N / gamma**2), N, "general")

    @property
    def z0(self):
        """Zero of Phi_0: (gamma/2)(tau/N - 1)."""
        return 0.5 * self.gamma * (self.tau / self.N - 1)

    @property
    def area(self):
        return self.gamma**2 * self.tau.imag

    def to_cell_coords(self, z):
        """Real coordinates (r1, r2) with z = gamma (r1 + r2 tau)."""
        w = np.asarray(z, dtype=complex) / self.gamma
        r2 = w.imag / self.tau.imag
        r1 = w.real - r2 * self.tau.real
        return r1, r2

    def from_cell_coords(self, r1, r2):
        return self.gamma * (np.asarray(r1) + np.asarray(r2) * self.tau)


def magnetic_translate(alpha, u):
    """R_alpha u(z) = exp((alpha conj(z) - conj(alpha) z)/2) u(z + alpha)."""
    alpha = complex(alpha)

    def translated(z):
        z = np.asarray(z, dtype=complex)
        return np.exp(0.5 * (alpha * np.conj(z) - np.conj(alpha) * z)) * u(z + alpha)

    return translated


def phi_k(params, k=0, policy=DEFAULT_POLICY):
    """Evaluator for Phi_k = R_{k gamma/N} Phi_0, an orthogonal basis of the cell space."""
    if not 0 <= k < params.N:
        raise ValueError(f"k must lie in 0..{params.N - 1}, got {k}")
    gamma, N = params.gamma, params.N
    tau_n = params.tau / N
    zk = params.z0 - k * gamma / N

    def phi(z):
        z = np.asarray(z, dtype=complex)
        gauss = np.exp(-1j * k * np.pi / N + 0.5 * z * z - 1j * np.pi * z / gamma - 0.5 * np.abs(z) ** 2)
        return gauss * theta((z - zk) / gamma, tau_n, policy)

    return phi


def periodicity_defects(u, params, z):
    """Max defects of u(z+gamma) = e^{gamma(z-zbar)/2}u(z) and the tau-direction analogue."""
    z = np.asarray(z, dtype=complex)
    gamma, tau = params.gamma, params.tau
    d1 = u(z + gamma) - np.exp(0.5 * gamma * (z - np.conj(z))) * u(z)
    d2 = u(z + gamma * tau) - np.exp(0.5 * gamma * (np.conj(tau) * z - tau * np.conj(z))) * u(z)
    return float(np.max(np.abs(d1))), float(np.max(np.abs(d2)))


@dataclass(frozen=True)
class ZeroSet:
    """N zero representatives together with the integers (k, l) of their sum relation."""

    zeros: tuple
    k: int = 0
    l: int = 0

    def __post_init__(self):
        object.__setattr__(self, "zeros", tuple(complex(z) for z in self.zeros))

    def sum_defect(self, params):
        gamma, tau, N = params.gamma, params.tau, params.N
        target = 0.5 * gamma * (tau - 1) * N - self.k * tau * gamma + self.l * gamma
        return abs(sum(self.zeros) - target)


def build_doubly_periodic(params, zeroset, scale=1.0, tol=1e-10, policy=DEFAULT_POLICY):
    """lambda e^{z^2/2 + bz - |z|^2/2} prod_j Theta_tau((z - z_j)/gamma), b = i pi (2k - N)/gamma."""
    if len(zeroset.zeros) != params.N:
        raise ConstraintViolated(f"expected {params.N} zeros, got {len(zeroset.zeros)}")
    defect = zeroset.sum_defect(params)
    if defect > tol:
        raise ConstraintViolated(f"zero-sum relation fails by {defect:.3e}")
    gamma, tau = params.gamma, params.tau
    b = 1j * np.pi * (2 * zeroset.k - params.N) / gamma
    zeros = zeroset.zeros
    scale = complex(scale)

    def u(z):
        z = np.asarray(z, dtype=complex)
        out = scale * np.exp(0.5 * z * z + b * z - 0.5 * np.abs(z) ** 2)
        for zj in zeros:
            out = out * theta((z - zj) / gamma, tau, policy)
        return out

    return u


def reduce_to_cell(z, params):
    """Representative of z modulo the lattice inside the cell [0,1)^2 in cell coordinates."""
    r1, r2 = params.to_cell_coords(z)
    return params.from_cell_coords(r1 - np.floor(r1), r2 - np.floor(r2))


def lattice_distance(z, w, params):
    """Distance from z - w to the nearest lattice point."""
    r1, r2 = params.to_cell_coords(np.asarray(z) - np.asarray(w))
    best = np.inf
    for s1 in (-1, 0, 1):
        for s2 in (-1, 0, 1):
            d = params.from_cell_coords(r1 - np.round(r1) + s1, r2 - np.round(r2) + s2)
            best = np.minimum(best, np.abs(d))
    return best


def winding_number(u, center, radius, n=256):
    """Winding number of u around the circle |z - center| = radius."""
    angles = np.linspace(0.0, 2 * np.pi, n + 1)
    values = u(center + radius * np.exp(1j * angles))
    steps = np.angle(values[1:] / values[:-1])
    return int(np.rint(np.sum(steps) / (2 * np.pi)))


def _newton(u, z, tol=1e-14, max_iter=60):
    """Newton on the holomorphic part F(z) = u(z) e^{|z|^2/2}, derivative by central difference."""

    def F(w):
        return u(w) * np.exp(0.5 * abs(w) ** 2)

    h = 1e-6
    for _ in range(max_iter):
        fz = F(z)
        df = (F(z + h) - F(z - h)) / (2 * h)
        if df == 0:
            break
        step = fz / df
        z = z - step
        if abs(step) < tol * (1 + abs(z)):
            break
    return complex(z)


def _boundary_winding(u, origin, params, n_edge=512, max_edge=1 << 16):
    """Argument-principle count of zeros inside the cell with the given corner."""
    gamma, tau = params.gamma, params.tau
    corners = origin + np.array([0, gamma, gamma + gamma * tau, gamma * tau, 0])
    while True:
        s = np.linspace(0.0, 1.0, n_edge, endpoint=False)
        path = np.concatenate([a + (b - a) * s for a, b in zip(corners[:-1], corners[1:])])
        path = np.append(path, corners[0])
        values = u(path)
        steps = np.angle(values[1:] / values[:-1])
        if np.max(np.abs(steps)) < np.pi / 4 or n_edge >= max_edge:
            return int(np.rint(np.sum(steps) / (2 * np.pi)))
        n_edge *= 2


def _largest_gap_midpoint(coords):
    """Point of the unit circle farthest from all given fractional coordinates."""
    c = np.sort(np.mod(coords, 1.0))
    if c.size == 0:
        return 0.0
    gaps = np.diff(np.append(c, c[0] + 1.0))
    i = int(np.argmax(gaps))
    return float(np.mod(c[i] + gaps[i] / 2, 1.0))


def find_zeros_in_cell(u, params, grid=64, radius=1e-3, merge_tol=1e-6):
    """Zeros of a quasi-periodic LLL function in the cell, repeated by multiplicity.

    A coarse |u| scan seeds Newton; the count is certified by the argument principle
    on the boundary of a cell translated away from the zeros.
    """
    r = (np.arange(grid) + 0.5) / grid
    R1, R2 = np.meshgrid(r, r, indexing="ij")
    mod = np.abs(u(params.from_cell_coords(R1, R2)))
    # log|u| is strictly superharmonic away from zeros, so discrete minima sit near zeros
    is_min = np.ones_like(mod, dtype=bool)
    for d1 in (-1, 0, 1):
        for d2 in (-1, 0, 1):
            if d1 or d2:
                is_min &= mod <= np.roll(np.roll(mod, d1, axis=0), d2, axis=1)
    seeds = params.from_cell_coords(R1[is_min], R2[is_min])
    found = []
    for seed in seeds:
        z = _newton(u, complex(seed))
        scale = np.max(mod) if np.max(mod) > 0 else 1.0
        if not np.isfinite(z) or abs(u(z)) > 1e-8 * scale:
            continue
        z = complex(reduce_to_cell(z, params))
        if all(lattice_distance(z, w, params) > merge_tol for w in found):
            found.append(z)
    zeros = []
    for z in found:
        m = winding_number(u, z, radius)
        zeros.extend([z] * max(m, 1))
    r1, r2 = params.to_cell_coords(np.array(found, dtype=complex))
    origin = params.from_cell_coords(_largest_gap_midpoint(r1), _largest_gap_midpoint(r2))
    count = _boundary_winding(u, complex(origin), params)
    if count != len(zeros):
        raise ZeroCountMismatch(f"argument principle counts {count} zeros, found {len(zeros)}")
    return zeros


def _principal(angle):
    # arg(-1) may come out as -pi after rounding; keep the branch (-pi, pi]
    return angle + 2 * np.pi if angle <= -np.pi + 1e-9 else angle


def normalize_phase_shift(v, params, threshold=1e-3):
    """delta with R_delta v in the cell space, from the phases of R_gamma v/v and R_{gamma tau} v/v.

    The phases are taken on the principal branch (-pi, pi]; delta is only defined
    modulo (gamma/N)(Z + tau Z).
    """
    gamma, tau, N = params.gamma, params.tau, params.N
    r = (np.arange(16) + 0.5) / 16
    R1, R2 = np.meshgrid(r, r, indexing="ij")
    typical = np.max(np.abs(v(params.from_cell_coords(R1, R2))))
    jitter = [(0.0, 0.0)] + [(a, b) for a in (-0.1, 0.0, 0.1) for b in (-0.1, 0.0, 0.1) if a or b]
    for a, b in jitter:
        p = complex(params.from_cell_coords(0.5 + a, 0.5 + b))
        vp = v(p)
        if abs(vp) > threshold * typical:
            break
    else:
        raise ProbeAtZero("all probe points are too close to zeros of v")
    alpha = _principal(float(np.angle(magnetic_translate(gamma, v)(p) / vp)))
    beta = _principal(float(np.angle(magnetic_translate(gamma * tau, v)(p) / vp)))
    return gamma / (2 * np.pi * N) * (beta - alpha * tau)


@dataclass(frozen=True)
class CellQuadrature:
    """Tensor midpoint rule on the cell parallelogram."""

    params: LatticeParams
    n1: int = 256
    n2: int = 256
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r1 = (np.arange(self.n1) + 0.5) / self.n1
        r2 = (np.arange(self.n2) + 0.5) / self.n2
        R1, R2 = np.meshgrid(r1, r2, indexing="ij")
        nodes = self.params.from_cell_coords(R1, R2).ravel()
        weights = np.full(nodes.shape, self.params.area / (self.n1 * self.n2))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)


def _values(u, quad):
    return u(quad.nodes) if callable(u) else np.asarray(u)


def cell_inner(u, v, quad):
    """Integral over the cell of u conj(v); u, v are callables or node values."""
    return complex(np.sum(_values(u, quad) * np.conj(_values(v, quad)) * quad.weights))


def cell_lp(u, p, quad):
    """L^p norm over the cell (p = inf gives the max over nodes)."""
    vals = np.abs(_values(u, quad))
    if np.isinf(p):
        return float(np.max(vals))
    return float(np.sum(vals**p * quad.weights) ** (1.0 / p))


def cell_project(u, quad, policy=DEFAULT_POLICY):
    """Coefficients of the orthogonal projection of u on span(Phi_0..Phi_{N-1})."""
    params = quad.params
    norm2 = params.gamma * params.N * np.sqrt(np.pi / 2) * np.exp(np.pi**2 / (2 * params.gamma**2))
    return np.array([cell_inner(u, phi_k(params, k, policy), quad) / norm2 for k in range(params.N)])


def cell_kernel_apply(u_values, quad, points, chunk=256):
    """Bargmann projector applied to a quasi-periodic u, with its kernel folded onto the cell.

    Pi u(z) = (1/pi) int_K sum_omega s(omega) exp(-|z|^2/2 - |w|^2/2 - |omega|^2/2
              + conj(omega) z + z conj(w) - omega conj(w)) u(w) dw,

    over omega = gamma (m + n tau), where s(omega) = (-1)^{N m n} is the sign in
    R_omega u = s(omega) u.
    """
    params = quad.params
    w = quad.nodes
    uw = np.asarray(u_values) * quad.weights
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    diam = params.gamma * (1 + abs(params.tau))
    # |kernel| = exp(-|z - w - omega|^2/2) / pi, negligible beyond distance 9
    reach = diam + 9.0
    m_max = int(np.ceil(reach / params.gamma)) + 2
    n_max = int(np.ceil(reach / (params.gamma * params.tau.imag))) + 2
    omegas, signs = [], []
    for n in range(-n_max, n_max + 1):
        for m in range(-m_max - n_max, m_max + n_max + 1):
            om = complex(params.from_cell_coords(m, n))
            if abs(om) < reach:
                omegas.append(om)
                signs.append(-1.0 if (params.N * m * n) % 2 else 1.0)
    out = np.zeros(points.shape, dtype=complex)
    for start in range(0, points.size, chunk):
        z = points[start : start + chunk, None]
        acc = np.zeros(z.shape[0], dtype=complex)
        base = -0.5 * np.abs(z) ** 2 - 0.5 * np.abs(w) ** 2 + z * np.conj(w)
        for om, sign in zip(omegas, signs):
            expo = base - 0.5 * abs(om) ** 2 + np.conj(om) * z - om * np.conj(w)
            acc += sign * (np.exp(expo) @ uw)
        out[start : start + chunk] = acc / np.pi
    return out


def lambda0(params, method="sum", policy=DEFAULT_POLICY):
    """Stationary constant lambda0 = int |Phi|^4 / int |Phi|^2.

    method='sum' uses the double lattice sum; 'rect' and 'hexa' use the
    closed specializations through Gaussian sums (and require that lattice).
    """
    gamma, tau, N = params.gamma, params.tau, params.N
    pref = np.exp(np.pi**2 / (2 * gamma**2))
    if method == "rect":
        if N != 1 or abs(tau - 1j * np.pi / gamma**2) > 1e-12:
            raise ValueError("rect specialization needs tau = i pi/gamma^2 and N = 1")
        return pref / np.sqrt(2) * gauss_sum(0, gamma, "all", policy) ** 2
    if method == "hexa":
        if N != 1 or abs(tau - HEXAGONAL_TAU) > 1e-12:
            raise ValueError("hexa specialization needs tau = exp(2 i pi/3) and N = 1")
        J = gauss_sum(0, gamma, "odd", policy)
        I = gauss_sum(0, gamma, "all", policy) - J
        return pref / np.sqrt(2) * (I * I + 2 * I * J - J * J)
    if method != "sum":
        raise ValueError(f"unknown method {method!r}")
    log_inv = -np.log(policy.eps)
    t = tau / N
    j_max = int(np.ceil(np.sqrt(log_inv) / (gamma * t.imag))) + 1
    l_rad = int(np.ceil(np.sqrt(log_inv) / gamma)) + 2
    total = 0.0
    for j in range(-j_max, j_max + 1):
        center = int(np.round(j * t.real))
        l = np.arange(center - l_rad, center + l_rad + 1)
        total += float(np.sum(np.exp(-gamma**2 * np.abs(j * t - l) ** 2)))
    return gamma / np.sqrt(2 * np.pi) * pref * total


@dataclass(frozen=True)
class FockFunction:
    """u = f(z) exp(-|z|^2/2) with f entire, carried by f and (optionally) f'."""

    f: Callable
    df: Optional[Callable] = None

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return self.f(z) * np.exp(-0.5 * np.abs(z) ** 2)


def translate_fock(beta, u):
    """R_beta on Fock form: f(z) -> f(z + beta) exp(-conj(beta) z - |beta|^2/2)."""
    beta = complex(beta)
    bc = np.conj(beta)

    def g(z):
        return u.f(z + beta) * np.exp(-bc * z - 0.5 * abs(beta) ** 2)

    dg = None
    if u.df is not None:
        def dg(z):
            return (u.df(z + beta) - bc * u.f(z + beta)) * np.exp(-bc * z - 0.5 * abs(beta) ** 2)

    return FockFunction(g, dg)


def gamma_apply(alpha, u):
    """(alpha . Gamma) u = alpha1 Gamma1 u + alpha2 Gamma2 u for u in Fock form.

    On u = f e^{-|z|^2/2}: Gamma1 u = i (z f - f') e^{-|z|^2/2} and
    Gamma2 u = (z f + f') e^{-|z|^2/2}.
    """
    if u.df is None:
        raise ValueError("gamma_apply needs the derivative of the entire factor")
    a1, a2 = complex(alpha).real, complex(alpha).imag

    def h(z):
        f, df = u.f(z), u.df(z)
        return a1 * 1j * (z * f - df) + a2 * (z * f + df)

    return FockFunction(h)
