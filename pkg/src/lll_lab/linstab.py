"""Linearized stability around the rectangular and hexagonal lattice solutions.

On the Fourier side (f(xi) = sum c_n e^{-2 i pi n xi}, g(xi) = conj f(-xi)) the
linearized flow is pointwise in xi:

    i d/dt (f, g) = A(xi) (f, g),      A = [[a, b], [-b, -a]],

so e^{-itA} = cos(t mu) I - i sin(t mu)/mu A with mu^2 = a^2 - b^2.  The sign of
det A = b^2 - a^2 decides stability: positive means exponential growth at rate
sqrt(det), negative means bounded oscillation.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np

from .errors import NoTransition, NotAdmissible, RealityViolated
from .fock import BasisConvention, CoeffState, sup_norm
from .lattice import HEXAGONAL_GAMMA
from .specfun import gauss_sum, symbol_drop, symbol_ell, symbol_h

__all__ = [
    "SymbolTable",
    "FourierPair",
    "StabilityReport",
    "build_symbol",
    "det_scan",
    "gamma_threshold_scan",
    "sinc_t",
    "propagator",
    "evolve_pair",
    "k_functions",
    "mu_expansion_constant",
    "mu_second_derivative_zeros",
    "weighted_norms",
    "admissibility_residual",
    "moment_constants",
    "moment_trace",
    "make_admissible",
    "inflection_bump_state",
    "linf_decay_experiment",
    "growth_experiment",
    "dyadic_data",
    "rect_instability_rate",
]


def _threads():
    try:
        return max(1, int(os.environ.get("LLL_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SymbolTable:
    """The entries a(xi), b(xi) of the linearized matrix and mu(xi) = sqrt(a^2 - b^2).

    kind 'rect': a = C ell0 (2 ell - ell0), b = C ell^2, C = e^{pi^2/(2 gamma^2)}/sqrt 2.
    kind 'hexa': a = (2/(gamma sqrt pi)) (ell ell0 - 2 h h0) - lam,
                 b = (1/(gamma sqrt pi)) (ell^2 - 2 h^2).
    """

    kind: str
    gamma: float
    M: int = 4096
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in ("rect", "hexa"):
            raise ValueError(f"kind must be 'rect' or 'hexa', got {self.kind!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def scale(self):
        if self.kind == "rect":
            return np.exp(np.pi**2 / (2 * self.gamma**2)) / np.sqrt(2)
        return 1.0 / (self.gamma * np.sqrt(np.pi))

    @property
    def ell0(self):
        return float(symbol_ell(0.0, self.gamma))

    @property
    def h0(self):
        return float(symbol_h(0.0, self.gamma))

    @property
    def lam(self):
        """Frequency of the stationary lattice solution."""
        if self.kind == "rect":
            return self.scale * self.ell0**2
        return self.scale * (self.ell0**2 - 2 * self.h0**2)

    def _ell(self, xi, n):
        return symbol_ell(xi, self.gamma, n)

    def _h(self, xi, n):
        return symbol_h(xi, self.gamma, n)

    def a(self, xi, deriv=0):
        xi = np.asarray(xi, dtype=float)
        c, l0 = self.scale, self.ell0
        if self.kind == "rect":
            if deriv == 0:
                return c * l0 * (2 * self._ell(xi, 0) - l0)
            return 2 * c * l0 * self._ell(xi, deriv)
        out = 2 * c * (self._ell(xi, deriv) * l0 - 2 * self._h(xi, deriv) * self.h0)
        return out - self.lam if deriv == 0 else out

    def b(self, xi, deriv=0):
        xi = np.asarray(xi, dtype=float)
        total = 0.0
        for i in range(deriv + 1):
            term = self._ell(xi, i) * self._ell(xi, deriv - i)
            if self.kind == "hexa":
                term = term - 2 * self._h(xi, i) * self._h(xi, deriv - i)
            total = total + comb(deriv, i) * term
        return self.scale * total

    def _drop(self, xi, which, n):
        # derivatives of ell - ell0 (or h - h0); the n = 0 term is summed without cancellation
        if n == 0:
            return symbol_drop(xi, self.gamma, which)
        return self._ell(xi, n) if which == "ell" else self._h(xi, n)

    def a_minus_b(self, xi, deriv=0):
        """a - b = -C (ell - ell0)^2 (+ 2 C (h - h0)^2 for hexa), accurate near xi = 0."""
        xi = np.asarray(xi, dtype=float)
        total = 0.0
        for i in range(deriv + 1):
            term = -self._drop(xi, "ell", i) * self._drop(xi, "ell", deriv - i)
            if self.kind == "hexa":
                term = term + 2 * self._drop(xi, "h", i) * self._drop(xi, "h", deriv - i)
            total = total + comb(deriv, i) * term
        return self.scale * total

    def a_plus_b(self, xi, deriv=0):
        return self.a(xi, deriv) + self.b(xi, deriv)

    def mu_squared(self, xi, deriv=0):
        """a^2 - b^2 = (a - b)(a + b) and its derivatives."""
        total = 0.0
        for i in range(deriv + 1):
            total = total + comb(deriv, i) * self.a_minus_b(xi, i) * self.a_plus_b(xi, deriv - i)
        return total

    def det(self, xi):
        """det A = b^2 - a^2 (D in the rectangular case)."""
        return -self.mu_squared(xi)

    def mu(self, xi):
        """Real mu >= 0 for hexa; principal complex root (Im >= 0 when a^2 < b^2) for rect."""
        m2 = self.mu_squared(xi)
        if self.kind == "hexa":
            return np.sqrt(np.maximum(m2, 0.0))
        return np.sqrt(np.asarray(m2, dtype=complex))

    def mu_derivatives(self, xi, order=3):
        """[mu, mu', ..., mu^(order)] from (mu^2)^(n) = sum_i C(n,i) mu^(i) mu^(n-i) (hexa)."""
        xi = np.asarray(xi, dtype=float)
        derivs = [self.mu(xi)]
        for n in range(1, order + 1):
            rest = sum(comb(n, i) * derivs[i] * derivs[n - i] for i in range(1, n))
            derivs.append((self.mu_squared(xi, n) - rest) / (2 * derivs[0]))
        return derivs

    @property
    def grid(self):
        return np.arange(self.M) / self.M

    def on_grid(self, M=None):
        """(a, b, a - b, mu^2) on the periodic grid j/M, cached per M."""
        M = self.M if M is None else int(M)
        if M not in self._cache:
            xi = np.arange(M) / M
            amb = self.a_minus_b(xi)
            apb = self.a_plus_b(xi)
            a = self.a(xi)
            self._cache[M] = (a, self.b(xi), amb, amb * apb)
        return self._cache[M]


def build_symbol(kind, gamma=None, M=4096):
    """Symbol table for the rectangular lattice (given gamma) or the hexagonal one."""
    if kind == "hexa":
        if gamma is not None and abs(gamma - HEXAGONAL_GAMMA) > 1e-12:
            raise ValueError(f"hexagonal symbol needs gamma={HEXAGONAL_GAMMA}, got {gamma}")
        return SymbolTable("hexa", HEXAGONAL_GAMMA, M)
    if kind != "rect":
        raise ValueError(f"kind must be 'rect' or 'hexa', got {kind!r}")
    if gamma is None:
        raise ValueError("rectangular symbol needs gamma")
    return SymbolTable("rect", float(gamma), M)


@dataclass(frozen=True)
class StabilityReport:
    kind: str
    gamma: float
    grid_size: int
    det_min: float
    det_max: float
    unstable_intervals: list
    max_growth_rate: float
    verdict: str

    def to_dict(self):
        return asdict(self)


def det_scan(sym, grid_size=4096, tol=1e-12):
    """Sign of det A on the open grid linspace(0, 1, grid_size)[1:-1]."""
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    xi = np.linspace(0.0, 1.0, grid_size)[1:-1]
    det = sym.det(xi)
    unstable = det > tol
    intervals = []
    start = None
    for i, flag in enumerate(unstable):
        if flag and start is None:
            start = i
        if start is not None and (not flag or i == unstable.size - 1):
            end = i if flag else i - 1
            intervals.append([float(xi[start]), float(xi[end])])
            start = None
    rate = float(np.sqrt(np.max(det))) if np.max(det) > 0 else 0.0
    return StabilityReport(
        kind=sym.kind,
        gamma=float(sym.gamma),
        grid_size=grid_size,
        det_min=float(np.min(det)),
        det_max=float(np.max(det)),
        unstable_intervals=intervals,
        max_growth_rate=rate,
        verdict="unstable" if np.any(unstable) else "stable",
    )


def _has_negative_det(gamma, grid_size, tol):
    xi = np.linspace(0.0, 1.0, grid_size)[1:-1]
    return bool(np.any(SymbolTable("rect", gamma).det(xi) < -tol))


def gamma_threshold_scan(gamma_range=(2.0, 3.0), resolution=1e-6, grid_size=2049, tol=1e-12):
    """Bisect on gamma for the onset of negative det values on (0, 1), rectangular lattices."""
    lo, hi = float(gamma_range[0]), float(gamma_range[1])
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {gamma_range}")
    p_lo = _has_negative_det(lo, grid_size, tol)
    if p_lo == _has_negative_det(hi, grid_size, tol):
        raise NoTransition(f"predicate is {p_lo} at both ends of [{lo}, {hi}]")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if _has_negative_det(mid, grid_size, tol) == p_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sinc_t(t, mu):
    """sin(t mu)/mu, regular at mu = 0 (series below |t mu| = 1e-4); mu may be complex."""
    x = np.asarray(t * np.asarray(mu), dtype=complex)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    ratio = np.where(small, 1 - x * x / 6 + x**4 / 120, np.sin(safe) / safe)
    out = t * ratio
    return out[()] if out.ndim == 0 else out


def _propagator_entries(a, b, mu2, t):
    mu = np.sqrt(np.asarray(mu2, dtype=complex))
    c = np.cos(t * mu)
    s = sinc_t(t, mu)
    return c - 1j * a * s, -1j * b * s, 1j * b * s, c + 1j * a * s


def propagator(sym, t, xi):
    """e^{-itA(xi)} as an array of shape xi.shape + (2, 2)."""
    xi = np.asarray(xi, dtype=float)
    e00, e01, e10, e11 = _propagator_entries(sym.a(xi), sym.b(xi), sym.mu_squared(xi), t)
    out = np.stack([np.stack([e00, e01], -1), np.stack([e10, e11], -1)], -2)
    return out


@dataclass(frozen=True)
class FourierPair:
    """(f, g) sampled on the periodic grid xi_j = j/M, with g(xi) = conj f(-xi)."""

    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        f = np.array(self.f, dtype=complex).ravel()
        g = np.array(self.g, dtype=complex).ravel()
        if f.shape != g.shape:
            raise ValueError("f and g must have the same length")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def M(self):
        return self.f.size

    @property
    def grid(self):
        return np.arange(self.M) / self.M

    def reality_defect(self):
        reflected = np.conj(np.roll(self.f[::-1], 1))  # conj f(-xi_j) = conj f(xi_{M-j})
        scale = max(1.0, float(np.max(np.abs(self.f))))
        return float(np.max(np.abs(self.g - reflected))) / scale

    def check_reality(self, tol=1e-12):
        defect = self.reality_defect()
        if defect > tol:
            raise RealityViolated(f"g differs from conj f(-xi) by {defect:.3e}")
        return self

    @classmethod
    def from_coefficients(cls, kmin, values, M):
        """f = sum c_n e^{-2 i pi n xi}, g = sum conj(c_n) e^{-2 i pi n xi}."""
        values = np.asarray(values, dtype=complex)
        n = kmin + np.arange(values.size)
        if values.size and (n.min() <= -M // 2 or n.max() >= M // 2):
            raise ValueError(f"coefficient window [{n.min()}, {n.max()}] does not fit a grid of {M}")
        spectrum = np.zeros(M, dtype=complex)
        spectrum[n % M] = values
        return cls(np.fft.fft(spectrum), np.fft.fft(np.conj(spectrum)))

    @classmethod
    def from_state(cls, state, M):
        return cls.from_coefficients(state.kmin, state.values, M)

    def coefficients(self):
        """(n, c_n) for n in [-M/2, M/2), inverse of from_coefficients."""
        c = np.fft.ifft(self.f)
        n = np.fft.fftfreq(self.M, d=1.0 / self.M).astype(int)
        order = np.argsort(n)
        return n[order], c[order]


def evolve_pair(pair0, sym, t, check=True):
    """Apply e^{-itA(xi)} pointwise on the grid of pair0."""
    if check:
        pair0.check_reality()
    a, b, _, mu2 = sym.on_grid(pair0.M)
    e00, e01, e10, e11 = _propagator_entries(a, b, mu2, t)
    return FourierPair(e00 * pair0.f + e01 * pair0.g, e10 * pair0.f + e11 * pair0.g)


def k_functions(sym, xi):
    """k1^pm = (mu -+ a)/(2 mu), k2^pm = -+ b/(2 mu) on interior points (hexa)."""
    mu = sym.mu(xi)
    a, b = sym.a(xi), sym.b(xi)
    return {
        "k1_plus": (mu - a) / (2 * mu),
        "k1_minus": (mu + a) / (2 * mu),
        "k2_plus": -b / (2 * mu),
        "k2_minus": b / (2 * mu),
        "F": sym.a_minus_b(xi) / mu,
        "G": sym.a_plus_b(xi) / mu,
    }


def mu_expansion_constant(sym):
    """C with mu(xi) ~ C xi^2 at 0: C = sqrt(lam (a''''(0) - b''''(0))/12)."""
    if sym.kind != "hexa":
        raise ValueError("the expansion constant is defined for the hexagonal symbol")
    return float(np.sqrt(sym.lam * (sym.a(0.0, 4) - sym.b(0.0, 4)) / 12))


def _bisect(fn, lo, hi, tol=1e-13, max_iter=200):
    f_lo = fn(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def mu_second_derivative_zeros(sym, scan=512):
    """Interior zeros of mu'' bracketed by a sign scan, refined by bisection."""

    def second(x):
        return float(sym.mu_derivatives(np.array([x]), 2)[2][0])

    xi = (np.arange(scan) + 0.5) / scan
    values = sym.mu_derivatives(xi, 2)[2]
    flips = np.nonzero(np.sign(values[1:]) != np.sign(values[:-1]))[0]
    return [_bisect(second, xi[i], xi[i + 1]) for i in flips]


def _interior(pair):
    return np.arange(1, pair.M)


def weighted_norms(pair, sym, j=0, n_check=8):
    """||(f+g)/mu^{j+1}||_{L^2} and ||(f-g)/mu^j||_{L^2} over the interior grid."""
    idx = _interior(pair)
    xi = idx / pair.M
    mu = sym.mu(xi)
    plus = pair.f[idx] + pair.g[idx]
    minus = pair.f[idx] - pair.g[idx]
    scale = float(np.max(np.abs(pair.f)) + np.max(np.abs(pair.g)))
    q = np.abs(plus) / mu ** (j + 1)
    # divergence test at both endpoints: fitted power of xi must stay above -1/2
    for side in (slice(0, n_check), slice(-n_check, None)):
        dist = np.minimum(xi[side], 1 - xi[side])
        vals = q[side]
        if np.max(np.abs(plus[side])) > 1e-13 * scale and np.all(vals > 0):
            slope = np.polyfit(np.log(dist), np.log(vals), 1)[0]
            if slope < -0.5:
                raise NotAdmissible(f"(f+g)/mu^{j + 1} grows like xi^{slope:.2f} at the endpoint")
    h = 1.0 / pair.M
    return {
        "plus": float(np.sqrt(np.sum(q**2) * h)),
        "minus": float(np.sqrt(np.sum((np.abs(minus) / mu**j) ** 2) * h)),
    }


def admissibility_residual(pair):
    """(|Re sum c_n|, |Re sum n c_n|) from the inverse Fourier coefficients."""
    n, c = pair.coefficients()
    return {"r0": float(abs(np.sum(c).real)), "r1": float(abs(np.sum(n * c).real))}


def moment_constants(sym):
    """lam, L, L2, L3 of the moment laws, from Gaussian sums T_n and T_n^odd."""
    g = sym.gamma
    T = {n: gauss_sum(n, g, "all") for n in (0, 2, 4)}
    To = {n: gauss_sum(n, g, "odd") for n in (0, 2, 4)}
    c = 1.0 / (g * np.sqrt(np.pi))
    return {
        "lam": sym.lam,
        "L": 2 * c * (T[0] * T[2] - 2 * To[0] * To[2]),
        "L2": 2 * c * (T[0] * T[4] - 2 * To[0] * To[4]),
        "L3": 6 * c * (T[2] ** 2 - 2 * To[2] ** 2),
    }


def _band_limited(n, c, rel=1e-15):
    """Drop the round-off floor beyond the last coefficient above rel * max|c|."""
    mags = np.abs(c)
    keep = mags > rel * mags.max() if mags.max() > 0 else np.zeros_like(mags, dtype=bool)
    if not keep.any():
        return n[:0], c[:0]
    cut = np.max(np.abs(n[keep]))
    sel = np.abs(n) <= cut
    return n[sel], c[sel]


def moment_trace(pair0, times, sym, jmax=4):
    """K_j(t) = sum n^j c_n(t) along the linearized hexagonal flow, with predicted derivatives.

    Returns times, R[j], I[j] and the right-hand sides dR_pred[j], dI_pred[j] of the
    moment laws evaluated along the trace.
    """
    times = np.asarray(times, dtype=float)
    K = np.zeros((jmax + 1, times.size), dtype=complex)
    for i, t in enumerate(times):
        n, c = _band_limited(*evolve_pair(pair0, sym, t).coefficients())
        for j in range(jmax + 1):
            K[j, i] = np.sum(n.astype(float) ** j * c)
    R, I = K.real, K.imag
    const = moment_constants(sym)
    lam, L, L2, L3 = const["lam"], const["L"], const["L2"], const["L3"]
    dR = np.zeros_like(R)
    dI = np.zeros_like(I)
    dI[0] = -2 * lam * R[0]
    if jmax >= 1:
        dI[1] = -2 * lam * R[1]
    if jmax >= 2:
        dI[2] = -(2 * lam * R[2] + 2 * L * R[0])
    if jmax >= 3:
        dI[3] = -(2 * lam * R[3] + 6 * L * R[1])
    if jmax >= 4:
        dR[4] = -L3 * I[0]
        dI[4] = -(2 * lam * R[4] + 12 * L * R[2] + (2 * L2 + L3) * R[0])
    return {"times": times, "R": R, "I": I, "dR_pred": dR, "dI_pred": dI, "constants": const}


def make_admissible(kmin, values):
    """Shift Re c_1 and then Re c_0 so that Re sum c_n = Re sum n c_n = 0."""
    values = np.array(values, dtype=complex)
    ks = kmin + np.arange(values.size)
    if not (kmin <= 0 and ks[-1] >= 1):
        raise ValueError("the window must contain n = 0 and n = 1")
    values[1 - kmin] -= np.sum(ks * values).real
    values[-kmin] -= np.sum(values).real
    return values


def inflection_bump_state(sym, concentration=1.0, M=1024, rel=1e-16):
    """Smooth admissible data whose transform is a von Mises bump at each zero of mu''.

    f0(xi) = sum_x exp(kappa (cos 2 pi (xi - x) - 1)); the coefficients decay faster
    than any exponential and are cut below rel * max.
    """
    xi = np.arange(M) / M
    f0 = sum(np.exp(concentration * (np.cos(2 * np.pi * (xi - x)) - 1)) for x in mu_second_derivative_zeros(sym))
    n, c = FourierPair(f0, np.conj(np.roll(f0[::-1], 1))).coefficients()
    keep = np.abs(c) > rel * np.abs(c).max()
    lo, hi = int(n[keep].min()), int(n[keep].max())
    sel = (n >= lo) & (n <= hi)
    return CoeffState(lo, make_admissible(lo, c[sel]), BasisConvention.hexa())


def _fit_slope(x, y):
    return float(np.polyfit(np.asarray(x, dtype=float), np.asarray(y, dtype=float), 1)[0])


@dataclass
class DecayTable:
    times: np.ndarray
    sup_norm: np.ndarray
    fitted_slope_so_far: np.ndarray
    slope: float
    slope_last_decade: float


def _decay_grid(t, width):
    # resolve the band of c_k(t): |k| <= t max|mu'|/(2 pi) plus the data width
    need = 4 * (0.35 * t / (2 * np.pi) + width + 64)
    return int(2 ** max(12, int(np.ceil(np.log2(need)))))


def linf_decay_experiment(state0, times, sym, admissible_tol=1e-10):
    """sup_S |v(t)| for the linearized hexagonal flow, with log-log slope fits."""
    if sym.kind != "hexa":
        raise ValueError("the decay experiment runs on the hexagonal symbol")
    times = np.asarray(times, dtype=float)
    width = abs(state0.kmin) + abs(state0.kmax)
    base = FourierPair.from_state(state0, 4096)
    res = admissibility_residual(base)
    scale = max(1.0, float(np.linalg.norm(state0.values)))
    if res["r0"] > admissible_tol * scale or res["r1"] > admissible_tol * scale:
        raise NotAdmissible(f"data are not admissible: r0={res['r0']:.3e}, r1={res['r1']:.3e}")
    conv = BasisConvention.hexa()

    def one(t):
        M = _decay_grid(t, width)
        pair = evolve_pair(FourierPair.from_state(state0, M), SymbolTable("hexa", sym.gamma, M), t)
        n, c = pair.coefficients()
        return sup_norm(CoeffState(int(n[0]), c, conv))

    sups = np.array(_map(one, times))
    logt, logs = np.log(times), np.log(np.maximum(sups, 1e-300))
    so_far = np.full(times.size, np.nan)
    for i in range(1, times.size):
        so_far[i] = _fit_slope(logt[: i + 1], logs[: i + 1])
    last = times >= times[-1] / 10
    slope_last = _fit_slope(logt[last], logs[last]) if np.count_nonzero(last) >= 2 else np.nan
    slope = _fit_slope(logt, logs) if times.size >= 2 else np.nan
    return DecayTable(times, sups, so_far, slope, slope_last)


def dyadic_data(theta, k0, M):
    """f0 = sum_{k >= k0} 2^{k/2} k^{-theta} 1_[2^{-k-1}, 2^{-k})(xi) + same at 1 - xi, on j/M.

    Levels with 2^{-k} < 2/M cannot be resolved by the grid and are dropped.
    """
    xi = np.arange(M) / M
    f0 = np.zeros(M)
    k = k0
    while 2.0**-k >= 2.0 / M:
        amp = 2 ** (k / 2) * k ** (-theta)
        lo, hi = 2.0 ** (-k - 1), 2.0**-k
        f0[(xi >= lo) & (xi < hi)] += amp
        f0[(1 - xi >= lo) & (1 - xi < hi) & (xi > 0)] += amp
        k += 1
    return f0


@dataclass
class GrowthTable:
    times: np.ndarray
    norm: np.ndarray
    ratio: np.ndarray
    exponent: float
    max_ratio: float


def _pair_norm(pair):
    return float(np.sqrt(np.mean(np.abs(pair.f) ** 2 + np.abs(pair.g) ** 2)))


def growth_experiment(sym, theta=0.6, k0=2, t_min=1e2, t_max=1e6, n_times=25, M=1 << 20, pair0=None):
    """L^2 growth of the linearized hexagonal flow on dyadic data (or on a given pair).

    ratio = ||U(t)|| / ((1 + t) ||U0||); the exponent is fitted on [t_min, t_max].
    """
    if pair0 is None:
        if not theta > 0.5:
            raise ValueError(f"theta must exceed 1/2, got {theta}")
        f0 = dyadic_data(theta, k0, M)
        pair0 = FourierPair(f0, f0)
    pair0.check_reality()
    times = np.concatenate([[0.0], np.geomspace(t_min, t_max, n_times)])
    norm0 = _pair_norm(pair0)
    norms = np.array(_map(lambda t: _pair_norm(evolve_pair(pair0, sym, t, check=False)), times))
    ratio = norms / ((1 + times) * norm0)
    fit = times >= t_min
    exponent = _fit_slope(np.log(times[fit]), np.log(norms[fit]))
    return GrowthTable(times, norms, ratio, exponent, float(np.max(ratio)))


def rect_instability_rate(gamma, t_max=None, kind="rect", M=4096, n_fit=17):
    """Predicted sup sqrt(D) versus the fitted exponential rate of ||f(t)|| for f0 = g0 = 1.

    The rate is the slope of log ||f|| against t on [t_max/2, t_max].
    """
    sym = build_symbol(kind, gamma if kind == "rect" else None, M)
    report = det_scan(sym, M)
    predicted = report.max_growth_rate
    if t_max is None:
        t_max = 60.0 / predicted if predicted > 0 else 2000.0
    pair0 = FourierPair(np.ones(M), np.ones(M))
    times = np.linspace(t_max / 2, t_max, n_fit)
    lognorm = [np.log(np.sqrt(np.mean(np.abs(evolve_pair(pair0, sym, t).f) ** 2))) for t in times]
    return {"predicted": predicted, "measured": _fit_slope(times, lognorm), "t_max": float(t_max)}
