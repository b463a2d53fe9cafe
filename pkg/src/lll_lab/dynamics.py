"""Nonlinear LLL flow in coefficient space.

Strip system:  i dc_k/dt = sum_{k1-k2+k3=k} A(k1,k2,k3) c_k1 conj(c_k2) c_k3.
Cell system:   i dl_j/dt = C_N sum_{j1-j2+j3 = j mod N} J(j1,j2,j3,j) l_j1 conj(l_j2) l_j3,
with J the cell integral of Phi_j1 conj(Phi_j2) Phi_j3 conj(Phi_j).
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import StepFailure, WindowOverflow
from .fock import CoeffState
from .lattice import CellQuadrature, LatticeParams, phi_k

__all__ = [
    "CellState",
    "IntegratorControl",
    "Trajectory",
    "nonlinearity",
    "strip_rhs",
    "cell_couplings",
    "cell_constant",
    "cell_rhs",
    "integrate",
    "conserved",
    "stationary_residual",
    "symmetry_apply",
]

# offsets |k2-k1|, |k2-k3| beyond this are never coupled
MAX_OFFSET = 12


@dataclass(frozen=True)
class CellState:
    """Amplitudes of u = sum_j l_j Phi_j on an N-zero cell."""

    values: np.ndarray
    params: LatticeParams

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).ravel()
        if vals.size != self.params.N:
            raise ValueError(f"need {self.params.N} amplitudes, got {vals.size}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def with_values(self, values):
        return CellState(values, self.params)


@lru_cache(maxsize=16)
def _coupling_table(gamma, tag, W):
    D = min(MAX_OFFSET, W - 1)
    d1, d3 = np.meshgrid(np.arange(-D, D + 1), np.arange(-D, D + 1), indexing="ij")
    d1, d3 = d1.ravel(), d3.ravel()
    expo = np.pi**2 * (d1**2 + d3**2) / gamma**2
    # couplings below 1e-20 of A(k,k,k) cannot reach a double-precision result
    keep = expo < np.log(1e20)
    d1, d3 = d1[keep], d3[keep]
    coef = np.exp(-expo[keep]) / (gamma * np.sqrt(np.pi))
    if tag == "hexa":
        coef = np.where((d1 * d3) % 2 == 0, coef, -coef)
    k = np.arange(W)[None, :]
    # with k2 = k + d1 + d3: k1 = k + d3, k3 = k + d1
    idx1 = 2 * D + k + d3[:, None]
    idx2 = 2 * D + k + d1[:, None] + d3[:, None]
    idx3 = 2 * D + k + d1[:, None]
    return D, coef, idx1, idx2, idx3


def nonlinearity(values, gamma, tag):
    """N_k = sum_{k1-k2+k3=k} A(k1,k2,k3) c_k1 conj(c_k2) c_k3 inside the window."""
    values = np.asarray(values, dtype=complex)
    W = values.size
    D, coef, idx1, idx2, idx3 = _coupling_table(float(gamma), tag, W)
    pad = np.zeros(W + 4 * D, dtype=complex)
    pad[2 * D : 2 * D + W] = values
    return coef @ (pad[idx1] * np.conj(pad[idx2]) * pad[idx3])


def strip_rhs(state):
    """Time derivative -i N(c) of the strip system."""
    return state.with_values(-1j * nonlinearity(state.values, state.gamma, state.convention.tag))


def cell_constant(params):
    """C_N = (1/(gamma N)) sqrt(2/pi) e^{-pi^2/(2 gamma^2)} = 1/||Phi_k||^2_{L^2(K)}."""
    return np.sqrt(2 / np.pi) * np.exp(-np.pi**2 / (2 * params.gamma**2)) / (params.gamma * params.N)


@lru_cache(maxsize=8)
def _cell_couplings_cached(params, n1, n2):
    quad = CellQuadrature(params, n1, n2)
    N = params.N
    phis = np.array([phi_k(params, k)(quad.nodes) for k in range(N)])
    J = np.zeros((N, N, N, N), dtype=complex)
    for j1 in range(N):
        for j2 in range(N):
            for j3 in range(N):
                j = (j1 - j2 + j3) % N
                J[j1, j2, j3, j] = np.sum(phis[j1] * np.conj(phis[j2]) * phis[j3] * np.conj(phis[j]) * quad.weights)
    J.flags.writeable = False
    return J


def cell_couplings(params, n1=256, n2=256):
    """Quadruple cell integrals J[j1, j2, j3, j], nonzero only for j = j1-j2+j3 mod N (cached)."""
    return _cell_couplings_cached(params, n1, n2)


def cell_rhs(state, couplings=None):
    """Time derivative of the cell system."""
    J = cell_couplings(state.params) if couplings is None else couplings
    lam = state.values
    total = np.einsum("abcj,a,b,c->j", J, lam, np.conj(lam), lam)
    return state.with_values(-1j * cell_constant(state.params) * total)


def conserved(state, couplings=None):
    """Mass M, momentum P (strip only) and energy H of a coefficient state."""
    vals = state.values
    M = float(np.sum(np.abs(vals) ** 2))
    if isinstance(state, CellState):
        J = cell_couplings(state.params) if couplings is None else couplings
        H = 0.25 * np.einsum("abcj,a,b,c,j->", J, vals, np.conj(vals), vals, np.conj(vals))
        return {"M": M, "H": float(H.real)}
    P = float(2 * np.pi / state.gamma * np.sum(state.ks * np.abs(vals) ** 2))
    H = 0.25 * np.vdot(vals, nonlinearity(vals, state.gamma, state.convention.tag))
    return {"M": M, "P": P, "H": float(H.real)}


def stationary_residual(state, a):
    """||a c - N(c)||, the residual of the mass-stationary equation a u = Pi(|u|^2 u)."""
    N = nonlinearity(state.values, state.gamma, state.convention.tag)
    return float(np.linalg.norm(a * state.values - N))


def symmetry_apply(state, which, theta=0.0):
    """Coefficient form of the symmetries: 'phase', 'h_translate', 'v_shift', 'reflect'."""
    vals = np.array(state.values)
    if which == "phase":
        return state.with_values(np.exp(1j * theta) * vals)
    if which == "h_translate":
        return state.with_values(np.exp(2j * np.pi * state.ks * theta / state.gamma) * vals)
    if which == "v_shift":
        # c_k -> c_{k+1}; the coefficient at kmin leaves the window
        if vals[0] != 0:
            raise WindowOverflow("vertical shift pushes a nonzero coefficient out of the window")
        return state.with_values(np.append(vals[1:], 0j))
    if which == "reflect":
        out = np.zeros_like(vals)
        for k, v in zip(state.ks, vals):
            if v == 0:
                continue
            if not state.kmin <= -k <= state.kmax:
                raise WindowOverflow(f"reflection maps k={k} outside the window")
            out[-k - state.kmin] = v
        return state.with_values(out)
    raise ValueError(f"unknown symmetry {which!r}")


@dataclass(frozen=True)
class IntegratorControl:
    rtol: float = 1e-10
    atol: float = 1e-12
    dt0: float = 1e-3
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0 and self.dt0 > 0):
            raise ValueError("rtol, atol and dt0 must be positive")


@dataclass
class Trajectory:
    """Accepted steps of an integration with per-step conserved-quantity drift."""

    times: np.ndarray
    states: list
    drift: dict = field(default_factory=dict)
    truncation_ok: bool = True
    rejected: int = 0

    @property
    def final(self):
        return self.states[-1]


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _relative_drift(q, q0, scale):
    return abs(q - q0) / scale


def integrate(rhs, state0, t_end, control=IntegratorControl(), monitor=True):
    """Adaptive Dormand-Prince 5(4) integration of d(state)/dt = rhs(state) on [0, t_end].

    Every accepted step is stored; the drift log holds |Q(t) - Q(0)| relative to
    Q(0) for M and H (and P, measured against (2 pi/gamma) M for the strip).
    """
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")

    def f(y):
        return np.asarray(rhs(state0.with_values(y)).values)

    y = np.array(state0.values, dtype=complex)
    t, dt = 0.0, min(control.dt0, t_end)
    times, states = [0.0], [state0]
    q0 = conserved(state0) if monitor else None
    drift = {key: [] for key in (q0 or {})}
    truncation_ok = True
    rejected = 0
    k1 = f(y)
    for _ in range(control.max_steps):
        if t >= t_end:
            break
        dt = min(dt, t_end - t)
        stages = [k1]
        for i in range(1, 7):
            yi = y + dt * sum(a * s for a, s in zip(_A[i], stages))
            stages.append(f(yi))
        y5 = y + dt * sum(b * s for b, s in zip(_B5, stages) if b)
        err_vec = dt * sum((b5 - b4) * s for b5, b4, s in zip(_B5, _B4, stages))
        scale = control.atol + control.rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.max(np.abs(err_vec / scale)))
        if err <= 1.0:
            t = t + dt if t_end - t - dt > 1e-15 * t_end else t_end
            y = y5
            k1 = stages[6]
            state = state0.with_values(y)
            times.append(t)
            states.append(state)
            if monitor:
                q = conserved(state)
                for key in drift:
                    ref = q0[key] if key != "P" else None
                    if key == "P":
                        denom = max(abs(q0["P"]), 2 * np.pi / state.gamma * q0["M"], 1e-300)
                    else:
                        denom = max(abs(ref), 1e-300)
                    drift[key].append(_relative_drift(q[key], q0[key], denom))
            if isinstance(state, CoeffState) and y.size > 2:
                edge = max(abs(y[0]), abs(y[-1]))
                if edge >= 1e-8 * np.linalg.norm(y):
                    truncation_ok = False
        else:
            rejected += 1
        factor = 0.9 * err ** (-0.2) if err > 0 else 5.0
        dt = dt * min(5.0, max(0.2, factor))
        if t < t_end and dt < 1e-12 * t_end:
            raise StepFailure(f"step size {dt:.3e} underflowed at t={t:.6g}")
    else:
        raise StepFailure(f"max_steps={control.max_steps} reached at t={t:.6g}")
    return Trajectory(
        times=np.array(times),
        states=states,
        drift={key: np.array(v) for key, v in drift.items()},
        truncation_ok=truncation_ok,
        rejected=rejected,
    )
