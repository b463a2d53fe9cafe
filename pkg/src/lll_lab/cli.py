"""Command-line driver: one experiment per invocation, plot-ready CSV/JSON outputs.

Every run writes its data file(s) plus ``manifest.json`` (resolved config,
library version, wall time) into ``--out``.  Exit status: 0 on success, 2 on
invalid configuration, 1 on a numerical failure (the error class name is
printed on stderr).
"""
import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    CellState,
    IntegratorControl,
    cell_constant,
    cell_couplings,
    cell_rhs,
    conserved,
    integrate,
    nonlinearity,
    stationary_residual,
    strip_rhs,
)
from .errors import LLLError
from .fock import BasisConvention, CoeffState
from .lattice import (
    HEXAGONAL_TAU,
    CellQuadrature,
    LatticeParams,
    ZeroSet,
    build_doubly_periodic,
    cell_lp,
    find_zeros_in_cell,
    lambda0,
    phi_k,
)
from .linstab import (
    FourierPair,
    build_symbol,
    det_scan,
    gamma_threshold_scan,
    growth_experiment,
    inflection_bump_state,
    linf_decay_experiment,
    moment_trace,
    rect_instability_rate,
)
from .specfun import poisson_residual, theta, theta_quasi_period

SCHEMA = 1


class ConfigError(ValueError):
    """Invalid command-line configuration (exit status 2)."""


@dataclass
class RunConfig:
    """Resolved configuration of one invocation, echoed into the manifest."""

    command: str
    lattice: dict
    knobs: dict
    out: str
    fmt: str = "csv"
    files: list = field(default_factory=list)


# ---------------------------------------------------------------- output helpers


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_table(cfg, name, columns, rows):
    """Write rows as CSV (header row, '\\n' endings) or as a JSON object of columns."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.fmt == "csv":
        path = out / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    else:
        path = out / f"{name}.json"
        data = {"schema": SCHEMA, "columns": {c: [row[i] for row in rows] for i, c in enumerate(columns)}}
        path.write_text(json.dumps(_jsonable(data), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    cfg.files.append(path.name)
    return path


def write_json(cfg, name, obj):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    data = {"schema": SCHEMA, **_jsonable(obj)}
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    cfg.files.append(path.name)
    return path


def write_manifest(cfg, wall_time, status):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema": SCHEMA,
        "version": __version__,
        "status": status,
        "wall_time_s": wall_time,
        "config": asdict(cfg),
    }
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=1, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- lattice selection


def _add_lattice(p, cell=False, allow_general=False):
    group = p.add_mutually_exclusive_group()
    group.add_argument("--hexa", action="store_true", help="hexagonal lattice (default)")
    group.add_argument("--rect", type=float, metavar="GAMMA", help="rectangular lattice of period GAMMA")
    if allow_general:
        group.add_argument("--tau-real", type=float, metavar="RE", help="general cell with Re(tau)=RE (needs --gamma)")
        p.add_argument("--gamma", type=float, help="period for --tau-real")
    if cell:
        p.add_argument("--N", type=int, default=1, help="zeros per cell (default 1)")


def _lattice_dict(args):
    if getattr(args, "tau_real", None) is not None:
        if args.gamma is None:
            raise ConfigError("--tau-real needs --gamma")
        return {"kind": "general", "tau_real": args.tau_real, "gamma": args.gamma, "N": getattr(args, "N", 1)}
    if args.rect is not None:
        if not args.rect > 0:
            raise ConfigError(f"--rect needs a positive gamma, got {args.rect}")
        return {"kind": "rect", "gamma": args.rect, "N": getattr(args, "N", 1)}
    return {"kind": "hexa", "N": getattr(args, "N", 1)}


def _params(lat):
    """LatticeParams for a cell with N zeros; Im(tau) rescaled by N for rect/hexa shapes."""
    N = lat.get("N", 1)
    if N < 1:
        raise ConfigError(f"--N must be positive, got {N}")
    if lat["kind"] == "general":
        return LatticeParams.from_shape(lat["tau_real"], lat["gamma"], N)
    if lat["kind"] == "rect":
        if N == 1:
            return LatticeParams.rectangular(lat["gamma"])
        return LatticeParams.from_shape(0.0, lat["gamma"], N)
    if N == 1:
        return LatticeParams.hexagonal()
    gamma = float(np.sqrt(2 * np.pi * N / np.sqrt(3)))
    return LatticeParams(gamma, complex(-0.5, np.pi * N / gamma**2), N, "general")


def _symbol(lat, M=4096):
    if lat["kind"] == "general":
        raise ConfigError("linearized symbols exist only for --rect and --hexa")
    return build_symbol(lat["kind"], lat.get("gamma"), M)


def _positive(name, value):
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")


def _parse_modes(text):
    """'k:re:im,k:re:im' -> dict k -> complex."""
    modes = {}
    for item in filter(None, text.split(",")):
        parts = item.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"mode {item!r} is not of the form k:re[:im]")
        try:
            k = int(parts[0])
            modes[k] = complex(float(parts[1]), float(parts[2]) if len(parts) == 3 else 0.0)
        except ValueError as exc:
            raise ConfigError(f"bad mode {item!r}: {exc}") from None
    if not modes:
        raise ConfigError("no modes given")
    return modes


def _strip_state(modes, conv, pad):
    lo, hi = min(modes) - pad, max(modes) + pad
    vals = np.zeros(hi - lo + 1, dtype=complex)
    for k, v in modes.items():
        vals[k - lo] = v
    return CoeffState(lo, vals, conv)


def _convention(lat):
    if lat["kind"] == "general":
        raise ConfigError("the strip basis exists only for --rect and --hexa")
    return BasisConvention.from_tag(lat["kind"], lat.get("gamma"))


def _stationary_strip(lat, half_width):
    """Coefficients of the lattice solution Phi_0 restricted to a window, and its frequency."""
    conv = _convention(lat)
    if lat["kind"] == "hexa":
        amp = 1.0
    else:
        # constant coefficients kappa with kappa^2 = (C_M gamma sqrt(pi))
        g = conv.gamma
        amp = np.sqrt(np.exp(np.pi**2 / (2 * g**2)) / np.sqrt(2) * g * np.sqrt(np.pi))
    state = CoeffState(-half_width, np.full(2 * half_width + 1, amp, dtype=complex), conv)
    sym = build_symbol(lat["kind"], lat.get("gamma"), 64)
    return state, sym.lam


# ---------------------------------------------------------------- subcommands


def cmd_theta_check(args, cfg):
    tau = HEXAGONAL_TAU if cfg.lattice["kind"] != "rect" else 1j * np.pi / cfg.lattice["gamma"] ** 2
    x = np.linspace(-0.9, 0.9, 7)
    z = (x[:, None] + 0.37j * x[None, :] + 0.11).ravel()
    quasi = np.max(np.abs(theta(z + tau, tau) - theta_quasi_period(z, tau) * theta(z, tau)))
    anti = np.max(np.abs(theta(z + 1, tau) + theta(z, tau)))
    odd = np.max(np.abs(theta(-z, tau) + theta(z, tau)))
    lattice_zero = abs(theta(1 + tau, tau))
    rows = [
        ["quasi_periodicity", quasi],
        ["anti_periodicity", anti],
        ["oddness", odd],
        ["zero_at_lattice_point", lattice_zero],
    ]
    for alpha in (0.5, 1.0, 3.0):
        rows.append([f"poisson_alpha_{alpha}", poisson_residual(alpha, 0.3 + 0.2j)])
    write_table(cfg, "theta_check", ["identity", "residual"], rows)
    worst = max(r[1] for r in rows)
    print(f"theta-check: max residual {worst:.3e}")


def cmd_lattice_info(args, cfg):
    params = _params(cfg.lattice)
    methods = ["sum"]
    if params.N == 1 and params.kind in ("rect", "hexa"):
        methods.append(params.kind)
    info = {"gamma": params.gamma, "tau": [params.tau.real, params.tau.imag], "N": params.N}
    info["lambda0"] = {m: lambda0(params, m) for m in methods}
    quad = CellQuadrature(params, args.grid, args.grid)
    phi = phi_k(params, 0)(quad.nodes)
    info["norm2_quadrature"] = cell_lp(phi, 2, quad) ** 2
    info["norm2_closed_form"] = 1.0 / cell_constant(params)
    info["lambda0_quadrature"] = cell_lp(phi, 4, quad) ** 4 / info["norm2_quadrature"]
    u = build_doubly_periodic(params, _default_zeros(params))
    zeros = find_zeros_in_cell(u, params)
    info["zeros"] = [[complex(z).real, complex(z).imag] for z in zeros]
    write_json(cfg, "lattice_info", info)
    print(f"lattice-info: lambda0 = {info['lambda0']['sum']:.15g}")


def _default_zeros(params):
    # offsets around (gamma/2)(tau - 1) sum to zero, so the zero-sum relation holds with k = l = 0
    N = params.N
    center = 0.5 * params.gamma * (params.tau - 1)
    step = 0.5 * params.gamma * (1 + params.tau) / (N + 1)
    return ZeroSet([center + (j - (N - 1) / 2) * step for j in range(N)])


def cmd_stationary(args, cfg):
    rows = []
    lat = cfg.lattice
    if args.cell:
        params = _params(lat)
        J = cell_couplings(params)
        lam0 = lambda0(params)
        for k in range(params.N):
            state = CellState(np.eye(params.N)[k], params)
            rhs = cell_rhs(state, J).values
            rows.append([f"cell_Phi_{k}", float(np.linalg.norm(1j * rhs - lam0 * state.values))])
    else:
        state, lam = _stationary_strip(lat, args.half_width)
        interior = slice(args.half_width // 2, -(args.half_width // 2))
        N = nonlinearity(state.values, state.gamma, state.convention.tag)
        rows.append(["strip_interior", float(np.max(np.abs(lam * state.values - N)[interior]))])
        rows.append(["strip_window_edge", stationary_residual(state, lam)])
    write_table(cfg, "stationary", ["case", "residual"], rows)
    print("stationary: " + ", ".join(f"{r[0]}={r[1]:.3e}" for r in rows))


def cmd_simulate(args, cfg):
    _positive("--T", args.T)
    lat = cfg.lattice
    control = IntegratorControl(rtol=args.rtol, atol=args.atol)
    if args.cell:
        params = _params(lat)
        amps = np.zeros(params.N, dtype=complex)
        if not 0 <= args.k < params.N:
            raise ConfigError(f"--k must lie in [0, {params.N})")
        amps[args.k] = args.c
        state0 = CellState(amps, params)
        J = cell_couplings(params)
        traj = integrate(lambda s: cell_rhs(s, J), state0, args.T, control)
        lam0 = lambda0(params)
        exact = amps * np.exp(-1j * lam0 * abs(args.c) ** 2 * args.T)
        summary = {"closed_form_deviation": float(np.max(np.abs(traj.final.values - exact)))}
    else:
        modes = _parse_modes(args.modes) if args.modes else {args.k: complex(args.c)}
        state0 = _strip_state(modes, _convention(lat), args.pad)
        traj = integrate(strip_rhs, state0, args.T, control)
        summary = {"truncation_ok": traj.truncation_ok}
    keys = sorted(traj.drift)
    rows, drift_rows = [], []
    for i, t in enumerate(traj.times):
        if i % args.every and i != len(traj.times) - 1:
            continue
        state = traj.states[i]
        q = conserved(state)
        ks = state.ks if isinstance(state, CoeffState) else np.arange(state.values.size)
        for k, v in zip(ks, state.values):
            rows.append([t, k, v.real, v.imag, q["M"], q["H"], q.get("P", "")])
        drift_rows.append([t] + [traj.drift[k][i - 1] if i else 0.0 for k in keys])
    write_table(cfg, "trajectory", ["t", "k", "re", "im", "M", "H", "P"], rows)
    write_table(cfg, "drift", ["t"] + [f"drift_{k}" for k in keys], drift_rows)
    summary.update(
        {
            "steps": len(traj.times) - 1,
            "rejected": traj.rejected,
            "max_drift": {k: float(np.max(traj.drift[k])) if traj.drift[k].size else 0.0 for k in keys},
            "final": [[complex(v).real, complex(v).imag] for v in traj.final.values],
        }
    )
    write_json(cfg, "simulate_summary", summary)
    msg = ", ".join(f"{k} drift {summary['max_drift'][k]:.2e}" for k in keys)
    if "closed_form_deviation" in summary:
        msg += f", closed-form deviation {summary['closed_form_deviation']:.2e}"
    print(f"simulate: {msg}")


def cmd_spectrum(args, cfg):
    sym = _symbol(cfg.lattice)
    xi = np.linspace(0.0, 1.0, args.grid)[1:-1]
    a, b, mu2 = sym.a(xi), sym.b(xi), sym.mu_squared(xi)
    mu = np.sqrt(np.asarray(mu2, dtype=complex))
    rows = [[x, ai, bi, m2, m.real, m.imag, -m2] for x, ai, bi, m2, m in zip(xi, a, b, mu2, mu)]
    write_table(cfg, "spectrum", ["xi", "a", "b", "mu_squared", "mu_real", "mu_imag", "det"], rows)
    report = det_scan(sym, args.grid)
    write_json(cfg, "spectrum_report", report.to_dict())
    print(f"spectrum: {report.verdict}, det in [{report.det_min:.3e}, {report.det_max:.3e}]")


def cmd_scan_gamma(args, cfg):
    g0 = gamma_threshold_scan((args.lo, args.hi), args.resolution)
    write_json(cfg, "scan_gamma", {"gamma0": g0, "from": args.lo, "to": args.hi, "resolution": args.resolution})
    print(f"gamma0 = {g0:.6f}")


def cmd_decay(args, cfg):
    _positive("--t-min", args.t_min)
    if not args.t_max > args.t_min:
        raise ConfigError("--t-max must exceed --t-min")
    sym = _symbol(cfg.lattice)
    if sym.kind != "hexa":
        raise ConfigError("decay runs on the hexagonal lattice")
    state0 = inflection_bump_state(sym, args.concentration)
    tab = linf_decay_experiment(state0, np.geomspace(args.t_min, args.t_max, args.n_times), sym)
    rows = list(zip(tab.times, tab.sup_norm, tab.fitted_slope_so_far))
    write_table(cfg, "decay", ["t", "sup_norm", "fitted_slope_so_far"], rows)
    write_json(cfg, "decay_fit", {"slope": tab.slope, "slope_last_decade": tab.slope_last_decade})
    print(f"decay: slope {tab.slope:.4f} (last decade {tab.slope_last_decade:.4f})")


def cmd_growth(args, cfg):
    sym = _symbol(cfg.lattice)
    if sym.kind != "hexa":
        raise ConfigError("growth runs on the hexagonal lattice")
    if not args.theta > 0.5:
        raise ConfigError(f"--theta must exceed 1/2, got {args.theta}")
    if args.k0 < 1:
        raise ConfigError("--k0 must be at least 1")
    tab = growth_experiment(sym, args.theta, args.k0, args.t_min, args.t_max, args.n_times, 1 << args.log2_grid)
    write_table(cfg, "growth", ["t", "norm", "ratio"], list(zip(tab.times, tab.norm, tab.ratio)))
    write_json(cfg, "growth_fit", {"exponent": tab.exponent, "max_ratio": tab.max_ratio})
    print(f"growth: exponent {tab.exponent:.4f}, max ratio {tab.max_ratio:.4f}")


def cmd_instability(args, cfg):
    lat = cfg.lattice
    if lat["kind"] != "rect":
        raise ConfigError("instability needs --rect GAMMA")
    res = rect_instability_rate(lat["gamma"], args.T)
    res["relative_error"] = abs(res["measured"] - res["predicted"]) / res["predicted"] if res["predicted"] else None
    write_json(cfg, "instability", res)
    print(f"instability: predicted {res['predicted']:.6f}, measured {res['measured']:.6f}")


def cmd_moments(args, cfg):
    sym = _symbol(cfg.lattice)
    if sym.kind != "hexa":
        raise ConfigError("moments runs on the hexagonal lattice")
    _positive("--T", args.T)
    modes = _parse_modes(args.modes)
    lo, hi = min(min(modes), 0), max(max(modes), 1)
    vals = np.zeros(hi - lo + 1, dtype=complex)
    for k, v in modes.items():
        vals[k - lo] = v
    pair0 = FourierPair.from_coefficients(lo, vals, args.grid)
    times = np.linspace(0.0, args.T, args.n_times)
    tr = moment_trace(pair0, times, sym)
    cols = ["t"] + [f"R{j}" for j in range(5)] + [f"I{j}" for j in range(5)]
    cols += [f"dR{j}_pred" for j in range(5)] + [f"dI{j}_pred" for j in range(5)]
    rows = [[t, *tr["R"][:, i], *tr["I"][:, i], *tr["dR_pred"][:, i], *tr["dI_pred"][:, i]] for i, t in enumerate(times)]
    write_table(cfg, "moments", cols, rows)
    write_json(cfg, "moment_constants", tr["constants"])
    spread = np.ptp(tr["R"][:4], axis=1)
    print("moments: Re K_0..3 spread " + " ".join(f"{s:.2e}" for s in spread))


def cmd_mu_profile(args, cfg):
    sym = _symbol(cfg.lattice)
    if sym.kind != "hexa":
        raise ConfigError("mu-profile runs on the hexagonal lattice")
    xi = np.linspace(0.0, 1.0, args.grid)[1:-1]
    derivs = sym.mu_derivatives(xi, 3)
    rows = list(zip(xi, *derivs))
    write_table(cfg, "mu_profile", ["xi", "mu", "mu_1", "mu_2", "mu_3"], rows)
    print(f"mu-profile: max mu {np.max(derivs[0]):.6f}, max |mu'| {np.max(np.abs(derivs[1])):.6f}")


# ---------------------------------------------------------------- parser


COLUMNS = {
    "theta-check": "theta_check.csv: identity, residual",
    "lattice-info": "lattice_info.json: gamma, tau, N, lambda0 per method, norm2_quadrature, norm2_closed_form, lambda0_quadrature, zeros",
    "stationary": "stationary.csv: case, residual",
    "simulate": "trajectory.csv: t, k, re, im, M, H, P (P empty on a cell); drift.csv: t, drift_<name>; simulate_summary.json",
    "spectrum": "spectrum.csv: xi, a, b, mu_squared, mu_real, mu_imag, det; spectrum_report.json",
    "scan-gamma": "scan_gamma.json: gamma0, from, to, resolution",
    "decay": "decay.csv: t, sup_norm, fitted_slope_so_far; decay_fit.json",
    "growth": "growth.csv: t, norm, ratio = norm/((1+t) norm0); growth_fit.json",
    "instability": "instability.json: predicted, measured, t_max, relative_error",
    "moments": "moments.csv: t, R0..R4, I0..I4, dR<j>_pred, dI<j>_pred; moment_constants.json",
    "mu-profile": "mu_profile.csv: xi, mu, mu_1, mu_2, mu_3 (derivatives of mu)",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="lll-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, helptext):
        p = sub.add_parser(name, help=helptext, description=helptext, epilog="output columns: " + COLUMNS[name])
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv", help="table format")
        p.set_defaults(func=func)
        return p

    p = add("theta-check", cmd_theta_check, "theta and Poisson identity residuals")
    _add_lattice(p)
    p = add("lattice-info", cmd_lattice_info, "lambda0, cell norms and zeros of a cell")
    _add_lattice(p, cell=True, allow_general=True)
    p.add_argument("--grid", type=int, default=256, help="quadrature nodes per side")
    p = add("stationary", cmd_stationary, "residuals of the stationary lattice solutions")
    _add_lattice(p, cell=True, allow_general=True)
    p.add_argument("--cell", action="store_true", help="cell system instead of strip")
    p.add_argument("--half-width", type=int, default=40, help="strip window half width")
    p = add("simulate", cmd_simulate, "nonlinear trajectory with conservation log")
    _add_lattice(p, cell=True, allow_general=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--cell", action="store_true", help="cell system u = sum l_j Phi_j")
    mode.add_argument("--strip", action="store_true", help="strip system (default)")
    p.add_argument("--c", type=complex, default=1.0, help="amplitude of the initial mode")
    p.add_argument("--k", type=int, default=0, help="index of the initial mode")
    p.add_argument("--modes", help="strip data as k:re:im,... (overrides --k/--c)")
    p.add_argument("--pad", type=int, default=16, help="empty strip modes on each side")
    p.add_argument("--T", type=float, default=10.0, help="final time")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--every", type=int, default=1, help="keep every n-th accepted step")
    p = add("spectrum", cmd_spectrum, "symbol tables a, b, mu and det A")
    _add_lattice(p)
    p.add_argument("--grid", type=int, default=4096)
    p = add("scan-gamma", cmd_scan_gamma, "bisection for the rectangular stability threshold")
    p.add_argument("--from", dest="lo", type=float, default=2.0)
    p.add_argument("--to", dest="hi", type=float, default=3.0)
    p.add_argument("--resolution", type=float, default=1e-6)
    p = add("decay", cmd_decay, "sup-norm decay of the linearized hexagonal flow")
    _add_lattice(p)
    p.add_argument("--t-min", type=float, default=1e2)
    p.add_argument("--t-max", type=float, default=1e5)
    p.add_argument("--n-times", type=int, default=16)
    p.add_argument("--concentration", type=float, default=1.0, help="von Mises concentration of the data")
    p = add("growth", cmd_growth, "L2 growth on dyadic data")
    _add_lattice(p)
    p.add_argument("--theta", type=float, default=0.6)
    p.add_argument("--k0", type=int, default=2)
    p.add_argument("--t-min", type=float, default=1e2)
    p.add_argument("--t-max", type=float, default=1e6)
    p.add_argument("--n-times", type=int, default=25)
    p.add_argument("--log2-grid", type=int, default=20)
    p = add("instability", cmd_instability, "predicted versus measured rectangular growth rate")
    _add_lattice(p)
    p.add_argument("--T", type=float, default=None, help="final time (default 60/rate)")
    p = add("moments", cmd_moments, "moment traces K_j of the linearized hexagonal flow")
    _add_lattice(p)
    p.add_argument("--modes", default="-1:0.4:-0.1,0:1:0.5,1:-0.3:0.2,2:0.1:0.3")
    p.add_argument("--T", type=float, default=5.0)
    p.add_argument("--n-times", type=int, default=11)
    p.add_argument("--grid", type=int, default=512)
    p = add("mu-profile", cmd_mu_profile, "mu and its first three derivatives")
    _add_lattice(p)
    p.add_argument("--grid", type=int, default=1025)
    return parser


def _knobs(args):
    skip = {"func", "command", "out", "fmt", "hexa", "rect", "tau_real", "gamma", "N"}
    return {k: (str(v) if isinstance(v, complex) else v) for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    cfg = None
    try:
        lattice = _lattice_dict(args) if hasattr(args, "hexa") else {}
        cfg = RunConfig(args.command, lattice, _knobs(args), args.out, args.fmt)
        args.func(args, cfg)
    except (ConfigError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        if cfg is not None:
            write_manifest(cfg, time.perf_counter() - start, "config_error")
        return 2
    except LLLError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        write_manifest(cfg, time.perf_counter() - start, type(exc).__name__)
        return 1
    write_manifest(cfg, time.perf_counter() - start, "ok")
    return 0


def main():
    sys.exit(run())
