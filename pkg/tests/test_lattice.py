import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lll_lab.errors import ConstraintViolated, ProbeAtZero, ZeroCountMismatch
from lll_lab.fock import BasisConvention, psi
from lll_lab.lattice import (
    HEXAGONAL_GAMMA,
    HEXAGONAL_TAU,
    CellQuadrature,
    FockFunction,
    LatticeParams,
    ZeroSet,
    build_doubly_periodic,
    cell_inner,
    cell_kernel_apply,
    cell_lp,
    cell_project,
    find_zeros_in_cell,
    gamma_apply,
    lambda0,
    lattice_distance,
    magnetic_translate,
    normalize_phase_shift,
    periodicity_defects,
    phi_k,
    reduce_to_cell,
    translate_fock,
    winding_number,
)
from lll_lab.specfun import theta

HEXA = LatticeParams.hexagonal()
SQUARE = LatticeParams.rectangular(np.sqrt(np.pi))


def gaussian_bump(z):
    return np.exp(-0.5 * np.abs(z - 0.3) ** 2 + 0.2j * z)


def random_points(n, seed=0, scale=2.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-scale, scale, n) + 1j * rng.uniform(-scale, scale, n)


# ---------------------------------------------------------------- parameters


def test_named_constructors():
    assert SQUARE.tau == pytest.approx(1j)
    assert HEXA.tau == pytest.approx(np.exp(2j * np.pi / 3))
    assert HEXA.gamma**2 == pytest.approx(2 * np.pi / np.sqrt(3), rel=1e-15)
    for p in (SQUARE, HEXA, LatticeParams.from_shape(0.3, 2.0, 3)):
        assert abs(p.gamma**2 * p.tau.imag - np.pi * p.N) < 1e-12


def test_quantization_enforced():
    with pytest.raises(ValueError):
        LatticeParams(2.0, 1j, 1)
    with pytest.raises(ValueError):
        LatticeParams(-1.0, 1j, 1)
    with pytest.raises(ValueError):
        LatticeParams(np.sqrt(np.pi), -1j, 1)


def test_cell_coordinates_round_trip():
    z = random_points(10)
    for p in (SQUARE, HEXA):
        assert np.max(np.abs(p.from_cell_coords(*p.to_cell_coords(z)) - z)) < 1e-13


def test_reduce_to_cell_and_distance():
    z = 0.3 + 0.4j
    w = z + 2 * HEXA.gamma - 3 * HEXA.gamma * HEXA.tau
    assert lattice_distance(reduce_to_cell(w, HEXA), z, HEXA) < 1e-12
    r1, r2 = HEXA.to_cell_coords(reduce_to_cell(w, HEXA))
    assert 0 <= r1 < 1 and 0 <= r2 < 1


# ---------------------------------------------------------------- magnetic translations


def test_translation_by_zero_is_identity():
    z = random_points(8)
    assert np.max(np.abs(magnetic_translate(0, gaussian_bump)(z) - gaussian_bump(z))) == 0


def test_translation_commutation_phase():
    alpha, beta, z = 1.0, 1j, 0.2
    ab = magnetic_translate(alpha, magnetic_translate(beta, gaussian_bump))(z)
    ba = magnetic_translate(beta, magnetic_translate(alpha, gaussian_bump))(z)
    expected = np.exp(np.conj(alpha) * beta - alpha * np.conj(beta))
    assert abs(ab / ba - expected) < 1e-13


def test_translation_inverse():
    alpha = 0.7 + 0.3j
    z = random_points(8)
    back = magnetic_translate(alpha, magnetic_translate(-alpha, gaussian_bump))(z)
    assert np.max(np.abs(back - gaussian_bump(z))) < 1e-14


@settings(max_examples=50, deadline=None)
@given(st.complex_numbers(max_magnitude=2), st.complex_numbers(max_magnitude=2), st.complex_numbers(max_magnitude=1))
def test_translation_commutation_property(alpha, beta, z):
    ab = magnetic_translate(alpha, magnetic_translate(beta, gaussian_bump))(z)
    ba = magnetic_translate(beta, magnetic_translate(alpha, gaussian_bump))(z)
    phase = np.exp(np.conj(alpha) * beta - alpha * np.conj(beta))
    assert abs(ab - phase * ba) < 1e-12 * max(1.0, abs(ab))


# ---------------------------------------------------------------- Phi_k


@pytest.mark.parametrize("params", [SQUARE, HEXA, LatticeParams.from_shape(0.2, 2.0, 2), LatticeParams.from_shape(-0.4, 2.2, 3)])
def test_phi_k_periodicities(params):
    z = random_points(10, seed=1)
    for k in range(params.N):
        phi = phi_k(params, k)
        assert np.max(np.abs(magnetic_translate(params.gamma, phi)(z) - phi(z))) < 1e-11
        shifted = magnetic_translate(params.gamma * params.tau / params.N, phi)(z)
        assert np.max(np.abs(shifted - np.exp(-2j * np.pi * k / params.N) * phi(z))) < 1e-11
        d1, d2 = periodicity_defects(phi, params, z)
        assert d1 < 1e-11 and d2 < 1e-11


def test_phi_k_are_translates_of_phi_0():
    params = LatticeParams.from_shape(0.2, 2.0, 3)
    z = random_points(10, seed=2)
    for k in range(3):
        translated = magnetic_translate(k * params.gamma / 3, phi_k(params, 0))(z)
        assert np.max(np.abs(translated - phi_k(params, k)(z))) < 1e-12


def test_phi_k_index_range():
    with pytest.raises(ValueError):
        phi_k(HEXA, 1)


def test_phi_0_matches_strip_expansion():
    # Phi_0 = (1/c) sum_n psi_n with c = e^{i pi tau/4} (2/(pi gamma^2))^{1/4} in the hexagonal convention
    conv = BasisConvention.hexa()
    z = 0.1 + 0.2j
    c = np.exp(1j * np.pi * HEXAGONAL_TAU / 4) * (2 / (np.pi * HEXAGONAL_GAMMA**2)) ** 0.25
    partial = np.sum(psi(np.arange(-8, 9), z, conv)) / c
    assert abs(partial - phi_k(HEXA, 0)(z)) < 1e-10


# ---------------------------------------------------------------- multiplicative form and zeros


def test_single_zero_reproduces_phi_0():
    for params in (SQUARE, HEXA):
        u = build_doubly_periodic(params, ZeroSet([params.z0]))
        z = random_points(10, seed=3)
        ratio = u(z) / phi_k(params, 0)(z)
        assert np.max(np.abs(ratio - ratio[0])) < 1e-10 * abs(ratio[0])


def test_multiplicative_form_periodicity():
    params = LatticeParams.from_shape(0.1, 2.1, 2)
    zeros = ZeroSet([0.4 + 0.5j, 0.5 * params.gamma * (params.tau - 1) * 2 - (0.4 + 0.5j)])
    u = build_doubly_periodic(params, zeros, scale=0.5 - 1j)
    d1, d2 = periodicity_defects(u, params, random_points(20, seed=4))
    assert d1 < 1e-10 and d2 < 1e-10


def test_zero_sum_constraint_violation():
    params = LatticeParams.from_shape(0.1, 2.1, 2)
    a = 0.4 + 0.5j
    b = 0.5 * params.gamma * (params.tau - 1) * 2 - a
    with pytest.raises(ConstraintViolated):
        build_doubly_periodic(params, ZeroSet([a + 0.1, b]))
    with pytest.raises(ConstraintViolated):
        build_doubly_periodic(params, ZeroSet([a]))


def test_zero_set_with_lattice_shift_integers():
    # moving one zero by a lattice vector is compensated by (k, l)
    params = LatticeParams.from_shape(0.1, 2.1, 2)
    a = 0.4 + 0.5j
    b = 0.5 * params.gamma * (params.tau - 1) * 2 - a
    shifted = ZeroSet([a - params.gamma * params.tau, b], k=1, l=0)
    u = build_doubly_periodic(params, shifted)
    d1, d2 = periodicity_defects(u, params, random_points(10, seed=5))
    assert d1 < 1e-10 * np.max(np.abs(u(random_points(10)))) + 1e-10 and d2 < 1e-9


@pytest.mark.parametrize("params", [SQUARE, HEXA])
def test_zeros_of_phi_0(params):
    zeros = find_zeros_in_cell(phi_k(params, 0), params)
    assert len(zeros) == 1
    assert lattice_distance(zeros[0], params.z0, params) < 1e-8


def test_zeros_of_two_zero_function():
    params = LatticeParams.from_shape(0.15, 2.0, 2)
    a = params.from_cell_coords(0.3, 0.4)
    b = 0.5 * params.gamma * (params.tau - 1) * 2 - a
    u = build_doubly_periodic(params, ZeroSet([a, b]))
    zeros = find_zeros_in_cell(u, params)
    assert len(zeros) == 2
    for target in (a, b):
        assert min(lattice_distance(z, target, params) for z in zeros) < 1e-8


def test_double_zero_counted_twice():
    params = LatticeParams.from_shape(0.0, np.sqrt(2 * np.pi), 2)
    a = 0.5 * params.gamma * (params.tau - 1)
    u = build_doubly_periodic(params, ZeroSet([a, a]))
    zeros = find_zeros_in_cell(u, params)
    assert len(zeros) == 2
    assert winding_number(u, zeros[0], 1e-3) == 2


def test_zero_count_mismatch_detected():
    # a non-periodic function has no certified count
    with pytest.raises(ZeroCountMismatch):
        find_zeros_in_cell(lambda z: np.exp(-0.5 * np.abs(z) ** 2) * (z - 0.5 - 0.5j) * (z - 1.0 - 0.3j), SQUARE)


def test_winding_number_simple():
    assert winding_number(lambda z: (z - 0.1) ** 3, 0.1, 0.01) == 3
    assert winding_number(lambda z: z - 5, 0.0, 1.0) == 0


# ---------------------------------------------------------------- phase normalization


def test_phase_shift_zero_for_cell_function():
    for params in (SQUARE, HEXA):
        assert abs(normalize_phase_shift(phi_k(params, 0), params)) < 1e-10


def test_phase_shift_of_plain_theta_function():
    params = HEXA

    def v(z):
        z = np.asarray(z, dtype=complex)
        return np.exp(0.5 * z * z - 0.5 * np.abs(z) ** 2) * theta(z / params.gamma, params.tau)

    delta = normalize_phase_shift(v, params)
    assert lattice_distance(delta, -0.5 * params.gamma * (params.tau - 1), params) < 1e-8 or abs(
        delta + 0.5 * params.gamma * (params.tau - 1)
    ) < 1e-8
    d1, d2 = periodicity_defects(magnetic_translate(delta, v), params, random_points(20, seed=6))
    assert d1 < 1e-9 and d2 < 1e-9


def test_phase_shift_recovers_translation():
    params = LatticeParams.from_shape(0.2, 2.0, 2)
    shift = 0.13 - 0.21j
    v = magnetic_translate(shift, phi_k(params, 1))
    delta = normalize_phase_shift(v, params)
    d1, d2 = periodicity_defects(magnetic_translate(delta, v), params, random_points(20, seed=7))
    assert d1 < 1e-9 and d2 < 1e-9


def test_phase_shift_probe_at_zero():
    with pytest.raises(ProbeAtZero):
        normalize_phase_shift(lambda z: np.zeros(np.shape(z), dtype=complex) + 0 * np.asarray(z), HEXA)


# ---------------------------------------------------------------- cell integrals and lambda0


def test_phi_orthogonal_on_two_zero_cell():
    params = LatticeParams.from_shape(0.0, 2.0, 2)
    quad = CellQuadrature(params, 128, 128)
    assert abs(cell_inner(phi_k(params, 0), phi_k(params, 1), quad)) < 1e-9


@pytest.mark.parametrize("params", [SQUARE, HEXA, LatticeParams.from_shape(0.3, 2.0, 2)])
def test_phi_norms_closed_forms(params):
    quad = CellQuadrature(params, 192, 192)
    g, N, tau = params.gamma, params.N, params.tau
    l2 = g * N * np.sqrt(np.pi / 2) * np.exp(np.pi**2 / (2 * g**2))
    j = np.arange(-20, 21)[:, None]
    l = np.arange(-20, 21)[None, :]
    l4 = N * g**2 / 2 * np.exp(np.pi**2 / g**2) * np.sum(np.exp(-(g**2) * np.abs(j * tau / N - l) ** 2))
    for k in range(N):
        phi = phi_k(params, k)
        assert cell_lp(phi, 2, quad) ** 2 == pytest.approx(l2, rel=1e-8)
        assert cell_lp(phi, 4, quad) ** 4 == pytest.approx(l4, rel=1e-8)


def test_cell_lp_infinity_and_projection():
    params = LatticeParams.from_shape(0.0, 2.0, 2)
    quad = CellQuadrature(params, 96, 96)
    u = lambda z: 2.0 * phi_k(params, 0)(z) - 1j * phi_k(params, 1)(z)  # noqa: E731
    assert np.allclose(cell_project(u, quad), [2.0, -1j], atol=1e-10)
    assert cell_lp(u, np.inf, quad) == pytest.approx(np.max(np.abs(u(quad.nodes))))


def test_lambda0_routes_agree():
    assert lambda0(SQUARE, "sum") == pytest.approx(lambda0(SQUARE, "rect"), rel=1e-12)
    assert lambda0(HEXA, "sum") == pytest.approx(lambda0(HEXA, "hexa"), rel=1e-12)
    assert lambda0(HEXA) == pytest.approx(3.434143286568635, rel=1e-12)
    assert lambda0(SQUARE) == pytest.approx(4.014953543419679, rel=1e-12)


def test_lambda0_specializations_check_shape():
    with pytest.raises(ValueError):
        lambda0(SQUARE, "hexa")
    with pytest.raises(ValueError):
        lambda0(HEXA, "rect")
    with pytest.raises(ValueError):
        lambda0(HEXA, "other")


@pytest.mark.parametrize("params", [SQUARE, HEXA, LatticeParams.from_shape(0.25, 2.3, 1)])
def test_lambda0_against_quadrature_ratio(params):
    quad = CellQuadrature(params, 192, 192)
    phi = phi_k(params, 0)
    ratio = cell_lp(phi, 4, quad) ** 4 / cell_lp(phi, 2, quad) ** 2
    assert lambda0(params) == pytest.approx(ratio, rel=1e-6)


def test_hexagonal_minimizes_lambda0_among_shapes():
    # the hexagonal shape is the minimizer over Re(tau) at fixed area
    values = [lambda0(LatticeParams.from_shape(t, HEXAGONAL_GAMMA, 1)) for t in np.linspace(-0.5, 0.5, 11)]
    assert min(values) == pytest.approx(lambda0(HEXA), rel=1e-12)


# ---------------------------------------------------------------- projector on the cell


def smooth_quasi_periodic(params, a, b):
    phi = phi_k(params, 0)

    def u(z):
        r1, r2 = params.to_cell_coords(z)
        return phi(z) * (1 + a * np.cos(2 * np.pi * r1) + b * np.sin(2 * np.pi * (r1 + r2)))

    return u


def test_projector_self_adjoint_on_cell():
    params = HEXA
    quad = CellQuadrature(params, 24, 24)
    rng = np.random.default_rng(8)
    for _ in range(2):
        u = smooth_quasi_periodic(params, *rng.normal(size=2))(quad.nodes)
        v = smooth_quasi_periodic(params, *rng.normal(size=2))(quad.nodes)
        pu = cell_kernel_apply(u, quad, quad.nodes)
        pv = cell_kernel_apply(v, quad, quad.nodes)
        lhs = np.sum(pu * np.conj(v) * quad.weights)
        rhs = np.sum(u * np.conj(pv) * quad.weights)
        assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(lhs))


@pytest.mark.parametrize("params", [HEXA, LatticeParams.from_shape(0.2, 2.0, 2)])
def test_projector_fixes_phi(params):
    quad = CellQuadrature(params, 64, 64)
    points = params.from_cell_coords(np.array([0.2, 0.7, 0.45]), np.array([0.3, 0.6, 0.9]))
    for k in range(params.N):
        phi = phi_k(params, k)
        assert np.max(np.abs(cell_kernel_apply(phi(quad.nodes), quad, points) - phi(points))) < 1e-8


def test_projector_removes_orthogonal_part():
    # Pi(Phi_0 * periodic) keeps only its Phi_0 component
    params = HEXA
    quad = CellQuadrature(params, 64, 64)
    u = smooth_quasi_periodic(params, 0.7, -0.4)
    coeff = cell_project(u, quad)[0]
    points = params.from_cell_coords(np.array([0.15, 0.6]), np.array([0.35, 0.8]))
    projected = cell_kernel_apply(u(quad.nodes), quad, points)
    assert np.max(np.abs(projected - coeff * phi_k(params, 0)(points))) < 1e-8


def test_cubic_products_respect_index_rule():
    params = LatticeParams.from_shape(0.0, np.sqrt(3 * np.pi), 3)
    quad = CellQuadrature(params, 128, 128)
    phis = [phi_k(params, k)(quad.nodes) for k in range(3)]
    for k1 in range(3):
        for k2 in range(3):
            for k3 in range(3):
                prod = phis[k1] * np.conj(phis[k2]) * phis[k3]
                target = (k1 - k2 + k3) % 3
                for j in range(3):
                    value = abs(np.sum(prod * np.conj(phis[j]) * quad.weights))
                    if j != target:
                        assert value < 1e-8


# ---------------------------------------------------------------- Gamma algebra


def polynomial_fock():
    return FockFunction(lambda z: 1 + 2 * z - z**3 + 0.5j * z**2, lambda z: 2 - 3 * z**2 + 1j * z)


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=1.5), st.complex_numbers(max_magnitude=1.5))
def test_gamma_conjugation_by_translation(alpha, beta):
    u = polynomial_fock()
    z = np.array([0.3 - 0.2j, -0.5 + 0.1j, 0.05j])
    lhs = translate_fock(-beta, gamma_apply(alpha, translate_fock(beta, u)))(z)
    rhs = gamma_apply(alpha, u)(z) - 2 * (alpha * np.conj(beta)).imag * u(z)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * max(1.0, np.max(np.abs(rhs)))


def test_translate_fock_matches_magnetic_translation():
    u = polynomial_fock()
    beta = 0.4 - 0.7j
    z = random_points(6, seed=9, scale=1.0)
    assert np.max(np.abs(translate_fock(beta, u)(z) - magnetic_translate(beta, u)(z))) < 1e-12


def test_gamma_apply_needs_derivative():
    with pytest.raises(ValueError):
        gamma_apply(1.0, FockFunction(lambda z: z))
