import math

import numpy as np
import pytest

from conftest import LAM0, OMEGA0, central_scenario
from quietzone.errors import ContractError, SingularityError, SynthesisFailure
from quietzone.geometry import circle_points, device_points
from quietzone.incident import IncidentSpec
from quietzone.specialfunc import hankel1_seq
from quietzone.synthesis import (DeviceCoefficients, device_field, field_matrix,
                                 multipole_order, solve_devices)

K0 = 2 * math.pi / LAM0


def test_multipole_order_central():
    assert multipole_order(K0, 10 * LAM0, 2 * LAM0) == 57


def test_multipole_order_large_cloak():
    assert multipole_order(K0, 50 * LAM0, 10 * LAM0) == 283


def test_multipole_order_integer_fixed_point():
    assert multipole_order(1.0, 7.0, 2.0) == 6


def test_multipole_order_precondition():
    with pytest.raises(ContractError):
        multipole_order(1.0, 1.0, 2.0)


def test_single_term_matrix():
    m = field_matrix(np.array([[1.0, 0.0]]), np.array([[0.0, 0.0]]), 2.0, 0)
    assert m.shape == (1, 1)
    assert m[0, 0] == hankel1_seq(0, 2.0)[0]


def test_matrix_reflection_identity(rng):
    pts = rng.uniform(-3, 3, (5, 2))
    devices = np.array([[0.1, 0.2], [4.0, 4.0]])
    n_mp = 6
    m = field_matrix(pts, devices, 1.7, n_mp).reshape(5, 2, 2 * n_mp + 1)
    for n in range(1, n_mp + 1):
        plus, minus = m[..., n_mp + n], m[..., n_mp - n]
        # H_{-n} e^{-in theta} = (-1)^n H_n e^{-in theta}
        theta = [np.arctan2(*(pts - d)[:, ::-1].T) for d in devices]
        ratio = np.stack([np.exp(-2j * n * t) for t in theta], axis=1) * (-1) ** n
        assert np.allclose(minus, plus * ratio, rtol=1e-12)


def test_matrix_matches_direct_evaluation(rng):
    sc = central_scenario()
    devices = device_points(sc)
    n_mp = 57
    b = (rng.standard_normal(3 * (2 * n_mp + 1)) + 1j * rng.standard_normal(3 * (2 * n_mp + 1)))
    b *= np.tile(0.5 ** np.abs(np.arange(-n_mp, n_mp + 1)), 3)
    coeffs = DeviceCoefficients(OMEGA0, n_mp, 3, b)
    pts = rng.uniform(-25 * LAM0, 25 * LAM0, (20, 2))
    direct = device_field(coeffs, devices, pts, K0)
    via_matrix = field_matrix(pts, devices, K0, n_mp) @ b
    assert np.all(np.abs(direct - via_matrix) <= 1e-12 * np.abs(via_matrix))


def test_device_field_zero_and_single_term():
    devices = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
    zero = DeviceCoefficients.zeros(1.0, 3, 3)
    x = np.array([[1.0, 2.0]])
    assert device_field(zero, devices, x, 2.0)[0] == 0
    b = zero.b.copy()
    b[3] = 1.0           # device 1, n = 0
    one = DeviceCoefficients(1.0, 3, 3, b)
    assert one.coefficient(1, 0) == 1.0
    assert device_field(one, devices, x, 2.0)[0] == pytest.approx(hankel1_seq(0, 2 * math.sqrt(5))[0],
                                                                  rel=1e-14)


def test_device_field_singularity():
    c = DeviceCoefficients(1.0, 1, 3, np.ones(9, dtype=complex))
    devices = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
    with pytest.raises(SingularityError, match="device 2"):
        device_field(c, devices, np.array([[5.0, 0.0]]), 1.0)
    with pytest.raises(SingularityError, match="device 1"):
        field_matrix(np.array([[1.0, 1.0], [0.0, 0.0]]), devices, 1.0, 1)


def test_coefficient_layout():
    b = np.arange(3 * 5, dtype=complex)
    c = DeviceCoefficients(1.0, 2, 3, b)
    assert c.coefficient(1, -2) == 0
    assert c.coefficient(2, -2) == 5
    assert c.coefficient(3, 2) == 14
    with pytest.raises(ContractError):
        DeviceCoefficients(1.0, 2, 3, np.zeros(14, dtype=complex))


def test_central_residuals(solved):
    _, rep = solved
    assert rep.residual_cloak <= 1e-3
    assert rep.residual_quiet <= 1e-3
    assert rep.rank_step1 > 0 and rep.rank_step2 > 0


def test_step2_does_not_degrade_cloak(solved):
    _, rep = solved
    assert rep.residual_cloak <= rep.residual_cloak_step1 + 10 * 1e-5


def test_zero_incident_gives_zero_coefficients():
    sc = central_scenario(source=IncidentSpec(position=(-20 * LAM0, 0.0), sigma=1.0, amplitude=0.0))
    coeffs, rep = solve_devices(sc, OMEGA0)
    assert not np.any(coeffs.b)
    assert rep.residual_cloak == 0 and rep.residual_quiet == 0


def test_doubling_incident_doubles_coefficients(solved):
    sc = central_scenario()
    doubled = sc.with_(source=sc.source.scaled(2.0))
    c2, rep2 = solve_devices(doubled, OMEGA0)
    c1, rep1 = solved
    assert (rep1.rank_step1, rep1.rank_step2) == (rep2.rank_step1, rep2.rank_step2)
    assert np.allclose(c2.b, 2 * c1.b, rtol=1e-13, atol=0)


def test_deterministic(solved):
    c, _ = solve_devices(central_scenario(), OMEGA0)
    assert np.array_equal(c.b, solved[0].b)


def test_radiation_decay(solved):
    coeffs, _ = solved
    sc = central_scenario()
    devices = device_points(sc)
    near = np.abs(device_field(coeffs, devices, circle_points(sc.gamma, 1000, 0.5), K0)).max()
    far = np.abs(device_field(coeffs, devices, circle_points(2 * sc.gamma, 2000, 0.5), K0)).max()
    assert far <= near


def test_device_field_helmholtz_convergence(solved):
    coeffs, _ = solved
    devices = device_points(central_scenario())
    x0 = np.array([0.3 * LAM0, 0.8 * LAM0])

    def resid(h):
        off = np.array([[0, 0], [h, 0], [-h, 0], [0, h], [0, -h]])
        u = device_field(coeffs, devices, x0 + off, K0)
        return abs((u[1:].sum() - 4 * u[0]) / h ** 2 + K0 ** 2 * u[0])

    r1, r2 = resid(LAM0 / 20), resid(LAM0 / 40)
    assert 3.0 < r1 / r2 < 5.0


def test_degenerate_step1_raises(monkeypatch):
    import quietzone.synthesis as syn
    from quietzone.linalg import TsvdResult

    def degenerate(a, rhs, **kw):
        return TsvdResult(np.zeros(a.shape[1], complex), np.eye(a.shape[1]), 0, np.zeros(1), True)

    monkeypatch.setattr(syn, "tsvd_least_squares", degenerate)
    with pytest.raises(SynthesisFailure) as info:
        solve_devices(central_scenario(), OMEGA0)
    assert info.value.omega == OMEGA0


def test_omega_must_be_positive():
    with pytest.raises(ContractError):
        solve_devices(central_scenario(), 0.0)
