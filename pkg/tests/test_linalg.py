import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quietzone import linalg
from quietzone.errors import ContractError, NumericalFailure
from quietzone.validation import random_complex, svd_errors


def test_identity_svd():
    f = linalg.svd(np.eye(3))
    assert np.allclose(f.singular_values, 1.0)
    # U = V = I up to a common column phase
    assert np.allclose(np.abs(f.u.conj().T @ np.eye(3) @ f.v), np.eye(3))


def test_diagonal_with_phase():
    a = np.diag([3.0, 2j])
    f = linalg.svd(a)
    assert np.allclose(f.singular_values, [3.0, 2.0])
    assert np.allclose(f.reconstruct(), a, atol=1e-15)


def test_random_wide_matrix(rng):
    recon, orth, sorted_ok = svd_errors(random_complex(rng, 40, 90))
    assert recon <= 1e-12 and orth <= 1e-12 and sorted_ok


@settings(max_examples=30, deadline=None)
@given(rows=st.integers(1, 120), cols=st.integers(1, 240), seed=st.integers(0, 2**32 - 1))
def test_svd_invariants(rows, cols, seed):
    a = random_complex(np.random.default_rng(seed), rows, cols)
    recon, orth, sorted_ok = svd_errors(a)
    assert recon <= 1e-12
    assert orth <= 1e-12
    assert sorted_ok


def test_largest_shape(rng):
    recon, orth, _ = svd_errors(random_complex(rng, 300, 600))
    assert recon <= 1e-12 and orth <= 1e-12


def test_non_finite_rejected():
    with pytest.raises(ContractError):
        linalg.svd(np.array([[1.0, np.nan]]))
    with pytest.raises(ContractError):
        linalg.svd(np.zeros((0, 3)))


def test_non_convergence_maps_to_numerical_failure(monkeypatch):
    def broken(*args, **kwargs):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(np.linalg, "svd", broken)
    with pytest.raises(NumericalFailure, match="2x2"):
        linalg.svd(np.eye(2))


def test_tsvd_identity():
    res = linalg.tsvd_least_squares(np.eye(2), np.array([1, 2j]))
    assert np.allclose(res.solution, [1, 2j])
    assert res.nullspace.shape == (2, 0)


def test_tsvd_truncates_small_direction():
    res = linalg.tsvd_least_squares(np.diag([1.0, 1e-9]), np.array([1.0, 1.0]))
    assert np.allclose(res.solution, [1.0, 0.0])
    assert res.nullspace.shape == (2, 1)
    assert np.allclose(np.abs(res.nullspace[:, 0]), [0.0, 1.0])
    assert res.rank == 1


def test_tsvd_unpacks_as_pair():
    solution, nullspace = linalg.tsvd_least_squares(np.eye(2), np.ones(2))
    assert solution.shape == (2,) and nullspace.shape == (2, 0)


def test_tsvd_degenerate_flag():
    res = linalg.tsvd_least_squares(np.zeros((3, 2)), np.ones(3))
    assert res.degenerate
    assert np.all(res.solution == 0)
    assert res.nullspace.shape == (2, 2)


def test_tsvd_dimension_mismatch():
    with pytest.raises(ContractError):
        linalg.tsvd_least_squares(np.eye(3), np.ones(2))


@pytest.mark.parametrize("cutoff", [0.0, 1.0, -1e-5])
def test_tsvd_cutoff_range(cutoff):
    with pytest.raises(ContractError):
        linalg.tsvd_least_squares(np.eye(2), np.ones(2), cutoff_rel=cutoff)


def test_tsvd_nullspace_perturbation(rng):
    a = random_complex(rng, 30, 80)
    res = linalg.tsvd_least_squares(a, random_complex(rng, 30, 1)[:, 0])
    for _ in range(10):
        z = random_complex(rng, res.nullspace.shape[1], 1)[:, 0]
        moved = a @ (res.solution + res.nullspace @ z)
        assert np.linalg.norm(moved - a @ res.solution) <= 1e-10 * np.linalg.norm(z) * 10


@settings(max_examples=30, deadline=None)
@given(rows=st.integers(2, 60), cols=st.integers(2, 120), seed=st.integers(0, 2**32 - 1))
def test_nullspace_bound_full_rank(rows, cols, seed):
    rng = np.random.default_rng(seed)
    a = random_complex(rng, rows, cols)
    res = linalg.tsvd_least_squares(a, random_complex(rng, rows, 1)[:, 0])
    if res.nullspace.shape[1]:
        bound = 1e-10 * res.singular_values[0] * np.sqrt(cols)
        assert np.linalg.norm(a @ res.nullspace) <= bound


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), decades=st.integers(3, 12))
def test_nullspace_bound_with_truncation(seed, decades):
    # graded spectrum: the truncated directions are mapped below cutoff * sigma_1
    rng = np.random.default_rng(seed)
    u, _ = np.linalg.qr(random_complex(rng, 20, 20))
    v, _ = np.linalg.qr(random_complex(rng, 30, 30))
    s = np.logspace(0, -decades, 20)
    a = (u * s) @ v[:, :20].conj().T
    cutoff = 1e-5
    res = linalg.tsvd_least_squares(a, random_complex(rng, 20, 1)[:, 0], cutoff_rel=cutoff)
    assert np.linalg.norm(a @ res.nullspace, 2) < cutoff * res.singular_values[0]
    z, _ = np.linalg.qr(np.hstack([v[:, :20][:, s >= cutoff], res.nullspace]))
    assert z.shape[1] == 30  # kept and discarded directions span everything


def test_minimum_norm(rng):
    a = random_complex(rng, 20, 50)
    res = linalg.tsvd_least_squares(a, random_complex(rng, 20, 1)[:, 0])
    base = np.linalg.norm(res.solution)
    for _ in range(100):
        z = random_complex(rng, res.nullspace.shape[1], 1)[:, 0] * rng.uniform(1e-3, 1)
        assert np.linalg.norm(res.solution + res.nullspace @ z) >= base


def test_linearity_at_fixed_rank(rng):
    a = random_complex(rng, 25, 40)
    rhs = random_complex(rng, 25, 1)[:, 0]
    one = linalg.tsvd_least_squares(a, rhs)
    two = linalg.tsvd_least_squares(a, 2 * rhs)
    assert one.rank == two.rank
    assert np.array_equal(two.solution, 2 * one.solution)


def test_absolute_cutoff():
    res = linalg.tsvd_least_squares(np.diag([1e3, 1e-2, 1e-7]), np.ones(3), cutoff_abs=1e-5)
    assert res.rank == 2
    assert res.nullspace.shape == (3, 1)
