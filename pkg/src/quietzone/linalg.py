"""Dense complex SVD and truncated-SVD least squares.

Matrices are plain ``numpy`` complex arrays.  The factorisation itself is
LAPACK's (``numpy.linalg.svd``); this module fixes the truncation rule, the
nullspace convention and the failure modes the synthesis relies on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericalFailure

DEFAULT_CUTOFF = 1e-5


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    rank_numerical: int

    def reconstruct(self):
        return (self.u * self.singular_values) @ self.v.conj().T


@dataclass(frozen=True)
class TsvdResult:
    solution: np.ndarray
    nullspace: np.ndarray
    rank: int
    singular_values: np.ndarray
    degenerate: bool = False

    def __iter__(self):
        # allows ``solution, nullspace = tsvd_least_squares(...)``
        return iter((self.solution, self.nullspace))


def as_complex_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or min(a.shape) < 1:
        raise ContractError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError("matrix has non-finite entries")
    return a


def _numerical_rank(sigma, cutoff_rel, cutoff_abs=None):
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    threshold = cutoff_rel * sigma[0] if cutoff_abs is None else cutoff_abs
    return int(np.count_nonzero(sigma >= threshold))


def _factor(a, full):
    try:
        return np.linalg.svd(a, full_matrices=full)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(
            f"SVD did not converge for a {a.shape[0]}x{a.shape[1]} matrix "
            f"(max |a_ij| = {np.abs(a).max():.3e}): {exc}"
        ) from exc


def svd(a, cutoff_rel=DEFAULT_CUTOFF):
    """Thin SVD ``a = U diag(s) V*`` with s non-increasing."""
    a = as_complex_matrix(a)
    u, s, vh = _factor(a, full=False)
    return SvdFactors(u=u, singular_values=s, v=vh.conj().T,
                      rank_numerical=_numerical_rank(s, cutoff_rel))


def _check_cutoff(cutoff_rel):
    if not 0.0 < cutoff_rel < 1.0:
        raise ContractError(f"cutoff_rel must lie in (0, 1), got {cutoff_rel}")


def tsvd_least_squares(a, rhs, cutoff_rel=DEFAULT_CUTOFF, cutoff_abs=None):
    """Minimum-norm least-squares solution keeping sigma_i >= cutoff_rel*sigma_1.

    With ``cutoff_abs`` the threshold is that fixed value instead.

    The returned nullspace is an orthonormal basis of the span of the
    discarded right singular vectors together with the exact kernel, i.e.
    every direction ``a`` maps below the cutoff.
    """
    if cutoff_abs is None:
        _check_cutoff(cutoff_rel)
    elif not cutoff_abs > 0:
        raise ContractError(f"cutoff_abs must be positive, got {cutoff_abs}")
    a = as_complex_matrix(a)
    rhs = np.asarray(rhs, dtype=complex)
    if rhs.shape != (a.shape[0],):
        raise ContractError(
            f"rhs has shape {rhs.shape}, expected ({a.shape[0]},) for a {a.shape} matrix")

    # full V is needed for the nullspace; thin factors already give it when rows >= cols
    u, s, vh = _factor(a, full=a.shape[0] < a.shape[1])
    rank = _numerical_rank(s, cutoff_rel, cutoff_abs)
    if rank == 0:
        return TsvdResult(solution=np.zeros(a.shape[1], dtype=complex),
                          nullspace=np.eye(a.shape[1], dtype=complex),
                          rank=0, singular_values=s, degenerate=True)
    coeff = (u[:, :rank].conj().T @ rhs) / s[:rank]
    solution = vh[:rank].conj().T @ coeff
    nullspace = vh[rank:].conj().T
    return TsvdResult(solution=solution, nullspace=nullspace, rank=rank,
                      singular_values=s)
