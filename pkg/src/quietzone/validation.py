"""Self-check suites behind ``quietzone validate``."""
from __future__ import annotations

import time
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import linalg, scattering, specialfunc

SPECIALFUNC_TOL = 1e-10
WRONSKIAN_TOL = 1e-10
SVD_TOL = 1e-12
DISK_TOL = 1e-6
DISK_KA = (2.0, 5.0, 10.0)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail} ({self.seconds:.1f} s)"


def load_bessel_oracle():
    """Frozen multiprecision table: x (P,), n (Q,), j and y (P, Q)."""
    with resources.files("quietzone.data").joinpath("bessel_oracle.npz").open("rb") as fh:
        data = np.load(fh)
        return {key: data[key] for key in ("x", "n", "j", "y")}


def bessel_errors(oracle=None, orders=None):
    """(max relative |H - H_ref| / |H_ref|, max relative Wronskian defect).

    Entries the table stores as overflowed (|Y| > 1e300) are skipped.
    """
    oracle = load_bessel_oracle() if oracle is None else oracle
    x, n = oracle["x"], oracle["n"]
    cols = np.arange(len(n)) if orders is None else np.flatnonzero(np.isin(n, orders))
    n_sel = n[cols]
    j_ref, y_ref = oracle["j"][:, cols], oracle["y"][:, cols]
    n_top = int(n_sel.max())
    j, y = specialfunc.bessel_jy_seq(n_top, x)
    ok = np.isfinite(y_ref) & (np.abs(y_ref) < 1e290)
    with np.errstate(invalid="ignore", over="ignore"):
        err = np.hypot(j[:, n_sel] - j_ref, y[:, n_sel] - y_ref) / np.hypot(j_ref, y_ref)
    h_err = float(np.max(np.where(ok, err, 0.0)))

    with np.errstate(invalid="ignore", over="ignore"):
        w = j[:, 1:] * y[:, :-1] - j[:, :-1] * y[:, 1:]
        target = (2.0 / (np.pi * x))[:, None]
        defect = np.abs(w / target - 1.0)
    fin = np.isfinite(y[:, 1:]) & (np.abs(y[:, 1:]) < 1e290)
    w_err = float(np.max(np.where(fin, defect, 0.0)))
    return h_err, w_err


def specialfunc_suite(fast=False):
    t0 = time.perf_counter()
    oracle = load_bessel_oracle()
    orders = oracle["n"][oracle["n"] <= 60] if fast else None
    h_err, w_err = bessel_errors(oracle, orders)
    ok = bool(h_err <= SPECIALFUNC_TOL and w_err <= WRONSKIAN_TOL)
    return SuiteResult("specialfunc", ok,
                       f"max rel err {h_err:.2e} (tol {SPECIALFUNC_TOL:g}), "
                       f"Wronskian {w_err:.2e} (tol {WRONSKIAN_TOL:g})",
                       time.perf_counter() - t0)


def random_complex(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def svd_errors(a):
    f = linalg.svd(a)
    scale = np.linalg.norm(a)
    recon = np.linalg.norm(a - f.reconstruct()) / scale
    k = f.u.shape[1]
    orth_u = np.abs(f.u.conj().T @ f.u - np.eye(k)).max()
    orth_v = np.abs(f.v.conj().T @ f.v - np.eye(k)).max()
    sorted_ok = bool(np.all(np.diff(f.singular_values) <= 0))
    return float(recon), float(max(orth_u, orth_v)), sorted_ok


def svd_suite(fast=False, seed=20100101):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    count, top = (20, 60) if fast else (200, 300)
    worst_recon = worst_orth = worst_null = 0.0
    all_sorted = True
    for i in range(count):
        rows = int(rng.integers(1, top + 1))
        cols = int(rng.integers(1, 2 * top + 1))
        if i == count - 1:
            rows, cols = top, 2 * top
        a = random_complex(rng, rows, cols)
        recon, orth, sorted_ok = svd_errors(a)
        worst_recon = max(worst_recon, recon)
        worst_orth = max(worst_orth, orth)
        all_sorted &= sorted_ok
        res = linalg.tsvd_least_squares(a, random_complex(rng, rows, 1)[:, 0])
        if res.nullspace.shape[1]:
            bound = 1e-10 * res.singular_values[0] * np.sqrt(cols)
            worst_null = max(worst_null, float(np.linalg.norm(a @ res.nullspace) / bound))
    ok = bool(worst_recon <= SVD_TOL and worst_orth <= SVD_TOL and all_sorted and worst_null <= 1.0)
    return SuiteResult("svd", ok,
                       f"{count} matrices, reconstruction {worst_recon:.2e}, "
                       f"orthonormality {worst_orth:.2e}, ||A Z|| / bound {worst_null:.2e}",
                       time.perf_counter() - t0)


def disk_error(ka, n_quad=128, radius=1.0):
    """Relative error of the Nystrom field for a plane wave on a unit disk, at r = 2, 4."""
    k = ka / radius
    disk = scattering.CircleBoundary(radius, n_quad=n_quad)
    nodes = disk.nodes()
    trace = np.exp(1j * k * nodes.x[:, 0])
    dens = scattering.solve_scattering(disk, trace, k)
    t = 2 * np.pi * np.arange(64) / 64
    pts = np.concatenate([r * radius * np.stack([np.cos(t), np.sin(t)], -1) for r in (2.0, 4.0)])
    num = scattering.scattered_field(disk, dens, pts, k)
    ref = scattering.disk_series_scattered(radius, k, pts)
    return float(np.linalg.norm(num - ref) / np.linalg.norm(ref))


def disk_suite(fast=False):
    t0 = time.perf_counter()
    kas = DISK_KA[:2] if fast else DISK_KA
    errs = {ka: disk_error(ka) for ka in kas}
    ok = all(e <= DISK_TOL for e in errs.values())
    detail = ", ".join(f"ka={ka:g}: {e:.2e}" for ka, e in errs.items())
    return SuiteResult("disk", ok, f"{detail} (tol {DISK_TOL:g})", time.perf_counter() - t0)


SUITES = (specialfunc_suite, svd_suite, disk_suite)


def run_all(fast=False):
    results = []
    for suite in SUITES:
        try:
            results.append(suite(fast=fast))
        except Exception as exc:  # a crashing suite is a failing suite
            name = suite.__name__.removesuffix("_suite")
            results.append(SuiteResult(name, False, f"raised {type(exc).__name__}: {exc}"))
    return results
