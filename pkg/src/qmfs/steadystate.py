"""Steady-state covariance and the variance-level quantities derived from it."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .dynamics import LinearModel, assemble_drift
from .errors import IllConditionedError, InstabilityError, QMFSError
from .model import QuadratureSelector, collective, validate

# Configs with max Re(lambda) above -STABILITY_MARGIN * kappa are rejected.
STABILITY_MARGIN = 1e-6
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetrized second moments ``<{x_i, x_j}>/2`` over ``ordering``."""

    values: np.ndarray
    ordering: tuple

    def index(self, label: str) -> int:
        return self.ordering.index(label)

    @property
    def mechanical(self) -> np.ndarray:
        i = self.index("X1")
        return self.values[i:i + 4, i:i + 4]

    def project(self, u, v=None) -> float:
        """``u^T V v`` for vectors on the mechanical basis or the full basis."""
        if v is None and isinstance(u, QuadratureSelector) and u.kind == "collective":
            # +-1 weights and one halving keep vacuum variances exact
            w = self._lift(np.rint(u.vector() * math.sqrt(2.0)))
            return float(w @ self.values @ w) / 2.0
        u = self._lift(u)
        v = u if v is None else self._lift(v)
        return float(u @ self.values @ v)

    def _lift(self, q) -> np.ndarray:
        vec = q.vector() if isinstance(q, QuadratureSelector) else np.asarray(q, dtype=float)
        if vec.shape[0] == len(self.ordering):
            return vec
        out = np.zeros(len(self.ordering))
        i = self.index("X1")
        out[i:i + 4] = vec
        return out

    def symplectic_eigenvalues(self) -> np.ndarray:
        n = len(self.ordering)
        sigma = _symplectic_form(n)
        ev = np.linalg.eigvals(1j * sigma @ self.values)
        return np.sort(np.abs(ev.real))[::2]

    def uncertainty_min_eig(self) -> float:
        """Smallest eigenvalue of ``V + i sigma / 2``; physical states give >= 0."""
        n = len(self.ordering)
        return float(np.min(np.linalg.eigvalsh(self.values + 0.5j * _symplectic_form(n))))


def _symplectic_form(n: int) -> np.ndarray:
    s = np.zeros((n, n))
    for i in range(0, n, 2):
        s[i, i + 1] = 1.0
        s[i + 1, i] = -1.0
    return s


def check_stable(model: LinearModel) -> None:
    lam = model.eigenvalues()
    worst = float(np.max(lam.real))
    if worst > 0.0:
        raise InstabilityError(f"unstable model: max Re(lambda) = {worst:.6g} rad/s")
    if worst > -STABILITY_MARGIN * model.kappa_min():
        raise InstabilityError(f"marginally stable model: max Re(lambda) = {worst:.6g} rad/s")


def lyapunov(A: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Solve ``A V + V A^T + D = 0`` (Bartels-Stewart), symmetrized."""
    V = solve_continuous_lyapunov(A, -D)
    return 0.5 * (V + V.T)


def solve_lyapunov(model: LinearModel) -> CovarianceMatrix:
    """Steady-state covariance of a stable linear model.

    Raises
    ------
    InstabilityError
        If the drift is unstable or marginally stable.
    IllConditionedError
        If the residual ``||A V + V A^T + D||_F`` exceeds ``1e-10 ||D||_F``.
    """
    check_stable(model)
    A, D = model.drift, model.diffusion
    # rescale time so the solve is well conditioned for rates spanning decades
    scale = float(np.max(np.abs(A)))
    V = lyapunov(A / scale, D / scale)
    res = np.linalg.norm(A @ V + V @ A.T + D)
    if res > RESIDUAL_TOL * np.linalg.norm(D):
        # one step of iterative refinement
        dV = lyapunov(A / scale, (A @ V + V @ A.T + D) / scale)
        V = V + dV
        res = np.linalg.norm(A @ V + V @ A.T + D)
        if res > RESIDUAL_TOL * np.linalg.norm(D):
            raise IllConditionedError(
                f"ill-conditioned: Lyapunov residual {res:.3g} exceeds {RESIDUAL_TOL:g} * ||D||")
    return CovarianceMatrix(V, model.ordering)


def steady_state(config) -> CovarianceMatrix:
    """Validate, assemble and solve in one call."""
    return solve_lyapunov(assemble_drift(validate(config)))


def quadrature_variance(V: CovarianceMatrix, q: QuadratureSelector) -> float:
    """Variance of a mechanical quadrature (vacuum = 1/2).

    Generalized selectors are composed from their base pair as
    ``<a^2> cos^2(phi/2) + <b^2> sin^2(phi/2) + <ab> sin(phi)``.
    """
    if q.kind != "generalized":
        return V.project(q)
    a, b = (QuadratureSelector("collective", k) for k in q.base)
    half = 0.5 * q.angle
    return (V.project(a) * math.cos(half) ** 2 + V.project(b) * math.sin(half) ** 2
            + cross_correlation(V, a, b) * math.sin(q.angle))


def cross_correlation(V: CovarianceMatrix, q1: QuadratureSelector, q2: QuadratureSelector) -> float:
    """Symmetrized covariance ``<{q1, q2}>/2``."""
    u, v = V._lift(q1), V._lift(q2)
    S = 0.5 * (V.values + V.values.T)
    return float(u @ S @ v)


class Duan(NamedTuple):
    value: float
    margin_db: float


def duan_quantity(V: CovarianceMatrix) -> Duan:
    """``<X+^2> + <P-^2>``; entanglement is certified when below 1."""
    value = V.project(collective("+", "X")) + V.project(collective("-", "P"))
    return Duan(value, 10.0 * math.log10(value))


def worker_count(threads=None) -> int:
    """Worker cap from the argument or ``QMFS_THREADS`` (0 = auto)."""
    if threads is None:
        try:
            threads = int(os.environ.get("QMFS_THREADS", "0"))
        except ValueError:
            threads = 0
    if threads <= 0:
        threads = min(8, os.cpu_count() or 1)
    return threads


def parallel_map(fn, items, threads=None) -> list:
    """Map in a thread pool, preserving input order."""
    items = list(items)
    n = worker_count(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def sweep(configs, selectors, threads=None) -> list:
    """Variances of ``selectors`` for each config, one dict per row.

    Rows that fail carry ``error`` with the message and NaN variances; the
    sweep itself never raises for a bad row.
    """
    selectors = list(selectors)

    def row(cfg):
        out = {"error": ""}
        try:
            V = steady_state(cfg)
            for q in selectors:
                out[str(q)] = quadrature_variance(V, q)
        except QMFSError as exc:
            out["error"] = str(exc)
            for q in selectors:
                out[str(q)] = float("nan")
        return out

    return parallel_map(row, configs, threads)
