"""Spectral kernel field equation: sources, fixed point and stability analysis.

The kernel ``h`` assigns a positive weight to each Laplacian mode. It solves

    R_l[h] = T_l[h],   R_l[h] = -log(h_l / h0_l) - 1,

equivalently the fixed point ``h_l = h0_l * exp(-1 - T_l[h])``. Around a
solution ``h*`` this module reports the Jacobian of that map, the diagonal
Hessian of the underlying functional and the per-mode conservation residual
(column sums of d(R - T)/dh), which coincide for mode-separable sources.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "SourceModel",
    "GaussianMI",
    "Vacuum",
    "Boltzmann",
    "FixedPointReport",
    "JacobianSummary",
    "HessianSummary",
    "StabilityReport",
    "source_eval",
    "geometric_term",
    "fixed_point_solve",
    "jacobian_analysis",
    "hessian_and_gap",
    "conservation_residual",
    "fisher_metric_diag",
    "leakage_diagnostic",
    "stability_report",
    "scalar_fixed_point_oracle",
]


def _positive(name: str, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} must be strictly positive")
    return arr


class SourceModel:
    """Base class for the source term ``T[h]``.

    Subclasses implement :meth:`evaluate` and :meth:`jacobian`; mode-separable
    sources (diagonal Jacobian) also override :meth:`diag_derivative`.
    """

    separable: bool = True

    def evaluate(self, h: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diag_derivative(self, h: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
        return np.diag(self.jacobian(h, lambdas)).copy()

    def jacobian(self, h: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
        """Dense ``dT_l / dh_m``."""
        return np.diag(self.diag_derivative(h, lambdas))


@dataclass(frozen=True)
class GaussianMI(SourceModel):
    """``T_l = mu2 * w_l / (2 (sigma2 + h_l))``."""

    mu2: float = 2.0
    sigma2: float = 1.0
    w: float | tuple[float, ...] | np.ndarray = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ParameterError("sigma2 must be > 0")
        if not self.mu2 >= 0:
            raise ParameterError("mu2 must be >= 0")
        if np.any(np.asarray(self.w, dtype=float) < 0):
            raise ParameterError("w must be nonnegative")

    def weights(self, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.w, dtype=float), (n,))

    def evaluate(self, h, lambdas):
        h = np.asarray(h, dtype=float)
        return self.mu2 * self.weights(h.size) / (2.0 * (self.sigma2 + h))

    def diag_derivative(self, h, lambdas):
        h = np.asarray(h, dtype=float)
        return -self.mu2 * self.weights(h.size) / (2.0 * (self.sigma2 + h) ** 2)


@dataclass(frozen=True)
class Vacuum(SourceModel):
    """No source: ``T = 0``."""

    def evaluate(self, h, lambdas):
        return np.zeros(np.shape(h))

    def diag_derivative(self, h, lambdas):
        return np.zeros(np.shape(h))


@dataclass(frozen=True)
class Boltzmann(SourceModel):
    """``T_l = lambda_l / kT - 1``; with prior ``h0 = 1/Z`` the fixed point is
    the Boltzmann weight ``exp(-lambda_l / kT) / Z``."""

    kT: float = 1.0
    Z: float = 1.0

    def __post_init__(self):
        if not (self.kT > 0 and self.Z > 0):
            raise ParameterError("kT and Z must be > 0")

    def prior(self, n: int) -> np.ndarray:
        return np.full(n, 1.0 / self.Z)

    def evaluate(self, h, lambdas):
        lam = np.broadcast_to(np.asarray(lambdas, dtype=float), np.shape(h))
        return lam / self.kT - 1.0

    def diag_derivative(self, h, lambdas):
        return np.zeros(np.shape(h))


def source_eval(model: SourceModel, h, lambdas=None) -> np.ndarray:
    h = _positive("h", h)
    lam = np.zeros_like(h) if lambdas is None else np.asarray(lambdas, dtype=float)
    return model.evaluate(h, lam)


def geometric_term(h, h0) -> np.ndarray:
    """``R_l = -log(h_l / h0_l) - 1``."""
    h = _positive("h", h)
    h0 = _positive("h0", h0)
    return -np.log(h / h0) - 1.0


def fisher_metric_diag(h) -> np.ndarray:
    """Diagonal of the Fisher-Rao metric, ``1 / (2 h^2)``."""
    h = _positive("h", h)
    return 0.5 / h**2


@dataclass(frozen=True)
class FixedPointReport:
    h_star: np.ndarray
    iterations: int
    residual_inf: float
    converged: bool
    h0: np.ndarray
    lambdas: np.ndarray


def fixed_point_solve(
    h0,
    model: SourceModel,
    lambdas=None,
    tol: float = 1e-14,
    max_iter: int = 10_000,
    damping: float = 1.0,
) -> FixedPointReport:
    """Picard iteration ``h <- h0 * exp(-1 - T[h])`` started at ``h0``.

    Stops when the sup-norm step is at most ``tol``. Hitting ``max_iter``
    returns ``converged=False`` with the last iterate rather than raising.
    ``damping`` in (0, 1] blends the update with the previous iterate.
    """
    if not tol > 0:
        raise ParameterError("tol must be > 0")
    if not 0 < damping <= 1:
        raise ParameterError("damping must lie in (0, 1]")
    h0 = _positive("h0", np.atleast_1d(np.asarray(h0, dtype=float)))
    lam = np.zeros_like(h0) if lambdas is None else np.asarray(lambdas, dtype=float)
    if lam.shape != h0.shape:
        raise ParameterError("lambdas and h0 must have equal length")

    h = h0.copy()
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        update = h0 * np.exp(-1.0 - model.evaluate(h, lam))
        if damping != 1.0:
            update = (1.0 - damping) * h + damping * update
        step = float(np.max(np.abs(update - h)))
        h = update
        if step <= tol:
            converged = True
            break

    residual = float(np.max(np.abs(geometric_term(h, h0) - model.evaluate(h, lam))))
    return FixedPointReport(h, it, residual, converged, h0, lam)


@dataclass(frozen=True)
class JacobianSummary:
    DF: np.ndarray
    trace: float
    spectral_radius: float
    det_abs: float


def jacobian_analysis(report: FixedPointReport, model: SourceModel) -> JacobianSummary:
    """Jacobian of the fixed-point map at ``h*``: ``DF_lm = -h*_l dT_l/dh_m``."""
    h = report.h_star
    DF = -h[:, None] * model.jacobian(h, report.lambdas)
    eig = np.linalg.eigvals(DF)
    return JacobianSummary(
        DF=DF,
        trace=float(np.trace(DF)),
        spectral_radius=float(np.max(np.abs(eig))),
        det_abs=float(abs(np.linalg.det(DF))),
    )


@dataclass(frozen=True)
class HessianSummary:
    H_diag: np.ndarray
    gap: float


def hessian_and_gap(report: FixedPointReport, model: SourceModel) -> HessianSummary:
    """Diagonal Hessian ``H_mm = -1/h*_m - dT_m/dh_m`` and gap ``min(-H_mm)``."""
    h = report.h_star
    H = -1.0 / h - model.diag_derivative(h, report.lambdas)
    return HessianSummary(H, float(np.min(-H)))


def conservation_residual(report: FixedPointReport, model: SourceModel) -> np.ndarray:
    """Column sums ``D_m = sum_l d(R_l - T_l)/dh_m`` at ``h*``.

    For mode-separable sources this equals the diagonal Hessian entry, which
    is asserted to 1e-12.
    """
    h = report.h_star
    J = model.jacobian(h, report.lambdas)
    D = -1.0 / h - J.sum(axis=0)
    if model.separable:
        H = hessian_and_gap(report, model).H_diag
        scale = np.maximum(1.0, np.abs(H))
        if np.any(np.abs(D - H) > 1e-12 * scale):
            raise AssertionError("conservation residual departs from Hessian diagonal")
    return D


def leakage_diagnostic(report: FixedPointReport, model: SourceModel, k_t: int) -> float:
    """Sum of ``|D_m|`` over the first ``k_t`` (transmitted) modes."""
    n = report.h_star.size
    if not 0 <= k_t <= n:
        raise ParameterError(f"k_t must lie in [0, {n}]")
    if k_t == 0:
        return 0.0
    D = conservation_residual(report, model)
    return float(np.sum(np.abs(D[:k_t])))


@dataclass(frozen=True)
class StabilityReport:
    trace_DF: float
    spectral_radius: float
    det_abs: float
    H_diag: np.ndarray
    gap: float
    D: np.ndarray
    D_t: float


def stability_report(report: FixedPointReport, model: SourceModel, k_t: int | None = None) -> StabilityReport:
    jac = jacobian_analysis(report, model)
    hes = hessian_and_gap(report, model)
    D = conservation_residual(report, model)
    k_t = report.h_star.size if k_t is None else k_t
    return StabilityReport(
        trace_DF=jac.trace,
        spectral_radius=jac.spectral_radius,
        det_abs=jac.det_abs,
        H_diag=hes.H_diag,
        gap=hes.gap,
        D=D,
        D_t=leakage_diagnostic(report, model, k_t),
    )


def scalar_fixed_point_oracle(mu2: float = 2.0, sigma2: float = 1.0, w: float = 1.0, h0: float = 1.0) -> float:
    """Root of ``h = h0 exp(-1 - mu2 w / (2 (sigma2 + h)))`` by bisection.

    Independent of :func:`fixed_point_solve`; used to cross-check it.
    """
    g = lambda x: x - h0 * math.exp(-1.0 - mu2 * w / (2.0 * (sigma2 + x)))  # noqa: E731
    lo, hi = 0.0, h0  # g(0) < 0 <= g(h0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
