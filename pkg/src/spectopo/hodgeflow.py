"""Hodge decomposition of edge flows and the three-part channel diagnostic.

An edge flow ``f`` splits orthogonally into

    f = B1^T psi  +  B2 omega  +  f_harm

(gradient of a vertex potential, curl of a face circulation, and a harmonic
remainder in ker L1). Both potentials are least-squares solutions computed
by CGLS, which started from zero converges to the minimum-norm solution;
for ``psi`` that already means zero mean on every connected component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .complex import SurfaceComplex, component_labels
from .errors import ParameterError, SolverError
from .spectral import TAU_NULL, null_dimension, spectral_entropy
from .topology import betti_numbers, cycle_basis

__all__ = [
    "HodgeSplit",
    "ChannelThresholds",
    "ChannelDiagnostic",
    "cgls",
    "hodge_decompose",
    "harmonic_dimension",
    "channel_diagnostic",
    "synthetic_drainage",
]


def cgls(A, b: np.ndarray, tol: float = 1e-10, max_iter: int | None = None) -> np.ndarray:
    """Conjugate gradients on the normal equations ``A^T A x = A^T b`` from ``x = 0``.

    Converges to the minimum-norm least-squares solution. Stops once
    ``||A^T r|| <= tol * ||A^T b||``, or once it reaches rounding level
    (``64 eps ||A||_F ||b||``) when ``A^T b`` is itself numerically zero.

    Raises:
        SolverError: tolerance not met within ``max_iter`` (default ``20 * n``).
    """
    n = A.shape[1]
    x = np.zeros(n)
    if n == 0:
        return x
    max_iter = 20 * n if max_iter is None else max_iter
    r = b.astype(float).copy()
    s = A.T @ r
    a_norm = spla.norm(A) if sp.issparse(A) else np.linalg.norm(A)
    target = max(tol * np.linalg.norm(s), 64 * np.finfo(float).eps * a_norm * np.linalg.norm(r))
    if np.linalg.norm(s) <= target:
        return x
    p = s.copy()
    gamma = s @ s
    for _ in range(max_iter):
        q = A @ p
        qq = q @ q
        if qq == 0.0:  # search direction in the null space: nothing left to reduce
            return x
        alpha = gamma / qq
        x += alpha * p
        r -= alpha * q
        s = A.T @ r
        gamma_new = s @ s
        if np.sqrt(gamma_new) <= target:
            return x
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    raise SolverError("CGLS did not reach tolerance", float(np.sqrt(gamma)))


@dataclass(frozen=True)
class HodgeSplit:
    gradient: np.ndarray
    curl: np.ndarray
    harmonic: np.ndarray
    potential: np.ndarray
    circulation: np.ndarray

    @property
    def energies(self) -> tuple[float, float, float]:
        """``(E_grad, E_curl, E_harm)``, squared 2-norms."""
        return (
            float(self.gradient @ self.gradient),
            float(self.curl @ self.curl),
            float(self.harmonic @ self.harmonic),
        )

    @property
    def fractions(self) -> tuple[float, float, float]:
        e = np.array(self.energies)
        total = e.sum()
        return tuple(float(v) for v in (e / total if total > 0 else e))


def hodge_decompose(cx: SurfaceComplex, f, tol: float = 1e-10) -> HodgeSplit:
    f = np.asarray(f, dtype=float)
    if f.shape != (cx.n_edges,):
        raise ParameterError(f"flow must have length |E|={cx.n_edges}, got {f.shape}")
    if not tol > 0:
        raise ParameterError("tol must be > 0")
    B1 = cx.B1.astype(float)
    B2 = cx.B2.astype(float)

    psi = cgls(B1.T, f, tol)
    _, labels = component_labels(cx)
    counts = np.bincount(labels)
    psi -= (np.bincount(labels, weights=psi) / counts)[labels]
    omega = cgls(B2, f, tol)

    grad = B1.T @ psi
    curl = B2 @ omega
    return HodgeSplit(grad, curl, f - grad - curl, psi, omega)


def harmonic_dimension(cx: SurfaceComplex, tau: float = TAU_NULL) -> int:
    """Dimension of ker L1 (equals beta1)."""
    L1 = cx.laplacians.L1
    if L1.shape[0] == 0:
        return 0
    return null_dimension(np.linalg.eigvalsh(L1.toarray().astype(float)), tau)


@dataclass(frozen=True)
class ChannelThresholds:
    H_star: float
    E_curl_star: float
    beta1_star: int = 1

    @classmethod
    def from_flat(cls, H_flat: float, E_curl_flat: float, beta1_star: int = 1) -> "ChannelThresholds":
        """Defaults anchored on a flat-terrain baseline."""
        return cls(0.95 * H_flat, 10.0 * E_curl_flat + 1e-9, beta1_star)


@dataclass(frozen=True)
class ChannelDiagnostic:
    entropy: float
    E_curl: float
    beta1: int
    entropy_low: bool
    curl_high: bool
    beta1_anomalous: bool
    thresholds: ChannelThresholds

    @property
    def joint(self) -> bool:
        return self.entropy_low and self.curl_high and self.beta1_anomalous


def channel_diagnostic(
    cx: SurfaceComplex,
    flow: HodgeSplit | np.ndarray,
    h_star: np.ndarray,
    thresholds: ChannelThresholds,
) -> ChannelDiagnostic:
    """Evaluate the low-entropy / high-curl / extra-cycle flags.

    The conjunction is a necessary indicator only: other structures can raise
    all three flags.
    """
    split = flow if isinstance(flow, HodgeSplit) else hodge_decompose(cx, flow)
    H = spectral_entropy(h_star)
    E_curl = split.energies[1]
    b1 = betti_numbers(cx).beta1
    return ChannelDiagnostic(
        entropy=H,
        E_curl=E_curl,
        beta1=b1,
        entropy_low=H < thresholds.H_star,
        curl_high=E_curl > thresholds.E_curl_star,
        beta1_anomalous=b1 >= thresholds.beta1_star,
        thresholds=thresholds,
    )


def synthetic_drainage(cx: SurfaceComplex, elevation=None, circulation: float = 0.3) -> np.ndarray:
    """Downhill gradient flow plus unit circulations around each independent cycle.

    ``f = -B1^T z + c * sum_i z_i`` with ``c = circulation * ||B1^T z|| /
    sqrt(beta1)`` and ``z_i`` the signed edge chain of cycle ``i`` (unit flow
    on every edge of the loop).
    Elevation defaults to the vertices' third coordinate plus a gentle tilt
    along x.
    """
    if elevation is None:
        elevation = cx.vertices[:, 2] + 0.05 * cx.vertices[:, 0]
    z = np.asarray(elevation, dtype=float)
    grad = -(cx.B1.T.astype(float) @ z)
    basis = cycle_basis(cx)
    if not len(basis):
        return grad
    c = circulation * np.linalg.norm(grad) / np.sqrt(len(basis))
    return grad + c * basis.chains.sum(axis=1)
