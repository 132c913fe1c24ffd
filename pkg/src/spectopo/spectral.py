"""Eigenpairs of Hodge Laplacians and spectral summaries.

Three routes to the low end of a Laplacian spectrum:

* ``eigendecompose(..., method="dense")``: LAPACK symmetric solver, exact up to
  rounding; the reference for everything else.
* ``eigendecompose(..., method="iterative")``: implicitly restarted Lanczos for
  the smallest eigenvalues (spectrum flipped about a Gershgorin bound, no
  shift-invert), for large sparse operators.
* ``nystrom_basis``: eigenvectors of a Kron-reduced coarse Laplacian on a
  random vertex subsample, extended to the full graph by harmonic (neighbour
  averaging) interpolation and refined by a Rayleigh-Ritz step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components
from scipy.special import xlogy

from .complex import SurfaceComplex, component_labels
from .errors import DomainError, ParameterError, SolverError

__all__ = [
    "TAU_NULL",
    "SpectralBasis",
    "eigendecompose",
    "nystrom_basis",
    "spectral_entropy",
    "null_threshold",
    "null_dimension",
    "subspace_angle",
    "null_space_basis",
]

TAU_NULL = 1e-8
ITERATIVE_TOL = 1e-10


@dataclass(frozen=True)
class SpectralBasis:
    """Ascending eigenvalues with orthonormal eigenvector columns.

    Attributes:
        eigenvalues: shape ``(k,)``, ascending.
        eigenvectors: shape ``(n, k)``, orthonormal columns; the first
            non-negligible entry of every column is positive.
        residuals: ``||L phi - lambda phi||`` per pair.
        approximate: True for Nyström bases.
        warnings: human-readable notes (e.g. disconnected coarse sample).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    approximate: bool = False
    warnings: tuple[str, ...] = field(default=())

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    @property
    def fiedler(self) -> float | None:
        """Second-smallest eigenvalue (algebraic connectivity for L0)."""
        return float(self.eigenvalues[1]) if self.k > 1 else None

    def truncate(self, k: int) -> "SpectralBasis":
        if not 1 <= k <= self.k:
            raise ParameterError(f"cannot truncate {self.k} modes to {k}")
        return SpectralBasis(
            self.eigenvalues[:k], self.eigenvectors[:, :k], self.residuals[:k],
            self.approximate, self.warnings,
        )


def null_threshold(lam_max: float, tau: float = TAU_NULL) -> float:
    """Eigenvalues at or below this count as zero."""
    return tau * max(float(lam_max), 1.0)


def null_dimension(eigenvalues: np.ndarray, tau: float = TAU_NULL) -> int:
    ev = np.asarray(eigenvalues)
    if ev.size == 0:
        return 0
    return int(np.sum(ev <= null_threshold(ev.max(), tau)))


def null_space_basis(L, tau: float = TAU_NULL) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of a symmetric PSD matrix (dense solve)."""
    dense = L.toarray() if sp.issparse(L) else np.asarray(L, dtype=float)
    if dense.shape[0] == 0:
        return np.zeros((0, 0))
    vals, vecs = np.linalg.eigh(dense.astype(float))
    return vecs[:, vals <= null_threshold(vals.max(), tau)]


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-10 * max(np.abs(col).max(), 1e-300))
        if big.size and col[big[0]] < 0:
            vecs[:, j] = -col
    return vecs


def _residuals(L, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    return np.linalg.norm(L @ vecs - vecs * vals, axis=0)


def _as_operator(L):
    if sp.issparse(L):
        return L.tocsr().astype(float)
    return np.asarray(L, dtype=float)


def eigendecompose(L, k: int, method: str = "dense", tol: float = ITERATIVE_TOL) -> SpectralBasis:
    """The ``k`` lowest eigenpairs of a symmetric positive semidefinite matrix.

    Args:
        L: dense array or scipy sparse matrix.
        k: number of modes, ``1 <= k <= dim``.
        method: ``"dense"`` or ``"iterative"``.
        tol: residual tolerance for the iterative route.

    Raises:
        SolverError: Lanczos did not converge within ``10 * dim`` iterations,
            or converged pairs miss ``tol``.
    """
    L = _as_operator(L)
    n = L.shape[0]
    if L.shape != (n, n):
        raise ParameterError(f"operator must be square, got {L.shape}")
    if not 1 <= k <= n:
        raise ParameterError(f"k must be in [1, {n}], got {k}")

    if method == "dense" or (method == "iterative" and k >= n - 1):
        dense = L.toarray() if sp.issparse(L) else L
        if not np.allclose(dense, dense.T, atol=1e-12):
            raise ParameterError("operator is not symmetric")
        vals, vecs = np.linalg.eigh(dense)
        vals, vecs = vals[:k], vecs[:, :k]
    elif method == "iterative":
        # Lanczos on c*I - L (c = Gershgorin bound on lambda_max) turns the lowest
        # eigenvalues into the largest; ARPACK's "SA" mode can skip lambda = 0.
        c = float(abs(L).sum(axis=1).max()) if n else 0.0
        flipped = spla.LinearOperator((n, n), matvec=lambda x: c * x - L @ x, dtype=float)
        v0 = np.random.default_rng(0).standard_normal(n)
        try:
            vals, vecs = spla.eigsh(flipped, k=k, which="LA", tol=tol, maxiter=10 * n, v0=v0)
        except spla.ArpackNoConvergence as exc:
            best = _residuals(L, c - exc.eigenvalues, exc.eigenvectors) if len(exc.eigenvalues) else [np.inf]
            raise SolverError("Lanczos iteration did not converge", float(np.max(best))) from None
        vals = c - vals
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        # full reorthogonalisation of the returned block
        q, _ = np.linalg.qr(vecs)
        t = q.T @ (L @ q)
        vals, w = np.linalg.eigh((t + t.T) / 2)
        vecs = q @ w
        res = _residuals(L, vals, vecs)
        scale = max(1.0, float(np.abs(vals).max()))
        if res.max() > tol * scale * 10:
            raise SolverError("iterative eigenpairs miss residual tolerance", float(res.max()))
    else:
        raise ParameterError(f"unknown method {method!r}")

    vecs = _fix_signs(vecs)
    return SpectralBasis(vals, vecs, _residuals(L, vals, vecs))


def nystrom_basis(
    cx: SurfaceComplex, coarse_count: int, k: int, seed: int = 0, smoothing_sweeps: int = 8
) -> SpectralBasis:
    """Approximate the ``k`` lowest L0 eigenpairs from a vertex subsample.

    The sample is drawn uniformly without replacement. The coarse operator is
    the Kron reduction (Schur complement) of L0 onto the sampled vertices; its
    eigenvectors are extended to unsampled vertices by harmonic interpolation
    (each unsampled value is the mean of its neighbours). The extended block
    then gets ``smoothing_sweeps`` passes of lazy neighbour averaging
    ``x <- (x + D^-1 A x) / 2`` with re-orthonormalisation, and a final
    Rayleigh-Ritz step on the full L0 picks the ``k`` lowest pairs.

    With ``coarse_count == |V|`` this reproduces the dense decomposition.
    """
    n = cx.n_vertices
    if not 1 <= coarse_count <= n:
        raise ParameterError(f"coarse_count must be in [1, {n}]")
    if not 1 <= k <= coarse_count:
        raise ParameterError(f"k must be in [1, coarse_count={coarse_count}]")

    rng = np.random.default_rng(seed)
    S = np.sort(rng.choice(n, size=coarse_count, replace=False))
    mask = np.zeros(n, dtype=bool)
    mask[S] = True
    U = np.flatnonzero(~mask)
    L = cx.laplacians.L0.astype(float).tocsr()
    notes: list[str] = []

    n_full, labels = component_labels(cx)
    n_coarse, _ = connected_components(cx.adjacency[S][:, S], directed=False)
    if n_coarse > n_full:
        notes.append(
            f"coarse induced subgraph has {n_coarse} components vs {n_full} in full graph; "
            "spurious near-zero modes possible"
        )
    sampled_comps = set(labels[S].tolist())
    reachable = np.isin(labels[U], list(sampled_comps))
    if not reachable.all():
        notes.append(
            f"{n_full - len(sampled_comps)} component(s) contain no sample; extended by zero"
        )

    if U.size == 0:
        vals, vecs = np.linalg.eigh(L.toarray())
        vals, vecs = vals[:k], _fix_signs(vecs[:, :k])
        return SpectralBasis(vals, vecs, _residuals(L, vals, vecs), approximate=True, warnings=tuple(notes))

    Ur = U[reachable]
    L_SS = L[S][:, S].toarray()
    full = np.zeros((n, coarse_count))
    if Ur.size:
        L_US = L[Ur][:, S].toarray()
        X = spla.splu(L[Ur][:, Ur].tocsc()).solve(L_US)
        coarse = L_SS - L_US.T @ X
    else:
        coarse = L_SS
    _, xs = np.linalg.eigh((coarse + coarse.T) / 2)
    full[S] = xs
    if Ur.size:
        full[Ur] = -X @ xs  # harmonic: unsampled value = mean of neighbours

    deg = np.asarray(cx.adjacency.sum(axis=1)).ravel()
    inv_deg = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    A = cx.adjacency
    q, _ = np.linalg.qr(full)
    for _ in range(smoothing_sweeps):
        q, _ = np.linalg.qr(0.5 * (q + inv_deg[:, None] * (A @ q)))
    t = q.T @ (L @ q)
    lam, w = np.linalg.eigh((t + t.T) / 2)
    vals, vecs = lam[:k], _fix_signs(q @ w[:, :k])
    return SpectralBasis(vals, vecs, _residuals(L, vals, vecs), approximate=True, warnings=tuple(notes))


def spectral_entropy(h) -> float:
    """Shannon entropy (nats) of the normalised kernel ``p = h / sum(h)``.

    Invariant under permutation and positive rescaling of ``h``; lies in
    ``[0, log N]``.
    """
    h = np.asarray(h, dtype=float)
    if h.size == 0 or np.any(~(h > 0)):
        raise DomainError("spectral entropy needs a strictly positive kernel")
    p = h / h.sum()
    return float(-xlogy(p, p).sum())


def subspace_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Largest principal angle (radians) between the column spans of A and B."""
    return float(np.max(scipy.linalg.subspace_angles(A, B)))
