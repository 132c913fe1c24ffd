"""Betti numbers, cycle bases and topology-preserving compression floors."""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from . import families
from .complex import HodgeLaplacians, SurfaceComplex, component_labels
from .errors import DomainError, ParameterError
from .spectral import (
    TAU_NULL,
    SpectralBasis,
    eigendecompose,
    null_dimension,
    null_space_basis,
    null_threshold,
)

__all__ = [
    "BOLTZMANN_K",
    "BettiNumbers",
    "CycleBasis",
    "CompressionBudget",
    "A2SweepRow",
    "betti_numbers",
    "cycle_basis",
    "cycle_subspace_fidelity",
    "compression_floor",
    "compressed_betti",
    "landauer_bound",
    "a2_sweep",
    "fit_conjecture",
    "sweep_csv",
]

BOLTZMANN_K = 1.380649e-23  # J/K
RANK_TOL = 1e-8


@dataclass(frozen=True)
class BettiNumbers:
    beta0: int
    beta1: int
    beta2: int
    euler_ok: bool

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.beta0, self.beta1, self.beta2)


def _spectrum(L) -> np.ndarray:
    dense = L.toarray().astype(float)
    if dense.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.eigvalsh(dense)


def betti_numbers(laplacians: HodgeLaplacians | SurfaceComplex, tau: float = TAU_NULL) -> BettiNumbers:
    """Null-space dimensions of L0, L1, L2; also checks the Euler identity.

    Accepts a complex directly (its cached Laplacians are used).
    """
    if isinstance(laplacians, SurfaceComplex):
        laplacians = laplacians.laplacians
    L0, L1, L2 = laplacians.L0, laplacians.L1, laplacians.L2
    b = [null_dimension(_spectrum(L), tau) for L in (L0, L1, L2)]
    chi = L0.shape[0] - L1.shape[0] + L2.shape[0]
    return BettiNumbers(b[0], b[1], b[2], b[0] - b[1] + b[2] == chi)


# -- cycle bases --------------------------------------------------------------


@dataclass(frozen=True)
class CycleBasis:
    """Independent cycles with their normalised vertex-indicator columns.

    ``U`` columns are cycle vertex indicators with the per-component mean
    removed (so the constant modes carry no cycle signal), scaled to unit
    norm. A cycle covering its whole component would centre to zero; its
    column then falls back to the plain normalised indicator.
    """

    U: np.ndarray
    cycles: list[list[int]]
    chains: np.ndarray  # (|E|, beta1) signed edge vectors of each cycle
    cycle_lengths: list[int]

    @property
    def l_min(self) -> int | None:
        return min(self.cycle_lengths) if self.cycle_lengths else None

    @property
    def l_max(self) -> int | None:
        return max(self.cycle_lengths) if self.cycle_lengths else None

    @property
    def gamma(self) -> float | None:
        return self.l_max / self.l_min if self.cycle_lengths else None

    def __len__(self) -> int:
        return len(self.cycles)


def _bfs_tree(cx: SurfaceComplex) -> tuple[np.ndarray, np.ndarray]:
    n = cx.n_vertices
    adj = cx.adjacency.tocsr()
    parent = np.full(n, -1)
    depth = np.full(n, -1)
    for root in range(n):
        if depth[root] >= 0:
            continue
        depth[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in sorted(adj.indices[adj.indptr[u] : adj.indptr[u + 1]]):
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    queue.append(v)
    return parent, depth


def _tree_cycle(u: int, v: int, parent: np.ndarray, depth: np.ndarray) -> list[int]:
    """Vertex sequence of the cycle closed by non-tree edge (u, v): u .. lca .. v."""
    left, right = [u], [v]
    a, b = u, v
    while depth[a] > depth[b]:
        a = parent[a]
        left.append(a)
    while depth[b] > depth[a]:
        b = parent[b]
        right.append(b)
    while a != b:
        a, b = parent[a], parent[b]
        left.append(a)
        right.append(b)
    return [int(x) for x in left + right[-2::-1]]


def _shortest_cycle(cx: SurfaceComplex, u: int, v: int) -> list[int] | None:
    """Edge (u, v) closed by a shortest u -> v path that avoids the edge itself."""
    adj = cx.adjacency.tocsr()
    prev = {u: -1}
    queue = deque([u])
    while queue:
        a = queue.popleft()
        for b in sorted(adj.indices[adj.indptr[a] : adj.indptr[a + 1]]):
            b = int(b)
            if b in prev or (a == u and b == v):
                continue
            prev[b] = a
            if b == v:
                out = [v]
                while out[-1] != u:
                    out.append(prev[out[-1]])
                return [int(x) for x in out[::-1]]
            queue.append(b)
    return None


def _chain(cx: SurfaceComplex, verts: list[int]) -> np.ndarray:
    z = np.zeros(cx.n_edges)
    index = cx.edge_index
    for a, b in zip(verts, verts[1:] + verts[:1]):
        a, b = int(a), int(b)
        if a < b:
            z[index[(a, b)]] += 1.0
        else:
            z[index[(b, a)]] -= 1.0
    return z


def _indicators(cx: SurfaceComplex, cycles: list[list[int]]) -> np.ndarray:
    n = cx.n_vertices
    _, labels = component_labels(cx)
    U = np.zeros((n, len(cycles)))
    for j, verts in enumerate(cycles):
        u = np.zeros(n)
        u[verts] = 1.0
        comp = labels == labels[verts[0]]
        centred = u.copy()
        centred[comp] -= u[comp].mean()
        norm = np.linalg.norm(centred)
        if norm < 1e-12 * np.sqrt(len(verts)):
            centred, norm = u, np.linalg.norm(u)
        U[:, j] = centred / norm
    return U


def cycle_basis(cx: SurfaceComplex) -> CycleBasis:
    """A homology basis of independent cycles from a BFS spanning forest.

    Every non-tree edge closes a fundamental cycle (BFS rooted at the lowest
    unvisited vertex, neighbours visited in index order). Without faces these
    are exactly beta1 cycles. With faces, candidates are taken shortest first
    and kept only when they are independent modulo face boundaries (their
    harmonic projections increase in rank), which again yields beta1 cycles.
    The pool then also holds, per edge, the edge closed by a shortest
    path, so short loops around holes win over long tree detours.
    """
    parent, depth = _bfs_tree(cx)
    tree = {(min(int(v), int(p)), max(int(v), int(p))) for v, p in enumerate(parent) if p >= 0}
    candidates = []
    for e, (a, b) in enumerate(cx.edges):
        a, b = int(a), int(b)
        if (a, b) not in tree:
            candidates.append((e, _tree_cycle(a, b, parent, depth)))

    if cx.n_faces == 0:
        cycles = [c for _, c in candidates]
    else:
        H = null_space_basis(cx.laplacians.L1)
        cycles = []
        if H.shape[1]:
            for e, (a, b) in enumerate(cx.edges):
                short = _shortest_cycle(cx, int(a), int(b))
                if short is not None:
                    candidates.append((e, short))
            kept = np.zeros((H.shape[1], 0))
            for _, verts in sorted(candidates, key=lambda item: (len(item[1]), item[0])):
                proj = H.T @ _chain(cx, verts)
                if kept.shape[1]:
                    proj = proj - kept @ (kept.T @ proj)
                if np.linalg.norm(proj) > 1e-8:
                    kept = np.column_stack([kept, proj / np.linalg.norm(proj)])
                    cycles.append(verts)
                    if len(cycles) == H.shape[1]:
                        break

    chains = np.column_stack([_chain(cx, c) for c in cycles]) if cycles else np.zeros((cx.n_edges, 0))
    U = _indicators(cx, cycles) if cycles else np.zeros((cx.n_vertices, 0))
    return CycleBasis(U, cycles, chains, [len(c) for c in cycles])


def _rank(M: np.ndarray, tol: float = RANK_TOL) -> tuple[float, int]:
    if M.size == 0:
        return 0.0, 0
    s = np.linalg.svd(M, compute_uv=False)
    rho = float(s[-1]) if M.shape[0] >= M.shape[1] else 0.0
    return rho, int(np.sum(s > tol))


def cycle_subspace_fidelity(basis: SpectralBasis, U: CycleBasis, k: int) -> tuple[float, int]:
    """``(sigma_min(Phi_k^T U), numerical rank)`` of the projected cycle block."""
    if not 1 <= k <= basis.k:
        raise ParameterError(f"k must lie in [1, {basis.k}]")
    return _rank(basis.eigenvectors[:, :k].T @ U.U)


# -- compression floor ---------------------------------------------------------


@dataclass(frozen=True)
class CompressionBudget:
    k_base: int
    delta_k: int
    k_min: int
    delta_gap: float | None
    x: float | None
    C1: float
    degenerate_gap: bool = False


def compression_floor(
    betti: BettiNumbers,
    basis: SpectralBasis,
    U: CycleBasis,
    C1: float = 1.0,
    tau_aug: float = 1.0,
    tau: float = TAU_NULL,
) -> CompressionBudget:
    """Topology floor ``beta0 + beta1`` plus the short-cycle augmentation.

    With ``k = beta0 + beta1`` and 0-based ascending eigenvalues, the gap is
    ``lambda[k+1] - lambda[k]`` and ``x = C1 / (l_min^2 * gap)``. The floor
    grows by ``ceil(x)`` only when ``x > tau_aug``; below that the bare floor
    stands. A numerically zero gap leaves the floor unaugmented and sets
    ``degenerate_gap``.
    """
    k_base = betti.beta0 + betti.beta1
    if betti.beta1 == 0 or U.l_min is None:
        return CompressionBudget(k_base, 0, k_base, None, None, C1)
    if basis.k < k_base + 2:
        raise ParameterError(f"need at least {k_base + 2} modes to evaluate the gap")
    lam = basis.eigenvalues
    gap = float(lam[k_base + 1] - lam[k_base])
    if gap <= null_threshold(lam.max(), tau):
        return CompressionBudget(k_base, 0, k_base, gap, None, C1, degenerate_gap=True)
    x = C1 / (U.l_min**2 * gap)
    delta = math.ceil(x) if x > tau_aug else 0
    return CompressionBudget(k_base, delta, k_base + delta, gap, x, C1)


def compressed_betti(
    basis: SpectralBasis, U: CycleBasis, betti: BettiNumbers, k: int, tau: float = TAU_NULL
) -> tuple[int, int]:
    """Betti numbers visible to a ``k``-mode representation.

    ``beta0_hat`` counts retained near-zero modes (capped at beta0);
    ``beta1_hat`` is the rank of the retained modes' projection of the cycle
    indicators.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    k = min(k, basis.k)
    lam = basis.eigenvalues[:k]
    b0 = min(int(np.sum(lam <= null_threshold(basis.eigenvalues.max(), tau))), betti.beta0)
    if len(U) == 0:
        return b0, 0
    return b0, cycle_subspace_fidelity(basis, U, k)[1]


def landauer_bound(n: int, temperature: float) -> float:
    """Minimum heat (J) to erase ``n`` distinct states: ``floor(log2 n) k_B T ln 2``."""
    if n < 1:
        raise DomainError("state count must be >= 1")
    if not temperature > 0:
        raise DomainError("temperature must be > 0")
    return (int(n).bit_length() - 1) * BOLTZMANN_K * temperature * math.log(2)


# -- A2 sweep -------------------------------------------------------------------


@dataclass
class A2SweepRow:
    family: str
    l: int
    delta_gap: float
    x: float | None
    rho_at_kmin: float
    rank_at_kmin: int
    rho_after_augmentation: float | None
    rank_after_augmentation: int | None
    degenerate_gap: bool = False
    extra: dict = field(default_factory=dict)


_SWEEP_FAMILIES = {
    "A": lambda l: families.figure_eight(l, l),
    "B": lambda l: families.separated_cycles(l, 2),
}


def a2_sweep(
    l_values=(3, 4, 5, 6, 7, 8),
    families_=("A",),
    delta_k_aug: int = 2,
    C1: float = 1.0,
) -> list[A2SweepRow]:
    """Cycle-subspace fidelity at the bare floor and after augmentation.

    Family ``A`` is the symmetric figure-eight, family ``B`` the separated
    pair of equal cycles with a 2-edge bridge. Family B rows report only the
    floor measurement (no augmentation column), like the symmetric control
    it is.
    """
    rows = []
    for fam in families_:
        if fam not in _SWEEP_FAMILIES:
            raise ParameterError(f"unknown sweep family {fam!r}")
        for l in l_values:
            if l < 3:
                raise ParameterError("cycle length must be >= 3")
            cx = _SWEEP_FAMILIES[fam](l)
            betti = betti_numbers(cx)
            basis = eigendecompose(cx.laplacians.L0, cx.n_vertices)
            U = cycle_basis(cx)
            budget = compression_floor(betti, basis, U, C1=C1)
            k0 = budget.k_base
            rho0, rank0 = cycle_subspace_fidelity(basis, U, k0)
            gap = float(basis.eigenvalues[k0 + 1] - basis.eigenvalues[k0])
            x = None if budget.degenerate_gap else 1.0 / (l**2 * gap)
            if fam == "A":
                k1 = min(k0 + delta_k_aug, basis.k)
                rho1, rank1 = cycle_subspace_fidelity(basis, U, k1)
            else:
                rho1 = rank1 = None
            rows.append(
                A2SweepRow(fam, l, gap, x, rho0, rank0, rho1, rank1, budget.degenerate_gap,
                           {"gamma": U.gamma, "betti": betti.as_tuple()})
            )
    return rows


def fit_conjecture(rows: list[A2SweepRow]) -> tuple[float | None, float | None]:
    """Least-squares ``(C1, C2)`` in ``rho(k_min) = 1 - C1 x - C2 (gamma - 1)``.

    Returns ``None`` for a constant that the rows cannot identify (e.g. C2
    when every row has gamma = 1).
    """
    usable = [r for r in rows if r.x is not None]
    if not usable:
        return None, None
    x = np.array([r.x for r in usable])
    g = np.array([(r.extra.get("gamma") or 1.0) - 1.0 for r in usable])
    y = 1.0 - np.array([r.rho_at_kmin for r in usable])
    if np.ptp(g) == 0 and g[0] == 0:
        return float(x @ y / (x @ x)), None
    A = np.column_stack([x, g])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(coef[1])


SWEEP_COLUMNS = ["family", "l", "delta_k", "inv_l2_delta_k", "rho_kmin", "rho_after_aug", "rank_kmin"]


def sweep_csv(rows: list[A2SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([
            r.family,
            r.l,
            f"{r.delta_gap:.4f}",
            "" if r.x is None else f"{r.x:.3f}",
            f"{r.rho_at_kmin:.3f}",
            "" if r.rho_after_augmentation is None else f"{r.rho_after_augmentation:.3f}",
            r.rank_at_kmin,
        ])
    return buf.getvalue()


def row_dict(r: A2SweepRow) -> dict:
    return asdict(r)
