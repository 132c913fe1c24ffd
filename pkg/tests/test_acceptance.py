"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` to see the summary lines.
"""

import itertools
import math
import time

import numpy as np
import pytest

from spectopo.complex import SurfaceComplex
from spectopo.errors import FrameError
from spectopo.experiments import terrain_kernel
from spectopo.families import channeled, crater, cycle, figure_eight, grid, path, separated_cycles
from spectopo.hodgeflow import (
    ChannelThresholds,
    channel_diagnostic,
    harmonic_dimension,
    hodge_decompose,
    synthetic_drainage,
)
from spectopo.maxcal import (
    Boltzmann,
    GaussianMI,
    Vacuum,
    conservation_residual,
    fixed_point_solve,
    hessian_and_gap,
    jacobian_analysis,
    scalar_fixed_point_oracle,
)
from spectopo.spectral import eigendecompose, nystrom_basis, spectral_entropy, subspace_angle
from spectopo.topology import a2_sweep, betti_numbers, compressed_betti, cycle_basis
from spectopo.twincodec import (
    FRAME_OVERHEAD,
    CoefficientFrame,
    ProtocolConfig,
    decode_frame,
    encode_frame,
    protocol_run,
    static_stream,
)


@pytest.fixture
def verdict(capsys):
    """Collect named checks, print one summary line, then assert."""

    def _verdict(n, title, checks):
        failed = [name for name, ok in checks if not ok]
        line = f"[criterion {n:2d}] {'PASS' if not failed else 'FAIL'}: {title}"
        if failed:
            line += "  (failed: " + "; ".join(failed) + ")"
        with capsys.disabled():
            print("\n" + line)
        assert not failed, line

    return _verdict


def _random_complexes(count, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(3, 10))
        pairs = list(itertools.combinations(range(n), 2))
        triples = list(itertools.combinations(range(n), 3))
        faces = [triples[i] for i in rng.choice(len(triples), int(rng.integers(0, min(6, len(triples)) + 1)), replace=False)]
        edges = [pairs[i] for i in rng.choice(len(pairs), int(rng.integers(0, min(12, len(pairs)) + 1)), replace=False)]
        cx = SurfaceComplex.from_simplices(n, edges, faces)
        if cx.n_edges:
            out.append(cx)
    return out


def _p8():
    model = GaussianMI(mu2=2.0, sigma2=1.0, w=1.0)
    lam = eigendecompose(path(8).laplacians.L0, 8).eigenvalues
    return fixed_point_solve(np.ones(8), model, lam), model


def test_criterion_01_fixed_point(verdict):
    t0 = time.perf_counter()
    rep, model = _p8()
    oracle = scalar_fixed_point_oracle()
    D = conservation_residual(rep, model)
    hes = hessian_and_gap(rep, model)
    elapsed = time.perf_counter() - t0
    verdict(1, "P8 fixed point h*, residual, D_m, gap", [
        ("|h*-0.1547|<=5e-5", np.all(np.abs(rep.h_star - 0.1547) <= 5e-5)),
        ("h* matches bisection oracle", np.all(np.abs(rep.h_star - oracle) <= 1e-12)),
        ("field residual<=1e-12", rep.residual_inf <= 1e-12),
        ("D_m=-5.712+-1e-3", np.all(np.abs(D + 5.712) <= 1e-3)),
        ("|D_m-H_mm|<=1e-12", np.all(np.abs(D - hes.H_diag) <= 1e-12)),
        ("gap=5.71+-1e-2", abs(hes.gap - 5.71) <= 1e-2),
        ("runtime<1s", elapsed < 1.0),
    ])


def test_criterion_02_jacobian(verdict):
    rep, model = _p8()
    jac = jacobian_analysis(rep, model)
    free = GaussianMI(mu2=0.0)
    jac0 = jacobian_analysis(fixed_point_solve(np.ones(8), free), free)
    verdict(2, "Jacobian radius, trace, mu2=0, |det|", [
        ("radius=0.116+-1e-3", abs(jac.spectral_radius - 0.116) <= 1e-3),
        ("trace in [0.90,0.93]", 0.90 <= jac.trace <= 0.93),
        ("mu2=0 trace==0", jac0.trace == 0.0),
        ("|det|<1", jac.det_abs < 1.0),
    ])


def test_criterion_03_vacuum(verdict):
    h0 = np.array([1.0, 0.5, 2.0, 3.7])
    one = fixed_point_solve(h0, Vacuum(), max_iter=1)
    unit = fixed_point_solve(np.ones(5), Vacuum())
    D = conservation_residual(unit, Vacuum())
    verdict(3, "vacuum D_m=-e, h*=h0/e after one step", [
        ("h*=h0/e after one iteration", np.array_equal(one.h_star, h0 * math.exp(-1.0))),
        ("D_m=-e within 1e-12", np.all(np.abs(D + math.e) <= 1e-12)),
    ])


def test_criterion_04_a2_sweep(verdict):
    rows = a2_sweep(range(3, 9), ("A",)) + a2_sweep((3, 6), ("B",))
    a = {r.l: r for r in rows if r.family == "A"}
    b = {r.l: r for r in rows if r.family == "B"}
    verdict(4, "cycle-subspace fidelity sweep, families A and B", [
        ("A: rho(k_min)<=1e-9, rank 1", all(r.rho_at_kmin <= 1e-9 and r.rank_at_kmin == 1 for r in a.values())),
        ("A: rank 2 after +2 modes", all(r.rank_after_augmentation == 2 for r in a.values())),
        ("A3: delta=2.0000", abs(a[3].delta_gap - 2.0) <= 1e-3),
        ("A3: rho(5)=0.577", abs(a[3].rho_after_augmentation - 0.577) <= 1e-3),
        ("A8: delta=0.0798", abs(a[8].delta_gap - 0.0798) <= 1e-3),
        ("A8: x=0.196", abs(a[8].x - 0.196) <= 1e-2),
        ("B: rank 2 at k_min", all(r.rank_at_kmin == 2 for r in b.values())),
        ("B3: rho=0.429", abs(b[3].rho_at_kmin - 0.429) <= 1e-2),
        ("B6: rho=0.215", abs(b[6].rho_at_kmin - 0.215) <= 1e-2),
    ])


def test_criterion_05_hodge(verdict):
    rng = np.random.default_rng(5)
    complexes = _random_complexes(120)
    ortho = energy = harm = boundary = True
    for cx in complexes:
        f = rng.standard_normal(cx.n_edges)
        s = hodge_decompose(cx, f)
        nf = float(f @ f)
        parts = (s.gradient, s.curl, s.harmonic)
        for x, y in itertools.combinations(parts, 2):
            ortho &= abs(float(x @ y)) <= 1e-8 * nf
        energy &= abs(sum(s.energies) - nf) <= 1e-8 * nf
        harm &= harmonic_dimension(cx) == betti_numbers(cx).beta1
        boundary &= (cx.B1 @ cx.B2).count_nonzero() == 0
    verdict(5, f"Hodge split on {len(complexes)} random complexes", [
        ("pairwise orthogonal", ortho),
        ("energy sum=|f|^2", energy),
        ("harmonic dim=beta1", harm),
        ("B1 B2=0 exactly", boundary),
    ])


def test_criterion_06_channel_baseline(verdict):
    flat, chan = grid(16, 32), channeled(512, 3)
    sf = hodge_decompose(flat, synthetic_drainage(flat))
    sc = hodge_decompose(chan, synthetic_drainage(chan))
    thr = ChannelThresholds.from_flat(spectral_entropy(terrain_kernel(flat).h_star), sf.energies[1])
    d = channel_diagnostic(chan, sc, terrain_kernel(chan).h_star, thr)
    verdict(6, "flat curl-free, channeled curl ratio and joint flag", [
        ("flat E_curl<1e-6", sf.energies[1] < 1e-6),
        ("curl ratio>=10", sc.energies[1] / max(sf.energies[1], 1e-12) >= 10),
        ("triple diagnostic fires", d.joint),
    ])


def _beta1_hat(cx, ks):
    betti = betti_numbers(cx)
    U = cycle_basis(cx)
    basis = eigendecompose(cx.laplacians.L0, max(ks))
    return betti, {k: compressed_betti(basis, U, betti, k)[1] for k in ks}


def test_criterion_07_topology_collapse(verdict):
    betti, b1 = _beta1_hat(channeled(512, 3), range(1, 5))
    seq = [b1[k] for k in range(4, 0, -1)]
    _, c = _beta1_hat(crater(8, 6), (1, 2))
    verdict(7, "compressed beta1 on channeled and crater", [
        ("channeled beta1=3", betti.beta1 == 3),
        ("beta1_hat(4)=3", b1[4] == 3),
        ("monotone as k decreases", all(x >= y for x, y in zip(seq, seq[1:]))),
        ("beta1_hat(2)<=1", b1[2] <= 1),
        ("crater beta1_hat(2)=1", c[2] == 1),
        ("crater beta1_hat(1)=0", c[1] == 0),
    ])


def test_criterion_08_euler(verdict):
    fams = [path(7), cycle(9), grid(6, 5), figure_eight(3, 5), separated_cycles(4, 3), crater(8, 6), channeled(512, 3)]
    ok = all(betti_numbers(cx).euler_ok for cx in fams + _random_complexes(150, seed=8))
    verdict(8, "Euler identity on families and 150 random complexes", [("beta0-beta1+beta2=V-E+F", ok)])


def test_criterion_09_codec(verdict):
    rng = np.random.default_rng(9)
    size = len(encode_frame(CoefficientFrame(0, rng.standard_normal((128, 3))))) - FRAME_OVERHEAD
    roundtrip = True
    for i in range(1000):
        c = rng.standard_normal((int(rng.integers(1, 129)), 3)).astype(np.float32)
        back = decode_frame(encode_frame(CoefficientFrame(i, c)))
        roundtrip &= back.frame_index == i and back.coeffs.astype(np.float32).tobytes() == c.tobytes()
    data = encode_frame(CoefficientFrame(3, rng.standard_normal((16, 3))))
    detected = True
    for pos, flip in itertools.product(range(len(data)), (0x01, 0x80, 0xFF)):
        bad = bytearray(data)
        bad[pos] ^= flip
        try:
            decode_frame(bytes(bad))
            detected = False
        except FrameError:
            pass
    verdict(9, "codec size, roundtrip, corruption detection", [
        ("k=128 payload is 1536 bytes", size == 1536),
        ("1000 bit-exact roundtrips", roundtrip),
        ("every single-byte corruption detected", detected),
    ])


def test_criterion_10_eigensolver(verdict):
    worst = 0.0
    for N in range(2, 65):
        L = path(N).laplacians.L0
        exact = 2 - 2 * np.cos(np.arange(N) * np.pi / N)
        for method in ("dense", "iterative"):
            k = N if method == "dense" else min(N - 1, 8)
            if k < 1:
                continue
            vals = eigendecompose(L, k, method=method).eigenvalues
            worst = max(worst, float(np.max(np.abs(vals - exact[:k]))))
    g = grid(10, 10)
    dense = eigendecompose(g.laplacians.L0, 5).eigenvectors
    angle = max(subspace_angle(nystrom_basis(g, 50, 5, seed=s).eigenvectors, dense) for s in range(5))
    verdict(10, "path closed form and Nystrom subspace angle", [
        (f"path N<=64 error {worst:.1e}<=1e-10", worst <= 1e-10),
        (f"Nystrom angle {angle:.3f}<=0.1", angle <= 0.1),
    ])


def test_criterion_11_boltzmann(verdict):
    lam = np.linspace(0.0, 6.0, 25)
    worst = 0.0
    for kT, Z in itertools.product((0.3, 1.0, 4.0), (0.5, 1.0, 3.0)):
        m = Boltzmann(kT, Z)
        h = fixed_point_solve(m.prior(lam.size), m, lam).h_star
        worst = max(worst, float(np.max(np.abs(h - np.exp(-lam / kT) / Z))))
    verdict(11, "Boltzmann restriction", [(f"max error {worst:.1e}<=1e-12", worst <= 1e-12)])


def test_criterion_12_protocol(verdict):
    cx = grid(12, 12)
    basis = eigendecompose(cx.laplacians.L0, 32)
    V0 = cx.vertices.copy()
    V0[:, 2] = 0.3 * np.sin(V0[:, 0] / 3)
    tr = protocol_run(cx, basis, ProtocolConfig(k_nominal=8), static_stream(V0, 8))
    cr = crater(8, 6)
    sub = protocol_run(cr, eigendecompose(cr.laplacians.L0, 16), ProtocolConfig(bandwidth=FRAME_OVERHEAD + 12),
                       static_stream(cr.vertices, 5))
    verdict(12, "static scene, sub-floor flag, mirrored states", [
        ("zero deltas after frame 0", all(not d.any() for d in tr.deltas[1:])),
        ("no alerts", not any(r.boundary_alert for r in tr.records)),
        ("sub-floor flagged every cycle", all(r.representation_limited for r in sub.records)),
        ("sender/receiver bit-identical", tr.states_match and sub.states_match),
    ])
