"""Command-line entry point.

Complex arguments accept either a path to an OBJ file or a family
descriptor such as ``figure_eight(3,3)`` or ``channeled(512,3)``.

Exit codes: 0 success, 2 a check failed (experiment band missed, topology
lost under compression, sender/receiver mismatch), 1 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, families
from .complex import SurfaceComplex, parse_obj
from .errors import SpectopoError
from .experiments import EXPERIMENTS, run_experiment, terrain_kernel
from .hodgeflow import ChannelThresholds, channel_diagnostic, hodge_decompose, synthetic_drainage
from .maxcal import GaussianMI
from .spectral import TAU_NULL, eigendecompose, spectral_entropy
from .topology import a2_sweep, betti_numbers, compressed_betti, compression_floor, cycle_basis, sweep_csv
from .twincodec import STREAMS, ProtocolConfig, protocol_run

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class UsageError(SpectopoError):
    pass


def load_complex(arg: str) -> SurfaceComplex:
    path = Path(arg)
    if path.suffix.lower() == ".obj" or path.is_file():
        try:
            return parse_obj(path.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read {arg}: {exc.strerror}") from None
    return families.gen_family(arg)


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        out[key] = val
    return out


def _parse_sets(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# -- subcommands -----------------------------------------------------------------


def cmd_betti(args) -> int:
    b = betti_numbers(load_complex(args.complex))
    print(f"({b.beta0},{b.beta1},{b.beta2})")
    if not b.euler_ok:
        print("warning: Euler identity violated", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_compress(args) -> int:
    cx = load_complex(args.complex)
    if not 1 <= args.k <= cx.n_vertices:
        raise UsageError(f"--k must be in [1, {cx.n_vertices}]")
    betti = betti_numbers(cx)
    U = cycle_basis(cx)
    basis = eigendecompose(cx.laplacians.L0, min(cx.n_vertices, max(args.k, betti.beta0 + betti.beta1 + 2)))
    b0, b1 = compressed_betti(basis, U, betti, args.k)
    out = {"k": args.k, "betti": betti.as_tuple(), "betti_hat": [b0, b1]}
    if basis.k >= betti.beta0 + betti.beta1 + 2:
        floor = compression_floor(betti, basis, U, C1=args.C1)
        out.update(k_base=floor.k_base, k_min=floor.k_min, degenerate_gap=floor.degenerate_gap)
    print(json.dumps(out))
    lost = b0 < betti.beta0 or b1 < betti.beta1
    if lost:
        print(
            f"warning: k={args.k} keeps beta0_hat={b0}, beta1_hat={b1} < ({betti.beta0}, {betti.beta1}); "
            "topology is not preserved",
            file=sys.stderr,
        )
    return EXIT_FAIL if lost else EXIT_OK


def _load_flow(arg: str, cx: SurfaceComplex) -> np.ndarray:
    if arg == "drainage":
        return synthetic_drainage(cx)
    try:
        flow = np.loadtxt(arg, dtype=float, ndmin=1)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read flow {arg}: {exc}") from None
    return flow.ravel()


def cmd_diagnose(args) -> int:
    cx = load_complex(args.complex)
    split = hodge_decompose(cx, _load_flow(args.flow, cx))
    h = terrain_kernel(cx, k_max=args.k_max).h_star
    H_star, curl_star = args.entropy_threshold, args.curl_threshold
    if H_star is None or curl_star is None:
        rows, cols = families.grid_shape(cx.n_vertices)
        flat = families.grid(rows, cols)
        base = ChannelThresholds.from_flat(
            spectral_entropy(terrain_kernel(flat, k_max=args.k_max).h_star),
            hodge_decompose(flat, synthetic_drainage(flat)).energies[1],
        )
        H_star = base.H_star if H_star is None else H_star
        curl_star = base.E_curl_star if curl_star is None else curl_star
    d = channel_diagnostic(cx, split, h, ChannelThresholds(H_star, curl_star, args.beta1_threshold))
    print(json.dumps({
        "energies": split.energies,
        "fractions": split.fractions,
        "entropy": d.entropy,
        "beta1": d.beta1,
        "thresholds": {"entropy": H_star, "curl": curl_star, "beta1": args.beta1_threshold},
        "flags": {"entropy_low": d.entropy_low, "curl_high": d.curl_high, "beta1_anomalous": d.beta1_anomalous},
        "channel_signature": d.joint,
    }, indent=2))
    return EXIT_OK


_RUN_KEYS = {"complex", "stream", "frames", "onset", "strength", "trace"}


def cmd_protocol(args) -> int:
    settings = read_config(args.config) if args.config else {}
    settings.update(_parse_sets(args.set))
    run = {k: settings.pop(k) for k in list(settings) if k in _RUN_KEYS}
    config = ProtocolConfig.from_mapping(settings)
    cx = load_complex(run.get("complex", "grid(12,12)"))
    basis = eigendecompose(cx.laplacians.L0, min(config.k_max, cx.n_vertices))
    frames = int(run.get("frames", 10))
    name = run.get("stream", "static")
    if name not in STREAMS:
        raise UsageError(f"unknown stream {name!r}; choose from {sorted(STREAMS)}")
    V0 = cx.vertices
    if name == "static":
        stream = STREAMS[name](V0, frames)
    elif name == "drift":
        stream = STREAMS[name](V0, basis, frames)
    else:
        stream = STREAMS[name](V0, basis, frames, int(run.get("onset", frames // 2)),
                               float(run.get("strength", 3.0)))
    trace = protocol_run(cx, basis, config, stream)
    text = trace.to_jsonl()
    if "trace" in run:
        Path(run["trace"]).write_text(text)
    else:
        sys.stdout.write(text)
    summary = {
        "k_min": trace.k_min,
        "budget_modes": trace.budget_modes,
        "frames": len(trace.records),
        "alerts": sum(r.boundary_alert for r in trace.records),
        "representation_limited": sum(r.representation_limited for r in trace.records),
        "states_match": trace.states_match,
    }
    print(json.dumps(summary), file=sys.stderr)
    return EXIT_OK if trace.states_match else EXIT_FAIL


def cmd_sweep(args) -> int:
    rows = a2_sweep(tuple(args.lengths), tuple(args.families), args.delta_k)
    text = sweep_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(args) -> int:
    rep = run_experiment(args.id, _parse_sets(args.set))
    text = rep.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"experiment{args.id}.json").write_text(text + "\n")
        for name, content in rep.artifacts.items():
            (out / name).write_text(content)
    else:
        print(text)
    status = "pass" if rep.passed else "FAIL"
    print(f"experiment {args.id}: {status}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_info(args) -> int:
    src = GaussianMI()
    lines = [
        f"spectopo {__version__}",
        f"sigma2       = {src.sigma2}",
        f"mu2          = {src.mu2}",
        "h0           = 1.0",
        f"tau_null     = {TAU_NULL}",
        "C1           = 1.0",
        "tau_aug      = 1.0",
        "fixed-point tol = 1e-14",
        "protocol defaults:",
    ]
    for key, val in vars(ProtocolConfig()).items():
        lines.append(f"  {key:<10} = {val}")
    lines.append("experiments: " + ", ".join(f"{i} ({t})" for i, (t, _, _) in EXPERIMENTS.items()))
    print("\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spectopo", description="Spectral topology toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("betti", help="print (beta0,beta1,beta2)")
    s.add_argument("complex")
    s.set_defaults(func=cmd_betti)

    s = sub.add_parser("compress", help="Betti numbers visible to a k-mode basis")
    s.add_argument("complex")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--C1", type=float, default=1.0)
    s.set_defaults(func=cmd_compress)

    s = sub.add_parser("diagnose", help="Hodge split and channel flags for an edge flow")
    s.add_argument("complex")
    s.add_argument("flow", help="file with one value per edge, or 'drainage'")
    s.add_argument("--k-max", type=int, default=32)
    s.add_argument("--entropy-threshold", type=float)
    s.add_argument("--curl-threshold", type=float)
    s.add_argument("--beta1-threshold", type=int, default=1)
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("protocol", help="run the reconstruction loop; trace as JSON lines")
    s.add_argument("--config", help="key=value file")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.set_defaults(func=cmd_protocol)

    s = sub.add_parser("sweep", help="cycle-subspace fidelity sweep as CSV")
    s.add_argument("--families", type=lambda t: [x.strip() for x in t.split(",") if x.strip()], default=["A"])
    s.add_argument("--lengths", type=_int_list, default=[3, 4, 5, 6, 7, 8])
    s.add_argument("--delta-k", type=int, default=2)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("run", help="run a reference experiment (1-5)")
    s.add_argument("id", type=int, choices=sorted(EXPERIMENTS))
    s.add_argument("--out", help="directory for the JSON report (and CSV)")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("info", help="print defaults")
    s.set_defaults(func=cmd_info)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return args.func(args)
    except (SpectopoError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
