"""Spectral topology toolkit: Hodge Laplacians, kernel fixed points,
topology-preserving spectral compression and a bandwidth-limited telemetry
codec."""

__version__ = "0.1.0"

from .complex import (  # noqa: E402
    HodgeLaplacians,
    SurfaceComplex,
    boundary_operators,
    build_knn_graph,
    hodge_laplacians,
    parse_obj,
)
from .errors import (  # noqa: E402
    DomainError,
    FrameCorruptionError,
    FrameError,
    FrameFormatError,
    FrameLengthError,
    ParameterError,
    ParseError,
    SolverError,
    SpectopoError,
    StructuralError,
)
from .families import gen_family  # noqa: E402
from .hodgeflow import channel_diagnostic, hodge_decompose  # noqa: E402
from .maxcal import Boltzmann, GaussianMI, Vacuum, fixed_point_solve, stability_report  # noqa: E402
from .spectral import SpectralBasis, eigendecompose, nystrom_basis, spectral_entropy  # noqa: E402
from .topology import betti_numbers, compressed_betti, compression_floor, cycle_basis  # noqa: E402
from .twincodec import decode_frame, encode_frame, protocol_run  # noqa: E402
