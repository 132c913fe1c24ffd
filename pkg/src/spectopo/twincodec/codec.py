"""Spectral coefficient frames: projection, reconstruction, mode allocation
and the binary wire format.

Wire layout (all little-endian)::

    offset  size  field
    0       4     magic  b"KCAL"
    4       1     version (0x01)
    5       4     frame_index  uint32
    9       2     k            uint16
    11      1     axes (= 3)
    12      12k   coefficients, float32, mode-major (c[0,x], c[0,y], c[0,z], c[1,x], ...)
    12+12k  4     CRC-32 (zlib) of bytes [0, 12+12k)
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import FrameCorruptionError, FrameFormatError, FrameLengthError, ParameterError
from ..maxcal import SourceModel
from ..spectral import SpectralBasis

__all__ = [
    "MAGIC",
    "VERSION",
    "AXES",
    "HEADER_SIZE",
    "TRAILER_SIZE",
    "FRAME_OVERHEAD",
    "BYTES_PER_MODE",
    "CoefficientFrame",
    "project",
    "reconstruct",
    "distortion",
    "budget_allocate",
    "encode_frame",
    "decode_frame",
]

MAGIC = b"KCAL"
VERSION = 1
AXES = 3
_HEADER = struct.Struct("<4sBIHB")
HEADER_SIZE = _HEADER.size  # 12
TRAILER_SIZE = 4
FRAME_OVERHEAD = HEADER_SIZE + TRAILER_SIZE
BYTES_PER_MODE = 4 * AXES
_MAX_K = 0xFFFF
_MAX_INDEX = 0xFFFFFFFF


@dataclass(frozen=True, eq=False)
class CoefficientFrame:
    """Coefficients ``c[l, axis] = phi_l^T V[:, axis]`` for the first ``k`` modes."""

    frame_index: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[1] != AXES or c.shape[0] < 1:
            raise ParameterError(f"coeffs must have shape (k>=1, {AXES}), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ParameterError("coeffs must be finite")
        if not 0 <= int(self.frame_index) <= _MAX_INDEX:
            raise ParameterError("frame_index must fit in 32 unsigned bits")
        object.__setattr__(self, "coeffs", c)

    @property
    def k(self) -> int:
        return self.coeffs.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientFrame):
            return NotImplemented
        return self.frame_index == other.frame_index and np.array_equal(self.coeffs, other.coeffs)


def _positions(V, n: int) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.shape != (n, AXES):
        raise ParameterError(f"positions must have shape ({n}, {AXES}), got {V.shape}")
    return V


def project(basis: SpectralBasis, V, k: int, frame_index: int = 0) -> CoefficientFrame:
    if not 1 <= k <= basis.k:
        raise ParameterError(f"k must be in [1, {basis.k}], got {k}")
    V = _positions(V, basis.eigenvectors.shape[0])
    return CoefficientFrame(frame_index, basis.eigenvectors[:, :k].T @ V)


def reconstruct(basis: SpectralBasis, frame: CoefficientFrame) -> np.ndarray:
    if frame.k > basis.k:
        raise ParameterError(f"frame has {frame.k} modes, basis only {basis.k}")
    return basis.eigenvectors[:, : frame.k] @ frame.coeffs


def distortion(V_hat, V) -> float:
    """``||V_hat - V||_F / ||V - mean(V)||_F``."""
    V = np.asarray(V, dtype=float)
    spread = np.linalg.norm(V - V.mean(axis=0))
    if spread == 0:
        raise ParameterError("reference positions have zero spread")
    return float(np.linalg.norm(np.asarray(V_hat, dtype=float) - V) / spread)


def budget_allocate(
    h_star,
    coeffs: CoefficientFrame | np.ndarray,
    model: SourceModel,
    k_min: int,
    extra: int,
    lambdas=None,
) -> list[int]:
    """Obligate modes ``0..k_min-1`` plus ``extra`` modes ranked by ``h*_l |c_l|^2 / T_l``.

    ``|c_l|^2`` is summed over axes. Ties go to the lower index and modes
    with ``T_l = 0`` rank after every finite score.
    """
    h = np.asarray(h_star, dtype=float)
    c = coeffs.coeffs if isinstance(coeffs, CoefficientFrame) else np.asarray(coeffs, dtype=float)
    n = min(h.size, c.shape[0])
    if extra < 0 or k_min < 0:
        raise ParameterError("k_min and extra must be >= 0")
    if k_min > n:
        raise ParameterError(f"k_min={k_min} exceeds {n} available modes")
    lam = np.zeros(n) if lambdas is None else np.asarray(lambdas, dtype=float)[:n]
    T = model.evaluate(h[:n], lam)
    power = np.sum(c[:n] ** 2, axis=1)
    cand = np.arange(k_min, n)
    zero = T[cand] == 0
    score = np.where(zero, 0.0, h[cand] * power[cand] / np.where(zero, 1.0, T[cand]))
    # lexsort: last key primary -> zero-T last, then score descending, then index
    order = np.lexsort((cand, -score, zero))
    return list(range(k_min)) + cand[order[:extra]].tolist()


def encode_frame(frame: CoefficientFrame) -> bytes:
    if frame.k > _MAX_K:
        raise ParameterError(f"k={frame.k} exceeds {_MAX_K}")
    head = _HEADER.pack(MAGIC, VERSION, int(frame.frame_index), frame.k, AXES)
    body = head + frame.coeffs.astype("<f4").tobytes()
    return body + struct.pack("<I", zlib.crc32(body))


def decode_frame(data: bytes) -> CoefficientFrame:
    """Inverse of :func:`encode_frame`.

    The declared length is checked first, then the CRC, then the header
    fields, so a damaged magic or version byte reports as corruption.

    Raises:
        FrameLengthError: byte count disagrees with the declared ``k``.
        FrameCorruptionError: CRC mismatch.
        FrameFormatError: intact frame with wrong magic, version or shape.
    """
    data = bytes(data)
    if len(data) < FRAME_OVERHEAD:
        raise FrameLengthError(f"frame of {len(data)} bytes is shorter than the {FRAME_OVERHEAD}-byte envelope")
    magic, version, index, k, axes = _HEADER.unpack_from(data)
    expected = FRAME_OVERHEAD + BYTES_PER_MODE * k
    if len(data) != expected:
        raise FrameLengthError(f"frame declares k={k} ({expected} bytes) but has {len(data)}")
    body, (crc,) = data[:-TRAILER_SIZE], struct.unpack("<I", data[-TRAILER_SIZE:])
    if zlib.crc32(body) != crc:
        raise FrameCorruptionError("CRC-32 mismatch")
    if magic != MAGIC:
        raise FrameFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameFormatError(f"unsupported version {version}")
    if axes != AXES or k == 0:
        raise FrameFormatError(f"bad shape: k={k}, axes={axes}")
    coeffs = np.frombuffer(body, dtype="<f4", offset=HEADER_SIZE).reshape(k, AXES).astype(float)
    return CoefficientFrame(index, coeffs)
