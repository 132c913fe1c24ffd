"""Spectral telemetry codec and the bandwidth-limited reconstruction protocol."""

from .codec import *  # noqa: F401,F403
from .codec import __all__ as _codec_all
from .protocol import *  # noqa: F401,F403
from .protocol import __all__ as _protocol_all

__all__ = [*_codec_all, *_protocol_all]
