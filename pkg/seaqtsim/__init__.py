from .protocol import ProtocolConfig, run_cphase

__all__ = [
    "dynamics",
    "harness",
    "linalg",
    "metrics",
    "protocol",
    "ProtocolConfig",
    "run_cphase",
]
