"""ovinet: a desk-scale digital twin of an ovitrap egg-counting IoT network."""

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Which blob-kernel backend is active: 'native' or 'pure'."""
    from .detector.blobs import BACKEND

    return BACKEND
