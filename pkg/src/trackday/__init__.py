"""trackday: deterministic 2D racing simulator with a perception-to-control
stack (synthetic segmentation, PID steering, bang-bang acceleration) and an
MLP track localiser trained under a practice-period protocol."""

from .percept import RENDER_BACKEND

__version__ = "0.1.0"
__all__ = ["RENDER_BACKEND", "__version__"]
