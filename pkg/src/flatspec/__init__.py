"""flatspec: length-spectrum machinery for flat (semi-translation) surfaces."""

__version__ = "0.1.0"

from .geom_kernel import (  # noqa: F401
    FlatSurface,
    PlanarMatrix,
    SurfaceError,
    ParseError,
    parse_surface,
    serialize_surface,
    validate_surface,
    surface_area,
    apply_linear,
    develop_corridor,
)
from .surfaces import square_torus, octagon_surface  # noqa: F401
