"""Discretization geometry and sweep result models"""
from .geometry import (
    AngleSetKind,
    DiscretizationParams,
    Explicit,
    FullEquispaced,
    GeometryError,
    Image,
    ImageGrid,
    Limited,
    Sinogram,
    SinogramGrid,
    make_params,
)
from .database import database, BaseModel, close_database, initialize_database
from .models import SweepRecord, get_run

__all__ = [
    'AngleSetKind',
    'DiscretizationParams',
    'Explicit',
    'FullEquispaced',
    'GeometryError',
    'Image',
    'ImageGrid',
    'Limited',
    'Sinogram',
    'SinogramGrid',
    'make_params',
    'database',
    'BaseModel',
    'close_database',
    'initialize_database',
    'SweepRecord',
    'get_run',
]
