"""Gamma calculus and exponential curvature-dimension tools on weighted graphs."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (CapExceededError, DomainError, GraphCDEError, InadmissibleError, IntegrationError,
                     NoAdmissibleFunction, ParseError, PositivityError, PreconditionError, UnreachableError)
from .graph import (GraphConstants, VertexMeasure, WeightedGraph, ball, gamma, gamma2, gamma2_tilde,
                    graph_constants, laplacian)
from .reports import BoundReport
