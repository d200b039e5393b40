from __future__ import annotations

from .chebyshev import (
    derivative_matrix,
    gauss_inverse,
    gauss_nodes,
    gauss_transform,
    gram_matrix,
    integrals,
    lobatto_inverse,
    lobatto_nodes,
    lobatto_transform,
    quadrature_weights,
)
from .discretization import Discretization, build_discretization
from .nonlinear import (
    advection,
    convolution_advection,
    linearized_advection,
    to_physical,
    to_spectral,
)
from .operators import (
    LAMINAR_FLUX,
    LUFactor,
    ModeBlock,
    OperatorSet,
    SpectralOperators,
    ZeroModeBlock,
    build_operators,
    reconstruct_lu,
    spectral_operators,
)

__all__ = [
    'LAMINAR_FLUX',
    'Discretization',
    'LUFactor',
    'ModeBlock',
    'OperatorSet',
    'SpectralOperators',
    'ZeroModeBlock',
    'advection',
    'build_discretization',
    'build_operators',
    'convolution_advection',
    'derivative_matrix',
    'gauss_inverse',
    'gauss_nodes',
    'gauss_transform',
    'gram_matrix',
    'integrals',
    'linearized_advection',
    'lobatto_inverse',
    'lobatto_nodes',
    'lobatto_transform',
    'quadrature_weights',
    'reconstruct_lu',
    'spectral_operators',
    'to_physical',
    'to_spectral',
]
