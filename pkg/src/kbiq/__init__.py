"""Kernel-based interpolation quadrature with projection-DPP nodes."""

from .coefficients import CoefficientVector, parse_g
from .dpp import NodeSet, RngStream, joint_density, node_set, sample_projection_dpp
from .quadrature import (
    KbiqParams,
    WeightVector,
    apply_quadrature,
    ez_weights,
    kbiq_weights,
    okq_weights,
)
from .spectral import SpectralModel
from .wce import WceReport, embedding_eval, embedding_norm_squared, wce_squared

__version__ = "0.1.0"
