"""Distributed information bottleneck: solvers, region evaluators and oracles.

Multiple encoders separately compress noisy views ``Y_1..Y_K`` of a hidden
signal ``X`` so that the descriptions jointly retain as much information about
``X`` as possible under a sum-rate budget.  The package provides

* ``info_core``     -- discrete pmf containers and information functionals,
* ``discrete``      -- the alternating-minimization solver for discrete sources,
* ``gaussian_core`` -- vector-Gaussian covariance algebra and region bounds,
* ``gaussian``      -- the noisy-linear-projection solver for Gaussian sources,
* ``oracles``       -- independent brute-force / closed-form references,
* ``cli``           -- sweep driver emitting CSV/JSON curves and figures.

All information quantities are in nats unless a caller asks for bits.
"""

from dib.info_core import (
    Pmf,
    ConditionalPmf,
    DiscreteSource,
    EncoderSet,
    DecoderSet,
    InducedJoint,
    entropy,
    kl_divergence,
    mutual_information,
    induce_joint,
)
from dib.discrete import SolverConfig, TradeoffPoint
from dib.gaussian_core import GaussianSource, LinearEncoderSet, BMatrixSet
from dib.gaussian import GaussianSolverConfig

__all__ = [
    "Pmf",
    "ConditionalPmf",
    "DiscreteSource",
    "EncoderSet",
    "DecoderSet",
    "InducedJoint",
    "entropy",
    "kl_divergence",
    "mutual_information",
    "induce_joint",
    "SolverConfig",
    "TradeoffPoint",
    "GaussianSource",
    "LinearEncoderSet",
    "BMatrixSet",
    "GaussianSolverConfig",
]

__version__ = "0.1.0"
