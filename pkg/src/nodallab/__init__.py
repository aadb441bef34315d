"""Monte-Carlo laboratory for level sets of smooth planar Gaussian fields."""

from .errors import ConfigError, DecompositionError, ModelError, NodalLabError, UsageError
from .geometry import Rect
from .kernels import CovarianceKernel, KernelName, kappa, kappa_tilde, q_of, spectral_density
from .levelset import ExcursionMask, NodalGraph, components, excursion_mask, nodal_graph, total_nodal_length
from .percolation import (ArmQuery, CrossingQuery, Direction, SetKind, chemical_quantities, crosses,
                          joint_crossings, one_arm, one_arm_profile, shortest_crossing)
from .sampler import FieldGrid, empirical_covariance, sample_field

__version__ = "0.1.0"
