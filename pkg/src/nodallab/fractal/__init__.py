from .curve import Curve, koch_curve, koch_length, point_set_diameter, unit_diameter_partition
from .energy import AtomicMeasure, energy, length_lower_bound, partition_energy_check
from .hierarchy import (CurveHierarchy, build_measure, claim1_check, decompose,
                        run_free_branching_fraction, verify_hierarchy)
from .runs import (StraightRunCertificate, detect_straight_runs, is_sparse, longest_nested_chain,
                   sparsity)
from .triplet import (RenormTriplet, energy_bound, energy_bound_series, min_gamma_for_sparsity_bound,
                      scales, validate_triplet)
