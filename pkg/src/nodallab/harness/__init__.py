from .config import ExperimentConfig, FractalSettings, JointSettings
from .experiments import replica_seed, run, run_replica, summarize
from .fitting import FitResult, fit_exponent, fit_exponent_replicas
from .records import COLUMNS, read_records, write_records, write_summary

__all__ = ["ExperimentConfig", "FractalSettings", "JointSettings", "replica_seed", "run", "run_replica",
           "summarize", "FitResult", "fit_exponent", "fit_exponent_replicas", "COLUMNS", "read_records",
           "write_records", "write_summary"]
