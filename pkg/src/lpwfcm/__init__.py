"""Label-pairwise multi-label ensembles corrected by fuzzy local competence."""

from .data import MultiLabelDataset, dataset_stats, load_dataset
from .ensemble import LPWConfig, LPWModel, fit_corrected, fit_plain, load_model, save_model
from .experiment import ExperimentConfig, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "LPWConfig", "LPWModel", "MultiLabelDataset", "dataset_stats",
    "fit_corrected", "fit_plain", "load_dataset", "load_model", "run_experiment", "save_model",
]
