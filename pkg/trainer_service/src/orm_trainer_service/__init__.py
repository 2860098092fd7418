"""Outcome reward trainer and scoring service over the step-tag format."""

from .data import STEP_TAG, TrainingRecord, load_training_file
from .errors import ModelLoadFailure, ResourceExhausted, SchemaViolation, SingleClassData, TrainerError
from .service import ScoringModel, create_app, serve
from .training import TrainerConfig, train

__version__ = "0.1.0"
