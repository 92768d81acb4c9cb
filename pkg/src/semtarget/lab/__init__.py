"""Desk-scale attack laboratory: synthetic tasks, toy classifiers, attacks."""

from .attacks import ATTACKS, AttackConfig, CwResult, cw, fgsm, mim, pgd, run_attack, run_experiment, spsa
from .classifier import ARCHITECTURES, ToyClassifier, accuracy, grad_input, loss_value, train
from .experiment import (
    SOURCES,
    SimulateConfig,
    SimulationResult,
    attack_suite,
    run_simulation,
    source_embeddings,
    source_table,
)
from .synthetic import Dataset, SyntheticTask, generate_task

__all__ = [
    "ARCHITECTURES",
    "ATTACKS",
    "SOURCES",
    "AttackConfig",
    "CwResult",
    "Dataset",
    "SimulateConfig",
    "SimulationResult",
    "SyntheticTask",
    "ToyClassifier",
    "accuracy",
    "attack_suite",
    "cw",
    "fgsm",
    "generate_task",
    "grad_input",
    "loss_value",
    "mim",
    "pgd",
    "run_attack",
    "run_experiment",
    "run_simulation",
    "source_embeddings",
    "source_table",
    "spsa",
    "train",
]
