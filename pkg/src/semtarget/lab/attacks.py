"""Targeted attacks on toy classifiers.

All five attacks descend toward the target class. Iterative attacks keep
the perturbation as explicit state and project it onto the epsilon ball
each step, so the budget holds at every iterate and a single step of size
epsilon reproduces the one-shot method exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..metrics import PredictionRecord
from ..targets import TargetTable
from .classifier import ToyClassifier, grad_input, loss_value
from .synthetic import Dataset, SyntheticTask

ATTACKS = ("fgsm", "pgd", "mim", "spsa", "cw")


@dataclass
class AttackConfig:
    attack: str
    epsilon: float = 0.05
    step_size: float | None = None
    iterations: int = 1
    mim_decay: float = 1.0
    spsa_samples: int = 32
    spsa_perturbation: float = 0.01
    cw_confidence: float = 0.0
    cw_penalty: float = 0.1
    cw_iterations: int = 60
    seed: int = 0

    def __post_init__(self) -> None:
        if self.attack not in ATTACKS:
            raise ValidationError(f"unknown attack {self.attack!r}")
        if self.epsilon < 0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.step_size is not None and self.step_size <= 0:
            raise ValidationError(f"step_size must be > 0, got {self.step_size}")
        if self.iterations < 1:
            raise ValidationError(f"iterations must be >= 1, got {self.iterations}")
        if self.mim_decay < 0:
            raise ValidationError(f"mim_decay must be >= 0, got {self.mim_decay}")
        if self.spsa_samples < 1:
            raise ValidationError(f"spsa_samples must be >= 1, got {self.spsa_samples}")
        if self.spsa_perturbation <= 0:
            raise ValidationError(f"spsa_perturbation must be > 0, got {self.spsa_perturbation}")
        if self.cw_iterations < 1:
            raise ValidationError(f"cw_iterations must be >= 1, got {self.cw_iterations}")

    def resolved_step(self) -> float:
        if self.step_size is not None:
            return self.step_size
        if self.attack == "fgsm":
            return self.epsilon
        if self.attack == "cw":
            return 0.1
        # Iterative default: overshoot the budget slightly so the ball
        # boundary is reachable from anywhere inside it.
        return 2.5 * self.epsilon / self.iterations


def _clip01(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 1.0)


def _sign_descent(
    model: ToyClassifier,
    x: np.ndarray,
    target: int,
    epsilon: float,
    step: float,
    iterations: int,
) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    delta = np.zeros_like(x)
    for _ in range(iterations):
        g = grad_input(model, _clip01(x + delta), ("ce", target))
        delta = np.clip(delta - step * np.sign(g), -epsilon, epsilon)
    return _clip01(x + delta)


def fgsm(model: ToyClassifier, x: np.ndarray, target: int, cfg: AttackConfig) -> np.ndarray:
    return _sign_descent(model, x, target, cfg.epsilon, cfg.epsilon, 1)


def pgd(model: ToyClassifier, x: np.ndarray, target: int, cfg: AttackConfig) -> np.ndarray:
    return _sign_descent(model, x, target, cfg.epsilon, cfg.resolved_step(), cfg.iterations)


def mim(model: ToyClassifier, x: np.ndarray, target: int, cfg: AttackConfig) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    delta = np.zeros_like(x)
    g_acc = np.zeros_like(x)
    step = cfg.resolved_step()
    for _ in range(cfg.iterations):
        g = grad_input(model, _clip01(x + delta), ("ce", target))
        l1 = float(np.abs(g).sum())
        # Zero gradient contributes nothing to the accumulator.
        g_acc = cfg.mim_decay * g_acc + (g / l1 if l1 > 0.0 else 0.0)
        delta = np.clip(delta - step * np.sign(g_acc), -cfg.epsilon, cfg.epsilon)
    return _clip01(x + delta)


def spsa(
    model: ToyClassifier,
    x: np.ndarray,
    target: int,
    cfg: AttackConfig,
    key: int = 0,
) -> np.ndarray:
    """Gradient-free sign descent; two forward passes per draw.

    The random stream is derived from (cfg.seed, key) so per-sample runs
    are reproducible in any execution order.
    """
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, key]))
    delta = np.zeros_like(x)
    step = cfg.resolved_step()
    c = cfg.spsa_perturbation
    for _ in range(cfg.iterations):
        xe = _clip01(x + delta)
        g_est = np.zeros_like(x)
        for _ in range(cfg.spsa_samples):
            pm = rng.integers(0, 2, x.shape[0]).astype(np.float64) * 2.0 - 1.0
            diff = loss_value(model, xe + c * pm, ("ce", target)) - loss_value(
                model, xe - c * pm, ("ce", target)
            )
            g_est += (diff / (2.0 * c)) * pm
        g_est /= cfg.spsa_samples
        delta = np.clip(delta - step * np.sign(g_est), -cfg.epsilon, cfg.epsilon)
    return _clip01(x + delta)


def spsa_gradient(
    model: ToyClassifier,
    x: np.ndarray,
    target: int,
    samples: int,
    perturbation: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One-shot gradient estimate, exposed for direct comparison against
    the analytic gradient."""
    x = np.asarray(x, dtype=np.float64)
    g_est = np.zeros_like(x)
    for _ in range(samples):
        pm = rng.integers(0, 2, x.shape[0]).astype(np.float64) * 2.0 - 1.0
        diff = loss_value(model, x + perturbation * pm, ("ce", target)) - loss_value(
            model, x - perturbation * pm, ("ce", target)
        )
        g_est += (diff / (2.0 * perturbation)) * pm
    return g_est / samples


@dataclass
class CwResult:
    x: np.ndarray
    reached: bool
    objective: float


def cw(model: ToyClassifier, x: np.ndarray, target: int, cfg: AttackConfig) -> CwResult:
    """Penalty-form descent on c*||delta||^2 + margin, keeping the best
    in-range iterate by objective. The clean point is iterate zero, so an
    overwhelming penalty returns the input unchanged."""
    x = np.asarray(x, dtype=np.float64)
    kappa = cfg.cw_confidence
    c = cfg.cw_penalty
    step = cfg.resolved_step()

    def evaluate(delta: np.ndarray) -> tuple[float, np.ndarray]:
        cand = _clip01(x + delta)
        diff = cand - x
        obj = c * float(diff @ diff) + loss_value(model, cand, ("cw", target, kappa))
        return obj, cand

    delta = np.zeros_like(x)
    best_obj, best_x = evaluate(delta)
    for _ in range(cfg.cw_iterations):
        g = 2.0 * c * delta + grad_input(model, x + delta, ("cw", target, kappa))
        delta = delta - step * g
        obj, cand = evaluate(delta)
        if obj < best_obj:
            best_obj, best_x = obj, cand
    reached = model.predict_one(best_x) == target
    return CwResult(x=best_x, reached=reached, objective=best_obj)


def run_attack(
    model: ToyClassifier,
    x: np.ndarray,
    target: int,
    cfg: AttackConfig,
    key: int = 0,
) -> np.ndarray:
    if cfg.attack == "fgsm":
        return fgsm(model, x, target, cfg)
    if cfg.attack == "pgd":
        return pgd(model, x, target, cfg)
    if cfg.attack == "mim":
        return mim(model, x, target, cfg)
    if cfg.attack == "spsa":
        return spsa(model, x, target, cfg, key=key)
    return cw(model, x, target, cfg).x


def run_experiment(
    task: SyntheticTask,
    model: ToyClassifier,
    table: TargetTable,
    attacks: list[AttackConfig],
    data: Dataset,
    variants: tuple[str, ...] = ("MS", "LS"),
) -> list[PredictionRecord]:
    """One record per test sample x attack x variant, in that loop order."""
    if table.num_classes != task.C:
        raise ValidationError(
            f"table has {table.num_classes} classes but task has {task.C}"
        )
    if model.num_classes != task.C:
        raise ValidationError(
            f"model has {model.num_classes} classes but task has {task.C}"
        )
    log: list[PredictionRecord] = []
    for i in range(data.X_test.shape[0]):
        x = data.X_test[i]
        gt = int(data.y_test[i])
        pre = model.predict_one(x)
        for cfg in attacks:
            for variant in variants:
                target = table.target_index(gt, variant)
                adv = run_attack(model, x, target, cfg, key=i)
                log.append(
                    PredictionRecord(
                        image_id=f"test-{i:04d}",
                        gt_index=gt,
                        pre_index=pre,
                        post_index=model.predict_one(adv),
                        target_index=target,
                        attack=cfg.attack,
                        source=table.source_name,
                        variant=variant,
                    )
                )
    return log
