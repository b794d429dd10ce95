"""L-infinity gradient attacks against a promptable segmenter.

All four methods ascend the attack objective (the stated goal is predictions
that differ from the ground truth, so the minimization sign in the usual
formulation is flipped here) and keep the perturbation inside both the
epsilon box and the valid pixel range after every step. FGSM is the one-step
special case and shares the exact update path with BIM so that
BIM(steps=1, step_size=eps) == FGSM bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core.rng import BulkRng, DeterministicRng
from .core.types import BinaryMask, ImageTensor, PointPrompt
from .errors import ConfigInvalidError, NonFiniteGradientError, SegRobustError, ShapeMismatchError
from .losses import LossSpec
from .model.contract import SegmenterContract, select_mask_index

ATTACK_METHODS = ("fgsm", "bim", "pgd", "segpgd")
DEFAULT_EPSILONS = (0.5 / 255, 1 / 255, 2 / 255, 4 / 255, 8 / 255)


@dataclass(frozen=True)
class AttackConfig:
    method: str
    epsilon: float
    step_size: float = 1 / 255
    steps: int = 10
    loss: LossSpec = field(default_factory=LossSpec)
    seed: int = 0
    fix_mask_at_start: bool = False

    def __post_init__(self):
        if self.method not in ATTACK_METHODS:
            raise ConfigInvalidError(f"unknown attack method {self.method!r}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigInvalidError(f"epsilon {self.epsilon} outside (0,1]")
        if self.method == "fgsm" and self.steps != 1:
            raise ConfigInvalidError("fgsm is single-step; set steps=1")
        if self.steps < 0:
            raise ConfigInvalidError("steps must be >= 0")
        if self.step_size <= 0:
            raise ConfigInvalidError("step_size must be > 0")

    def condition_tag(self) -> str:
        eps_num = format(self.epsilon * 255, "g")
        return f"attack({self.method},{eps_num}/255,{self.loss.kind})"


def project_linf(delta: np.ndarray, epsilon: float, image: np.ndarray) -> np.ndarray:
    """Clamp delta into the epsilon box, then pull image+delta back into [0,1]."""
    if delta.shape != image.shape:
        raise ShapeMismatchError(f"delta {delta.shape} vs image {image.shape}")
    d = np.clip(delta, -epsilon, epsilon)
    return np.clip(image + d, 0.0, 1.0) - image


def _attack_loop(
    image: ImageTensor,
    prompt: PointPrompt,
    truth: BinaryMask,
    model: SegmenterContract,
    config: AttackConfig,
    *,
    random_start: bool,
    steps: int,
    step_size: float,
    segpgd: bool,
) -> ImageTensor:
    base = image.data
    if random_start:
        u = BulkRng(config.seed).uniforms(base.shape)
        delta = project_linf((u * 2.0 - 1.0) * config.epsilon, config.epsilon, base)
    else:
        delta = np.zeros_like(base)

    mask_index = None
    if config.fix_mask_at_start:
        start = ImageTensor(np.clip(base + delta, 0.0, 1.0))
        mask_index = select_mask_index(model.predict(start, prompt))

    for t in range(1, steps + 1):
        current = ImageTensor(np.clip(base + delta, 0.0, 1.0))
        segpgd_step = (t, steps) if segpgd else None
        _, grad = model.input_gradient(
            current, prompt, truth, config.loss, segpgd_step, mask_index
        )
        if not np.isfinite(grad).all():
            raise NonFiniteGradientError("attack received non-finite gradient")
        delta = project_linf(delta + step_size * np.sign(grad), config.epsilon, base)

    return ImageTensor(np.clip(base + delta, 0.0, 1.0))


def fgsm(image: ImageTensor, prompt: PointPrompt, truth: BinaryMask,
         model: SegmenterContract, config: AttackConfig) -> ImageTensor:
    """Single ascent step of size epsilon along the gradient sign (sign(0)=0)."""
    if config.method != "fgsm":
        raise ConfigInvalidError(f"fgsm() called with method {config.method!r}")
    return _attack_loop(image, prompt, truth, model, config,
                        random_start=False, steps=1, step_size=config.epsilon,
                        segpgd=False)


def iterative_attack(image: ImageTensor, prompt: PointPrompt, truth: BinaryMask,
                     model: SegmenterContract, config: AttackConfig) -> ImageTensor:
    """BIM (zero start), PGD, or SegPGD (seeded uniform start in the eps box)."""
    if config.method not in ("bim", "pgd", "segpgd"):
        raise ConfigInvalidError(f"iterative_attack() got method {config.method!r}")
    return _attack_loop(
        image, prompt, truth, model, config,
        random_start=config.method in ("pgd", "segpgd"),
        steps=config.steps,
        step_size=config.step_size,
        segpgd=config.method == "segpgd",
    )


def run_attack(image: ImageTensor, prompt: PointPrompt, truth: BinaryMask,
               model: SegmenterContract, config: AttackConfig) -> ImageTensor:
    if config.method == "fgsm":
        return fgsm(image, prompt, truth, model, config)
    return iterative_attack(image, prompt, truth, model, config)


def attack_sweep(
    image: ImageTensor,
    prompt: PointPrompt,
    truth: BinaryMask,
    model: SegmenterContract,
    methods,
    epsilons,
    *,
    loss: LossSpec | None = None,
    steps: int = 10,
    step_size: float = 1 / 255,
    seed: int = 0,
):
    """Cartesian sweep; per-cell sub-seeds, failures collected without aborting.

    Returns an ordered dict {(method, epsilon): ImageTensor | SegRobustError}.
    """
    loss = loss if loss is not None else LossSpec()
    master = DeterministicRng(seed)
    results = {}
    for method in methods:
        for eps in epsilons:
            cell_seed = master.next_u64()
            try:
                cfg = AttackConfig(
                    method=method,
                    epsilon=eps,
                    step_size=step_size,
                    steps=1 if method == "fgsm" else steps,
                    loss=loss,
                    seed=cell_seed,
                )
                results[(method, eps)] = run_attack(image, prompt, truth, model, cfg)
            except SegRobustError as e:
                results[(method, eps)] = e
    return results
