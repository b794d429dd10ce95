"""Run configuration: evaluation conditions and their canonical ordering."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from ..attacks import ATTACK_METHODS, AttackConfig
from ..corruptions import CORRUPTION_KINDS, CorruptionSpec
from ..errors import ConfigInvalidError, ParseError
from ..losses import LossSpec

SPLIT_MODES = ("off", "big", "small")


@dataclass(frozen=True)
class Condition:
    """One evaluation condition: clean, a corruption cell, or an attack cell."""

    kind: str  # "clean" | "corruption" | "attack"
    corruption: CorruptionSpec | None = None
    attack: AttackConfig | None = None

    def __post_init__(self):
        if self.kind == "clean":
            ok = self.corruption is None and self.attack is None
        elif self.kind == "corruption":
            ok = self.corruption is not None and self.attack is None
        elif self.kind == "attack":
            ok = self.attack is not None and self.corruption is None
        else:
            ok = False
        if not ok:
            raise ConfigInvalidError(f"malformed condition {self!r}")

    def tag(self) -> str:
        if self.kind == "clean":
            return "clean"
        if self.kind == "corruption":
            return f"corruption({self.corruption.kind},{self.corruption.severity})"
        return self.attack.condition_tag()


def clean_condition() -> Condition:
    return Condition(kind="clean")


def corruption_conditions(kinds=None, severities=None) -> list[Condition]:
    kinds = list(CORRUPTION_KINDS) if kinds in (None, "all") else list(kinds)
    severities = [1, 2, 3, 4, 5] if severities in (None, "all") else [int(s) for s in severities]
    out = []
    for kind in kinds:
        for sev in severities:
            out.append(Condition(kind="corruption",
                                 corruption=CorruptionSpec(kind=kind, severity=sev)))
    return out


def attack_conditions(methods, eps_numerators, loss: LossSpec | None = None,
                      steps: int = 10, step_size_numerator: float = 1.0) -> list[Condition]:
    """Epsilons and step size are given as numerators over 255."""
    loss = loss if loss is not None else LossSpec()
    out = []
    for method in methods:
        if method not in ATTACK_METHODS:
            raise ConfigInvalidError(f"unknown attack method {method!r}")
        for num in eps_numerators:
            cfg = AttackConfig(
                method=method,
                epsilon=float(num) / 255.0,
                step_size=float(step_size_numerator) / 255.0,
                steps=1 if method == "fgsm" else steps,
                loss=loss,
            )
            out.append(Condition(kind="attack", attack=cfg))
    return out


def conditions_from_json_obj(obj: dict) -> list[Condition]:
    if not isinstance(obj, dict):
        raise ParseError("conditions file root must be an object")
    out: list[Condition] = []
    if obj.get("clean", True):
        out.append(clean_condition())
    for block in obj.get("corruptions", []):
        out.extend(corruption_conditions(block.get("kinds", "all"),
                                         block.get("severities", "all")))
    for block in obj.get("attacks", []):
        loss_kind = block.get("loss", "focal_dice")
        loss = LossSpec(kind=loss_kind)
        out.extend(attack_conditions(
            methods=block.get("methods", list(ATTACK_METHODS)),
            eps_numerators=block.get("eps", [0.5, 1, 2, 4, 8]),
            loss=loss,
            steps=int(block.get("steps", 10)),
            step_size_numerator=float(block.get("step_size", 1.0)),
        ))
    if not out:
        raise ConfigInvalidError("a run needs at least one condition")
    return out


def load_conditions(path) -> list[Condition]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"conditions file is not valid JSON: {e}") from e
    return conditions_from_json_obj(obj)


def _condition_json_obj(cond: Condition) -> dict:
    if cond.kind == "clean":
        return {"kind": "clean"}
    if cond.kind == "corruption":
        return {"kind": "corruption", "corruption": cond.corruption.kind,
                "severity": cond.corruption.severity}
    a = cond.attack
    return {"kind": "attack", "method": a.method, "epsilon": a.epsilon,
            "step_size": a.step_size, "steps": a.steps, "loss": a.loss.to_json_obj()}


@dataclass(frozen=True)
class RunConfig:
    manifest_path: str
    model: str = "toy"
    conditions: tuple[Condition, ...] = field(default_factory=lambda: (clean_condition(),))
    master_seed: int = 0
    out_dir: str | None = None
    workers: int = 1
    split: str = "off"
    report_formats: tuple[str, ...] = ("json", "csv")
    overlays: bool = False
    quantized_attack_rows: bool = True

    def __post_init__(self):
        if len(self.conditions) < 1:
            raise ConfigInvalidError("a run needs at least one condition")
        if self.workers < 1:
            raise ConfigInvalidError("workers must be >= 1")
        if self.split not in SPLIT_MODES:
            raise ConfigInvalidError(f"split must be one of {SPLIT_MODES}")
        object.__setattr__(self, "conditions", tuple(self.conditions))

    def digest(self) -> str:
        """Hash of the run's logical identity; scheduling knobs excluded so
        byte-identical reports stay byte-identical across worker counts."""
        ident = {
            "manifest_path": self.manifest_path,
            "model": self.model,
            "conditions": [_condition_json_obj(c) for c in self.conditions],
            "master_seed": self.master_seed,
            "split": self.split,
            "quantized_attack_rows": self.quantized_attack_rows,
        }
        blob = json.dumps(ident, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()
