"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 model/protocol error,
3 I/O error. Set SEGROBUST_LOG to error|warn|info|debug for diagnostics.
Epsilons and step sizes are given as numerators over 255 (so `--eps 8`
means 8/255), matching how budgets are usually quoted.
"""

from __future__ import annotations

import logging
import os
import sys

import click

from . import errors as E
from .attacks import ATTACK_METHODS, AttackConfig, run_attack
from .core.imageio import save_image_png
from .core.manifest import load_annotated_images, load_manifest
from .core.rng import DeterministicRng
from .corruptions import CORRUPTION_KINDS, CorruptionParamTable, CorruptionSpec, apply_corruption
from .harness.config import RunConfig, load_conditions, clean_condition
from .harness.evaluate import evaluate_dataset, sample_prompt, condition_seed
from .harness.report import emit_report, overlay_png_sink
from .harness.synth import make_annotated_image, synth_dataset
from .losses import LossSpec
from .model.gradcheck import gradient_check
from .model.remote import build_model

log = logging.getLogger("segrobust.cli")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MODEL = 2
EXIT_IO = 3

_CONFIG_ERRORS = (E.ConfigInvalidError, E.ParseError, E.UnknownKindError,
                  E.SeverityOutOfRangeError, E.EmptyDatasetError, ValueError)
_MODEL_ERRORS = (E.ModelError, E.ProtocolError, E.RemoteError, E.RemoteTimeoutError)
_IO_ERRORS = (E.MissingFileError, OSError)


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except Exception as e:
        raise E.ConfigInvalidError(f"--size must look like 64x64, got {text!r}") from e


def _parse_list(text: str, all_values, cast):
    if text == "all":
        return list(all_values)
    return [cast(v) for v in text.split(",") if v]


@click.group()
def cli():
    """Robustness evaluation for point-prompted segmentation."""


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--images", "n_images", type=int, default=8, show_default=True)
@click.option("--size", default="64x64", show_default=True, help="HxW")
@click.option("--out", "out_dir", required=True, type=click.Path())
def synth(seed, n_images, size, out_dir):
    """Generate a deterministic synthetic dataset with a manifest."""
    h, w = _parse_size(size)
    manifest = synth_dataset(seed, n_images, (h, w), out_dir)
    click.echo(f"wrote {len(manifest.records)} images under {out_dir}")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--kinds", default="all", show_default=True)
@click.option("--severities", default="all", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def corrupt(manifest_path, kinds, severities, seed, out_dir):
    """Write corrupted copies of every manifest image, one file per cell."""
    kind_list = _parse_list(kinds, CORRUPTION_KINDS, str)
    sev_list = _parse_list(severities, (1, 2, 3, 4, 5), int)
    manifest = load_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    records = load_annotated_images(manifest, base_dir=base)
    table = CorruptionParamTable.default()
    master = DeterministicRng(seed)
    n = 0
    for rec, mrec in zip(records, manifest.records):
        for kind in kind_list:
            for sev in sev_list:
                cell_seed = master.next_u64()
                out = apply_corruption(rec.image, CorruptionSpec(kind, sev, cell_seed), table)
                rel = f"{mrec.image_path}.{kind}.{sev}.png"
                dest = os.path.join(out_dir, rel)
                os.makedirs(os.path.dirname(dest), exist_ok=True)
                save_image_png(out, dest)
                n += 1
    click.echo(f"wrote {n} corrupted images under {out_dir}")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--model", "model_selector", default="toy", show_default=True,
              help="toy | tcp:HOST:PORT | cmd:COMMAND")
@click.option("--methods", default="fgsm,bim,pgd,segpgd", show_default=True)
@click.option("--eps", default="0.5,1,2,4,8", show_default=True,
              help="budgets as numerators over 255")
@click.option("--loss", "loss_kind", type=click.Choice(["focal_dice", "mse"]),
              default="focal_dice", show_default=True)
@click.option("--steps", type=int, default=10, show_default=True)
@click.option("--step-size", type=float, default=1.0, show_default=True,
              help="iterative step as a numerator over 255")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def attack(manifest_path, model_selector, methods, eps, loss_kind, steps,
           step_size, seed, out_dir):
    """Write adversarial copies of every manifest image for each (method, eps)."""
    method_list = _parse_list(methods, ATTACK_METHODS, str)
    eps_list = _parse_list(eps, (0.5, 1, 2, 4, 8), float)
    manifest = load_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    records = load_annotated_images(manifest, base_dir=base)
    model = build_model(model_selector)
    loss = LossSpec(kind=loss_kind)
    master = DeterministicRng(seed)
    n = 0
    for rec, mrec in zip(records, manifest.records):
        rng = DeterministicRng(master.next_u64())
        sampled = sample_prompt(rec, "off", rng)
        for method in method_list:
            for eps_num in eps_list:
                cfg = AttackConfig(
                    method=method,
                    epsilon=eps_num / 255.0,
                    step_size=step_size / 255.0,
                    steps=1 if method == "fgsm" else steps,
                    loss=loss,
                    seed=condition_seed(sampled.branch_seed, n),
                )
                adv = run_attack(rec.image, sampled.point, sampled.mask, model, cfg)
                rel = f"{mrec.image_path}.{method}.{format(eps_num, 'g')}_255.png"
                dest = os.path.join(out_dir, rel)
                os.makedirs(os.path.dirname(dest), exist_ok=True)
                save_image_png(adv, dest)
                n += 1
    click.echo(f"wrote {n} adversarial images under {out_dir}")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--model", "model_selector", default="toy", show_default=True)
@click.option("--conditions", "conditions_path", type=click.Path(), default=None,
              help="JSON conditions file; defaults to clean only")
@click.option("--split", type=click.Choice(["off", "big", "small"]),
              default="off", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--report", "report_formats", default="json,csv", show_default=True)
@click.option("--overlays", type=bool, default=False, show_default=True)
def evaluate(manifest_path, model_selector, conditions_path, split, workers,
             seed, out_dir, report_formats, overlays):
    """Run the evaluation protocol and write aggregate reports."""
    conditions = (load_conditions(conditions_path) if conditions_path
                  else [clean_condition()])
    config = RunConfig(
        manifest_path=manifest_path,
        model=model_selector,
        conditions=tuple(conditions),
        master_seed=seed,
        out_dir=out_dir,
        workers=workers,
        split=split,
        report_formats=tuple(f for f in report_formats.split(",") if f),
        overlays=overlays,
    )
    sink = overlay_png_sink(out_dir) if overlays else None
    bundle = evaluate_dataset(config, overlay_sink=sink)
    written = emit_report(bundle, out_dir, config.report_formats)
    for tag in sorted(bundle.aggregates):
        rec = bundle.aggregates[tag]
        click.echo(f"{tag}: mPA={rec.mpa:.6f} mIoU={rec.miou:.6f}")
    for path in written:
        click.echo(f"wrote {path}")


@cli.command()
@click.option("--model", "model_selector", default="toy", show_default=True)
@click.option("--trials", type=int, default=3, show_default=True)
@click.option("--h", "h_step", type=float, default=1e-4, show_default=True)
def gradcheck(model_selector, trials, h_step):
    """Finite-difference check of the model's input gradients."""
    model = build_model(model_selector)
    loss = LossSpec()
    worst = 0.0
    for trial in range(trials):
        rec = make_annotated_image(1000 + trial, f"gradcheck-{trial}", 16, 16)
        rng = DeterministicRng(trial)
        sampled = sample_prompt(rec, "off", rng)
        err = gradient_check(model, rec.image, sampled.point, sampled.mask,
                             loss, h=h_step, coords=32, seed=trial)
        worst = max(worst, err)
        click.echo(f"trial {trial}: rel err {err:.3e}")
    click.echo(f"max rel err {worst:.3e}")


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("SEGROBUST_LOG", "warn").lower(),
                            logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.ClickException as e:
        e.show()
        return EXIT_CONFIG
    except click.Abort:
        return EXIT_CONFIG
    except _MODEL_ERRORS as e:
        log.error("model/protocol failure: %s", e)
        click.echo(f"error: {e}", err=True)
        return EXIT_MODEL
    except _CONFIG_ERRORS as e:
        log.error("configuration error: %s", e)
        click.echo(f"error: {e}", err=True)
        return EXIT_CONFIG
    except _IO_ERRORS as e:
        log.error("I/O error: %s", e)
        click.echo(f"error: {e}", err=True)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
