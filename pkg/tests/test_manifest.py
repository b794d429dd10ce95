import json
import os

import numpy as np
import pytest

from segrobust.core.imageio import save_image_png, save_mask_png
from segrobust.core.manifest import (
    DatasetManifest,
    ManifestRecord,
    MaskEntry,
    load_annotated_images,
    load_manifest,
    save_manifest,
)
from segrobust.core.types import BinaryMask, ImageTensor
from segrobust.errors import DimensionMismatchError, MissingFileError, ParseError
from segrobust.harness.synth import synth_dataset

GOLDEN = os.path.join(os.path.dirname(__file__), "golden", "manifest_golden.json")


def test_empty_manifest_round_trips(tmp_path):
    m = DatasetManifest(version=1, records=())
    path = tmp_path / "m.json"
    save_manifest(m, path)
    assert load_manifest(path) == m


def test_two_image_synthetic_manifest_matches_golden(tmp_path):
    manifest = synth_dataset(seed=20240101, n_images=2, size=(24, 24), out_dir=tmp_path)
    with open(tmp_path / "manifest.json", "rb") as fh:
        produced = fh.read()
    with open(GOLDEN, "rb") as fh:
        golden = fh.read()
    assert produced == golden
    assert load_manifest(tmp_path / "manifest.json") == manifest


def test_round_trip_is_canonical(tmp_path):
    manifest = synth_dataset(seed=5, n_images=2, size=(16, 16), out_dir=tmp_path)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_manifest(manifest, p1)
    save_manifest(load_manifest(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_area_mismatch_rejected(tmp_path):
    img = ImageTensor(np.zeros((4, 4, 3)))
    mask = BinaryMask(np.pad(np.ones((2, 2), bool), ((0, 2), (0, 2))))
    save_image_png(img, tmp_path / "i.png")
    save_mask_png(mask, tmp_path / "m.png")
    manifest = DatasetManifest(version=1, records=(
        ManifestRecord(id="r", image_path="i.png",
                       masks=(MaskEntry(mask_path="m.png", area_px=5),)),
    ))
    with pytest.raises(DimensionMismatchError):
        load_annotated_images(manifest, base_dir=tmp_path)


def test_parse_errors_carry_context(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ParseError, match="line"):
        load_manifest(path)
    path.write_text(json.dumps({"version": 2, "records": []}))
    with pytest.raises(ParseError, match="version"):
        load_manifest(path)
    path.write_text(json.dumps({"version": 1, "records": [{"id": "x"}]}))
    with pytest.raises(ParseError, match=r"records\[0\]"):
        load_manifest(path)


def test_missing_file_errors(tmp_path):
    with pytest.raises(MissingFileError):
        load_manifest(tmp_path / "nope.json")
    manifest = DatasetManifest(version=1, records=(
        ManifestRecord(id="r", image_path="absent.png",
                       masks=(MaskEntry(mask_path="m.png", area_px=1),)),
    ))
    with pytest.raises(MissingFileError):
        load_annotated_images(manifest, base_dir=tmp_path)
