import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segrobust.core.imageio import (
    load_image_png,
    load_mask_png,
    quantize_unit_to_u8,
    save_image_png,
    save_mask_png,
)
from segrobust.core.rng import DeterministicRng
from segrobust.core.types import (
    AnnotatedImage,
    BinaryMask,
    BoxPrompt,
    ImageTensor,
    PointPrompt,
    sample_point_in_mask,
)
from segrobust.errors import DimensionMismatchError, EmptyMaskError


def test_image_tensor_validation():
    ImageTensor(np.zeros((2, 3, 3)))
    with pytest.raises(DimensionMismatchError):
        ImageTensor(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        ImageTensor(np.full((2, 2, 3), 1.5))
    with pytest.raises(ValueError):
        ImageTensor(np.full((2, 2, 3), np.nan))


def test_mask_and_prompt_validation():
    m = BinaryMask(np.eye(3) > 0)
    assert m.area == 3
    with pytest.raises(DimensionMismatchError):
        BinaryMask(np.zeros((2, 2, 2), dtype=bool))
    PointPrompt(1, 2).check_within(3, 3)
    with pytest.raises(DimensionMismatchError):
        PointPrompt(3, 0).check_within(3, 3)
    with pytest.raises(ValueError):
        BoxPrompt(2, 0, 1, 1)
    BoxPrompt(0, 0, 2, 2).check_within(2, 2)


def test_annotated_image_rejects_empty_and_mismatched():
    img = ImageTensor(np.zeros((4, 4, 3)))
    good = BinaryMask(np.pad(np.ones((2, 2), dtype=bool), ((0, 2), (0, 2))))
    AnnotatedImage(id="a", image=img, annotations=(good,))
    with pytest.raises(EmptyMaskError):
        AnnotatedImage(id="b", image=img, annotations=(BinaryMask(np.zeros((4, 4), bool)),))
    with pytest.raises(DimensionMismatchError):
        AnnotatedImage(id="c", image=img, annotations=(BinaryMask(np.ones((3, 3), bool)),))


def test_sample_point_single_candidate():
    m = np.zeros((10, 10), dtype=bool)
    m[7, 3] = True
    for seed in (0, 1, 99):
        p = sample_point_in_mask(BinaryMask(m), DeterministicRng(seed))
        assert (p.x, p.y) == (3, 7)


def test_sample_point_full_2x2_hand_walk():
    # index = next_u64 mod 4 over row-major set pixels (0,0),(1,0),(0,1),(1,1)
    mask = BinaryMask(np.ones((2, 2), dtype=bool))
    for seed in (0, 5, 123):
        expect_idx = DeterministicRng(seed).next_u64() % 4
        expected = [(0, 0), (1, 0), (0, 1), (1, 1)][expect_idx]
        p = sample_point_in_mask(mask, DeterministicRng(seed))
        assert (p.x, p.y) == expected


def test_sample_point_two_pixel_frequencies():
    m = np.zeros((1, 4), dtype=bool)
    m[0, 1] = m[0, 3] = True
    mask = BinaryMask(m)
    rng = DeterministicRng(2024)
    hits = sum(sample_point_in_mask(mask, rng).x == 1 for _ in range(100_000))
    assert abs(hits / 100_000 - 0.5) < 0.01  # chi-square-equivalent 1% band


def test_sample_point_empty_raises():
    with pytest.raises(EmptyMaskError):
        sample_point_in_mask(BinaryMask(np.zeros((3, 3), bool)), DeterministicRng(0))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 12), st.integers(2, 12), st.integers(0, 2**31))
def test_sampled_point_is_always_set(seed, h, w, mask_bits_seed):
    bits = np.array(
        [(mask_bits_seed >> (i % 31)) & 1 for i in range(h * w)], dtype=bool
    ).reshape(h, w)
    if not bits.any():
        bits[0, 0] = True
    p = sample_point_in_mask(BinaryMask(bits), DeterministicRng(seed))
    assert bits[p.y, p.x]


def test_quantization_rounds_half_away_from_zero():
    vals = np.array([0.0, 0.5 / 255, 1.5 / 255, 1.0, 254.49 / 255, 254.5 / 255])
    assert list(quantize_unit_to_u8(vals)) == [0, 1, 2, 255, 254, 255]


def test_image_png_round_trip(tmp_path):
    data = quantize_unit_to_u8(np.linspace(0, 1, 4 * 5 * 3)).reshape(4, 5, 3) / 255.0
    img = ImageTensor(data)
    path = tmp_path / "img.png"
    save_image_png(img, path)
    back = load_image_png(path)
    assert np.array_equal(back.data, img.data)


def test_mask_png_strict_binary_and_lenient_load(tmp_path):
    m = BinaryMask(np.eye(5) > 0)
    path = tmp_path / "m.png"
    save_mask_png(m, path)
    import PIL.Image

    raw = np.asarray(PIL.Image.open(path))
    assert set(np.unique(raw)) <= {0, 255}
    # any nonzero gray must read back as set
    PIL.Image.fromarray(np.array([[0, 1], [128, 255]], dtype=np.uint8), mode="L").save(
        tmp_path / "l.png"
    )
    loaded = load_mask_png(tmp_path / "l.png")
    assert loaded.data.tolist() == [[False, True], [True, True]]
