import numpy as np
import pytest
from PIL import Image

from fsadkit.data import preprocess as pp
from fsadkit.errors import DecodeError

from oracles import bilinear_resize


def test_constant_image_stays_constant():
    raw = np.full((10, 14, 3), 128, dtype=np.uint8)
    out = pp.preprocess(raw, resolution=16)
    assert out.shape == (3, 16, 16)
    assert np.allclose(out, 128 / 255.0, atol=1e-7)


def test_default_resolution_is_224():
    raw = np.zeros((8, 8, 3), dtype=np.uint8)
    assert pp.preprocess(raw).shape == (3, 224, 224)
    assert pp.DEFAULT_RESOLUTION == 224


def test_bilinear_upsample_matches_closed_form_oracle():
    src = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.float32)
    got = pp.resize_bilinear(src, 4, 4)
    expected = bilinear_resize(src.astype(np.float64), 4, 4)
    assert np.allclose(got, expected, atol=1e-6)


def test_bilinear_oracle_on_random_sizes():
    rng = np.random.default_rng(3)
    src = rng.random((5, 7)).astype(np.float32)
    got = pp.resize_bilinear(src, 11, 9)
    expected = bilinear_resize(src.astype(np.float64), 11, 9)
    assert np.allclose(got, expected, atol=1e-6)


def test_preprocess_idempotent_at_target_resolution():
    rng = np.random.default_rng(0)
    raw = rng.random((16, 16, 3)).astype(np.float32)
    once = pp.preprocess(raw, resolution=16)
    twice = pp.preprocess(once.transpose(1, 2, 0), resolution=16)
    assert np.abs(once - twice).max() <= 1e-6


def test_grayscale_replicated_to_three_channels():
    raw = np.arange(64, dtype=np.uint8).reshape(8, 8)
    out = pp.preprocess(raw, resolution=8)
    assert out.shape == (3, 8, 8)
    assert np.array_equal(out[0], out[1]) and np.array_equal(out[1], out[2])


def test_undecodable_file_raises(tmp_path):
    bad = tmp_path / "junk.png"
    bad.write_bytes(b"this is not a png")
    with pytest.raises(DecodeError):
        pp.load_image(str(bad))


def test_load_mask_binary_after_nearest_resize(tmp_path):
    mask = np.zeros((20, 20), dtype=np.uint8)
    mask[5:12, 6:15] = 255
    path = tmp_path / "m.png"
    Image.fromarray(mask).save(path)
    out = pp.load_mask(str(path), 32)
    assert out.dtype == bool and out.shape == (32, 32)
    assert set(np.unique(out)) <= {False, True}
    assert out.any() and not out.all()


def test_standardization_constants():
    raw = np.full((8, 8, 3), 255, dtype=np.uint8)
    out = pp.preprocess(raw, resolution=8, standardize=True)
    expected = (1.0 - pp.CHANNEL_MEAN) / pp.CHANNEL_STD
    assert np.allclose(out[:, 0, 0], expected, atol=1e-6)
