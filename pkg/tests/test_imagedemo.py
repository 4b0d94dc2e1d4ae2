"""Tests for segmul.imagedemo: PGM codec, pixel squaring and SSIM/PSNR."""

import json
import math

import numpy as np
from PIL import Image, ImageFile
import pytest

from segmul import (
    ConfigError,
    GrayImage,
    ImageFormatError,
    MultiplierConfig,
    Operand,
    load_pgm,
    mul_approx_sequential,
    save_pgm,
    score,
    square_image,
)
from segmul.imagedemo import load_pgm16, run_demo, square_exact, synthetic_image


def _write(path, data):
    path.write_bytes(data)
    return path


@pytest.fixture
def tiny_pgm(tmp_path):
    return _write(tmp_path / "tiny.pgm", b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))


@pytest.fixture
def ramp():
    return GrayImage.from_array(np.arange(256, dtype=np.uint8).reshape(16, 16))


# ── PGM codec ───────────────────────────────────────────────────────────────

class TestPgm:
    def test_load(self, tiny_pgm):
        img = load_pgm(tiny_pgm)
        assert (img.width, img.height) == (2, 2)
        assert img.pixels.tolist() == [[0, 255], [128, 64]]

    def test_round_trip(self, tiny_pgm, tmp_path):
        img = load_pgm(tiny_pgm)
        out = tmp_path / "copy.pgm"
        save_pgm(img, out)
        assert load_pgm(out) == img
        assert out.read_bytes() == tiny_pgm.read_bytes()

    def test_header_comment(self, tmp_path):
        path = _write(tmp_path / "c.pgm", b"P5\n# made by hand\n2 1\n255\n\x07\x09")
        assert load_pgm(path).pixels.tolist() == [[7, 9]]

    def test_ascii_pgm_rejected(self, tmp_path):
        path = _write(tmp_path / "a.pgm", b"P2\n2 2\n255\n0 255 128 64\n")
        with pytest.raises(ImageFormatError):
            load_pgm(path)

    def test_maxval_rejected(self, tmp_path):
        path = _write(tmp_path / "m.pgm", b"P5\n2 2\n100\n" + bytes(4))
        with pytest.raises(ImageFormatError):
            load_pgm(path)

    def test_truncated_payload(self, tmp_path):
        path = _write(tmp_path / "t.pgm", b"P5\n2 2\n255\n" + bytes(3))
        with pytest.raises(ImageFormatError):
            load_pgm(path)

    def test_malformed_header(self, tmp_path):
        path = _write(tmp_path / "h.pgm", b"P5\n2 x\n255\n" + bytes(4))
        with pytest.raises(ImageFormatError):
            load_pgm(path)

    def test_sixteen_bit_round_trip(self, tmp_path):
        plane = np.array([[0, 1], [256, 65535]], dtype=np.uint16)
        path = tmp_path / "p16.pgm"
        save_pgm(plane, path)
        assert path.read_bytes().startswith(b"P5\n2 2\n65535\n\x00\x00\x00\x01\x01\x00")
        assert np.array_equal(load_pgm16(path), plane)

    def test_sixteen_bit_rejected_as_eight_bit(self, tmp_path):
        path = tmp_path / "p16.pgm"
        save_pgm(np.zeros((2, 2), dtype=np.uint16), path)
        with pytest.raises(ImageFormatError):
            load_pgm(path)

    def test_truncated_sixteen_bit_payload(self, tmp_path):
        path = _write(tmp_path / "t16.pgm", b"P5\n2 2\n65535\n" + bytes(7))
        with pytest.raises(ImageFormatError):
            load_pgm16(path)

    def test_truncation_checked_even_when_pillow_tolerates_it(self, tmp_path, monkeypatch):
        monkeypatch.setattr(ImageFile, "LOAD_TRUNCATED_IMAGES", True)
        path = _write(tmp_path / "t.pgm", b"P5\n2 2\n255\n" + bytes(3))
        with pytest.raises(ImageFormatError):
            load_pgm(path)

    def test_reads_pillow_written_file(self, tmp_path):
        pixels = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
        path = tmp_path / "pil.pgm"
        Image.fromarray(pixels).save(path, format="PPM")
        assert np.array_equal(load_pgm(path).pixels, pixels)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_pgm(tmp_path / "none.pgm")

    def test_bad_dtype(self, tmp_path):
        with pytest.raises(ImageFormatError):
            save_pgm(np.zeros((2, 2), dtype=np.float64), tmp_path / "f.pgm")

    def test_gray_image_validation(self):
        with pytest.raises(ImageFormatError):
            GrayImage(3, 2, np.zeros((2, 2)))
        with pytest.raises(ImageFormatError):
            GrayImage.from_array(np.full((2, 2), 300))
        with pytest.raises(ImageFormatError):
            GrayImage.from_array(np.zeros(4))


# ── Squaring ────────────────────────────────────────────────────────────────

class TestSquaring:
    def test_matches_scalar_multiplier(self, ramp):
        cfg = MultiplierConfig(n=8, t=4)
        squared = square_image(ramp, cfg)
        for v in (0, 1, 17, 128, 200, 255):
            row, col = divmod(v, 16)
            expected = mul_approx_sequential(Operand(v, 8), Operand(v, 8), cfg).value
            assert int(squared.product[row, col]) == expected

    def test_accurate_mode(self, ramp):
        squared = square_image(ramp, MultiplierConfig(n=8, t=4, segmented=False))
        assert np.array_equal(squared.product, square_exact(ramp))
        assert int(squared.product[15, 15]) == 65025
        assert squared.display.pixels[15, 15] == 65025 >> 8

    def test_fix_setting_changes_planes(self, ramp):
        on = square_image(ramp, MultiplierConfig(n=8, t=4, fix_to_1=True))
        off = square_image(ramp, MultiplierConfig(n=8, t=4, fix_to_1=False))
        assert not np.array_equal(on.product, off.product)

    def test_width_must_be_eight(self, ramp):
        with pytest.raises(ConfigError):
            square_image(ramp, MultiplierConfig(n=6, t=3))


# ── Scoring ─────────────────────────────────────────────────────────────────

class TestScore:
    def test_identical(self, ramp):
        plane = square_exact(ramp)
        result = score(plane, plane)
        assert result.ssim == pytest.approx(1.0)
        assert math.isinf(result.psnr)
        assert result.to_dict()["psnr"] == "inf"

    def test_unit_offset(self, ramp):
        plane = square_exact(ramp).astype(np.int64)
        result = score(plane, plane + 1)
        assert result.psnr == pytest.approx(96.3294, abs=1e-3)
        assert 0.99 < result.ssim <= 1.0

    def test_full_size_image_in_quality_band(self):
        img = synthetic_image(512, 512)
        exact = square_exact(img)
        on = score(exact, square_image(img, MultiplierConfig(n=8, t=4)).product)
        off = score(exact, square_image(img, MultiplierConfig(n=8, t=4, fix_to_1=False)).product)
        assert 35.0 <= on.psnr <= 48.0
        assert on.psnr != off.psnr
        assert 0.0 < on.ssim < 1.0

    def test_small_plane(self):
        plane = np.array([[1, 2], [3, 4]])
        assert score(plane, plane).ssim == pytest.approx(1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ImageFormatError):
            score(np.zeros((2, 2)), np.zeros((2, 3)))


# ── Demo driver ─────────────────────────────────────────────────────────────

class TestRunDemo:
    def test_writes_outputs(self, tmp_path):
        img = synthetic_image(32, 24, seed=3)
        prefix = tmp_path / "demo"
        result = run_demo(img, MultiplierConfig(n=8, t=4), prefix)
        assert sorted(p.name for p in tmp_path.iterdir()) == [
            "demo_approx16.pgm", "demo_display.pgm", "demo_exact16.pgm", "demo_score.json"]
        assert np.array_equal(load_pgm16(result.paths["exact16"]), square_exact(img))
        assert load_pgm(result.paths["display"]).width == 32
        saved = json.loads((tmp_path / "demo_score.json").read_text())
        assert saved["config"]["t"] == 4
        assert "opposite_fix_score" in saved

    def test_synthetic_image_is_deterministic(self):
        assert synthetic_image(16, 16, seed=1) == synthetic_image(16, 16, seed=1)
