"""
Image-squaring demo: every pixel of an 8-bit grayscale image is multiplied
by itself on the approximate multiplier, and the 16-bit result is scored
against the exact squares with SSIM and PSNR.

Only binary PGM (P5) is read and written, through Pillow's PPM plugin.
"""

from dataclasses import dataclass
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import datapath
from .core import MultiplierConfig
from .errors import ConfigError, ImageFormatError

logger = logging.getLogger(__name__)

SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03
PEAK_16 = 65535
DEMO_WIDTH = 8


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale image, pixels row-major with shape (height, width)."""
    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.shape != (self.height, self.width):
            raise ImageFormatError(
                f"pixel array {pixels.shape} does not match {self.height}x{self.width}")
        if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
            raise ImageFormatError("pixels must lie in [0, 255]")
        object.__setattr__(self, "pixels", pixels.astype(np.uint8))

    @classmethod
    def from_array(cls, pixels: Any) -> "GrayImage":
        arr = np.asarray(pixels)
        if arr.ndim != 2:
            raise ImageFormatError(f"expected a 2-D array, got {arr.ndim}-D")
        return cls(arr.shape[1], arr.shape[0], arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and \
            bool(np.array_equal(self.pixels, other.pixels))


@dataclass(frozen=True)
class QualityScore:
    """SSIM in [-1, 1] and PSNR in dB (inf for identical planes)."""
    ssim: float
    psnr: float

    def to_dict(self) -> Dict[str, Any]:
        return {"ssim": self.ssim, "psnr": "inf" if math.isinf(self.psnr) else self.psnr}


@dataclass(frozen=True, eq=False)
class SquaredImage:
    """16-bit product plane and its high-byte display plane."""
    product: np.ndarray
    display: GrayImage


# ── PGM codec ───────────────────────────────────────────────────────────────

def _open_pgm(path: Union[str, Path]) -> Tuple[Image.Image, str, int]:
    """Open a binary PGM; returns the image, its raw tile mode and payload size."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (magic {data[:2]!r})")
    try:
        im = Image.open(io.BytesIO(data), formats=["PPM"])
    except (UnidentifiedImageError, ValueError) as e:
        raise ImageFormatError(f"{path}: malformed header ({e})") from None
    codec, _, offset, args = im.tile[0]
    rawmode = args[0] if isinstance(args, tuple) else args
    # Pillow rescales any maxval other than 255 and 65535 through its "ppm" decoder.
    if codec != "raw":
        rawmode = ""
    return im, rawmode, len(data) - offset


def _read_plane(path: Union[str, Path], rawmode: str, maxval: int, depth: int) -> np.ndarray:
    im, found, available = _open_pgm(path)
    if found != rawmode:
        raise ImageFormatError(f"{path}: unsupported maxval, need {maxval}")
    width, height = im.size
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: empty image {width}x{height}")
    size = depth * width * height
    if available < size:
        raise ImageFormatError(f"{path}: truncated payload ({available} of {size} bytes)")
    try:
        im.load()
    except OSError as e:
        raise ImageFormatError(f"{path}: {e}") from e
    return np.asarray(im)


def load_pgm(path: Union[str, Path]) -> GrayImage:
    """Read an 8-bit binary PGM."""
    return GrayImage.from_array(_read_plane(path, "L", 255, 1))


def load_pgm16(path: Union[str, Path]) -> np.ndarray:
    """Read a 16-bit (maxval 65535, big-endian) binary PGM as a uint16 plane."""
    return _read_plane(path, "I;16B", PEAK_16, 2).astype(np.uint16)


def save_pgm(img: Union[GrayImage, np.ndarray], path: Union[str, Path]) -> None:
    """
    Write a binary PGM.

    A GrayImage (or uint8 array) is written with maxval 255, a uint16 array
    with maxval 65535 in big-endian byte order.
    """
    if isinstance(img, GrayImage):
        plane = img.pixels
    else:
        plane = np.asarray(img)
    if plane.ndim != 2:
        raise ImageFormatError(f"expected a 2-D plane, got {plane.ndim}-D")
    if plane.dtype == np.uint16:
        plane = plane.astype("<u2", copy=False)
    elif plane.dtype != np.uint8:
        raise ImageFormatError(f"unsupported plane dtype {plane.dtype}")
    Image.fromarray(np.ascontiguousarray(plane)).save(path, format="PPM")


def synthetic_image(width: int = 512, height: int = 512, seed: int = 0) -> GrayImage:
    """Deterministic test pattern: gradients, rings and a little noise."""
    rng = np.random.Generator(np.random.PCG64(seed))
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    r = np.hypot(x - width / 2.0, y - height / 2.0)
    base = 96.0 * x / max(1, width - 1) + 64.0 * y / max(1, height - 1)
    rings = 48.0 * (1.0 + np.sin(r / 6.0))
    noise = rng.normal(0.0, 8.0, size=(height, width))
    pixels = np.clip(np.rint(base + rings + noise), 0, 255).astype(np.uint8)
    return GrayImage(width, height, pixels)


# ── Squaring and scoring ────────────────────────────────────────────────────

def square_exact(img: GrayImage) -> np.ndarray:
    v = img.pixels.astype(np.int64)
    return (v * v).astype(np.uint16)


def square_image(img: GrayImage, cfg: MultiplierConfig) -> SquaredImage:
    """Square every pixel on the configured 8-bit multiplier."""
    if cfg.n != DEMO_WIDTH:
        raise ConfigError(f"image squaring needs n={DEMO_WIDTH}, got n={cfg.n}")
    v = img.pixels.astype(np.int64).ravel()
    products = datapath.run(v, v, cfg.n, cfg.split, cfg.fix_to_1).product
    plane = products.reshape(img.height, img.width).astype(np.uint16)
    display = GrayImage(img.width, img.height, (plane >> 8).astype(np.uint8))
    return SquaredImage(product=plane, display=display)


def _windows(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    k = SSIM_WINDOW
    if h < k or w < k:
        return plane.reshape(1, -1)
    h8, w8 = (h // k) * k, (w // k) * k
    cropped = plane[:h8, :w8]
    return cropped.reshape(h8 // k, k, w8 // k, k).transpose(0, 2, 1, 3).reshape(-1, k * k)


def ssim(reference: np.ndarray, test: np.ndarray, peak: int = PEAK_16) -> float:
    """Mean SSIM over non-overlapping SSIM_WINDOW x SSIM_WINDOW windows."""
    x = _windows(np.asarray(reference, dtype=np.float64))
    y = _windows(np.asarray(test, dtype=np.float64))
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mx, my = x.mean(axis=1), y.mean(axis=1)
    dx, dy = x - mx[:, None], y - my[:, None]
    vx, vy = (dx * dx).mean(axis=1), (dy * dy).mean(axis=1)
    cov = (dx * dy).mean(axis=1)
    num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def psnr(reference: np.ndarray, test: np.ndarray, peak: int = PEAK_16) -> float:
    diff = np.asarray(reference, dtype=np.float64) - np.asarray(test, dtype=np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def score(reference: np.ndarray, test: np.ndarray) -> QualityScore:
    """SSIM and PSNR of a 16-bit plane against the reference plane."""
    reference, test = np.asarray(reference), np.asarray(test)
    if reference.shape != test.shape:
        raise ImageFormatError(f"plane shapes differ: {reference.shape} != {test.shape}")
    return QualityScore(ssim=ssim(reference, test), psnr=psnr(reference, test))


# ── Demo driver ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class DemoResult:
    """Scores for the chosen fix-to-1 setting and its opposite, plus written files."""
    config: MultiplierConfig
    score: QualityScore
    opposite_score: QualityScore
    paths: Dict[str, str]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "score": self.score.to_dict(),
            "opposite_fix_score": self.opposite_score.to_dict(),
            "files": dict(self.paths),
        }


def run_demo(img: GrayImage, cfg: MultiplierConfig, out_prefix: Union[str, Path]) -> DemoResult:
    """
    Square img, score it, and write the planes and a JSON score file.

    Files: <prefix>_approx16.pgm, <prefix>_exact16.pgm, <prefix>_display.pgm
    and <prefix>_score.json.
    """
    prefix = str(out_prefix)
    exact = square_exact(img)
    squared = square_image(img, cfg)
    opposite = MultiplierConfig(cfg.n, cfg.t, not cfg.fix_to_1, cfg.segmented)
    result = DemoResult(
        config=cfg,
        score=score(exact, squared.product),
        opposite_score=score(exact, square_image(img, opposite).product),
        paths={
            "approx16": f"{prefix}_approx16.pgm",
            "exact16": f"{prefix}_exact16.pgm",
            "display": f"{prefix}_display.pgm",
            "score": f"{prefix}_score.json",
        },
    )
    save_pgm(squared.product, result.paths["approx16"])
    save_pgm(exact, result.paths["exact16"])
    save_pgm(squared.display, result.paths["display"])
    Path(result.paths["score"]).write_text(
        json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info("image demo %s: ssim=%.4f psnr=%.2f dB", cfg.label,
                result.score.ssim, result.score.psnr)
    return result
