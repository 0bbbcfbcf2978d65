"""Reading and writing images, Middlebury ``.flo`` files, colour renderings and CSV reports.

All writers go through a temporary file in the target directory that is
renamed into place, so a failed write never leaves a partial file behind.
"""

import csv
import os
import tempfile
from collections.abc import Iterable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any

import numpy as np
from matplotlib.colors import hsv_to_rgb
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from tvflow.exceptions import FlowFormatError, FlowIOError
from tvflow.types import ErrorReport, FlowField, Image

FLO_MAGIC = 202021.25
# Middlebury ground truths store unknown flow as 1e10; anything this large is unknown.
FLO_UNKNOWN_THRESHOLD = 1e9
FLO_HEADER_BYTES = 12

LUMINANCE_WEIGHTS = (0.299, 0.587, 0.114)
REPORT_COLUMNS = ("model", "dataset", "alpha", "alpha1", "iterations", "AEE", "AE")

_EIGHT_BIT_MODES = {"1", "L", "LA"}
_COLOUR_MODES = {"P", "PA", "RGB", "RGBA", "RGBX", "CMYK", "YCbCr"}
_SIXTEEN_BIT_MODES = {"I;16", "I;16B", "I;16L", "I;16N", "I"}


@contextmanager
def atomic_write(path: str | Path, mode: str = "wb", **kwargs: Any) -> Iterator[IO[Any]]:
    """Open a temporary sibling of ``path`` and move it into place on success.

    Raises:
        FlowIOError: If the directory is not writable
    """
    target = Path(path)
    try:
        fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    except OSError as e:
        raise FlowIOError(f"Cannot write {target}: {e.strerror or e}") from e

    try:
        with os.fdopen(fd, mode, **kwargs) as handle:
            yield handle
        os.replace(tmp_name, target)
    except BaseException as e:
        Path(tmp_name).unlink(missing_ok=True)
        if isinstance(e, OSError):
            raise FlowIOError(f"Cannot write {target}: {e.strerror or e}") from e
        raise


def _read_bytes(path: str | Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise FlowIOError(f"Cannot read {path}: {e.strerror or e}") from e


def read_flo(path: str | Path) -> FlowField:
    """Read a Middlebury ``.flo`` file.

    Pixels whose components reach the unknown-flow threshold (or are not
    finite) are marked invalid; their raw values are kept.

    Args:
        path: File to read

    Returns:
        The flow field

    Raises:
        FlowIOError: If the file cannot be read
        FlowFormatError: On a bad magic number, bad dimensions or a payload
            of the wrong length
    """
    raw = _read_bytes(path)
    if len(raw) < FLO_HEADER_BYTES:
        raise FlowFormatError(f"{path}: truncated header ({len(raw)} bytes)")

    magic = float(np.frombuffer(raw, dtype="<f4", count=1)[0])
    if magic != FLO_MAGIC:
        raise FlowFormatError(f"{path}: bad magic number {magic!r}, expected {FLO_MAGIC}")
    width, height = (int(n) for n in np.frombuffer(raw, dtype="<i4", count=2, offset=4))
    if width < 1 or height < 1:
        raise FlowFormatError(f"{path}: invalid dimensions {width}x{height}")

    expected = FLO_HEADER_BYTES + width * height * 2 * 4
    if len(raw) != expected:
        raise FlowFormatError(
            f"{path}: payload is {len(raw) - FLO_HEADER_BYTES} bytes, "
            f"expected {expected - FLO_HEADER_BYTES}"
        )
    data = np.frombuffer(raw, dtype="<f4", count=width * height * 2, offset=FLO_HEADER_BYTES)
    data = data.reshape(height, width, 2).astype(np.float64)
    u, v = data[..., 0], data[..., 1]
    with np.errstate(invalid="ignore"):
        valid = (
            np.isfinite(u)
            & np.isfinite(v)
            & (np.abs(u) < FLO_UNKNOWN_THRESHOLD)
            & (np.abs(v) < FLO_UNKNOWN_THRESHOLD)
        )
    return FlowField(u, v, valid)


def write_flo(path: str | Path, flow: FlowField) -> None:
    """Write a flow field as a little-endian ``.flo`` file (float32 payload)."""
    header = np.array([FLO_MAGIC], dtype="<f4").tobytes()
    header += np.array([flow.width, flow.height], dtype="<i4").tobytes()
    payload = np.stack([flow.v1, flow.v2], axis=-1).astype("<f4").tobytes()
    with atomic_write(path) as handle:
        handle.write(header)
        handle.write(payload)


def read_image(path: str | Path) -> Image:
    """Read a grayscale or colour image as intensities in ``[0, 1]``.

    Colour images are reduced to luminance ``0.299R + 0.587G + 0.114B``.
    8-bit data is divided by 255 and 16-bit data by 65535.

    Raises:
        FlowIOError: If the file cannot be read
        FlowFormatError: For unsupported formats or modes and images smaller
            than 2x2
    """
    if not Path(path).is_file():
        raise FlowIOError(f"Cannot read {path}: no such file")
    try:
        with PILImage.open(path) as img:
            img.load()
            mode = img.mode
            if mode in _SIXTEEN_BIT_MODES:
                data = np.asarray(img, dtype=np.float64) / 65535.0
            elif mode in _EIGHT_BIT_MODES:
                data = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
            elif mode in _COLOUR_MODES:
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
                r, g, b = LUMINANCE_WEIGHTS
                data = (r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]) / 255.0
            else:
                raise FlowFormatError(f"{path}: unsupported image mode {mode}")
    except UnidentifiedImageError as e:
        raise FlowFormatError(f"{path}: unsupported image format") from e
    except OSError as e:
        raise FlowIOError(f"Cannot read {path}: {e}") from e

    if data.ndim != 2 or min(data.shape) < 2:
        raise FlowFormatError(f"{path}: image must be at least 2x2, got shape {data.shape}")
    return Image(np.clip(data, 0.0, 1.0))


def _pil_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    fmt = PILImage.registered_extensions().get(suffix)
    if fmt is None:
        raise FlowFormatError(f"{path}: unknown image extension {suffix!r}")
    return fmt


def write_image(path: str | Path, image: Image, bits: int = 8) -> None:
    """Write intensities in ``[0, 1]`` as an 8- or 16-bit grayscale image."""
    if bits not in (8, 16):
        raise FlowFormatError(f"unsupported bit depth {bits}")
    fmt = _pil_format(path)
    scale, dtype = (255.0, np.uint8) if bits == 8 else (65535.0, np.uint16)
    levels = np.rint(np.clip(image.data, 0.0, 1.0) * scale).astype(dtype)
    with atomic_write(path) as handle:
        PILImage.fromarray(levels).save(handle, format=fmt)


def flow_to_color(v: FlowField, max_magnitude: float | None = None) -> np.ndarray:
    """Render a flow field on the colour wheel.

    Hue encodes direction, saturation the magnitude relative to
    ``max_magnitude`` (the 99th percentile of valid magnitudes when omitted,
    or their maximum when fewer than 1% of the pixels move),
    clamped at full saturation. Zero flow is white and invalid pixels are
    black.

    Args:
        v: Flow to render
        max_magnitude: Magnitude rendered at full saturation

    Returns:
        ``(H, W, 3)`` uint8 RGB array
    """
    valid = v.mask
    v1 = np.where(valid, v.v1, 0.0)
    v2 = np.where(valid, v.v2, 0.0)
    magnitude = np.hypot(v1, v2)
    if max_magnitude is None:
        values = magnitude[valid]
        max_magnitude = float(np.percentile(values, 99)) if values.size else 0.0
        # Sparse motion: fewer than 1% of the pixels move.
        if max_magnitude == 0.0 and values.size:
            max_magnitude = float(values.max())

    hue = np.mod(np.arctan2(v2, v1) / (2.0 * np.pi), 1.0)
    if max_magnitude > 0:
        saturation = np.clip(magnitude / max_magnitude, 0.0, 1.0)
    else:
        saturation = np.zeros_like(magnitude)
    value = np.where(valid, 1.0, 0.0)
    rgb = hsv_to_rgb(np.stack([hue, saturation, value], axis=-1))
    return np.rint(rgb * 255.0).astype(np.uint8)


def write_color_png(path: str | Path, v: FlowField, max_magnitude: float | None = None) -> None:
    """Render a flow field and save it as an RGB image."""
    fmt = _pil_format(path)
    rgb = flow_to_color(v, max_magnitude)
    with atomic_write(path) as handle:
        PILImage.fromarray(rgb).save(handle, format=fmt)


def _format_float(value: float) -> str:
    return format(value, ".10g")


def write_report_csv(path: str | Path, reports: Iterable[ErrorReport]) -> None:
    """Write one CSV row per report, sorted by model then dataset."""
    rows = sorted(reports, key=lambda r: (r.model_name, r.dataset_name))
    with atomic_write(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(REPORT_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.model_name,
                    r.dataset_name,
                    _format_float(r.alpha),
                    _format_float(r.alpha1),
                    r.iterations,
                    _format_float(r.aee),
                    _format_float(r.ae),
                ]
            )
