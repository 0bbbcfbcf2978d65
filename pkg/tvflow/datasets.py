"""Dataset directories, dataset references and the Middlebury download."""

import io
import logging
import zipfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import httpx

from tvflow.exceptions import FlowConfigError, FlowError, FlowFetchError, FlowIOError
from tvflow.io import read_flo, read_image, write_flo, write_image
from tvflow.synth import make_synthetic
from tvflow.types import BenchmarkFailure, Dataset, FlowField, Image

logger = logging.getLogger(__name__)

FRAME1_NAME = "frame10.png"
FRAME2_NAME = "frame11.png"
FLOW_NAME = "flow10.flo"
SYNTHETIC_PREFIX = "synthetic:"

# Middlebury "other" sequences that come with public ground truth.
MIDDLEBURY_DATASETS = (
    "Dimetrodon",
    "Grove2",
    "Grove3",
    "Hydrangea",
    "RubberWhale",
    "Urban2",
    "Urban3",
    "Venus",
)


def save_dataset(
    directory: str | Path,
    frame1: Image,
    flow: FlowField,
    frame2: Image | None = None,
    bits: int = 8,
) -> Path:
    """Write a dataset directory with ``frame10.png``, ``frame11.png`` and ``flow10.flo``.

    Frames are stored as 8-bit PNGs like the Middlebury data unless ``bits`` is 16.

    Returns:
        The dataset directory

    Raises:
        FlowIOError: If the directory cannot be created or written
    """
    target = Path(directory)
    try:
        target.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise FlowIOError(f"Cannot create {target}: {e.strerror or e}") from e
    write_image(target / FRAME1_NAME, frame1, bits)
    if frame2 is not None:
        write_image(target / FRAME2_NAME, frame2, bits)
    write_flo(target / FLOW_NAME, flow)
    return target


def load_dataset(directory: str | Path) -> Dataset:
    """Load a dataset directory; the second frame is optional.

    Raises:
        FlowIOError: If the directory or a required file is missing
    """
    source = Path(directory)
    if not source.is_dir():
        raise FlowIOError(f"Cannot read {source}: not a directory")
    frame2_path = source / FRAME2_NAME
    return Dataset(
        name=source.name,
        frame1=read_image(source / FRAME1_NAME),
        flow=read_flo(source / FLOW_NAME),
        frame2=read_image(frame2_path) if frame2_path.exists() else None,
    )


def resolve_dataset(ref: str, data_dir: Path, size: int = 64, seed: int = 0) -> Dataset:
    """Turn a dataset reference into a dataset.

    A reference is ``synthetic:<name>``, a directory path, or the name of a
    directory under ``data_dir``.

    Raises:
        FlowConfigError: For unknown synthetic names
        FlowIOError: If no matching directory exists
    """
    if ref.startswith(SYNTHETIC_PREFIX):
        return make_synthetic(ref[len(SYNTHETIC_PREFIX) :], size=size, seed=seed)
    path = Path(ref).expanduser()
    if path.is_dir():
        return load_dataset(path)
    candidate = data_dir / ref
    if candidate.is_dir():
        return load_dataset(candidate)
    raise FlowIOError(f"Dataset '{ref}' not found as a path or under {data_dir}")


def resolve_datasets(
    refs: Iterable[str], data_dir: Path, size: int = 64, seed: int = 0
) -> tuple[list[Dataset], list[BenchmarkFailure]]:
    """Resolve several references, collecting failures instead of stopping."""
    datasets: list[Dataset] = []
    failures: list[BenchmarkFailure] = []
    for ref in refs:
        try:
            datasets.append(resolve_dataset(ref, data_dir, size, seed))
        except FlowError as e:
            logger.warning("dataset %s skipped: %s", ref, e.message)
            failures.append(BenchmarkFailure("*", ref, e.message))
    return datasets, failures


class MiddleburyClient:
    """Downloads the public Middlebury two-frame sequences with ground truth.

    Example:
        >>> with MiddleburyClient() as client:
        ...     client.fetch(["Dimetrodon"], Path("~/.tvflow/datasets").expanduser())
    """

    BASE_URL = "https://vision.middlebury.edu/flow/data/comp/zip"
    FRAMES_ARCHIVE = "other-gray-twoframes.zip"
    FLOW_ARCHIVE = "other-gt-flow.zip"

    def __init__(self, base_url: str | None = None, timeout: float = 120.0) -> None:
        """Initialize the client.

        Args:
            base_url: Archive location (defaults to the Middlebury server)
            timeout: Request timeout in seconds
        """
        self.base_url = (base_url or self.BASE_URL).rstrip("/")
        self.timeout = timeout
        self._client = httpx.Client(timeout=timeout, follow_redirects=True)

    def __enter__(self) -> "MiddleburyClient":
        """Context manager entry."""
        return self

    def __exit__(self, *args: Any) -> None:
        """Context manager exit."""
        self.close()

    def close(self) -> None:
        """Close the HTTP client."""
        self._client.close()

    def _build_url(self, archive: str) -> str:
        return f"{self.base_url}/{archive}"

    def _handle_response(self, response: httpx.Response, url: str) -> bytes:
        if response.status_code == 200:
            return response.content
        if response.status_code == 404:
            raise FlowFetchError(f"Archive not found: {url}", response.status_code)
        raise FlowFetchError(
            f"Download failed ({response.status_code}): {url}",
            response.status_code,
        )

    def download(self, archive: str) -> zipfile.ZipFile:
        """Download one archive and open it in memory.

        Raises:
            FlowFetchError: On HTTP errors, connection failures or corrupt archives
        """
        url = self._build_url(archive)
        logger.info("downloading %s", url)
        try:
            response = self._client.get(url)
        except httpx.HTTPError as e:
            raise FlowFetchError(f"Download failed: {url}: {e}") from e
        payload = self._handle_response(response, url)
        try:
            return zipfile.ZipFile(io.BytesIO(payload))
        except zipfile.BadZipFile as e:
            raise FlowFetchError(f"{url} is not a valid zip archive") from e

    @staticmethod
    def _extract(archive: zipfile.ZipFile, name: str, filename: str, dest: Path) -> None:
        suffix = f"{name}/{filename}"
        for entry in archive.namelist():
            if entry == suffix or entry.endswith("/" + suffix):
                try:
                    (dest / filename).write_bytes(archive.read(entry))
                except OSError as e:
                    raise FlowIOError(f"Cannot write {dest / filename}: {e.strerror or e}") from e
                return
        raise FlowFetchError(f"{filename} for {name} is missing from the archive")

    def fetch(self, names: Sequence[str], dest: Path) -> list[Path]:
        """Download and unpack the named sequences into ``dest/<name>``.

        Args:
            names: Sequence names, a subset of ``MIDDLEBURY_DATASETS``
            dest: Data directory

        Returns:
            The dataset directories that were written

        Raises:
            FlowConfigError: For names without public ground truth
            FlowFetchError: If a download fails
            FlowIOError: If the files cannot be written
        """
        unknown = [name for name in names if name not in MIDDLEBURY_DATASETS]
        if unknown:
            raise FlowConfigError(
                f"No ground truth available for {', '.join(unknown)}. "
                f"Available: {', '.join(MIDDLEBURY_DATASETS)}"
            )
        frames = self.download(self.FRAMES_ARCHIVE)
        flows = self.download(self.FLOW_ARCHIVE)

        written = []
        for name in names:
            target = dest / name
            try:
                target.mkdir(parents=True, exist_ok=True)
            except OSError as e:
                raise FlowIOError(f"Cannot create {target}: {e.strerror or e}") from e
            self._extract(frames, name, FRAME1_NAME, target)
            self._extract(frames, name, FRAME2_NAME, target)
            self._extract(flows, name, FLOW_NAME, target)
            logger.info("unpacked %s into %s", name, target)
            written.append(target)
        return written
