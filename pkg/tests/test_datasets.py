"""Tests for dataset directories, references and the Middlebury client."""

import io
import zipfile
from pathlib import Path
from unittest.mock import Mock, patch

import httpx
import numpy as np
import pytest

from tests.fixtures import random_image
from tvflow.datasets import (
    FLOW_NAME,
    FRAME1_NAME,
    FRAME2_NAME,
    MiddleburyClient,
    load_dataset,
    resolve_dataset,
    resolve_datasets,
    save_dataset,
)
from tvflow.exceptions import FlowConfigError, FlowFetchError, FlowIOError
from tvflow.io import write_flo, write_image
from tvflow.types import FlowField, Image


def eight_bit_image(shape, seed=0):
    """A random image whose intensities survive 8-bit storage."""
    return Image(np.round(random_image(shape, seed).data * 255) / 255)


def archive_bytes(files: dict[str, bytes]) -> bytes:
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        for name, content in files.items():
            archive.writestr(name, content)
    return buffer.getvalue()


def response(status_code: int, content: bytes = b"") -> Mock:
    mock = Mock(spec=httpx.Response)
    mock.status_code = status_code
    mock.content = content
    return mock


@pytest.fixture
def middlebury_archives(tmp_path):
    """Small stand-ins for the frame and ground-truth archives."""
    write_image(tmp_path / "f.png", eight_bit_image((4, 5)))
    write_flo(tmp_path / "f.flo", FlowField.constant((4, 5), 1.5, -0.5))
    png = (tmp_path / "f.png").read_bytes()
    flo = (tmp_path / "f.flo").read_bytes()
    frames = archive_bytes(
        {
            f"other-data-gray/Dimetrodon/{FRAME1_NAME}": png,
            f"other-data-gray/Dimetrodon/{FRAME2_NAME}": png,
            f"other-data-gray/Venus/{FRAME1_NAME}": png,
            f"other-data-gray/Venus/{FRAME2_NAME}": png,
        }
    )
    flows = archive_bytes(
        {
            f"other-gt-flow/Dimetrodon/{FLOW_NAME}": flo,
            f"other-gt-flow/Venus/{FLOW_NAME}": flo,
        }
    )
    return {
        MiddleburyClient.FRAMES_ARCHIVE: frames,
        MiddleburyClient.FLOW_ARCHIVE: flows,
    }


class TestDatasetDirectories:
    """Tests for save_dataset() and load_dataset()."""

    def test_round_trip(self, tmp_path):
        """Test that a saved dataset loads back unchanged."""
        frame1 = eight_bit_image((6, 7), 1)
        frame2 = eight_bit_image((6, 7), 2)
        flow = FlowField.constant((6, 7), 0.25, -0.5)
        directory = save_dataset(tmp_path / "scene", frame1, flow, frame2)
        dataset = load_dataset(directory)
        assert dataset.name == "scene"
        assert np.allclose(dataset.frame1.data, frame1.data)
        assert dataset.frame2 is not None
        assert np.allclose(dataset.frame2.data, frame2.data)
        assert np.array_equal(dataset.flow.stack(), flow.stack())

    def test_second_frame_optional(self, tmp_path):
        """Test that datasets without frame11.png load with frame2 unset."""
        directory = save_dataset(tmp_path / "scene", random_image((4, 4)), FlowField.zeros((4, 4)))
        assert not (directory / FRAME2_NAME).exists()
        assert load_dataset(directory).frame2 is None

    def test_missing_directory(self, tmp_path):
        """Test that loading a missing directory raises."""
        with pytest.raises(FlowIOError):
            load_dataset(tmp_path / "missing")

    def test_missing_flow(self, tmp_path):
        """Test that the ground truth is required."""
        directory = tmp_path / "scene"
        directory.mkdir()
        write_image(directory / FRAME1_NAME, random_image((4, 4)))
        with pytest.raises(FlowIOError):
            load_dataset(directory)


class TestResolveDataset:
    """Tests for resolve_dataset() and resolve_datasets()."""

    def test_synthetic_reference(self, tmp_path):
        """Test synthetic:<name> references."""
        dataset = resolve_dataset("synthetic:rotating-disc", tmp_path, size=16, seed=1)
        assert dataset.name == "rotating-disc"
        assert dataset.frame1.shape == (16, 16)

    def test_path_reference(self, tmp_path):
        """Test references given as directory paths."""
        directory = save_dataset(tmp_path / "mine", random_image((4, 4)), FlowField.zeros((4, 4)))
        assert resolve_dataset(str(directory), Path("/nonexistent")).name == "mine"

    def test_name_under_data_dir(self, tmp_path):
        """Test references resolved under the data directory."""
        save_dataset(tmp_path / "Venus", random_image((4, 4)), FlowField.zeros((4, 4)))
        assert resolve_dataset("Venus", tmp_path).name == "Venus"

    def test_unknown_reference(self, tmp_path):
        """Test that unresolvable references raise."""
        with pytest.raises(FlowIOError) as exc_info:
            resolve_dataset("Atlantis", tmp_path)
        assert "Atlantis" in str(exc_info.value)

    def test_failures_collected(self, tmp_path):
        """Test that bad references become failures."""
        datasets, failures = resolve_datasets(
            ["synthetic:translation", "Atlantis", "synthetic:lava"], tmp_path, size=16
        )
        assert [d.name for d in datasets] == ["translation"]
        assert [(f.model_name, f.dataset_name) for f in failures] == [
            ("*", "Atlantis"),
            ("*", "synthetic:lava"),
        ]


class TestMiddleburyClient:
    """Tests for MiddleburyClient."""

    def test_init_defaults(self):
        """Test the default location and timeout."""
        client = MiddleburyClient()
        assert client.base_url == "https://vision.middlebury.edu/flow/data/comp/zip"
        assert client.timeout == 120.0

    def test_build_url(self):
        """Test URL building with a custom base URL."""
        client = MiddleburyClient(base_url="https://mirror.example/flow/")
        assert client._build_url("a.zip") == "https://mirror.example/flow/a.zip"

    def test_context_manager(self):
        """Test client as context manager."""
        with MiddleburyClient() as client:
            assert isinstance(client, MiddleburyClient)

    def test_fetch(self, tmp_path, middlebury_archives):
        """Test that sequences are unpacked into dest/<name>."""
        client = MiddleburyClient()

        def fake_get(url):
            return response(200, middlebury_archives[url.rsplit("/", 1)[1]])

        with patch.object(client._client, "get", side_effect=fake_get) as mock_get:
            written = client.fetch(["Dimetrodon"], tmp_path)

        assert written == [tmp_path / "Dimetrodon"]
        assert mock_get.call_count == 2
        dataset = load_dataset(tmp_path / "Dimetrodon")
        assert dataset.frame1.shape == (4, 5)
        assert dataset.frame2 is not None
        assert np.all(dataset.flow.v1 == 1.5)
        assert not (tmp_path / "Venus").exists()

    def test_not_found(self, tmp_path):
        """Test handling of 404 responses."""
        client = MiddleburyClient()
        with patch.object(client._client, "get", return_value=response(404)):
            with pytest.raises(FlowFetchError) as exc_info:
                client.fetch(["Venus"], tmp_path)
        assert exc_info.value.status_code == 404
        assert "not found" in str(exc_info.value)

    def test_server_error(self):
        """Test handling of other HTTP errors."""
        client = MiddleburyClient()
        with patch.object(client._client, "get", return_value=response(503)):
            with pytest.raises(FlowFetchError) as exc_info:
                client.download(MiddleburyClient.FRAMES_ARCHIVE)
        assert exc_info.value.status_code == 503
        assert "503" in str(exc_info.value)

    def test_connection_error(self):
        """Test that transport errors become fetch errors."""
        client = MiddleburyClient()
        error = httpx.ConnectError("connection refused")
        with patch.object(client._client, "get", side_effect=error):
            with pytest.raises(FlowFetchError) as exc_info:
                client.download(MiddleburyClient.FRAMES_ARCHIVE)
        assert exc_info.value.status_code is None
        assert "connection refused" in str(exc_info.value)

    def test_corrupt_archive(self):
        """Test that non-zip payloads are rejected."""
        client = MiddleburyClient()
        with patch.object(client._client, "get", return_value=response(200, b"<html>")):
            with pytest.raises(FlowFetchError) as exc_info:
                client.download(MiddleburyClient.FLOW_ARCHIVE)
        assert "zip" in str(exc_info.value)

    def test_missing_entry(self, tmp_path):
        """Test that an archive without the sequence raises."""
        client = MiddleburyClient()
        empty = response(200, archive_bytes({"other-data-gray/README": b""}))
        with patch.object(client._client, "get", return_value=empty):
            with pytest.raises(FlowFetchError) as exc_info:
                client.fetch(["Grove2"], tmp_path)
        assert "Grove2" in str(exc_info.value)

    def test_unknown_name(self, tmp_path):
        """Test that sequences without ground truth are rejected before downloading."""
        client = MiddleburyClient()
        with patch.object(client._client, "get") as mock_get:
            with pytest.raises(FlowConfigError):
                client.fetch(["Army"], tmp_path)
        mock_get.assert_not_called()
