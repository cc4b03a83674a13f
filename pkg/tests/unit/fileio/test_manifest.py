"""Unit tests for fileio/manifest.py"""
import json

import pytest

from ssidepth.errors import ManifestError
from ssidepth.fileio.manifest import read_manifest, write_manifest


def _touch(tmp_path, *names):
    for n in names:
        (tmp_path / n).touch()


def test_read_manifest_keeps_order(tmp_path):
    """Items come back in file order."""
    _touch(tmp_path, "a.pfm", "b.pfm", "c.pfm")
    m = tmp_path / "m.json"
    m.write_text(json.dumps([{"pred": "a.pfm", "gt": "b.pfm"}, {"pred": "c.pfm", "gt": "a.pfm"}]))
    items = read_manifest(m)
    assert [i.pred.name for i in items] == ["a.pfm", "c.pfm"]


def test_write_then_read(tmp_path):
    """A written manifest reads back to the same items."""
    _touch(tmp_path, "a.pfm", "b.pfm")
    m = tmp_path / "m.json"
    m.write_text(json.dumps([{"pred": "a.pfm", "gt": "b.pfm", "mask": "a.pfm"}]))
    items = read_manifest(m)
    again = read_manifest(write_manifest(tmp_path / "copy.json", items))
    assert again == items


@pytest.mark.parametrize("content,needle", [
    ("{not json", "malformed JSON"),
    ('{"pred": "a"}', "JSON array"),
])
def test_bad_documents(tmp_path, content, needle):
    """Malformed manifests are manifest errors."""
    m = tmp_path / "m.json"
    m.write_text(content)
    with pytest.raises(ManifestError, match=needle):
        read_manifest(m)


def test_error_names_failing_entry(tmp_path):
    """A bad entry is reported by its zero-based index."""
    _touch(tmp_path, "a.pfm")
    m = tmp_path / "m.json"
    m.write_text(json.dumps([{"pred": "a.pfm", "gt": "a.pfm"}, {"pred": "a.pfm", "gt": "missing.pfm"}]))
    with pytest.raises(ManifestError, match="manifest entry 1") as ei:
        read_manifest(m)
    assert ei.value.index == 1


def test_missing_manifest(tmp_path):
    """A missing manifest file is a manifest error."""
    with pytest.raises(ManifestError, match="not found"):
        read_manifest(tmp_path / "none.json")
