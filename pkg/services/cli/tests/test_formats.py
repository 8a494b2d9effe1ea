# test_formats.py
#
# RDK array files and ASCII phantom descriptions.
#
# Run:
#   pytest services/cli/tests/test_formats.py -q

from __future__ import annotations

import numpy as np
import pytest

from services.cli.formats import FormatError, load_phantom, parse_phantom_text, read_rdk, write_rdk


def test_rdk_header_and_payload(tmp_path):
    path = tmp_path / "sino.rdk"
    values = np.array([[1.0, -2.5, 3.0], [0.0, 1e-300, 7.25]])
    write_rdk(path, "sinogram", values)

    raw = path.read_bytes()
    assert raw.startswith(b"RDK1 sinogram 2 3\n")
    assert len(raw) == len(b"RDK1 sinogram 2 3\n") + 6 * 8
    assert np.frombuffer(raw[-8:], dtype="<f8")[0] == 7.25

    data = read_rdk(path, expected_kind="sinogram")
    assert (data.kind, data.rows, data.cols) == ("sinogram", 2, 3)
    np.testing.assert_array_equal(data.values, values)


def test_rdk_write_rejects_bad_input(tmp_path):
    with pytest.raises(ValueError):
        write_rdk(tmp_path / "x.rdk", "volume", np.zeros((2, 2)))
    with pytest.raises(ValueError):
        write_rdk(tmp_path / "x.rdk", "image", np.zeros(4))


@pytest.mark.parametrize("content, message", [
    (b"RDK2 image 1 1\n" + bytes(8), "expected 'RDK1"),
    (b"RDK1 volume 1 1\n" + bytes(8), "unknown array kind"),
    (b"RDK1 image x 1\n" + bytes(8), "bad dimensions"),
    (b"RDK1 image 0 1\n", "must be positive"),
    (b"RDK1 image 2 2\n" + bytes(24), "payload has 24 bytes"),
    (b"RDK1 image 1 1", "terminator"),
])
def test_rdk_read_errors(tmp_path, content, message):
    path = tmp_path / "bad.rdk"
    path.write_bytes(content)
    with pytest.raises(FormatError, match=message):
        read_rdk(path)


def test_rdk_kind_mismatch(tmp_path):
    path = tmp_path / "img.rdk"
    write_rdk(path, "image", np.ones((2, 2)))
    with pytest.raises(FormatError, match="expected a sinogram file") as exc_info:
        read_rdk(path, expected_kind="sinogram")
    assert exc_info.value.line == 1


PHANTOM_TEXT = """\
# two ellipses
0.0  0.0  0.5 0.4  0.0  1.0
0.1 -0.2  0.1 0.05 30.0 -0.5   # rotated, negative density
"""


def test_parse_phantom_text():
    phantom = parse_phantom_text(PHANTOM_TEXT, source="two.txt")
    assert phantom.name == "two"
    assert len(phantom.components) == 2
    second = phantom.components[1]
    assert second.center == (0.1, -0.2)
    assert second.density == -0.5
    assert second.rotation == pytest.approx(np.radians(30.0))


@pytest.mark.parametrize("text, line", [
    ("0 0 0.5 0.5 0\n", 1),
    ("# ok\n0 0 0.5 0.5 0 1\n0 0 0.5 zero 0 1\n", 3),
    ("0 0 0.5 0.5 0 1\n\n0.9 0 0.5 0.5 0 1\n", 3),
    ("0 0 -0.5 0.5 0 1\n", 1),
])
def test_phantom_errors_report_line_numbers(text, line):
    with pytest.raises(FormatError) as exc_info:
        parse_phantom_text(text, source="p.txt")
    assert exc_info.value.line == line
    assert str(exc_info.value).startswith(f"p.txt:{line}: ")


def test_empty_phantom_file():
    with pytest.raises(FormatError, match="no ellipses"):
        parse_phantom_text("# nothing here\n\n")


def test_load_phantom_builtin_or_file(tmp_path):
    assert load_phantom("ellipse-suite").name == "ellipse-suite"
    path = tmp_path / "mine.txt"
    path.write_text(PHANTOM_TEXT, encoding="utf-8")
    assert len(load_phantom(str(path)).components) == 2
    with pytest.raises(OSError):
        load_phantom(str(tmp_path / "missing.txt"))
