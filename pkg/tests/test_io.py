"""File format tests: cube container, response text, CSV reports, manifests."""

import struct

import numpy as np
import pytest

from hsfuse import io as hio
from hsfuse.io import FormatError, ReportRow


class TestCubeFile:
    def test_roundtrip_and_byte_identical_rewrite(self, tmp_path):
        rng = np.random.default_rng(0)
        cube = rng.random((8, 9, 10))
        first = tmp_path / "a.hsc"
        second = tmp_path / "b.hsc"
        hio.write_cube(cube, first)
        back = hio.read_cube(first)
        assert back.shape == (8, 9, 10)
        # values survive exactly at float32 precision
        assert np.array_equal(back, cube.astype(np.float32).astype(np.float64))
        hio.write_cube(back, second)
        assert first.read_bytes() == second.read_bytes()

    def test_known_2x2x2_layout(self, tmp_path):
        cube = np.arange(8.0).reshape(2, 2, 2)  # cube[i, j, k] = 4i + 2j + k
        path = tmp_path / "c.hsc"
        hio.write_cube(cube, path)
        # band-sequential payload, row-major within each band:
        # band 0: x[0,0,0], x[0,1,0], x[1,0,0], x[1,1,0] = 0, 2, 4, 6
        # band 1: x[0,0,1], x[0,1,1], x[1,0,1], x[1,1,1] = 1, 3, 5, 7
        expected = b"HSC1" + struct.pack("<III", 2, 2, 2)
        expected += struct.pack("<8f", 0, 2, 4, 6, 1, 3, 5, 7)
        data = path.read_bytes()
        assert len(data) == 48
        assert data == expected

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.hsc"
        path.write_bytes(b"XXXX" + struct.pack("<III", 1, 1, 1) + struct.pack("<f", 0.0))
        with pytest.raises(FormatError, match="bad magic"):
            hio.read_cube(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.hsc"
        path.write_bytes(b"HSC1" + struct.pack("<III", 2, 2, 2) + b"\x00" * 10)
        with pytest.raises(FormatError, match="expected 48 bytes"):
            hio.read_cube(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "long.hsc"
        path.write_bytes(b"HSC1" + struct.pack("<III", 1, 1, 1) + struct.pack("<2f", 0.0, 0.0))
        with pytest.raises(FormatError, match="expected 20 bytes"):
            hio.read_cube(path)

    def test_non_finite_payload_rejected(self, tmp_path):
        path = tmp_path / "nan.hsc"
        path.write_bytes(b"HSC1" + struct.pack("<III", 1, 1, 1) + struct.pack("<f", float("nan")))
        with pytest.raises(FormatError, match="non-finite"):
            hio.read_cube(path)

    def test_non_finite_cube_rejected_on_write(self, tmp_path):
        cube = np.ones((2, 2, 1))
        cube[0, 0, 0] = np.inf
        with pytest.raises(FormatError, match="non-finite"):
            hio.write_cube(cube, tmp_path / "inf.hsc")

    def test_float32_overflow_rejected_on_write(self, tmp_path):
        cube = np.full((1, 1, 1), 1e300)
        with pytest.raises(FormatError, match="overflow"):
            hio.write_cube(cube, tmp_path / "big.hsc")


class TestResponseFile:
    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        a = rng.random((5, 3))
        path = tmp_path / "resp.txt"
        hio.save_response(a, path)
        assert np.array_equal(hio.load_response(path), a)

    def test_header_format(self, tmp_path):
        a = np.ones((4, 2))
        path = tmp_path / "resp.txt"
        hio.save_response(a, path)
        assert path.read_text().splitlines()[0] == "4 2"

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "resp.txt"
        path.write_text("4\n1 2\n")
        with pytest.raises(FormatError, match="bands channels"):
            hio.load_response(path)

    def test_wrong_line_count(self, tmp_path):
        path = tmp_path / "resp.txt"
        path.write_text("3 2\n1 0\n0 1\n")
        with pytest.raises(FormatError, match="expected 3 lines"):
            hio.load_response(path)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "resp.txt"
        path.write_text("1 2\n1 oops\n")
        with pytest.raises(FormatError):
            hio.load_response(path)

    def test_invalid_matrix_rejected(self, tmp_path):
        path = tmp_path / "resp.txt"
        path.write_text("2 1\n1.0\n-3.0\n")
        with pytest.raises(FormatError, match="nonnegative"):
            hio.load_response(path)


def _row(scene="scene", method="pfusion", rank=3, patch=100, stride=50, **kw):
    values = dict(m_psnr=40.0, m_ssim=0.99, msa=1.5, wall_seconds=0.25)
    values.update(kw)
    return ReportRow(scene, method, rank, patch, stride, **values)


class TestReport:
    def test_empty_rows_header_only(self, tmp_path):
        path = tmp_path / "r.csv"
        hio.write_report([], path)
        assert path.read_text() == "scene,method,k,m,s,m_psnr,m_ssim,msa,wall_seconds\n"

    def test_single_row_parses_naively(self, tmp_path):
        path = tmp_path / "r.csv"
        hio.write_report([_row()], path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert len(fields) == 9
        assert fields[0] == "scene" and fields[1] == "pfusion"
        assert float(fields[5]) == 40.0

    def test_rank_sweep_monotone_column(self, tmp_path):
        path = tmp_path / "sweep.csv"
        rows = [_row(rank=k, m_psnr=30.0 + k) for k in range(1, 6)]
        hio.write_report(rows, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 6
        ks = [int(line.split(",")[2]) for line in lines[1:]]
        assert ks == sorted(ks) == [1, 2, 3, 4, 5]

    def test_six_significant_digits(self, tmp_path):
        path = tmp_path / "r.csv"
        hio.write_report([_row(m_psnr=12.3456789)], path)
        assert "12.3457" in path.read_text()

    def test_comma_in_identifier_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="commas"):
            hio.write_report([_row(scene="a,b")], tmp_path / "r.csv")


class TestManifest:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "manifest.txt"
        entries = {"command": "simulate", "mask_seed": 7, "density": 0.5}
        hio.write_manifest(path, entries)
        back = hio.read_manifest(path)
        assert back == {"command": "simulate", "mask_seed": "7", "density": "0.5"}

    def test_comments_and_blanks_tolerated(self, tmp_path):
        path = tmp_path / "manifest.txt"
        path.write_text("# a comment\n\nkey = value\n")
        assert hio.read_manifest(path) == {"key": "value"}

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "manifest.txt"
        path.write_text("just some text\n")
        with pytest.raises(FormatError, match="key = value"):
            hio.read_manifest(path)

    def test_human_readable_layout(self, tmp_path):
        path = tmp_path / "manifest.txt"
        hio.write_manifest(path, {"rank": 3})
        assert path.read_text() == "rank = 3\n"
