import numpy as np
import pytest

from roman.dataio import (
    TimeSeriesDataset,
    load_dataset,
    load_ts,
    load_tsv,
    load_tensor,
    preprocess,
    save_tensor,
    write_ts,
    znorm_channel,
)
from roman.errors import (
    ChecksumMismatch,
    ParseError,
    UnequalLength,
    UnknownClassLabel,
    VersionMismatch,
)

MINIMAL_TS = """@problemName tiny
@univariate true
@classLabel true a b
@data
1.0,2.0,3.0:a
4.0,5.0,6.0:b
"""

MULTIVARIATE_TS = """@problemName tri
@univariate false
@dimension 3
@classLabel true 0 1
@data
1,2:3,4:5,6:0
7,8:9,10:11,12:1
"""

MISSING_TS = """@problemName holes
@univariate true
@classLabel true x y
@data
1.0,?,3.0:x
4.0,5.0,6.0:y
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadTs:
    def test_minimal_univariate(self, tmp_path):
        ds = load_ts(_write(tmp_path, "t.ts", MINIMAL_TS))
        assert ds.n_instances == 2 and ds.n_channels == 1 and ds.length == 3
        assert ds.dataset_id == "tiny"
        assert np.array_equal(ds.values[0, 0], [1.0, 2.0, 3.0])
        assert ds.class_names == ["a", "b"]
        assert ds.labels.tolist() == [0, 1]

    def test_multivariate_dimension_order(self, tmp_path):
        ds = load_ts(_write(tmp_path, "t.ts", MULTIVARIATE_TS))
        assert ds.n_channels == 3
        assert np.array_equal(ds.values[0], [[1, 2], [3, 4], [5, 6]])

    def test_missing_marker_becomes_nan(self, tmp_path):
        ds = load_ts(_write(tmp_path, "t.ts", MISSING_TS))
        assert np.isnan(ds.values[0, 0, 1])
        assert ds.provenance["nan_count"] == 1

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        text = "# hello\n\n" + MINIMAL_TS
        ds = load_ts(_write(tmp_path, "t.ts", text))
        assert ds.n_instances == 2


MALFORMED_CORPUS = [
    ("no_data_tag.ts", "@problemName x\n@classLabel true a\n1,2:a\n", ParseError),
    ("empty_data.ts", "@problemName x\n@classLabel true a\n@data\n", ParseError),
    ("bad_value.ts",
     "@problemName x\n@classLabel true a\n@data\n1.0,oops,3.0:a\n", ParseError),
    ("no_label_sep.ts",
     "@problemName x\n@classLabel true a\n@data\n1.0,2.0,3.0\n", ParseError),
    ("no_class_header.ts", "@problemName x\n@data\n1,2:a\n", ParseError),
    ("classlabel_false.ts",
     "@problemName x\n@classLabel false\n@data\n1,2:a\n", ParseError),
    ("univariate_conflict.ts",
     "@problemName x\n@univariate true\n@classLabel true a\n@data\n1,2:3,4:a\n",
     ParseError),
    ("unequal_lengths.ts",
     "@problemName x\n@classLabel true a b\n@data\n1,2,3:a\n1,2:b\n", UnequalLength),
    ("unknown_label.ts",
     "@problemName x\n@classLabel true a b\n@data\n1,2:c\n", UnknownClassLabel),
]


@pytest.mark.parametrize("name,text,err", MALFORMED_CORPUS)
def test_malformed_fixture_rejected_with_location(tmp_path, name, text, err):
    path = _write(tmp_path, name, text)
    with pytest.raises(err) as excinfo:
        load_ts(path)
    assert name in str(excinfo.value)


def test_parse_error_carries_line_number(tmp_path):
    path = _write(tmp_path, "bad.ts",
                  "@problemName x\n@classLabel true a\n@data\n1.0,zap:a\n")
    with pytest.raises(ParseError) as excinfo:
        load_ts(path)
    assert excinfo.value.line == 4


class TestLoadTsv:
    def test_label_first_column(self, tmp_path):
        path = _write(tmp_path, "t.tsv", "b\t1.0\t2.0\na\t3.0\t4.0\n")
        ds = load_tsv(path)
        assert ds.n_instances == 2 and ds.n_channels == 1 and ds.length == 2
        assert ds.class_names == ["a", "b"]
        assert ds.labels.tolist() == [1, 0]

    def test_unequal_rows_rejected(self, tmp_path):
        path = _write(tmp_path, "t.tsv", "a\t1.0\t2.0\nb\t3.0\n")
        with pytest.raises(UnequalLength):
            load_tsv(path)

    def test_dispatch_by_extension(self, tmp_path):
        ts = _write(tmp_path, "d.ts", MINIMAL_TS)
        tsv = _write(tmp_path, "d.tsv", "a\t1.0\t2.0\nb\t3.0\t4.0\n")
        assert load_dataset(ts).dataset_id == "tiny"
        assert load_dataset(tsv).n_instances == 2


class TestWriteTs:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = TimeSeriesDataset(
            values=rng.normal(size=(4, 2, 9)),
            labels=np.array([0, 1, 1, 0]),
            class_names=["neg", "pos"],
            dataset_id="rt")
        path = tmp_path / "rt.ts"
        write_ts(path, ds)
        back = load_ts(path)
        assert np.array_equal(back.values, ds.values)
        assert back.labels.tolist() == ds.labels.tolist()
        assert back.class_names == ds.class_names
        assert back.dataset_id == "rt"

    def test_nan_round_trip(self, tmp_path):
        values = np.array([[[1.0, np.nan, 3.0]]])
        ds = TimeSeriesDataset(values=values, labels=np.array([0]),
                               class_names=["z"], dataset_id="n")
        path = tmp_path / "n.ts"
        write_ts(path, ds)
        back = load_ts(path)
        assert np.isnan(back.values[0, 0, 1])


class TestPreprocess:
    def test_nan_imputed_then_znormed(self, tmp_path):
        ds = TimeSeriesDataset(values=np.array([[[1.0, np.nan, 3.0]]]),
                               labels=np.array([0]), class_names=["a"])
        out = preprocess(ds)
        sigma = np.sqrt(2.0 / 3.0)
        expected = np.array([(1 - 2) / sigma, 0.0, (3 - 2) / sigma])
        assert np.allclose(out.values[0, 0], expected, atol=1e-12)
        assert out.provenance["nan_imputed"] == 1

    def test_constant_series_becomes_zeros(self):
        ds = TimeSeriesDataset(values=np.full((1, 1, 5), 9.0),
                               labels=np.array([0]), class_names=["a"])
        assert (preprocess(ds).values == 0.0).all()

    def test_all_nan_series_becomes_zeros(self):
        ds = TimeSeriesDataset(values=np.full((1, 1, 4), np.nan),
                               labels=np.array([0]), class_names=["a"])
        assert (preprocess(ds).values == 0.0).all()

    def test_nan_free_mean_zero_std_one(self):
        rng = np.random.default_rng(1)
        ds = TimeSeriesDataset(values=rng.normal(2.0, 5.0, size=(3, 2, 64)),
                               labels=np.zeros(3, dtype=int), class_names=["a"])
        out = preprocess(ds)
        for i in range(3):
            for c in range(2):
                assert abs(out.values[i, c].mean()) < 1e-9
                assert abs(out.values[i, c].std() - 1.0) < 1e-9

    def test_idempotent_on_nan_free_input(self):
        rng = np.random.default_rng(2)
        ds = TimeSeriesDataset(values=rng.normal(size=(2, 1, 32)),
                               labels=np.zeros(2, dtype=int), class_names=["a"])
        once = preprocess(ds)
        twice = preprocess(once)
        assert np.allclose(once.values, twice.values, atol=1e-12)

    def test_znorm_channel_population_std(self):
        out = znorm_channel(np.array([1.0, 2.0, 3.0]))
        assert abs(out.std() - 1.0) < 1e-12


class TestTensorContainer:
    def test_round_trip_bit_exact(self, tmp_path):
        arr = np.random.default_rng(3).normal(size=(26, 64))
        path = tmp_path / "z.bin"
        save_tensor(path, arr, metadata={"origin": "test"})
        back, meta = load_tensor(path)
        assert np.array_equal(back, arr)
        assert meta == {"origin": "test"}

    def test_dims_mismatch_is_checksum_error(self, tmp_path):
        arr = np.zeros((4, 4))
        path = tmp_path / "z.bin"
        save_tensor(path, arr)
        with open(path, "ab") as fh:
            fh.write(b"\x00" * 8)
        with pytest.raises(ChecksumMismatch):
            load_tensor(path)

    def test_corrupted_payload_detected(self, tmp_path):
        arr = np.ones((2, 3))
        path = tmp_path / "z.bin"
        save_tensor(path, arr)
        data = bytearray(path.read_bytes())
        data[0] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(ChecksumMismatch):
            load_tensor(path)

    def test_version_mismatch(self, tmp_path):
        import json
        arr = np.ones((2, 2))
        path = tmp_path / "z.bin"
        save_tensor(path, arr)
        sidecar = path.parent / "z.bin.json"
        header = json.loads(sidecar.read_text())
        header["version"] = 99
        sidecar.write_text(json.dumps(header))
        with pytest.raises(VersionMismatch):
            load_tensor(path)
