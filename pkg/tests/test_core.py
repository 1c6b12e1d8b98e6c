"""Core types, dataset I/O, persistence, and scheme-level norms."""

import json
import math

import numpy as np
import pytest

import oracles
from kdcode import (
    TOL,
    DataPoint,
    Dataset,
    DatasetFormatError,
    DatasetParseError,
    Dictionary,
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidDictionaryError,
    SchemeKind,
    SchemeSpec,
    as_coords,
    class_norm,
    code_in_codebook,
    codebook_norm,
    derive_seed,
    load_dataset,
    load_dictionary,
    random_dictionary,
    save_dictionary,
)


def _isometry(rng, d, K):
    q, _ = np.linalg.qr(rng.standard_normal((d, K)))
    return q[:, :K]


# ---------------------------------------------------------------------------
# points and datasets


def test_datapoint_stays_in_unit_ball():
    p = DataPoint([0.6, 0.8])
    assert p.d == 2
    assert not p.coords.flags.writeable
    with pytest.raises(ValueError):
        DataPoint([1.2, 0.0])
    with pytest.raises(DimensionMismatchError):
        DataPoint([[0.1, 0.2]])


def test_dataset_shape_and_iteration():
    X = np.array([[0.1, 0.2], [0.0, -0.5], [0.3, 0.3]])
    ds = Dataset(X)
    assert (ds.m, ds.d) == (3, 2)
    assert not ds.points.flags.writeable
    rows = list(ds)
    assert len(rows) == 3
    assert np.array_equal(rows[1].coords, X[1])


def test_dataset_rejects_bad_shapes():
    with pytest.raises(DatasetFormatError):
        Dataset(np.zeros(3))
    with pytest.raises(EmptyDatasetError):
        Dataset(np.empty((0, 2)))
    with pytest.raises(ValueError):
        Dataset(np.array([[0.9, 0.9]]))


def test_load_csv_with_normalize(tmp_path):
    f = tmp_path / "pts.csv"
    f.write_text("2,0\n0,1\n")
    ds = load_dataset(f, normalize=True)
    assert np.array_equal(ds.points, np.array([[1.0, 0.0], [0.0, 0.5]]))


def test_load_rejects_out_of_ball_without_normalize(tmp_path):
    f = tmp_path / "pts.csv"
    f.write_text("3,4\n")
    with pytest.raises(ValueError):
        load_dataset(f)


def test_normalize_also_rescales_small_data_up(tmp_path):
    f = tmp_path / "pts.csv"
    f.write_text("0.25,0\n0,0.5\n")
    ds = load_dataset(f, normalize=True)
    assert np.array_equal(ds.points, np.array([[0.5, 0.0], [0.0, 1.0]]))


def test_load_jsonl(tmp_path):
    f = tmp_path / "pts.jsonl"
    f.write_text("[0.1, 0.2]\n\n[1, 0]\n")
    ds = load_dataset(f)
    assert np.array_equal(ds.points, np.array([[0.1, 0.2], [1.0, 0.0]]))


def test_load_ragged_rows(tmp_path):
    f = tmp_path / "pts.csv"
    f.write_text("0.1,0.2\n0.3\n")
    with pytest.raises(DatasetFormatError):
        load_dataset(f)
    g = tmp_path / "pts.jsonl"
    g.write_text("[0.1, 0.2]\n[0.3]\n")
    with pytest.raises(DatasetFormatError):
        load_dataset(g)


def test_load_non_numeric_entries(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("0.1,abc\n")
    with pytest.raises(DatasetParseError):
        load_dataset(f)
    g = tmp_path / "bad.jsonl"
    g.write_text('[0.1, "x"]\n')
    with pytest.raises(DatasetParseError):
        load_dataset(g)
    h = tmp_path / "bool.jsonl"
    h.write_text("[true, 0.1]\n")
    with pytest.raises(DatasetParseError):
        load_dataset(h)


def test_load_empty_file(tmp_path):
    f = tmp_path / "empty.csv"
    f.write_text("")
    with pytest.raises(EmptyDatasetError):
        load_dataset(f)
    f.write_text("   \n\n")
    with pytest.raises(EmptyDatasetError):
        load_dataset(f)


# ---------------------------------------------------------------------------
# scheme specs and dictionaries


def test_scheme_spec_validation():
    spec = SchemeSpec("pca", 2)
    assert spec.kind is SchemeKind.PCA
    with pytest.raises(ValueError):
        SchemeSpec(SchemeKind.PCA, 0)
    with pytest.raises(ValueError):
        SchemeSpec(SchemeKind.SPARSE_LP, 2)
    with pytest.raises(ValueError):
        SchemeSpec(SchemeKind.SPARSE_LP, 2, p=0.5)
    with pytest.raises(ValueError):
        SchemeSpec(SchemeKind.KMEANS, 2, c=0.0)


def test_dictionary_validates_isometry(rng):
    cols = _isometry(rng, 5, 3)
    d = Dictionary(cols, SchemeSpec(SchemeKind.PCA, 3))
    assert (d.d, d.K) == (5, 3)
    with pytest.raises(InvalidDictionaryError):
        Dictionary(cols * 1.1, SchemeSpec(SchemeKind.PCA, 3))
    with pytest.raises(InvalidDictionaryError):
        Dictionary(cols, SchemeSpec(SchemeKind.PCA, 2))


def test_dictionary_validates_column_cap():
    cols = np.array([[1.2, 0.0], [0.0, 0.5]])
    with pytest.raises(InvalidDictionaryError):
        Dictionary(cols, SchemeSpec(SchemeKind.KMEANS, 2))
    Dictionary(cols, SchemeSpec(SchemeKind.KMEANS, 2, c=1.3))
    with pytest.raises(InvalidDictionaryError):
        Dictionary(cols, SchemeSpec(SchemeKind.SPARSE_LP, 2, p=1.0))
    Dictionary(cols / 1.2, SchemeSpec(SchemeKind.SPARSE_LP, 2, p=1.0))


def test_dictionary_validates_nonneg_correlations():
    ok = np.array([[1.0, 0.0], [0.0, 1.0]])
    Dictionary(ok, SchemeSpec(SchemeKind.NMF, 2))
    with pytest.raises(InvalidDictionaryError):
        Dictionary(np.array([[1.0, -1.0], [0.0, 0.0]]), SchemeSpec(SchemeKind.NMF, 2))
    with pytest.raises(InvalidDictionaryError):
        Dictionary(ok * 0.9, SchemeSpec(SchemeKind.NMF, 2))
    # a tolerance-sized negative correlation is allowed
    e = 1e-13
    near = np.array([[1.0, -e], [0.0, math.sqrt(1.0 - e * e)]])
    Dictionary(near, SchemeSpec(SchemeKind.NMF, 2))


def test_dictionary_roundtrip(tmp_path, rng):
    cols = rng.standard_normal((4, 3))
    cols /= np.linalg.norm(cols, axis=0) * 1.5
    orig = Dictionary(cols, SchemeSpec(SchemeKind.SPARSE_LP, 3, p=1.5))
    path = tmp_path / "dict.json"
    save_dictionary(orig, path)
    back = load_dictionary(path)
    assert back.scheme == orig.scheme
    assert np.array_equal(back.columns, orig.columns)

    km = Dictionary(cols * 1.9, SchemeSpec(SchemeKind.KMEANS, 3, c=1.3))
    save_dictionary(km, path)
    back = load_dictionary(path)
    assert back.scheme.c == 1.3
    assert np.array_equal(back.columns, km.columns)


def test_load_dictionary_checks_header(tmp_path, rng):
    d = Dictionary(_isometry(rng, 3, 2), SchemeSpec(SchemeKind.PCA, 2))
    path = tmp_path / "dict.json"
    save_dictionary(d, path)
    obj = json.loads(path.read_text())
    obj["d"] = 5
    path.write_text(json.dumps(obj))
    with pytest.raises(InvalidDictionaryError):
        load_dictionary(path)


# ---------------------------------------------------------------------------
# codebook membership


def test_code_in_codebook_basis():
    spec = SchemeSpec(SchemeKind.KMEANS, 3)
    assert code_in_codebook([0.0, 1.0, 0.0], spec)
    assert not code_in_codebook([0.5, 0.5, 0.0], spec)
    assert not code_in_codebook([1.0, 1.0, 0.0], spec)


def test_code_in_codebook_balls():
    assert code_in_codebook([0.6, 0.8], SchemeSpec(SchemeKind.PCA, 2))
    assert not code_in_codebook([0.9, 0.8], SchemeSpec(SchemeKind.PCA, 2))
    assert code_in_codebook([2.0, 0.1], SchemeSpec(SchemeKind.NMF, 2))
    assert not code_in_codebook([-0.1, 0.5], SchemeSpec(SchemeKind.NMF, 2))
    assert code_in_codebook([0.5, 0.5], SchemeSpec(SchemeKind.SPARSE_LP, 2, p=1.0))
    assert not code_in_codebook([0.6, 0.5], SchemeSpec(SchemeKind.SPARSE_LP, 2, p=1.0))


# ---------------------------------------------------------------------------
# class-level and dictionary-level operator norms


def test_class_norm_values():
    assert class_norm(SchemeSpec(SchemeKind.PCA, 6)) == 1.0
    assert class_norm(SchemeSpec(SchemeKind.KMEANS, 3, c=1.7)) == 1.7
    assert class_norm(SchemeSpec(SchemeKind.NMF, 4)) == 2.0
    assert class_norm(SchemeSpec(SchemeKind.SPARSE_LP, 7, p=1.0)) == 1.0
    assert class_norm(SchemeSpec(SchemeKind.SPARSE_LP, 9, p=2.0)) == 3.0
    assert abs(class_norm(SchemeSpec(SchemeKind.SPARSE_LP, 16, p=4.0)) - 8.0) < 1e-12


def test_codebook_norm_isometry(rng):
    d = Dictionary(_isometry(rng, 6, 3), SchemeSpec(SchemeKind.PCA, 3))
    assert abs(codebook_norm(d) - 1.0) <= 1e-12


def test_codebook_norm_basis_codebook():
    cols = np.array([[0.3, 0.0], [0.0, 0.8]])
    d = Dictionary(cols, SchemeSpec(SchemeKind.KMEANS, 2))
    assert codebook_norm(d) == 0.8


def test_codebook_norm_nonneg_orthonormal_columns():
    # orthonormal columns: sup ||Ty|| over the nonnegative cap of the ball is 1
    d = Dictionary(np.eye(2), SchemeSpec(SchemeKind.NMF, 2))
    val = codebook_norm(d)
    assert abs(val - 1.0) <= 1e-9
    grid = oracles.grid_operator_norm(np.eye(2), oracles.nonneg_ball_mask)
    assert abs(grid - 1.0) <= 0.02


def test_codebook_norm_nonneg_coherent_columns():
    # two identical unit columns: the sup is sqrt(2), the class-level value
    cols = np.array([[1.0, 1.0], [0.0, 0.0]])
    d = Dictionary(cols, SchemeSpec(SchemeKind.NMF, 2))
    val = codebook_norm(d)
    assert abs(val - math.sqrt(2.0)) <= 1e-9
    grid = oracles.grid_operator_norm(cols, oracles.nonneg_ball_mask)
    assert abs(grid - math.sqrt(2.0)) <= 0.02


def test_codebook_norm_lp_closed_forms():
    cols = np.array([[0.5, 0.0], [0.0, 0.9]])
    d1 = Dictionary(cols, SchemeSpec(SchemeKind.SPARSE_LP, 2, p=1.0))
    assert codebook_norm(d1) == 0.9
    d2 = Dictionary(np.eye(2), SchemeSpec(SchemeKind.SPARSE_LP, 2, p=2.0))
    assert abs(codebook_norm(d2) - 1.0) <= 1e-12


def test_codebook_norm_lp_iterative_against_grid():
    # identity columns over the 4-ball: sup ||y||_2 s.t. ||y||_4 <= 1 is 2^(1/4)
    d = Dictionary(np.eye(2), SchemeSpec(SchemeKind.SPARSE_LP, 2, p=4.0))
    val = codebook_norm(d)
    assert abs(val - 2.0 ** 0.25) <= 1e-9
    grid = oracles.grid_operator_norm(np.eye(2), oracles.lp_ball_mask(4.0))
    assert abs(grid - 2.0 ** 0.25) <= 0.02

    # coherent columns attain the class-level value 2^(3/4)
    cols = np.array([[1.0, 1.0], [0.0, 0.0]])
    dc = Dictionary(cols, SchemeSpec(SchemeKind.SPARSE_LP, 2, p=4.0))
    assert abs(codebook_norm(dc) - 2.0 ** 0.75) <= 1e-9
    grid = oracles.grid_operator_norm(cols, oracles.lp_ball_mask(4.0))
    assert abs(grid - 2.0 ** 0.75) <= 0.02


def test_codebook_norm_never_exceeds_class_norm():
    rng = np.random.default_rng(1234)
    specs = [
        SchemeSpec(SchemeKind.PCA, 3),
        SchemeSpec(SchemeKind.KMEANS, 4, c=1.3),
        SchemeSpec(SchemeKind.NMF, 4),
        SchemeSpec(SchemeKind.SPARSE_LP, 3, p=1.0),
        SchemeSpec(SchemeKind.SPARSE_LP, 3, p=1.5),
        SchemeSpec(SchemeKind.SPARSE_LP, 3, p=2.0),
        SchemeSpec(SchemeKind.SPARSE_LP, 3, p=3.0),
    ]
    for spec in specs:
        cap = class_norm(spec)
        for _ in range(150):
            d = random_dictionary(spec, 5, rng)
            assert codebook_norm(d) <= cap + 1e-6


def test_codebook_norm_scales_with_columns(rng):
    cols = rng.standard_normal((4, 3))
    cols /= np.linalg.norm(cols, axis=0) * 1.2
    big = Dictionary(cols, SchemeSpec(SchemeKind.KMEANS, 3, c=1.3))
    small = Dictionary(0.5 * cols, SchemeSpec(SchemeKind.KMEANS, 3, c=1.3))
    assert codebook_norm(small) == 0.5 * codebook_norm(big)

    bigs = Dictionary(cols, SchemeSpec(SchemeKind.SPARSE_LP, 3, p=3.0))
    smalls = Dictionary(0.5 * cols, SchemeSpec(SchemeKind.SPARSE_LP, 3, p=3.0))
    v1, v2 = codebook_norm(bigs), codebook_norm(smalls)
    assert abs(v2 - 0.5 * v1) <= 1e-12 * max(1.0, v1)


# ---------------------------------------------------------------------------
# misc helpers


def test_as_coords_errors():
    with pytest.raises(DimensionMismatchError):
        as_coords([0.1, 0.2], d=3)
    with pytest.raises(DimensionMismatchError):
        as_coords(np.zeros((2, 2)))
    v = as_coords(DataPoint([0.1, 0.2]))
    assert v.shape == (2,)


def test_derive_seed_is_deterministic_and_distinct():
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    seen = {derive_seed(7), derive_seed(7, 0), derive_seed(7, 1),
            derive_seed(7, 1, 0), derive_seed(8, 1, 0)}
    assert len(seen) == 5
    for s in seen:
        assert 0 <= s < 2 ** 64


def test_tolerances_are_centralized():
    assert TOL.unit_ball == 1e-12
    assert TOL.grad_norm == 1e-10
    assert TOL.risk_step == 1e-12
