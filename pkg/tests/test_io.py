"""Round trips and malformed-input handling for the on-disk formats."""

import numpy as np
import numpy.testing as npt
import pytest

from distreg import (
    Bag,
    BaseKernelSpec,
    EmbeddingKernelSpec,
    PenaltySpec,
    TwoStageDataset,
    fit,
    predict_batch,
)
from distreg.io import (
    labels_path_for,
    read_dataset,
    read_labels,
    read_model,
    read_points,
    write_dataset,
    write_model,
    write_predictions,
)

BASE = BaseKernelSpec("gaussian", 0.8, 2)
LINEAR = EmbeddingKernelSpec("linear", 1.0, BASE)


def _dataset(rng, n=5):
    bags = tuple(
        Bag(rng.standard_normal((int(rng.integers(1, 6)), 2))) for _ in range(n)
    )
    return TwoStageDataset(
        bags=bags, y=rng.standard_normal(n), base=BASE, embed=LINEAR, label_bound=50.0
    )


def test_labels_path_derivation():
    assert labels_path_for("data.csv") == "data.labels.csv"
    assert labels_path_for("data.points") == "data.points.labels"


def test_dataset_round_trip_is_exact(tmp_path):
    ds = _dataset(np.random.default_rng(0))
    path = tmp_path / "bags.csv"
    write_dataset(path, ds)
    assert (tmp_path / "bags.labels.csv").exists()
    back = read_dataset(path, BASE, LINEAR, label_bound=50.0)
    npt.assert_array_equal(back.y, ds.y)
    assert back.n == ds.n
    for a, b in zip(back.bags, ds.bags):
        npt.assert_array_equal(a.points, b.points)


def test_model_round_trip_preserves_predictions(tmp_path):
    rng = np.random.default_rng(1)
    ds = _dataset(rng)
    model = fit(ds, 0.07, 0.2, PenaltySpec("laplacian", laplacian_bandwidth=0.9))
    path = tmp_path / "model.txt"
    write_model(path, model)
    back = read_model(path)
    npt.assert_array_equal(back.coefficients, model.coefficients)
    assert back.lambda1 == model.lambda1
    assert back.lambda2 == model.lambda2
    assert back.penalty.kind == "laplacian"
    assert back.penalty.laplacian_bandwidth == 0.9
    assert back.base == model.base
    assert back.embed == model.embed
    probes = [Bag(rng.standard_normal((3, 2))) for _ in range(4)]
    npt.assert_array_equal(
        predict_batch(back, probes), predict_batch(model, probes)
    )


def test_model_round_trip_with_custom_penalty(tmp_path):
    rng = np.random.default_rng(2)
    ds = _dataset(rng, n=4)
    m = np.diag([1.0, 2.0, 0.5, 1.5])
    model = fit(ds, 0.1, 0.3, PenaltySpec("custom", custom_matrix=m))
    path = tmp_path / "model.txt"
    write_model(path, model)
    back = read_model(path)
    npt.assert_array_equal(back.penalty.custom_matrix, m)
    npt.assert_array_equal(back.coefficients, model.coefficients)


def test_points_reader_rejects_malformed_files(tmp_path):
    bad_header = tmp_path / "a.csv"
    bad_header.write_text("foo,bar\n")
    with pytest.raises(ValueError, match="not a points file"):
        read_points(bad_header)

    no_coords = tmp_path / "b.csv"
    no_coords.write_text("bag_id,point_index\n")
    with pytest.raises(ValueError, match="coordinate"):
        read_points(no_coords)

    gap_ids = tmp_path / "c.csv"
    gap_ids.write_text("bag_id,point_index,x0\n0,0,1.0\n2,0,2.0\n")
    with pytest.raises(ValueError, match="consecutive"):
        read_points(gap_ids)

    gap_points = tmp_path / "d.csv"
    gap_points.write_text("bag_id,point_index,x0\n0,0,1.0\n0,2,2.0\n")
    with pytest.raises(ValueError, match="point indices"):
        read_points(gap_points)

    ragged = tmp_path / "e.csv"
    ragged.write_text("bag_id,point_index,x0\n0,0,1.0,9.0\n")
    with pytest.raises(ValueError, match="fields"):
        read_points(ragged)

    empty = tmp_path / "f.csv"
    empty.write_text("bag_id,point_index,x0\n")
    with pytest.raises(ValueError, match="no points"):
        read_points(empty)


def test_labels_reader_rejects_malformed_files(tmp_path):
    wrong = tmp_path / "y.csv"
    wrong.write_text("id,value\n0,1.0\n")
    with pytest.raises(ValueError, match="not a labels file"):
        read_labels(wrong, 1)

    missing = tmp_path / "z.csv"
    missing.write_text("bag_id,label\n0,1.0\n")
    with pytest.raises(ValueError, match="missing labels"):
        read_labels(missing, 2)


def test_model_reader_rejects_malformed_files(tmp_path):
    wrong_magic = tmp_path / "m1.txt"
    wrong_magic.write_text("something-else 1\n")
    with pytest.raises(ValueError, match="model file"):
        read_model(wrong_magic)

    truncated = tmp_path / "m2.txt"
    truncated.write_text("distreg-model 1\nbase.family gaussian\n")
    with pytest.raises(ValueError, match="truncated"):
        read_model(truncated)

    rng = np.random.default_rng(3)
    model = fit(_dataset(rng, n=3), 0.1)
    good = tmp_path / "m3.txt"
    write_model(good, model)
    text = good.read_text().replace("coefficients 3", "coefficients 2")
    (tmp_path / "m4.txt").write_text(text)
    with pytest.raises(ValueError, match="disagrees"):
        read_model(tmp_path / "m4.txt")


def test_predictions_file_layout(tmp_path):
    path = tmp_path / "pred.csv"
    write_predictions(path, [1.5, -0.25])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "bag_id,prediction"
    assert lines[1] == "0,1.5"
    assert lines[2] == "1,-0.25"
