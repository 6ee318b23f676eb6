"""On-disk formats: point files, label files, model files, predictions.

Floats are written with 17 significant digits everywhere, which losslessly
round-trips IEEE doubles through text.
"""

from __future__ import annotations

import csv

import numpy as np

from .embedding import Bag, bag_self_inners
from .kernels import BaseKernelSpec, EmbeddingKernelSpec
from .solver import Model, PenaltySpec, TwoStageDataset

MODEL_MAGIC = "distreg-model"
MODEL_VERSION = 1


def _g(x: float) -> str:
    return format(float(x), ".17g")


def labels_path_for(points_path) -> str:
    path = str(points_path)
    return path[:-4] + ".labels.csv" if path.endswith(".csv") else path + ".labels"


def write_points(path, bags) -> None:
    """Bags as rows (bag_id, point_index, coordinates)."""
    bags = list(bags)
    dim = bags[0].dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bag_id", "point_index"] + [f"x{k}" for k in range(dim)])
        for i, bag in enumerate(bags):
            for s, point in enumerate(bag.points):
                writer.writerow([i, s] + [_g(v) for v in point])


def read_points(path) -> list:
    """Bags back from a points file; ids must be 0..n-1, points in order."""
    groups: dict = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["bag_id", "point_index"]:
            raise ValueError(f"{path}: not a points file")
        dim = len(header) - 2
        if dim < 1:
            raise ValueError(f"{path}: no coordinate columns")
        for row in reader:
            if not row:
                continue
            if len(row) != dim + 2:
                raise ValueError(f"{path}: row has {len(row)} fields, expected {dim + 2}")
            bag_id, point_index = int(row[0]), int(row[1])
            groups.setdefault(bag_id, []).append(
                (point_index, [float(v) for v in row[2:]])
            )
    if not groups:
        raise ValueError(f"{path}: no points")
    if sorted(groups) != list(range(len(groups))):
        raise ValueError(f"{path}: bag ids must be consecutive from 0")
    bags = []
    for bag_id in range(len(groups)):
        rows = sorted(groups[bag_id])
        if [idx for idx, _ in rows] != list(range(len(rows))):
            raise ValueError(f"{path}: bag {bag_id} point indices not consecutive")
        bags.append(Bag(np.array([pt for _, pt in rows])))
    return bags


def write_labels(path, y) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bag_id", "label"])
        for i, value in enumerate(y):
            writer.writerow([i, _g(value)])


def read_labels(path, n: int) -> np.ndarray:
    y = np.full(n, np.nan)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["bag_id", "label"]:
            raise ValueError(f"{path}: not a labels file")
        for row in reader:
            if not row:
                continue
            y[int(row[0])] = float(row[1])
    if np.isnan(y).any():
        raise ValueError(f"{path}: missing labels")
    return y


def write_dataset(points_path, ds: TwoStageDataset, labels_path=None) -> None:
    write_points(points_path, ds.bags)
    write_labels(labels_path or labels_path_for(points_path), ds.y)


def read_dataset(
    points_path,
    base: BaseKernelSpec,
    embed: EmbeddingKernelSpec,
    labels_path=None,
    label_bound=None,
) -> TwoStageDataset:
    bags = read_points(points_path)
    y = read_labels(labels_path or labels_path_for(points_path), len(bags))
    return TwoStageDataset(
        bags=tuple(bags), y=y, base=base, embed=embed, label_bound=label_bound
    )


def write_model(path, model: Model) -> None:
    """Model as flat text: header, coefficients, then support bag points."""
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        f"base.family {model.base.family}",
        f"base.bandwidth {_g(model.base.bandwidth)}",
        f"base.dim {model.base.dim}",
        f"embed.family {model.embed.family}",
        f"embed.sigma {_g(model.embed.sigma)}",
        f"penalty.kind {model.penalty.kind}",
        f"penalty.laplacian_bandwidth {_g(model.penalty.laplacian_bandwidth)}",
        f"lambda1 {_g(model.lambda1)}",
        f"lambda2 {_g(model.lambda2)}",
        f"cV {_g(model.cV_estimate)}",
        f"residual_inf {_g(model.residual_inf)}",
        f"condition_estimate {_g(model.condition_estimate)}",
        f"n {model.n}",
    ]
    if model.penalty.kind == "custom":
        mat = model.penalty.custom_matrix
        lines.append(f"penalty.custom {mat.shape[0]}")
        for row in mat:
            lines.append(" ".join(_g(v) for v in row))
    lines.append(f"coefficients {model.n}")
    for c in model.coefficients:
        lines.append(_g(c))
    for i, bag in enumerate(model.support_bags):
        lines.append(f"bag {i} {bag.size}")
        for point in bag.points:
            lines.append(" ".join(_g(v) for v in point))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_model(path) -> Model:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    it = iter(lines)

    def take() -> str:
        try:
            return next(it)
        except StopIteration:
            raise ValueError(f"{path}: truncated model file") from None

    magic = take().split()
    if magic[:1] != [MODEL_MAGIC] or int(magic[1]) != MODEL_VERSION:
        raise ValueError(f"{path}: not a version-{MODEL_VERSION} model file")

    header = {}
    custom = None
    while True:
        line = take()
        key, _, value = line.partition(" ")
        if key == "penalty.custom":
            size = int(value)
            custom = np.array(
                [[float(v) for v in take().split()] for _ in range(size)]
            )
            continue
        if key == "coefficients":
            count = int(value)
            break
        header[key] = value

    base = BaseKernelSpec(
        family=header["base.family"],
        bandwidth=float(header["base.bandwidth"]),
        dim=int(header["base.dim"]),
    )
    embed = EmbeddingKernelSpec(
        family=header["embed.family"], sigma=float(header["embed.sigma"]), base=base
    )
    if header["penalty.kind"] == "custom":
        penalty = PenaltySpec(kind="custom", custom_matrix=custom)
    else:
        penalty = PenaltySpec(
            kind=header["penalty.kind"],
            laplacian_bandwidth=float(header["penalty.laplacian_bandwidth"]),
        )
    n = int(header["n"])
    if count != n:
        raise ValueError(f"{path}: coefficient count disagrees with n")
    coef = np.array([float(take()) for _ in range(count)])

    bags = []
    for i in range(n):
        tag, idx, size = take().split()
        if tag != "bag" or int(idx) != i:
            raise ValueError(f"{path}: malformed bag block {i}")
        pts = np.array([[float(v) for v in take().split()] for _ in range(int(size))])
        bags.append(Bag(pts))

    coef.setflags(write=False)
    self_inner = bag_self_inners(bags, base)
    self_inner.setflags(write=False)
    return Model(
        support_bags=tuple(bags),
        coefficients=coef,
        lambda1=float(header["lambda1"]),
        lambda2=float(header["lambda2"]),
        penalty=penalty,
        base=base,
        embed=embed,
        cV_estimate=float(header["cV"]),
        support_self_inner=self_inner,
        residual_inf=float(header["residual_inf"]),
        condition_estimate=float(header["condition_estimate"]),
    )


def write_predictions(path, values) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bag_id", "prediction"])
        for i, value in enumerate(values):
            writer.writerow([i, _g(value)])
