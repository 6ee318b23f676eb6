"""Flat key=value configuration files.

One assignment per line, ``#`` comments and blank lines ignored.  Unknown
keys are rejected so a typo fails loudly instead of silently running the
defaults.  ``parse_int_list`` style values are comma-separated.
"""

from __future__ import annotations

from .kernels import BaseKernelSpec, EmbeddingKernelSpec
from .solver import PenaltySpec
from .synthetic import SyntheticConfig


def _parse_int_list(text: str):
    return [int(t) for t in text.split(",") if t.strip()]


def _parse_auto_float(text: str):
    return "auto" if text.strip() == "auto" else float(text)


_SCHEMA = {
    # synthetic draw
    "n": int,
    "d": int,
    "p": int,
    "meta_family": str,
    "noise_sigma": float,
    "label_bound": float,
    "truth": str,
    "truth_anchors": int,
    "truth_scale": float,
    "point_spread": float,
    "anchor_bag_size": int,
    "label_ref_size": int,
    "seed": int,
    # kernels
    "base.family": str,
    "base.bandwidth": float,
    "embed.family": str,
    "embed.sigma": float,
    # penalty
    "penalty.kind": str,
    "penalty.laplacian_bandwidth": float,
    # regularization overrides for `fit`
    "lambda1": float,
    "lambda2": float,
    # schedules and experiments
    "r": float,
    "beta": _parse_auto_float,
    "alpha": float,
    "sizes": _parse_int_list,
    "machine_counts": _parse_int_list,
    "seeds": int,
    "d_max": int,
    "test_count": int,
    "test_bag_size": int,
    "partition_strategy": str,
}

DEFAULTS = {
    "n": 64,
    "d": 32,
    "p": 2,
    "meta_family": "gaussian_means",
    "noise_sigma": 0.05,
    "label_bound": 2.0,
    "truth": "rkhs_combination",
    "truth_anchors": 4,
    "truth_scale": 1.0,
    "point_spread": 0.2,
    "anchor_bag_size": 192,
    "label_ref_size": 256,
    "seed": 0,
    "base.family": "gaussian",
    "base.bandwidth": 0.5,
    "embed.family": "linear",
    "embed.sigma": 1.0,
    "penalty.kind": "identity",
    "penalty.laplacian_bandwidth": 1.0,
    "r": 0.5,
    "beta": "auto",
    "alpha": 1.0,
    "sizes": [64, 128, 256, 512, 1024],
    "machine_counts": [1, 2, 4, 8],
    "seeds": 5,
    "d_max": 4096,
    "test_count": 48,
    "test_bag_size": 512,
    "partition_strategy": "contiguous",
}


def parse_config(text: str) -> dict:
    """Parse key=value text into a typed mapping over the defaults."""
    cfg = dict(DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        try:
            cfg[key] = _SCHEMA[key](value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return cfg


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())


def base_spec_from(cfg: dict) -> BaseKernelSpec:
    return BaseKernelSpec(
        family=cfg["base.family"],
        bandwidth=cfg["base.bandwidth"],
        dim=cfg["p"],
    )


def embed_spec_from(cfg: dict) -> EmbeddingKernelSpec:
    return EmbeddingKernelSpec(
        family=cfg["embed.family"],
        sigma=cfg["embed.sigma"],
        base=base_spec_from(cfg),
    )


def penalty_from(cfg: dict) -> PenaltySpec:
    return PenaltySpec(
        kind=cfg["penalty.kind"],
        laplacian_bandwidth=cfg["penalty.laplacian_bandwidth"],
    )


def synthetic_config_from(cfg: dict, seed=None) -> SyntheticConfig:
    return SyntheticConfig(
        n=cfg["n"],
        d=cfg["d"],
        p=cfg["p"],
        meta_family=cfg["meta_family"],
        noise_sigma=cfg["noise_sigma"],
        label_bound=cfg["label_bound"],
        truth=cfg["truth"],
        truth_anchors=cfg["truth_anchors"],
        truth_scale=cfg["truth_scale"],
        point_spread=cfg["point_spread"],
        anchor_bag_size=cfg["anchor_bag_size"],
        label_ref_size=cfg["label_ref_size"],
        seed=cfg["seed"] if seed is None else int(seed),
        base=base_spec_from(cfg),
        embed=embed_spec_from(cfg),
    )


def seed_list_from(cfg: dict, seed=None) -> list:
    """Seeds for multi-seed experiments: base seed plus consecutive offsets."""
    base = cfg["seed"] if seed is None else int(seed)
    return [base + i for i in range(cfg["seeds"])]
