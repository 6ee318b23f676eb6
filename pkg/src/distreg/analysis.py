"""Spectral diagnostics and finite-dimensional operator checks.

Effective dimension and capacity estimates summarize how fast the Gram
spectrum decays; the bound quantities combine them into the sample-error
scale the theory tracks.  The two *_check functions verify, on concrete
matrices, the operator facts the multi-penalty analysis rests on: the
boundedness of (lam1 + L)(lam1 + L + lam2 B)^(-1) under the lambda
coupling, and the exact second-order decomposition of a difference of
inverses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributed import AveragedModel, predict_averaged_batch
from .errors import DegenerateCorpusError
from .solver import Model, predict_batch

# fitted capacity exponents are clamped into (0, 1]
_BETA_MIN = 1e-6


@dataclass(frozen=True)
class EffectiveDimensionCurve:
    """Effective dimension evaluated on a grid of regularization strengths."""

    lambdas: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class CapacityFit:
    """Power-law fit N(lambda) ~ C0 * lambda^(-beta) of an effective
    dimension curve.

    :ivar clamped: True when the raw fitted exponent fell outside (0, 1]
        and was clamped to the boundary.
    """

    beta_hat: float
    C0_hat: float
    residual: float
    clamped: bool


@dataclass(frozen=True)
class BoundQuantities:
    """Sample-error scales for one (n, lambda1) configuration."""

    n: int
    lambda1: float
    effective_dimension: float
    kappa: float
    B: float
    B_prime: float


def _spectrum(gram: np.ndarray) -> np.ndarray:
    gram = np.asarray(gram, dtype=np.float64)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise ValueError("gram must be a square matrix")
    scale = max(1.0, float(np.abs(gram).max()))
    if np.abs(gram - gram.T).max() > 1e-8 * scale:
        raise ValueError("gram must be symmetric")
    evals = np.linalg.eigvalsh(0.5 * (gram + gram.T)) / gram.shape[0]
    if evals[0] < -1e-8 * max(1.0, evals[-1]):
        raise ValueError(f"gram is not PSD (min eigenvalue {evals[0]:.3e})")
    return np.maximum(evals, 0.0)


def effective_dimension(gram: np.ndarray, lam: float) -> float:
    """Trace of (L + lam)^(-1) L for L = gram/n: sum_i s_i/(s_i + lam)."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    s = _spectrum(gram)
    return float(np.sum(s / (s + lam)))


def effective_dimension_curve(gram: np.ndarray, lambdas) -> EffectiveDimensionCurve:
    """Effective dimension over a lambda grid, one eigendecomposition total."""
    lams = np.asarray(lambdas, dtype=np.float64)
    if lams.ndim != 1 or lams.size == 0 or lams.min() <= 0:
        raise ValueError("lambdas must be a nonempty vector of positive reals")
    s = _spectrum(gram)
    if s.sum() == 0.0:
        raise DegenerateCorpusError("gram spectrum is identically zero")
    values = np.array([np.sum(s / (s + lam)) for lam in lams])
    return EffectiveDimensionCurve(lambdas=lams.copy(), values=values)


def capacity_fit(lambdas, values) -> CapacityFit:
    """Fit log N = log C0 - beta log lambda by least squares.

    The exponent is clamped into (0, 1]; ``clamped`` flags when that
    happened (a constant curve, for instance, fits beta = 0).
    """
    lams = np.asarray(lambdas, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    if lams.shape != vals.shape or lams.ndim != 1 or lams.size < 2:
        raise ValueError("need matching lambda/value vectors of length >= 2")
    if lams.min() <= 0 or vals.min() <= 0:
        raise ValueError("lambdas and values must be positive")
    ll = np.log(lams)
    lv = np.log(vals)
    slope, intercept = np.polyfit(ll, lv, 1)
    residual = float(np.sqrt(np.mean((lv - (slope * ll + intercept)) ** 2)))
    raw = -float(slope)
    beta = min(max(raw, _BETA_MIN), 1.0)
    return CapacityFit(
        beta_hat=float(beta),
        C0_hat=float(np.exp(intercept)),
        residual=residual,
        clamped=not (raw == beta),
    )


def bound_quantities(n: int, lambda1: float, Nvalue: float, kappa: float) -> BoundQuantities:
    """Evaluate the two sample-error scales for one configuration.

    B = (2 kappa / sqrt(n)) (kappa / sqrt(n lambda1) + sqrt(N))
    B' = 1 / (n sqrt(lambda1)) + sqrt(N) / sqrt(n)
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    if Nvalue < 0:
        raise ValueError("Nvalue must be nonnegative")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    b = (2.0 * kappa / np.sqrt(n)) * (kappa / np.sqrt(n * lambda1) + np.sqrt(Nvalue))
    b_prime = 1.0 / (n * np.sqrt(lambda1)) + np.sqrt(Nvalue) / np.sqrt(n)
    return BoundQuantities(
        n=int(n),
        lambda1=float(lambda1),
        effective_dimension=float(Nvalue),
        kappa=float(kappa),
        B=float(b),
        B_prime=float(b_prime),
    )


def lemma_norm_check(
    Lmat: np.ndarray, Bmat: np.ndarray, lambda1: float, lambda2: float, r: float
) -> float:
    """Spectral norm of (lam1 + L)(lam1 + L + lam2 B)^(-1).

    The caller is responsible for the coupling 2 cV lambda2 =
    lambda1^max(2r, 1) with cV = ||B||; under it the value stays below 2.
    The norm is returned, not asserted.
    """
    L = np.asarray(Lmat, dtype=np.float64)
    B = np.asarray(Bmat, dtype=np.float64)
    if L.shape != B.shape or L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("Lmat and Bmat must be square matrices of equal size")
    for name, val in (("lambda1", lambda1), ("lambda2", lambda2)):
        if not 0.0 < val < 1.0:
            raise ValueError(f"{name} must lie in (0, 1)")
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    eye = np.eye(L.shape[0])
    x = lambda1 * eye + L
    m = x + lambda2 * B
    t = np.linalg.solve(m.T, x.T).T
    return float(np.linalg.norm(t, 2))


def second_order_identity_check(A: np.ndarray, B: np.ndarray) -> float:
    """Spectral-norm residual of the second-order inverse decomposition.

    In exact arithmetic

        A^(-1) - B^(-1)
            = B^(-1)(B-A)A^(-1)(B-A)B^(-1) + B^(-1)(B-A)B^(-1)

    for any invertible A, B; the returned residual is pure floating-point
    noise, of order eps * (||A^(-1)|| + ||B^(-1)||) for well-conditioned
    inputs.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A and B must be square matrices of equal size")
    eye = np.eye(A.shape[0])
    ai = np.linalg.solve(A, eye)
    bi = np.linalg.solve(B, eye)
    diff = B - A
    rhs = bi @ diff @ ai @ diff @ bi + bi @ diff @ bi
    return float(np.linalg.norm((ai - bi) - rhs, 2))


def excess_error(
    predictor: Model | AveragedModel,
    oracle: Callable | Sequence[float],
    test_bags,
    reference_bags=None,
) -> float:
    """Root-mean-square gap between predictions and ground truth.

    Predictions run on ``test_bags``.  ``oracle`` is either a callable
    evaluated per bag or a precomputed sequence of truth values; with
    ``reference_bags`` given, a callable oracle is evaluated there instead,
    so an embedding-based truth can use larger bags than the predictor saw.
    """
    test_bags = list(test_bags)
    if not test_bags:
        raise ValueError("need at least one test bag")
    if isinstance(predictor, AveragedModel):
        preds = predict_averaged_batch(predictor, test_bags)
    else:
        preds = predict_batch(predictor, test_bags)
    if callable(oracle):
        where = test_bags if reference_bags is None else list(reference_bags)
        if len(where) != len(test_bags):
            raise ValueError("reference_bags must match test_bags in length")
        truths = np.array([float(oracle(b)) for b in where])
    else:
        truths = np.asarray(oracle, dtype=np.float64).reshape(-1)
        if truths.shape[0] != len(test_bags):
            raise ValueError("oracle values must match test_bags in length")
    return float(np.sqrt(np.mean((preds - truths) ** 2)))


def rate_slope(sizes, errors) -> float:
    """Slope of log error against log size, by least squares."""
    ns = np.asarray(sizes, dtype=np.float64)
    es = np.asarray(errors, dtype=np.float64)
    if ns.shape != es.shape or ns.ndim != 1 or ns.size < 2:
        raise ValueError("need matching size/error vectors of length >= 2")
    if ns.min() < 1 or np.any(np.diff(ns) <= 0):
        raise ValueError("sizes must be increasing and >= 1")
    if es.min() <= 0:
        raise ValueError("errors must be positive")
    slope, _ = np.polyfit(np.log(ns), np.log(es), 1)
    return float(slope)


def _random_psd(rng, dim: int, eigs: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return (q * eigs) @ q.T


def lemma_norm_battery(
    seed: int = 0,
    pairs: int = 200,
    max_dim: int = 12,
    lambda1_grid=(0.5, 0.1, 0.01),
    r_grid=(0.25, 0.5, 0.75, 1.0),
) -> dict:
    """Random-matrix battery for the coupled-regularizer norm bound.

    Draws PSD pairs (L, B), sets cV to the exact spectral norm of B and
    lambda2 from the coupling, and records the largest norm seen across the
    lambda1 and r grids.  ``B`` norms are kept in [0.3, 3] so the scheduled
    lambda2 stays inside (0, 1).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    evaluations = 0
    for _ in range(pairs):
        dim = int(rng.integers(1, max_dim + 1))
        l_mat = _random_psd(rng, dim, rng.uniform(0.0, 2.0, size=dim))
        target = rng.uniform(0.3, 3.0)
        b_eigs = rng.uniform(0.0, 1.0, size=dim)
        b_eigs[int(rng.integers(dim))] = 1.0  # pin the top so the rescale is exact
        b_mat = _random_psd(rng, dim, b_eigs * target)
        cv = float(np.linalg.eigvalsh(0.5 * (b_mat + b_mat.T))[-1])
        for lam1 in lambda1_grid:
            for r in r_grid:
                lam2 = lam1 ** max(2.0 * r, 1.0) / (2.0 * cv)
                worst = max(
                    worst, lemma_norm_check(l_mat, b_mat, lam1, lam2, r)
                )
                evaluations += 1
    return {
        "pairs": pairs,
        "evaluations": evaluations,
        "max_norm": worst,
        "threshold": 2.0,
    }


def second_order_battery(seed: int = 0, pairs: int = 100, max_dim: int = 12) -> dict:
    """Random-matrix battery for the second-order inverse decomposition.

    Well-conditioned SPD pairs (log-uniform spectra in [1e-3, 10]); records
    the largest residual relative to ||A^(-1)|| + ||B^(-1)||.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        dim = int(rng.integers(1, max_dim + 1))
        a = _random_psd(rng, dim, np.exp(rng.uniform(np.log(1e-3), np.log(10.0), dim)))
        b = _random_psd(rng, dim, np.exp(rng.uniform(np.log(1e-3), np.log(10.0), dim)))
        resid = second_order_identity_check(a, b)
        scale = np.linalg.norm(np.linalg.inv(a), 2) + np.linalg.norm(np.linalg.inv(b), 2)
        worst = max(worst, resid / scale)
    return {"pairs": pairs, "max_relative_residual": worst, "threshold": 1e-9}
