"""Dictionary trainers: empirical risk minimization over each constraint set.

The spectral scheme is solved exactly by eigendecomposition.  The other
schemes alternate between encoding the sample and a descent update of the
dictionary; every accepted update is verified not to increase the sampled
risk, so risk traces are non-increasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    Dataset,
    Dictionary,
    SchemeKind,
    SchemeSpec,
    derive_seed,
)
from .encoders import _lp_codes, _nnls_codes

__all__ = [
    "InitKind",
    "TrainConfig",
    "TrainReport",
    "DegenerateInitError",
    "NegativeDataError",
    "train",
    "train_pca",
    "train_kmeans",
    "train_nmf",
    "train_sparse",
]

_NS_RESTART = 1

_MAX_HALVINGS = 40


class DegenerateInitError(ValueError):
    """Initialization cannot produce the requested number of columns."""


class NegativeDataError(ValueError):
    """Nonnegative factorization requires coordinatewise nonnegative data."""


class InitKind(str, Enum):
    RANDOM_DATA = "random_data"
    RANDOM_GAUSSIAN = "random_gaussian_normalized"


@dataclass(frozen=True)
class TrainConfig:
    """Knobs shared by the iterative trainers.

    Restarts draw from independent streams derived from (seed, restart
    index), so running them in any order, or in parallel, gives the same
    winner.  Ties on final risk keep the lowest restart index.
    """

    max_outer_iters: int = 500
    tol: float = 1e-9
    seed: int = 0
    init: InitKind = InitKind.RANDOM_DATA
    restarts: int = 1

    def __post_init__(self):
        object.__setattr__(self, "init", InitKind(self.init))
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if not (self.tol > 0):
            raise ValueError("tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


@dataclass(frozen=True)
class TrainReport:
    dictionary: Dictionary
    risk_trace: list[float]
    converged: bool

    @property
    def final_risk(self) -> float:
        return self.risk_trace[-1]


def _ordered_mean(errors: np.ndarray) -> float:
    # left-to-right accumulation in sample order, matching empirical_risk
    total = 0.0
    for e in errors:
        total += float(e)
    return total / errors.shape[0]


def _rel_converged(prev: float, cur: float, tol: float) -> bool:
    return prev - cur <= tol * max(prev, 1e-300)


# ---------------------------------------------------------------------------
# initializers


def _init_columns(kind: SchemeKind, X: np.ndarray, K: int, c: float,
                  init: InitKind, rng: np.random.Generator) -> np.ndarray:
    m, d = X.shape
    if init is InitKind.RANDOM_DATA:
        if K > m:
            raise DegenerateInitError(
                f"cannot pick {K} distinct sample points from {m} rows"
            )
        idx = rng.choice(m, size=K, replace=False)
        cols = X[idx].T.copy()
    else:
        cols = rng.standard_normal((d, K))
    if kind is SchemeKind.KMEANS:
        norms = np.linalg.norm(cols, axis=0)
        cap = c if init is InitKind.RANDOM_DATA else min(c, 1.0)
        over = norms > cap
        safe = np.where(norms > 0, norms, 1.0)
        if init is InitKind.RANDOM_DATA:
            cols[:, over] *= cap / safe[over]
        else:
            cols /= safe
            cols *= cap
    elif kind is SchemeKind.NMF:
        cols = np.abs(cols)
        for k in range(K):
            n = float(np.linalg.norm(cols[:, k]))
            while n <= 1e-12:
                cols[:, k] = np.abs(rng.standard_normal(d))
                n = float(np.linalg.norm(cols[:, k]))
            cols[:, k] /= n
    elif kind is SchemeKind.SPARSE_LP:
        norms = np.linalg.norm(cols, axis=0)
        over = norms > 1.0
        safe = np.where(norms > 0, norms, 1.0)
        cols[:, over] /= safe[over]
    return cols


# ---------------------------------------------------------------------------
# exact spectral trainer


def train_pca(data: Dataset, K: int) -> Dictionary:
    """Exact risk minimizer over isometries: top-K eigenvectors of the
    sample second-moment matrix."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > data.d:
        raise ValueError(f"K={K} exceeds the ambient dimension d={data.d}")
    X = data.points
    M = (X.T @ X) / data.m
    _, vecs = np.linalg.eigh(M)
    cols = vecs[:, ::-1][:, :K]
    return Dictionary(cols, SchemeSpec(SchemeKind.PCA, K))


# ---------------------------------------------------------------------------
# single-restart alternating fitters


def _fit_kmeans(X: np.ndarray, K: int, c: float, cfg: TrainConfig,
                rng: np.random.Generator):
    def assign_points(T):
        d2 = ((X[:, :, None] - T[None, :, :]) ** 2).sum(axis=1)
        a = np.argmin(d2, axis=1)
        return a, d2[np.arange(X.shape[0]), a]

    T = _init_columns(SchemeKind.KMEANS, X, K, c, cfg.init, rng)
    assign, errs = assign_points(T)
    risks = [_ordered_mean(errs)]
    converged = False
    for _ in range(cfg.max_outer_iters):
        newT = T.copy()
        for k in range(K):
            mask = assign == k
            if mask.any():
                newT[:, k] = X[mask].mean(axis=0)
        empty = [k for k in range(K) if not (assign == k).any()]
        if empty:
            # park each unused column on a worst-served point
            pool = errs.copy()
            for k in empty:
                j = int(np.argmax(pool))
                newT[:, k] = X[j]
                pool[j] = -np.inf
        norms = np.linalg.norm(newT, axis=0)
        over = norms > c
        if over.any():
            newT[:, over] *= c / norms[over]
        T = newT
        new_assign, errs = assign_points(T)
        risks.append(_ordered_mean(errs))
        stable = bool((new_assign == assign).all())
        assign = new_assign
        if stable or _rel_converged(risks[-2], risks[-1], cfg.tol):
            converged = True
            break
    return T, risks, converged


def _fit_nmf(X: np.ndarray, K: int, cfg: TrainConfig, rng: np.random.Generator):
    def risk_and_codes(T):
        Y, errors, _, _ = _nnls_codes(T, X)
        return _ordered_mean(errors), Y

    T = _init_columns(SchemeKind.NMF, X, K, 1.0, cfg.init, rng)
    risk, Y = risk_and_codes(T)
    risks = [risk]
    converged = False
    for _ in range(cfg.max_outer_iters):
        C = Y.T
        smax = float(np.linalg.svd(C, compute_uv=False)[0]) if C.size else 0.0
        if smax <= 0.0:
            converged = True
            break
        grad = T @ (C.T @ C) - X.T @ C
        step = 1.0 / (smax * smax)
        accepted = False
        for _h in range(_MAX_HALVINGS):
            Tc = np.clip(T - step * grad, 0.0, None)
            norms = np.linalg.norm(Tc, axis=0)
            dead = norms <= 1e-12
            if dead.any():
                Tc[:, dead] = T[:, dead]
                norms = np.linalg.norm(Tc, axis=0)
            Tc /= norms
            new_risk, Ynew = risk_and_codes(Tc)
            if new_risk <= risks[-1]:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        T, Y = Tc, Ynew
        risks.append(new_risk)
        if _rel_converged(risks[-2], risks[-1], cfg.tol):
            converged = True
            break
    return T, risks, converged


def _fit_sparse(X: np.ndarray, K: int, p: float, cfg: TrainConfig,
                rng: np.random.Generator):
    def risk_and_codes(T):
        Y, errors, _, _ = _lp_codes(T, X, p)
        return _ordered_mean(errors), Y

    T = _init_columns(SchemeKind.SPARSE_LP, X, K, 1.0, cfg.init, rng)
    risk, Y = risk_and_codes(T)
    risks = [risk]
    converged = False
    for _ in range(cfg.max_outer_iters):
        C = Y.T
        active = np.abs(C).max(axis=0) > 0.0
        target = T.copy()
        if active.any():
            sol = np.linalg.lstsq(C[:, active], X, rcond=None)[0]
            target[:, active] = sol.T
        step = 1.0
        accepted = False
        for _h in range(_MAX_HALVINGS):
            Tc = T + step * (target - T)
            norms = np.linalg.norm(Tc, axis=0)
            over = norms > 1.0
            if over.any():
                Tc[:, over] /= norms[over]
            new_risk, Ynew = risk_and_codes(Tc)
            if new_risk <= risks[-1]:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        T, Y = Tc, Ynew
        risks.append(new_risk)
        if _rel_converged(risks[-2], risks[-1], cfg.tol):
            converged = True
            break
    return T, risks, converged


# ---------------------------------------------------------------------------
# multi-restart drivers


def _best_of_restarts(fit_once, scheme: SchemeSpec, cfg: TrainConfig) -> TrainReport:
    best = None
    for r in range(cfg.restarts):
        rng = np.random.default_rng(derive_seed(cfg.seed, _NS_RESTART, r))
        T, risks, conv = fit_once(rng)
        if best is None or risks[-1] < best[1][-1]:
            best = (T, risks, conv)
    T, risks, conv = best
    return TrainReport(Dictionary(T, scheme), [float(r) for r in risks], conv)


def train_kmeans(data: Dataset, K: int, c: float = 1.0,
                 cfg: TrainConfig | None = None) -> TrainReport:
    """Alternating nearest-center fit with column norms capped at c.

    Assignment and recentering both minimize the sampled risk given the other,
    and unused columns are reseeded on worst-served points, so the trace never
    increases.
    """
    cfg = cfg or TrainConfig()
    scheme = SchemeSpec(SchemeKind.KMEANS, K, c=c)
    return _best_of_restarts(
        lambda rng: _fit_kmeans(data.points, K, c, cfg, rng), scheme, cfg
    )


def train_nmf(data: Dataset, K: int, cfg: TrainConfig | None = None) -> TrainReport:
    """Alternating nonnegative fit: nonnegative least-squares codes, then a
    projected gradient step on the dictionary (clamp at zero, renormalize
    columns).  Steps are halved until the risk does not increase.

    Only coordinatewise nonnegative data is supported; the trained columns
    stay in the nonnegative orthant, which keeps all pairwise column inner
    products nonnegative.
    """
    cfg = cfg or TrainConfig()
    if float(data.points.min()) < 0.0:
        raise NegativeDataError(
            "nonnegative factorization needs coordinatewise nonnegative data"
        )
    scheme = SchemeSpec(SchemeKind.NMF, K)
    return _best_of_restarts(
        lambda rng: _fit_nmf(data.points, K, cfg, rng), scheme, cfg
    )


def train_sparse(data: Dataset, K: int, p: float,
                 cfg: TrainConfig | None = None) -> TrainReport:
    """Alternating p-ball fit: constrained codes, then a damped least-squares
    dictionary update on the active columns with radial norm clipping.  The
    step is halved until the risk does not increase."""
    cfg = cfg or TrainConfig()
    if not (p >= 1):
        raise ValueError(f"ball exponent p must satisfy p >= 1, got {p}")
    scheme = SchemeSpec(SchemeKind.SPARSE_LP, K, p=float(p))
    return _best_of_restarts(
        lambda rng: _fit_sparse(data.points, K, float(p), cfg, rng), scheme, cfg
    )


def train(scheme: SchemeSpec, data: Dataset, cfg: TrainConfig | None = None) -> TrainReport:
    """Train a dictionary for the given scheme on the sample."""
    cfg = cfg or TrainConfig()
    kind = scheme.kind
    if kind is SchemeKind.PCA:
        from .encoders import empirical_risk

        dictionary = train_pca(data, scheme.K)
        return TrainReport(dictionary, [empirical_risk(dictionary, data)], True)
    if kind is SchemeKind.KMEANS:
        return train_kmeans(data, scheme.K, scheme.c, cfg)
    if kind is SchemeKind.NMF:
        return train_nmf(data, scheme.K, cfg)
    if kind is SchemeKind.SPARSE_LP:
        return train_sparse(data, scheme.K, float(scheme.p), cfg)
    raise ValueError(f"unknown scheme kind {kind}")
