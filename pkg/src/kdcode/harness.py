"""Monte-Carlo harness: synthetic samplers, deviation experiments, bound curves.

A deviation experiment repeatedly trains on a fresh sample, measures the gap
between holdout and training risk, and counts how often the gap exceeds the
scheme's closed-form bound.  Per-trial randomness is derived from (seed,
trial index), so trials can run in any order, or in parallel, without
changing a single number.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .core import Dataset, Dictionary, SchemeKind, SchemeSpec, derive_seed
from .bounds import (
    evaluate_bounds,
    kmeans_bound,
    nmf_bound,
    pca_bound,
    request_for_scheme,
    sparse_bound,
    theorem2_bound,
)
from .encoders import empirical_risk
from .trainers import TrainConfig, train

__all__ = [
    "SamplerKind",
    "SamplerSpec",
    "sample",
    "random_dictionary",
    "ExperimentResult",
    "run_deviation_experiment",
    "deviation_experiment_from_config",
    "deviation_bound_for_scheme",
    "run_bound_curve",
    "write_curve_csv",
    "write_deviation_csv",
]

_NS_TRAIN_SAMPLE = 11
_NS_HOLDOUT_SAMPLE = 12
_NS_TRAINER = 13


class SamplerKind(str, Enum):
    UNIFORM_BALL = "uniform_ball"
    SUBSPACE_GAUSSIAN_CLIPPED = "subspace_gaussian_clipped"
    PLANTED_DICTIONARY = "planted_dictionary"
    CLUSTER_MIXTURE = "cluster_mixture"


@dataclass(frozen=True)
class SamplerSpec:
    """A reproducible distribution over the unit ball of R^d.

    params by kind:
      uniform_ball: none
      subspace_gaussian_clipped: subspace_dim (int), scale (float, default 0.5)
      planted_dictionary: scheme (mapping with kind/K and optional p, c),
                          noise (float, default 0.0)
      cluster_mixture: clusters (int), spread (float, default 0.1)
    """

    kind: SamplerKind
    d: int
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplerKind(self.kind))
        if self.d < 1:
            raise ValueError("ambient dimension d must be at least 1")


def _ball_points(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0.0] = 1.0
    radii = rng.random(n) ** (1.0 / d)
    return (g / norms[:, None]) * radii[:, None]


def _rescale_into_ball(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    over = norms > 1.0
    if over.any():
        X = X.copy()
        X[over] /= norms[over, None]
    return X


def _coerce_scheme(obj) -> SchemeSpec:
    if isinstance(obj, SchemeSpec):
        return obj
    return SchemeSpec(
        kind=SchemeKind(obj["kind"]),
        K=int(obj["K"]),
        p=obj.get("p"),
        c=float(obj.get("c", 1.0)),
    )


def random_dictionary(scheme: SchemeSpec, d: int, rng: np.random.Generator,
                      coordinate_nonneg: bool = False) -> Dictionary:
    """Draw a dictionary satisfying the scheme's constraints.

    For the nonnegative scheme the columns are drawn coordinatewise
    nonnegative and then, unless coordinate_nonneg is set, spun by a random
    rotation; rotation preserves unit norms and pairwise inner products, so
    feasibility survives while the columns leave the nonnegative orthant.
    """
    K = scheme.K
    kind = scheme.kind
    if kind is SchemeKind.PCA:
        if K > d:
            raise ValueError(f"an isometry needs K <= d, got K={K}, d={d}")
        q, _ = np.linalg.qr(rng.standard_normal((d, K)))
        return Dictionary(q[:, :K], scheme)
    if kind is SchemeKind.KMEANS:
        cols = _ball_points(rng, K, d).T * scheme.c
        return Dictionary(cols, scheme)
    if kind is SchemeKind.NMF:
        cols = np.abs(rng.standard_normal((d, K)))
        for k in range(K):
            n = float(np.linalg.norm(cols[:, k]))
            while n <= 1e-12:
                cols[:, k] = np.abs(rng.standard_normal(d))
                n = float(np.linalg.norm(cols[:, k]))
            cols[:, k] /= n
        if not coordinate_nonneg:
            rot, _ = np.linalg.qr(rng.standard_normal((d, d)))
            cols = rot @ cols
        return Dictionary(cols, scheme)
    if kind is SchemeKind.SPARSE_LP:
        cols = _ball_points(rng, K, d).T
        return Dictionary(cols, scheme)
    raise ValueError(f"unknown scheme kind {kind}")


def _planted_codes(scheme: SchemeSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    K = scheme.K
    kind = scheme.kind
    if kind is SchemeKind.KMEANS:
        Y = np.zeros((n, K))
        Y[np.arange(n), rng.integers(K, size=n)] = 1.0
        return Y
    if kind is SchemeKind.PCA:
        return _ball_points(rng, n, K)
    if kind is SchemeKind.NMF:
        return np.abs(_ball_points(rng, n, K))
    if kind is SchemeKind.SPARSE_LP:
        Y = rng.uniform(-1.0, 1.0, size=(n, K))
        pn = (np.abs(Y) ** scheme.p).sum(axis=1) ** (1.0 / scheme.p)
        over = pn > 1.0
        Y[over] /= pn[over, None]
        return Y
    raise ValueError(f"unknown scheme kind {kind}")


def sample(spec: SamplerSpec, n: int) -> Dataset:
    """Draw n points from the sampler; same spec and n give the same points."""
    if n < 1:
        raise ValueError("need at least one point")
    rng = np.random.default_rng(derive_seed(spec.seed))
    d = spec.d
    if spec.kind is SamplerKind.UNIFORM_BALL:
        return Dataset(_ball_points(rng, n, d))
    if spec.kind is SamplerKind.SUBSPACE_GAUSSIAN_CLIPPED:
        try:
            k = int(spec.params["subspace_dim"])
        except KeyError as exc:
            raise ValueError("subspace sampler needs params['subspace_dim']") from exc
        if not (1 <= k <= d):
            raise ValueError(f"subspace_dim must lie in [1, {d}], got {k}")
        scale = float(spec.params.get("scale", 0.5))
        basis, _ = np.linalg.qr(rng.standard_normal((d, k)))
        Z = scale * rng.standard_normal((n, k))
        return Dataset(_rescale_into_ball(Z @ basis.T))
    if spec.kind is SamplerKind.PLANTED_DICTIONARY:
        try:
            planted = _coerce_scheme(spec.params["scheme"])
        except KeyError as exc:
            raise ValueError("planted sampler needs params['scheme']") from exc
        noise = float(spec.params.get("noise", 0.0))
        if noise < 0:
            raise ValueError("noise must be nonnegative")
        # cap planted centers inside the unit ball so noiseless points are
        # themselves valid data
        gen_scheme = replace(planted, c=min(planted.c, 1.0))
        dictionary = random_dictionary(
            gen_scheme, d, rng,
            coordinate_nonneg=planted.kind is SchemeKind.NMF,
        )
        Y = _planted_codes(gen_scheme, n, rng)
        X = Y @ dictionary.columns.T
        if noise > 0:
            X = X + noise * rng.standard_normal((n, d))
        if planted.kind is SchemeKind.NMF:
            X = np.clip(X, 0.0, None)
        return Dataset(_rescale_into_ball(X))
    if spec.kind is SamplerKind.CLUSTER_MIXTURE:
        try:
            k = int(spec.params["clusters"])
        except KeyError as exc:
            raise ValueError("mixture sampler needs params['clusters']") from exc
        if k < 1:
            raise ValueError("clusters must be at least 1")
        spread = float(spec.params.get("spread", 0.1))
        centers = 0.8 * _ball_points(rng, k, d)
        labels = rng.integers(k, size=n)
        X = centers[labels] + spread * rng.standard_normal((n, d))
        return Dataset(_rescale_into_ball(X))
    raise ValueError(f"unknown sampler kind {spec.kind}")


# ---------------------------------------------------------------------------
# deviation experiments


@dataclass(frozen=True)
class ExperimentResult:
    """Per-trial deviations of holdout risk from training risk, plus the
    closed-form bound they are compared against.

    deviations are signed (holdout minus training); the violation rate counts
    trials whose absolute deviation exceeds the bound.
    """

    scheme: SchemeSpec
    m: int
    holdout_m: int
    trials: int
    delta: float
    bound_name: str
    bound_value: float
    train_risks: list[float]
    holdout_risks: list[float]
    deviations: list[float]
    violation_rate: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "scheme": {
                "kind": self.scheme.kind.value,
                "K": self.scheme.K,
                "p": self.scheme.p,
                "c": self.scheme.c,
            },
            "m": self.m,
            "holdout_m": self.holdout_m,
            "trials": self.trials,
            "delta": self.delta,
            "bound_name": self.bound_name,
            "bound_value": self.bound_value,
            "train_risks": self.train_risks,
            "holdout_risks": self.holdout_risks,
            "deviations": self.deviations,
            "violation_rate": self.violation_rate,
            "seed": self.seed,
        }


def deviation_bound_for_scheme(scheme: SchemeSpec, m: int, delta: float) -> tuple[str, float]:
    """The scheme's own deviation bound (name, value) at sample size m."""
    req = request_for_scheme(scheme, m, delta)
    kind = scheme.kind
    if kind is SchemeKind.KMEANS:
        if scheme.c == 1.0:
            return "thm4_kmeans", kmeans_bound(req)
        return "thm2", theorem2_bound(req)
    if kind is SchemeKind.NMF:
        return "nmf", nmf_bound(req)
    if kind is SchemeKind.SPARSE_LP:
        return "sparse", sparse_bound(req)
    if kind is SchemeKind.PCA:
        return "pca_rad", pca_bound(req)
    raise ValueError(f"unknown scheme kind {kind}")


def run_deviation_experiment(
    scheme: SchemeSpec,
    sampler: SamplerSpec,
    m: int,
    trials: int,
    delta: float,
    holdout_m: int | None = None,
    train_cfg: TrainConfig | None = None,
) -> ExperimentResult:
    """Train per trial on m fresh points, compare training risk against the
    risk on a holdout sample, and count bound violations.

    holdout_m defaults to 20 m.  Set KDCODE_THREADS to run trials on a pool;
    the result is identical either way because each trial owns its streams.
    """
    if m < 1 or trials < 1:
        raise ValueError("m and trials must be at least 1")
    if holdout_m is None:
        holdout_m = 20 * m
    if holdout_m < 1:
        raise ValueError("holdout_m must be at least 1")
    cfg = train_cfg or TrainConfig(seed=sampler.seed, restarts=2, max_outer_iters=100)
    bound_name, bound_value = deviation_bound_for_scheme(scheme, m, delta)

    def one_trial(t: int) -> tuple[float, float]:
        train_spec = replace(sampler, seed=derive_seed(sampler.seed, _NS_TRAIN_SAMPLE, t))
        ho_spec = replace(sampler, seed=derive_seed(sampler.seed, _NS_HOLDOUT_SAMPLE, t))
        cfg_t = replace(cfg, seed=derive_seed(cfg.seed, _NS_TRAINER, t))
        report = train(scheme, sample(train_spec, m), cfg_t)
        ho_risk = empirical_risk(report.dictionary, sample(ho_spec, holdout_m))
        return report.final_risk, ho_risk

    workers = int(os.environ.get("KDCODE_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one_trial, range(trials)))
    else:
        outcomes = [one_trial(t) for t in range(trials)]

    train_risks = [tr for tr, _ in outcomes]
    holdout_risks = [ho for _, ho in outcomes]
    deviations = [ho - tr for tr, ho in outcomes]
    violations = sum(1 for dv in deviations if abs(dv) > bound_value)
    return ExperimentResult(
        scheme=scheme,
        m=m,
        holdout_m=holdout_m,
        trials=trials,
        delta=delta,
        bound_name=bound_name,
        bound_value=bound_value,
        train_risks=train_risks,
        holdout_risks=holdout_risks,
        deviations=deviations,
        violation_rate=violations / trials,
        seed=sampler.seed,
    )


def deviation_experiment_from_config(cfg: dict) -> ExperimentResult:
    """Run a deviation experiment described by a plain config mapping.

    Keys: scheme (kind/K and optional p, c), sampler (kind/d/seed/params),
    m, trials, delta, optional holdout_m, optional train (TrainConfig fields).
    """
    scheme = _coerce_scheme(cfg["scheme"])
    s = cfg["sampler"]
    sampler = SamplerSpec(
        kind=SamplerKind(s["kind"]),
        d=int(s["d"]),
        seed=int(s["seed"]),
        params=dict(s.get("params", {})),
    )
    train_cfg = None
    if "train" in cfg:
        train_cfg = TrainConfig(**cfg["train"])
    return run_deviation_experiment(
        scheme,
        sampler,
        m=int(cfg["m"]),
        trials=int(cfg["trials"]),
        delta=float(cfg["delta"]),
        holdout_m=int(cfg["holdout_m"]) if "holdout_m" in cfg else None,
        train_cfg=train_cfg,
    )


# ---------------------------------------------------------------------------
# bound curves


def run_bound_curve(
    kind: SchemeKind,
    K_values,
    m_values,
    delta: float,
    p: float | None = None,
    c: float = 1.0,
    d: int | None = None,
) -> list[tuple]:
    """Evaluate every applicable bound over a (K, m) grid.

    Returns rows (scheme, K, m, delta, bound_name, value) sorted by
    (K, m, bound_name).
    """
    kind = SchemeKind(kind)
    rows = []
    for K in K_values:
        scheme = SchemeSpec(kind, int(K), p=p, c=c)
        for m in m_values:
            req = request_for_scheme(scheme, int(m), delta, d=d)
            report = evaluate_bounds(req, kind)
            for name, value in report.to_dict().items():
                if name == "tightest":
                    continue
                rows.append((kind.value, int(K), int(m), float(delta), name, float(value)))
    rows.sort(key=lambda r: (r[1], r[2], r[4]))
    return rows


def write_curve_csv(rows, path) -> None:
    """Write bound-curve rows as CSV with full float precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "K", "m", "delta", "bound_name", "value"])
        for scheme, K, m, delta, name, value in rows:
            w.writerow([scheme, K, m, repr(float(delta)), name, repr(float(value))])


def write_deviation_csv(result: ExperimentResult, path) -> None:
    """Write one deviation-experiment row per trial."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "train_risk", "holdout_risk", "deviation"])
        for t in range(result.trials):
            w.writerow([
                t,
                repr(result.train_risks[t]),
                repr(result.holdout_risks[t]),
                repr(result.deviations[t]),
            ])
