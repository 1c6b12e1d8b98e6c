"""Closed-form uniform deviation bounds for constrained coding schemes.

Every function returns a high-probability bound on
sup over the class of |expected risk - sampled risk| for a sample of size m
at confidence 1 - delta.  All formulas use natural logarithms and evaluate
in double precision; nothing here is asymptotic or order-of-magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import SchemeKind, SchemeSpec, class_norm
from .encoders import range_bound

__all__ = [
    "BoundRequest",
    "BoundReport",
    "theorem1_bound",
    "theorem2_bound",
    "kmeans_bound",
    "nmf_bound",
    "sparse_bound",
    "finite_dim_bound",
    "pca_rademacher",
    "pca_bound",
    "evaluate_bounds",
    "request_for_scheme",
]


@dataclass(frozen=True)
class BoundRequest:
    """Parameters a bound evaluation needs.

    class_norm is the worst-case operator norm over the class, b the range
    of the reconstruction error, c the column norm cap, d the ambient
    dimension (only the dimension-dependent bound reads it), p the ball
    exponent (only the p-ball bound reads it).
    """

    K: int
    m: int
    delta: float
    c: float = 1.0
    b: float = 1.0
    class_norm: float = 1.0
    p: float | None = None
    d: int | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not (self.c >= 1.0):
            raise ValueError(f"column cap c must be at least 1, got {self.c}")
        if not (self.b > 0.0):
            raise ValueError(f"range bound b must be positive, got {self.b}")
        if not (self.class_norm >= 1.0):
            raise ValueError(
                f"class operator norm must be at least 1, got {self.class_norm}"
            )
        if self.p is not None and not (self.p >= 1.0):
            raise ValueError(f"ball exponent p must satisfy p >= 1, got {self.p}")
        if self.d is not None and self.d < 1:
            raise ValueError("ambient dimension d must be at least 1")


def theorem1_bound(req: BoundRequest) -> float:
    """Dimension-free bound with quadratic K dependence:

        6 c^2 K^2 sqrt(pi / m) + c^2 sqrt(8 ln(1/delta) / m)

    Valid for any codebook inside the unit ball with column norms at most c.
    """
    c2 = req.c * req.c
    return 6.0 * c2 * req.K * req.K * math.sqrt(math.pi / req.m) + c2 * math.sqrt(
        8.0 * math.log(1.0 / req.delta) / req.m
    )


def theorem2_bound(req: BoundRequest) -> float:
    """Dimension-free bound with linear K dependence:

        (K / sqrt(m)) (14 n + (b/2) sqrt(ln(16 m n^2))) + b sqrt(ln(1/delta) / (2m))

    where n is the class operator norm (required to be at least 1, which also
    keeps the logarithm's argument above 1).
    """
    n = req.class_norm
    main = (req.K / math.sqrt(req.m)) * (
        14.0 * n + 0.5 * req.b * math.sqrt(math.log(16.0 * req.m * n * n))
    )
    return main + req.b * math.sqrt(math.log(1.0 / req.delta) / (2.0 * req.m))


def kmeans_bound(req: BoundRequest) -> float:
    """Sharper nearest-center bound for unit-norm centers:

        K sqrt(18 pi / m) + sqrt(8 ln(1/delta) / m)
    """
    return req.K * math.sqrt(18.0 * math.pi / req.m) + math.sqrt(
        8.0 * math.log(1.0 / req.delta) / req.m
    )


def nmf_bound(req: BoundRequest) -> float:
    """Nonnegative scheme bound; the linear-K bound at class norm sqrt(K), b = 1:

        (K / sqrt(m)) (14 sqrt(K) + (1/2) sqrt(ln(16 m K))) + sqrt(ln(1/delta) / (2m))
    """
    rk = math.sqrt(req.K)
    main = (req.K / math.sqrt(req.m)) * (
        14.0 * rk + 0.5 * math.sqrt(math.log(16.0 * req.m * req.K))
    )
    return main + math.sqrt(math.log(1.0 / req.delta) / (2.0 * req.m))


def sparse_bound(req: BoundRequest) -> float:
    """p-ball scheme bound; the linear-K bound at class norm K^(1 - 1/p), b = 1:

        (K / sqrt(m)) (14 K^(1-1/p) + (1/2) sqrt(ln(16 m K^(2-2/p))))
            + sqrt(ln(1/delta) / (2m))

    Smaller p gives a smaller bound; p = 1 is the best of the family.
    """
    if req.p is None:
        raise ValueError("sparse_bound needs the ball exponent p")
    a = float(req.K) ** (1.0 - 1.0 / req.p)
    main = (req.K / math.sqrt(req.m)) * (
        14.0 * a
        + 0.5 * math.sqrt(math.log(16.0 * req.m * float(req.K) ** (2.0 - 2.0 / req.p)))
    )
    return main + math.sqrt(math.log(1.0 / req.delta) / (2.0 * req.m))


def finite_dim_bound(req: BoundRequest) -> float:
    """Dimension-dependent bound, useful when d K is small relative to m:

        (b/2) sqrt(d K ln(16 m n^2) / m) + 8 n / sqrt(m) + b sqrt(ln(1/delta) / (2m))
    """
    if req.d is None:
        raise ValueError("finite_dim_bound needs the ambient dimension d")
    n = req.class_norm
    return (
        0.5 * req.b * math.sqrt(req.d * req.K * math.log(16.0 * req.m * n * n) / req.m)
        + 8.0 * n / math.sqrt(req.m)
        + req.b * math.sqrt(math.log(1.0 / req.delta) / (2.0 * req.m))
    )


def pca_rademacher(K: int, m: int) -> float:
    """Rademacher complexity term for rank-K orthogonal projections: 2 sqrt(K/m)."""
    if K < 1 or m < 1:
        raise ValueError("K and m must be at least 1")
    return 2.0 * math.sqrt(K / m)


def pca_bound(req: BoundRequest) -> float:
    """Full spectral-scheme deviation bound: the Rademacher term plus the
    confidence term at range 1."""
    return pca_rademacher(req.K, req.m) + math.sqrt(
        math.log(1.0 / req.delta) / (2.0 * req.m)
    )


@dataclass(frozen=True)
class BoundReport:
    """Values of every applicable bound for one request, plus the winner.

    A field is None when the bound's hypotheses do not hold for the request
    (e.g. the sharper nearest-center bound needs unit-capped centers, the
    quadratic-K bound needs a codebook inside the unit ball).  tightest names
    the smallest applicable value; ties keep the declaration order below.
    """

    thm1: float | None = None
    thm2: float | None = None
    thm4_kmeans: float | None = None
    nmf: float | None = None
    sparse: float | None = None
    pca_rad: float | None = None
    finite_dim: float | None = None
    tightest: str = ""

    _ORDER = ("thm1", "thm2", "thm4_kmeans", "nmf", "sparse", "pca_rad", "finite_dim")

    def to_dict(self) -> dict:
        out = {}
        for name in self._ORDER:
            v = getattr(self, name)
            if v is not None:
                out[name] = float(v)
        out["tightest"] = self.tightest
        return out


def request_for_scheme(scheme: SchemeSpec, m: int, delta: float,
                       d: int | None = None) -> BoundRequest:
    """Fill a BoundRequest with the scheme's own class norm and error range."""
    return BoundRequest(
        K=scheme.K,
        m=m,
        delta=delta,
        c=scheme.c,
        b=range_bound(scheme),
        class_norm=max(class_norm(scheme), 1.0),
        p=scheme.p,
        d=d,
    )


def evaluate_bounds(req: BoundRequest, kind: SchemeKind | None = None) -> BoundReport:
    """Evaluate every bound whose hypotheses hold and pick the tightest.

    kind narrows the report to bounds valid for that scheme; None means a
    custom request, for which only the two generic bounds (and, given d, the
    dimension-dependent one) apply, with the caller vouching that the
    codebook sits inside the unit ball.
    """
    values: dict[str, float | None] = {k: None for k in BoundReport._ORDER}
    if kind is None:
        values["thm1"] = theorem1_bound(req)
        values["thm2"] = theorem2_bound(req)
    elif kind is SchemeKind.PCA:
        values["thm1"] = theorem1_bound(req)
        values["thm2"] = theorem2_bound(req)
        values["pca_rad"] = pca_bound(req)
    elif kind is SchemeKind.KMEANS:
        values["thm1"] = theorem1_bound(req)
        values["thm2"] = theorem2_bound(req)
        if req.c == 1.0:
            values["thm4_kmeans"] = kmeans_bound(req)
    elif kind is SchemeKind.NMF:
        values["thm1"] = theorem1_bound(req)
        values["thm2"] = theorem2_bound(req)
        values["nmf"] = nmf_bound(req)
    elif kind is SchemeKind.SPARSE_LP:
        if req.p is None:
            raise ValueError("a p-ball request needs the exponent p")
        if req.p <= 2.0:
            # for p > 2 the codebook pokes outside the unit ball, so the
            # quadratic-K bound's hypothesis fails
            values["thm1"] = theorem1_bound(req)
        values["thm2"] = theorem2_bound(req)
        values["sparse"] = sparse_bound(req)
    else:
        raise ValueError(f"unknown scheme kind {kind}")
    if req.d is not None:
        values["finite_dim"] = finite_dim_bound(req)
    tight = ""
    best = math.inf
    for name in BoundReport._ORDER:
        v = values[name]
        if v is not None and v < best:
            best = v
            tight = name
    return BoundReport(tightest=tight, **values)
