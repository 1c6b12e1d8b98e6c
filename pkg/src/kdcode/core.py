"""Core types and scheme-level quantities for constrained K-dimensional coding.

A coding scheme pairs a codebook Y in R^K with a constraint set of linear maps
T: R^K -> R^d.  Everything downstream (encoders, trainers, bound evaluation)
works against the types defined here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "SchemeKind",
    "SchemeSpec",
    "DataPoint",
    "Dataset",
    "Dictionary",
    "Code",
    "Tolerances",
    "TOL",
    "DatasetFormatError",
    "DatasetParseError",
    "EmptyDatasetError",
    "DimensionMismatchError",
    "InvalidDictionaryError",
    "load_dataset",
    "save_dictionary",
    "load_dictionary",
    "codebook_norm",
    "class_norm",
    "code_in_codebook",
    "as_coords",
    "derive_seed",
]


class DatasetFormatError(ValueError):
    """Rows are structurally malformed (ragged lengths, wrong container)."""


class DatasetParseError(ValueError):
    """A row entry could not be read as a real number."""


class EmptyDatasetError(ValueError):
    """The source contained no rows."""


class DimensionMismatchError(ValueError):
    """Operands live in different ambient dimensions."""


class InvalidDictionaryError(ValueError):
    """Dictionary columns violate the scheme's constraint set."""


@dataclass
class Tolerances:
    """Numerical tolerances used across the package.

    All feasibility and consistency checks read from the module-level ``TOL``
    instance, so a caller who needs looser or tighter slack can adjust it in
    one place.
    """

    unit_ball: float = 1e-12          # data point norm <= 1 + unit_ball
    orthonormal: float = 1e-10        # isometry columns: |C'C - I| max entry
    unit_column: float = 1e-10        # unit-norm column slack
    nonneg_inner: float = 1e-12       # pairwise column inner products >= -this
    column_cap: float = 1e-12         # column norm <= cap + this
    code_ball: float = 1e-9           # code norm <= radius + this
    code_nonneg: float = 1e-12        # nonnegative code coordinate slack
    grad_norm: float = 1e-10          # projected-gradient stopping threshold
    objective_decrease: float = 1e-12 # ball-constrained solver stopping threshold
    risk_step: float = 1e-12          # allowed per-step increase in a risk trace


TOL = Tolerances()

MAX_SOLVER_ITERS = 10000

_U64 = (1 << 64) - 1


class SchemeKind(str, Enum):
    PCA = "pca"
    KMEANS = "kmeans"
    NMF = "nmf"
    SPARSE_LP = "sparse"


@dataclass(frozen=True)
class SchemeSpec:
    """Which codebook/constraint pair is in play.

    p is the ball exponent for the sparse scheme (required there, meaningless
    elsewhere).  c caps the dictionary column norms and only varies for the
    nearest-center scheme; the other schemes pin their column norms to 1.
    """

    kind: SchemeKind
    K: int
    p: float | None = None
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if self.c <= 0:
            raise ValueError(f"column norm cap c must be positive, got {self.c}")
        if self.kind is SchemeKind.SPARSE_LP:
            if self.p is None:
                raise ValueError("sparse scheme requires the ball exponent p")
            if not (self.p >= 1):
                raise ValueError(f"ball exponent p must satisfy p >= 1, got {self.p}")


def as_coords(x, d: int | None = None) -> np.ndarray:
    """Coerce a point (DataPoint, sequence, or array) to a float vector."""
    v = np.asarray(getattr(x, "coords", x), dtype=float)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-d point, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise DimensionMismatchError(f"point has dimension {v.shape[0]}, expected {d}")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DataPoint:
    """A single observation, constrained to the unit ball."""

    coords: np.ndarray

    def __post_init__(self):
        v = _frozen(as_coords(self.coords))
        if float(np.linalg.norm(v)) > 1.0 + TOL.unit_ball:
            raise ValueError(
                f"point norm {float(np.linalg.norm(v)):.6g} exceeds the unit ball"
            )
        object.__setattr__(self, "coords", v)

    @property
    def d(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class Dataset:
    """An ordered sample of points, one row each, all inside the unit ball."""

    points: np.ndarray

    def __post_init__(self):
        X = np.array(self.points, dtype=float)
        if X.ndim != 2:
            raise DatasetFormatError(f"expected a 2-d row matrix, got shape {X.shape}")
        if X.shape[0] < 1:
            raise EmptyDatasetError("dataset has no rows")
        norms = np.linalg.norm(X, axis=1)
        worst = float(norms.max())
        if worst > 1.0 + TOL.unit_ball:
            raise ValueError(
                f"row norm {worst:.6g} exceeds the unit ball; "
                "load with normalize=True to rescale"
            )
        object.__setattr__(self, "points", _frozen(X))

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __iter__(self):
        for row in self.points:
            yield DataPoint(row)


@dataclass(frozen=True)
class Dictionary:
    """K columns in R^d defining the linear map T of a coding scheme.

    columns has shape (d, K); column k is the image of the k-th basis code.
    Construction validates the scheme's constraint set and raises
    InvalidDictionaryError on violation.
    """

    columns: np.ndarray
    scheme: SchemeSpec

    def __post_init__(self):
        C = np.array(self.columns, dtype=float)
        if C.ndim != 2:
            raise InvalidDictionaryError(f"columns must be 2-d, got shape {C.shape}")
        if C.shape[1] != self.scheme.K:
            raise InvalidDictionaryError(
                f"expected {self.scheme.K} columns, got {C.shape[1]}"
            )
        object.__setattr__(self, "columns", _frozen(C))
        self._check_constraints()

    def _check_constraints(self):
        C = self.columns
        kind = self.scheme.kind
        if kind is SchemeKind.PCA:
            gram = C.T @ C
            off = np.abs(gram - np.eye(self.scheme.K)).max()
            if off > TOL.orthonormal:
                raise InvalidDictionaryError(
                    f"columns are not orthonormal (max Gram deviation {off:.3g})"
                )
        elif kind is SchemeKind.KMEANS:
            worst = float(np.linalg.norm(C, axis=0).max())
            if worst > self.scheme.c + TOL.column_cap:
                raise InvalidDictionaryError(
                    f"column norm {worst:.6g} exceeds the cap c={self.scheme.c}"
                )
        elif kind is SchemeKind.NMF:
            norms = np.linalg.norm(C, axis=0)
            if np.abs(norms - 1.0).max() > TOL.unit_column:
                raise InvalidDictionaryError("columns must have unit norm")
            gram = C.T @ C
            if gram.min() < -TOL.nonneg_inner:
                raise InvalidDictionaryError(
                    f"column inner products must be nonnegative (min {gram.min():.3g})"
                )
        elif kind is SchemeKind.SPARSE_LP:
            worst = float(np.linalg.norm(C, axis=0).max())
            if worst > 1.0 + TOL.column_cap:
                raise InvalidDictionaryError(
                    f"column norm {worst:.6g} exceeds 1"
                )

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def K(self) -> int:
        return self.columns.shape[1]


@dataclass(frozen=True)
class Code:
    """Coefficients of one encoded point, a member of the scheme's codebook."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(as_coords(self.coeffs)))

    @property
    def K(self) -> int:
        return self.coeffs.shape[0]


def code_in_codebook(coeffs, scheme: SchemeSpec) -> bool:
    """Check codebook membership of a coefficient vector, up to tolerance."""
    y = as_coords(getattr(coeffs, "coeffs", coeffs), scheme.K)
    kind = scheme.kind
    if kind is SchemeKind.KMEANS:
        hits = np.isclose(y, 1.0, atol=TOL.code_ball)
        return bool(hits.sum() == 1 and np.abs(y[~hits]).max(initial=0.0) <= TOL.code_ball)
    if kind is SchemeKind.PCA:
        return float(np.linalg.norm(y)) <= 1.0 + TOL.code_ball
    if kind is SchemeKind.NMF:
        return float(y.min()) >= -TOL.code_nonneg
    if kind is SchemeKind.SPARSE_LP:
        return float(np.sum(np.abs(y) ** scheme.p) ** (1.0 / scheme.p)) <= 1.0 + TOL.code_ball
    raise ValueError(f"unknown scheme kind {kind}")


# ---------------------------------------------------------------------------
# dataset I/O


def _parse_rows(text: str, source: str) -> list[list[float]]:
    rows: list[list[float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("["):
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(f"{source}:{lineno}: invalid JSON row: {exc}") from exc
            if not isinstance(entry, list):
                raise DatasetFormatError(f"{source}:{lineno}: JSON row is not an array")
            vals = []
            for v in entry:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise DatasetParseError(
                        f"{source}:{lineno}: non-numeric entry {v!r}"
                    )
                vals.append(float(v))
            rows.append(vals)
        else:
            vals = []
            for tok in line.split(","):
                try:
                    vals.append(float(tok))
                except ValueError as exc:
                    raise DatasetParseError(
                        f"{source}:{lineno}: non-numeric entry {tok.strip()!r}"
                    ) from exc
            rows.append(vals)
    return rows


def load_dataset(path, normalize: bool = False) -> Dataset:
    """Read a dataset from CSV or line-delimited JSON arrays.

    Every line is one point; CSV rows are comma-separated with no header,
    JSON rows are arrays of numbers.  With normalize=True the whole sample is
    divided by the largest point norm so it lands in the unit ball; without
    it, any row outside the ball is rejected.

    Raises DatasetFormatError / DatasetParseError / EmptyDatasetError on
    malformed input.
    """
    p = Path(path)
    rows = _parse_rows(p.read_text(), p.name)
    if not rows:
        raise EmptyDatasetError(f"{p.name}: no data rows")
    width = len(rows[0])
    if width == 0:
        raise DatasetFormatError(f"{p.name}: empty rows")
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DatasetFormatError(
                f"{p.name}: row {i + 1} has {len(r)} entries, expected {width}"
            )
    X = np.asarray(rows, dtype=float)
    if normalize:
        top = float(np.linalg.norm(X, axis=1).max())
        if top > 0.0:
            X = X / top
    return Dataset(X)


# ---------------------------------------------------------------------------
# dictionary persistence


def save_dictionary(dictionary: Dictionary, path) -> None:
    """Write a dictionary to JSON (scheme, shape, and per-column coordinates)."""
    spec = dictionary.scheme
    obj = {
        "scheme": spec.kind.value,
        "K": spec.K,
        "d": dictionary.d,
        "c": spec.c,
        "columns": [list(map(float, dictionary.columns[:, k])) for k in range(spec.K)],
    }
    if spec.p is not None:
        obj["p"] = spec.p
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_dictionary(path) -> Dictionary:
    """Read a dictionary written by save_dictionary, re-validating constraints."""
    obj = json.loads(Path(path).read_text())
    spec = SchemeSpec(
        kind=SchemeKind(obj["scheme"]),
        K=int(obj["K"]),
        p=obj.get("p"),
        c=float(obj.get("c", 1.0)),
    )
    cols = np.asarray(obj["columns"], dtype=float).T
    if cols.shape != (int(obj["d"]), spec.K):
        raise InvalidDictionaryError(
            f"columns shape {cols.shape} does not match header (d={obj['d']}, K={obj['K']})"
        )
    return Dictionary(cols, spec)


# ---------------------------------------------------------------------------
# scheme-level norms


def class_norm(scheme: SchemeSpec) -> float:
    """Worst-case operator norm sup ||Ty|| over the scheme's whole class.

    This is the quantity the deviation bounds consume: 1 for isometries, the
    column cap c for nearest-center dictionaries, sqrt(K) for nonnegative
    unit-column dictionaries (attained by fully coherent columns), and
    K^(1 - 1/p) for column-capped dictionaries over the p-ball.
    """
    kind = scheme.kind
    if kind is SchemeKind.PCA:
        return 1.0
    if kind is SchemeKind.KMEANS:
        return float(scheme.c)
    if kind is SchemeKind.NMF:
        return math.sqrt(scheme.K)
    if kind is SchemeKind.SPARSE_LP:
        return float(scheme.K) ** (1.0 - 1.0 / scheme.p)
    raise ValueError(f"unknown scheme kind {kind}")


def _dual_align(g: np.ndarray, p: float) -> np.ndarray:
    # maximizer of <u, g> over the unit p-ball: dual-exponent rescaling of g
    if p == 1.0:
        u = np.zeros_like(g)
        u[np.argmax(np.abs(g))] = np.sign(g[np.argmax(np.abs(g))]) or 1.0
        return u
    q = p / (p - 1.0)
    a = np.abs(g)
    if a.max() <= 0.0:
        u = np.zeros_like(g)
        u[0] = 1.0
        return u
    u = np.sign(g) * (a / a.max()) ** (q - 1.0)
    return u / float(np.sum(np.abs(u) ** p) ** (1.0 / p))


def codebook_norm(dictionary: Dictionary) -> float:
    """Largest image norm sup ||Ty|| over this dictionary's codebook.

    Closed form where one exists (largest singular value for the ball
    codebook, largest column norm for basis and 1-ball codebooks); iterative
    ascent restricted to the feasible set otherwise.
    """
    C = dictionary.columns
    scheme = dictionary.scheme
    kind = scheme.kind
    if kind is SchemeKind.PCA:
        return float(np.linalg.svd(C, compute_uv=False)[0])
    if kind is SchemeKind.KMEANS:
        return float(np.linalg.norm(C, axis=0).max())
    if kind is SchemeKind.NMF:
        # sup over {y >= 0, ||y|| <= 1}: projected power iteration on the Gram
        # matrix, which has nonnegative entries for a feasible dictionary.
        G = np.clip(C.T @ C, 0.0, None)
        y = np.full(scheme.K, 1.0 / math.sqrt(scheme.K))
        lam = 0.0
        for _ in range(500):
            z = np.clip(G @ y, 0.0, None)
            nz = float(np.linalg.norm(z))
            if nz == 0.0:
                return 0.0
            y = z / nz
            new = float(y @ G @ y)
            if abs(new - lam) <= 1e-15 * max(1.0, new):
                lam = new
                break
            lam = new
        return min(math.sqrt(max(lam, 0.0)), class_norm(scheme))
    if kind is SchemeKind.SPARSE_LP:
        p = float(scheme.p)
        if p == 1.0:
            return float(np.linalg.norm(C, axis=0).max())
        if p == 2.0:
            return float(np.linalg.svd(C, compute_uv=False)[0])
        # gradient ascent on ||Ty||^2 over the p-sphere: each step moves to
        # the p-ball point best aligned with the gradient, which never
        # decreases the objective; several starts guard against flat spots.
        G = C.T @ C
        K = scheme.K
        starts = [np.full(K, K ** (-1.0 / p))]
        for k in range(K):
            e = np.zeros(K)
            e[k] = 1.0
            starts.append(e)
        best = 0.0
        for y in starts:
            val = float(y @ G @ y)
            for _ in range(500):
                g = G @ y
                if float(np.abs(g).max()) == 0.0:
                    break
                y_new = _dual_align(g, p)
                val_new = float(y_new @ G @ y_new)
                if val_new <= val * (1.0 + 1e-15):
                    break
                y, val = y_new, val_new
            best = max(best, val)
        return min(math.sqrt(max(best, 0.0)), class_norm(scheme))
    raise ValueError(f"unknown scheme kind {kind}")


def derive_seed(base: int, *key: int) -> int:
    """Fold a base seed and an index path into one well-mixed 64-bit seed.

    Used to hand independent, reproducible streams to restarts and trials so
    that evaluation order (serial or parallel) cannot change results.  The
    path length is folded in as well: SeedSequence reads its entropy list as
    one integer, so without it a path would collide with the same path
    extended by zeros.
    """
    words = [int(base) & _U64, len(key)] + [int(k) & _U64 for k in key]
    ss = np.random.SeedSequence(words)
    return int(ss.generate_state(1, np.uint64)[0])
