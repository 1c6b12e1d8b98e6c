"""Encoders: best reconstruction of a point by a dictionary over its codebook.

Each scheme solves min over codebook y of ||x - Ty||^2.  The basis codebook
is an exact argmin over columns; the ball codebooks are convex programs
solved by projected gradient with a fixed 1/L step.  A grid-search oracle is
included so tests can certify optimality without trusting the solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    MAX_SOLVER_ITERS,
    TOL,
    Code,
    Dataset,
    Dictionary,
    SchemeKind,
    SchemeSpec,
    as_coords,
)

__all__ = [
    "EncodeResult",
    "encode",
    "encode_kmeans",
    "encode_pca",
    "encode_nnls",
    "encode_lp_ball",
    "empirical_risk",
    "oracle_encode",
    "range_bound",
    "project_l1_ball",
    "project_l2_ball",
    "project_lp_ball",
]


@dataclass(frozen=True)
class EncodeResult:
    """Outcome of one encode call.

    error is the achieved squared reconstruction distance ||x - T code||^2.
    converged is False when the solver hit its iteration cap before meeting
    its stopping rule; the code returned is still the best iterate found.
    """

    code: Code
    error: float
    iterations: int
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "code": [float(v) for v in self.code.coeffs],
            "error": float(self.error),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


def range_bound(scheme: SchemeSpec) -> float:
    """Worst-case reconstruction error over unit-ball data for the scheme.

    Codebooks containing the zero code give errors at most ||x||^2 <= 1.  The
    basis codebook has no zero code, so the error can reach (1 + c)^2.
    """
    if scheme.kind is SchemeKind.KMEANS:
        return (1.0 + float(scheme.c)) ** 2
    return 1.0


# ---------------------------------------------------------------------------
# projections onto code constraint sets


def project_l1_ball(v, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto the l1 ball of the given radius.

    Sort-and-threshold construction: soft-threshold |v| at the level theta
    that makes the result sum to the radius.  O(K log K).
    """
    v = np.asarray(v, dtype=float)
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = j[u - (css - radius) / j > 0][-1]
    theta = (css[rho - 1] - radius) / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_l2_ball(v, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto the l2 ball: rescale when outside."""
    v = np.asarray(v, dtype=float)
    n = float(np.linalg.norm(v))
    if n <= radius:
        return v.copy()
    return v * (radius / n)


def _lp_kkt_point(a: np.ndarray, lam: np.ndarray, p: float,
                  warm: np.ndarray | None = None) -> np.ndarray:
    # coordinatewise root of t + lam * p * t^(p-1) = a on [0, a]: safeguarded
    # Newton (the residual is monotone with slope >= 1, so |t - root| <= |f|)
    lam2 = lam[None, :]
    lo = np.zeros_like(a)
    hi = a.copy()
    t = np.clip(warm, 0.0, a) if warm is not None else a.copy()
    for _ in range(60):
        with np.errstate(divide="ignore", invalid="ignore"):
            f = t + lam2 * p * t ** (p - 1.0) - a
            if float(np.abs(f).max(initial=0.0)) <= 1e-15:
                break
            lo = np.where(f < 0.0, t, lo)
            hi = np.where(f > 0.0, t, hi)
            fp = 1.0 + lam2 * p * (p - 1.0) * t ** (p - 2.0)
            tn = t - f / fp
        stuck = ~np.isfinite(tn) | (tn <= lo) | (tn >= hi)
        t = np.where(stuck & (np.abs(f) > 1e-15), 0.5 * (lo + hi), np.where(stuck, t, tn))
    return t


def _project_lp_cols(V: np.ndarray, p: float) -> np.ndarray:
    """Columnwise Euclidean projection onto the unit lp ball, 1 <= p < inf."""
    if p == 1.0:
        A = np.abs(V)
        feas = A.sum(axis=0) <= 1.0
        U = -np.sort(-A, axis=0)
        css = np.cumsum(U, axis=0)
        j = np.arange(1, V.shape[0] + 1)[:, None]
        cond = U - (css - 1.0) / j > 0
        rho = V.shape[0] - 1 - np.argmax(cond[::-1, :], axis=0)
        cols = np.arange(V.shape[1])
        theta = (css[rho, cols] - 1.0) / (rho + 1.0)
        W = np.sign(V) * np.maximum(A - theta[None, :], 0.0)
        W[:, feas] = V[:, feas]
        return W
    if p == 2.0:
        norms = np.linalg.norm(V, axis=0)
        scale = np.where(norms > 1.0, 1.0 / np.maximum(norms, 1e-300), 1.0)
        return V * scale[None, :]
    A = np.abs(V)
    pnorm = (A ** p).sum(axis=0)
    out = V.copy()
    bad = pnorm > 1.0
    if not bad.any():
        return out
    Ab = A[:, bad]
    nb = Ab.shape[1]
    # outer safeguarded Newton on the multiplier: psi(lam) = sum y(lam)^p - 1
    # decreases from psi(0) > 0, so a bracket [lam_lo, lam_hi] is maintained
    lam_lo = np.zeros(nb)
    lam_hi = np.ones(nb)
    y = _lp_kkt_point(Ab, lam_hi, p)
    for _ in range(200):
        over = (y ** p).sum(axis=0) > 1.0
        if not over.any():
            break
        lam_hi[over] *= 4.0
        y = _lp_kkt_point(Ab, lam_hi, p, warm=y)
    lam = 0.5 * lam_hi
    for _ in range(100):
        y = _lp_kkt_point(Ab, lam, p, warm=y)
        psi = (y ** p).sum(axis=0) - 1.0
        if float(np.abs(psi).max(initial=0.0)) <= 1e-14:
            break
        lam_lo = np.where(psi > 0.0, lam, lam_lo)
        lam_hi = np.where(psi < 0.0, lam, lam_hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            yp1 = y ** (p - 1.0)
            slope = 1.0 + lam[None, :] * p * (p - 1.0) * y ** (p - 2.0)
            dpsi = (-p * p * yp1 * yp1 / slope).sum(axis=0)
            ln = lam - psi / dpsi
        guard = ~np.isfinite(ln) | (ln <= lam_lo) | (ln >= lam_hi)
        lam = np.where(guard, 0.5 * (lam_lo + lam_hi), ln)
    y = _lp_kkt_point(Ab, lam, p, warm=y)
    scale = np.maximum((y ** p).sum(axis=0) ** (1.0 / p), 1.0)
    out[:, bad] = np.sign(V[:, bad]) * (y / scale[None, :])
    return out


def project_lp_ball(v, p: float, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto the lp ball of the given radius, p >= 1.

    p = 1 uses the exact sort-and-threshold rule, p = 2 rescales radially,
    and other exponents solve the Lagrangian optimality system by nested
    bisection on the multiplier.
    """
    if p < 1.0:
        raise ValueError(f"lp codebooks require p >= 1, got {p}")
    if not math.isfinite(p):
        raise ValueError("lp codebooks require finite p")
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    v = np.asarray(v, dtype=float)
    return radius * _project_lp_cols((v / radius)[:, None], p)[:, 0]


# ---------------------------------------------------------------------------
# batch solvers (columns of Y evolve independently, one per data point)


def _step_length(T: np.ndarray) -> float:
    smax = float(np.linalg.svd(T, compute_uv=False)[0]) if T.size else 0.0
    return smax * smax


def _nnls_codes(T: np.ndarray, X: np.ndarray):
    """Nonnegative least squares for every row of X against dictionary T.

    Projected gradient with constant step 1/L, L the squared largest singular
    value of T, warm-started at the clipped unconstrained solution.  A point
    stops once its projected-gradient norm drops to TOL.grad_norm.
    """
    n = X.shape[0]
    K = T.shape[1]
    Xt = X.T
    L = _step_length(T)
    if L <= 0.0:
        Y = np.zeros((K, n))
        errors = (Xt ** 2).sum(axis=0)
        return Y, errors, np.zeros(n, dtype=int), np.ones(n, dtype=bool)
    G = T.T @ T
    B = T.T @ Xt
    Y = np.clip(np.linalg.lstsq(T, Xt, rcond=None)[0], 0.0, None)
    done = np.zeros(n, dtype=bool)
    iters = np.full(n, MAX_SOLVER_ITERS, dtype=int)
    steps = 0
    while True:
        active = np.flatnonzero(~done)
        Ya = Y[:, active]
        grad = G @ Ya - B[:, active]
        pg = np.where(Ya > 0.0, grad, np.minimum(grad, 0.0))
        conv = np.linalg.norm(pg, axis=0) <= TOL.grad_norm
        hit = active[conv]
        done[hit] = True
        iters[hit] = steps
        if done.all() or steps >= MAX_SOLVER_ITERS:
            break
        rem = active[~conv]
        Y[:, rem] = np.clip(Y[:, rem] - grad[:, ~conv] / L, 0.0, None)
        steps += 1
    errors = ((T @ Y - Xt) ** 2).sum(axis=0)
    return Y, errors, iters, done


def _lp_codes(T: np.ndarray, X: np.ndarray, p: float):
    """lp-ball constrained least squares for every row of X.

    Projected gradient with constant step 1/L, warm-started at the projection
    of the unconstrained solution.  A point stops when its objective decrease
    falls below TOL.objective_decrease.
    """
    if p < 1.0:
        raise ValueError(f"lp codebooks require p >= 1, got {p}")
    n = X.shape[0]
    K = T.shape[1]
    Xt = X.T
    L = _step_length(T)
    if L <= 0.0:
        Y = np.zeros((K, n))
        errors = (Xt ** 2).sum(axis=0)
        return Y, errors, np.zeros(n, dtype=int), np.ones(n, dtype=bool)
    G = T.T @ T
    B = T.T @ Xt
    Y = _project_lp_cols(np.linalg.lstsq(T, Xt, rcond=None)[0], p)
    obj = ((T @ Y - Xt) ** 2).sum(axis=0)
    done = np.zeros(n, dtype=bool)
    iters = np.full(n, MAX_SOLVER_ITERS, dtype=int)
    steps = 0
    while not done.all() and steps < MAX_SOLVER_ITERS:
        active = np.flatnonzero(~done)
        Ya = Y[:, active]
        grad = G @ Ya - B[:, active]
        Ynew = _project_lp_cols(Ya - grad / L, p)
        new_obj = ((T @ Ynew - Xt[:, active]) ** 2).sum(axis=0)
        steps += 1
        Y[:, active] = Ynew
        conv = obj[active] - new_obj < TOL.objective_decrease
        obj[active] = new_obj
        hit = active[conv]
        done[hit] = True
        iters[hit] = steps
    errors = ((T @ Y - Xt) ** 2).sum(axis=0)
    return Y, errors, iters, done


def _batch_encode(dictionary: Dictionary, X: np.ndarray):
    """Encode every row of X; returns (codes (K, n), errors, iters, converged)."""
    T = dictionary.columns
    kind = dictionary.scheme.kind
    n = X.shape[0]
    if kind is SchemeKind.KMEANS:
        d2 = ((X[:, :, None] - T[None, :, :]) ** 2).sum(axis=1)
        pick = np.argmin(d2, axis=1)
        Y = np.zeros((dictionary.K, n))
        Y[pick, np.arange(n)] = 1.0
        errors = d2[np.arange(n), pick]
        return Y, errors, np.zeros(n, dtype=int), np.ones(n, dtype=bool)
    if kind is SchemeKind.PCA:
        Y = T.T @ X.T
        errors = ((T @ Y - X.T) ** 2).sum(axis=0)
        return Y, errors, np.zeros(n, dtype=int), np.ones(n, dtype=bool)
    if kind is SchemeKind.NMF:
        return _nnls_codes(T, X)
    if kind is SchemeKind.SPARSE_LP:
        return _lp_codes(T, X, float(dictionary.scheme.p))
    raise ValueError(f"unknown scheme kind {kind}")


# ---------------------------------------------------------------------------
# public single-point encoders


def _finish(T: np.ndarray, x: np.ndarray, y: np.ndarray, iterations: int,
            converged: bool) -> EncodeResult:
    err = float(((x - T @ y) ** 2).sum())
    return EncodeResult(Code(y), err, int(iterations), bool(converged))


def encode_kmeans(dictionary: Dictionary, x) -> EncodeResult:
    """Nearest column in squared distance; ties go to the smallest index."""
    x = as_coords(x, dictionary.d)
    T = dictionary.columns
    d2 = ((T - x[:, None]) ** 2).sum(axis=0)
    k = int(np.argmin(d2))
    y = np.zeros(dictionary.K)
    y[k] = 1.0
    return _finish(T, x, y, 0, True)


def encode_pca(dictionary: Dictionary, x) -> EncodeResult:
    """Orthogonal projection: code = T'x, closed form."""
    x = as_coords(x, dictionary.d)
    T = dictionary.columns
    y = T.T @ x
    return _finish(T, x, y, 0, True)


def encode_nnls(dictionary: Dictionary, x) -> EncodeResult:
    """Nonnegative least-squares code for one point (see _nnls_codes)."""
    x = as_coords(x, dictionary.d)
    Y, _, iters, conv = _nnls_codes(dictionary.columns, x[None, :])
    return _finish(dictionary.columns, x, Y[:, 0], int(iters[0]), bool(conv[0]))


def encode_lp_ball(dictionary: Dictionary, x, p: float) -> EncodeResult:
    """lp-ball constrained code for one point (see _lp_codes)."""
    x = as_coords(x, dictionary.d)
    Y, _, iters, conv = _lp_codes(dictionary.columns, x[None, :], float(p))
    return _finish(dictionary.columns, x, Y[:, 0], int(iters[0]), bool(conv[0]))


def encode(dictionary: Dictionary, x) -> EncodeResult:
    """Encode one point under the dictionary's own scheme."""
    kind = dictionary.scheme.kind
    if kind is SchemeKind.KMEANS:
        return encode_kmeans(dictionary, x)
    if kind is SchemeKind.PCA:
        return encode_pca(dictionary, x)
    if kind is SchemeKind.NMF:
        return encode_nnls(dictionary, x)
    if kind is SchemeKind.SPARSE_LP:
        return encode_lp_ball(dictionary, x, float(dictionary.scheme.p))
    raise ValueError(f"unknown scheme kind {kind}")


def empirical_risk(dictionary: Dictionary, data: Dataset) -> float:
    """Mean reconstruction error over the sample.

    The per-point errors are accumulated left to right in sample order, so
    the value is independent of how the encodes themselves were scheduled.
    """
    _, errors, _, _ = _batch_encode(dictionary, data.points)
    total = 0.0
    for e in errors:
        total += float(e)
    return total / data.m


# ---------------------------------------------------------------------------
# grid-search oracle


def _signed_power(u, exponent: float):
    """Map sphere coordinates onto an lp sphere: u_i -> sign(u_i)|u_i|^e.

    With e = 2/p, sum |y_i|^p = sum u_i^2 = 1, so unit vectors u land exactly
    on the lp unit sphere.
    """
    if exponent == 1.0:
        return np.asarray(u, dtype=float)
    return np.sign(u) * np.abs(u) ** exponent


def _best_on_grid(T, x, Y):
    """Lowest reconstruction error over candidate codes (columns of Y)."""
    errs = ((T @ Y - x[:, None]) ** 2).sum(axis=0)
    j = int(np.argmin(errs))
    return float(errs[j]), Y[:, j].copy(), Y.shape[1]


def oracle_encode(dictionary: Dictionary, x, grid_resolution: float = 1e-3) -> EncodeResult:
    """Brute-force reference encoder for small K (K <= 3).

    Two sweeps, each refined around its incumbent until the spacing drops
    well below grid_resolution.  A box grid over the solid codebook catches
    optima where the gradient vanishes: interior points and points pinned on
    the axis-aligned faces of the nonnegative codebook, both of which the
    grid locates to second order.  Optima on the curved lp sphere are
    instead found by gridding the sphere itself through the signed-power
    angle map, because near such a point the gradient does not vanish and
    interior grid points would lag by a full step.  The objective is convex
    over a convex codebook, so refinement cannot lock onto a spurious basin.
    Slow and simple on purpose: tests use it to certify the iterative
    encoders.
    """
    scheme = dictionary.scheme
    if scheme.K > 3:
        raise ValueError(f"oracle_encode supports K <= 3, got K={scheme.K}")
    if grid_resolution <= 0:
        raise ValueError("grid_resolution must be positive")
    x = as_coords(x, dictionary.d)
    T = dictionary.columns
    K = scheme.K
    kind = scheme.kind

    if kind is SchemeKind.KMEANS:
        best_k = 0
        best_err = float(((x - T[:, 0]) ** 2).sum())
        for k in range(1, K):
            err = float(((x - T[:, k]) ** 2).sum())
            if err < best_err:
                best_k, best_err = k, err
        y = np.zeros(K)
        y[best_k] = 1.0
        return EncodeResult(Code(y), best_err, K, True)

    if kind is SchemeKind.NMF:
        lo, hi = 0.0, 1.0
        pexp = 2.0
        orthant = True
    elif kind is SchemeKind.PCA:
        lo, hi = -1.0, 1.0
        pexp = 2.0
        orthant = False
    else:
        lo, hi = -1.0, 1.0
        pexp = float(scheme.p)
        orthant = False
    feasible = lambda Yc: (np.abs(Yc) ** pexp).sum(axis=0) <= 1.0 + 1e-12

    best_y = np.zeros(K)   # zero code is feasible for every ball codebook
    best_err = float((x ** 2).sum())
    evals = 1

    # Sweep 1: shrinking box grid over the solid codebook.
    pts = 13
    center = np.full(K, 0.5 * (lo + hi))
    half = np.full(K, 0.5 * (hi - lo))
    extra_stages = 3
    while True:
        axes = [np.linspace(center[k] - half[k], center[k] + half[k], pts) for k in range(K)]
        mesh = np.meshgrid(*axes, indexing="ij")
        Yc = np.stack([m.ravel() for m in mesh], axis=0)
        np.clip(Yc, lo, hi, out=Yc)
        ok = feasible(Yc)
        if ok.any():
            err, y, n = _best_on_grid(T, x, Yc[:, ok])
            evals += n
            if err < best_err:
                best_err, best_y = err, y
        step = 2.0 * half / (pts - 1)
        if step.max() <= grid_resolution:
            if extra_stages == 0:
                break
            extra_stages -= 1
        center = best_y.copy()
        half = 1.5 * step

    # Sweep 2: shrinking angle grid over the lp sphere itself.
    target = grid_resolution / 16.0
    if K == 1:
        ends = np.array([[1.0]] if orthant else [[1.0], [-1.0]]).T
        err, y, n = _best_on_grid(T, x, ends)
        evals += n
        if err < best_err:
            best_err, best_y = err, y
    elif K == 2:
        a_lo, a_hi = (0.0, 0.5 * math.pi) if orthant else (0.0, 2.0 * math.pi)
        c, h = 0.5 * (a_lo + a_hi), 0.5 * (a_hi - a_lo)
        npts = 1025
        while True:
            th = np.linspace(max(a_lo, c - h), min(a_hi, c + h), npts)
            Ya = np.stack([_signed_power(np.cos(th), 2.0 / pexp),
                           _signed_power(np.sin(th), 2.0 / pexp)], axis=0)
            errs_all = ((T @ Ya - x[:, None]) ** 2).sum(axis=0)
            evals += Ya.shape[1]
            j = int(np.argmin(errs_all))
            if float(errs_all[j]) < best_err:
                best_err, best_y = float(errs_all[j]), Ya[:, j].copy()
            step = (min(a_hi, c + h) - max(a_lo, c - h)) / (npts - 1)
            if step <= target:
                break
            c = float(th[j])
            h = 2.0 * step
            npts = 65
    else:
        a_hi = 0.5 * math.pi if orthant else math.pi
        b_hi = 0.5 * math.pi if orthant else 2.0 * math.pi
        boxes = [(0.5 * a_hi, 0.5 * a_hi, 0.5 * b_hi, 0.5 * b_hi, 65, 129 if not orthant else 65)]
        while boxes:
            ca, ha, cb, hb, na, nb = boxes.pop()
            th = np.linspace(max(0.0, ca - ha), min(a_hi, ca + ha), na)
            ph = np.linspace(max(0.0, cb - hb), min(b_hi, cb + hb), nb)
            TH, PH = np.meshgrid(th, ph, indexing="ij")
            u = np.stack([np.sin(TH) * np.cos(PH),
                          np.sin(TH) * np.sin(PH),
                          np.cos(TH)], axis=0).reshape(3, -1)
            Ya = _signed_power(u, 2.0 / pexp)
            errs_all = ((T @ Ya - x[:, None]) ** 2).sum(axis=0)
            evals += Ya.shape[1]
            j = int(np.argmin(errs_all))
            if float(errs_all[j]) < best_err:
                best_err, best_y = float(errs_all[j]), Ya[:, j].copy()
            step_a = (min(a_hi, ca + ha) - max(0.0, ca - ha)) / (na - 1)
            step_b = (min(b_hi, cb + hb) - max(0.0, cb - hb)) / (nb - 1)
            if max(step_a, step_b) > target:
                ja, jb = divmod(j, nb)
                boxes.append((float(th[ja]), 2.0 * step_a, float(ph[jb]), 2.0 * step_b, 17, 17))

    return EncodeResult(Code(best_y), best_err, evals, True)
