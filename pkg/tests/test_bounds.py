"""Bound formulas: frozen hand values, identities, monotonicity, reporting."""

import math

import pytest

from kdcode import (
    BoundReport,
    BoundRequest,
    SchemeKind,
    SchemeSpec,
    evaluate_bounds,
    finite_dim_bound,
    kmeans_bound,
    nmf_bound,
    pca_bound,
    pca_rademacher,
    request_for_scheme,
    sparse_bound,
    theorem1_bound,
    theorem2_bound,
)

# Hand evaluations of the closed forms, computed independently of the library
# (same formulas, composed by hand with math.log/math.sqrt and frozen here).
HAND_THM1_UNIT = 0.167044          # c=1, K=1, m=10**4, delta=0.01
HAND_THM4 = 0.193318               # K=2, m=10**4, delta=0.1
HAND_THM2 = 1.5946806526998358     # K=1, m=100, delta=0.5, n=1, b=1
HAND_THM1_CAPPED = 0.3424736626212188   # c=1.5, K=2, m=10**5, delta=0.02
HAND_THM4_WIDE = 1.1578303153939884     # K=3, m=500, delta=0.25
HAND_NMF = 0.12170311716495014     # K=4, m=10**6, delta=0.05
HAND_SPARSE = 0.6699625070629519   # K=3, p=1.5, m=10**4, delta=0.1
HAND_FINITE_DIM = 0.16147146945749552   # K=2, m=10**4, delta=0.05, n=1, b=1, d=8
HAND_PCA = 0.22943525056288688     # K=4, m=400, delta=0.5


def test_hand_values_quadratic_k_bound():
    assert abs(theorem1_bound(BoundRequest(K=1, m=10**4, delta=0.01))
               - HAND_THM1_UNIT) <= 1e-6
    assert abs(theorem1_bound(BoundRequest(K=2, m=10**5, delta=0.02, c=1.5))
               - HAND_THM1_CAPPED) <= 1e-12


def test_hand_values_linear_k_bound():
    assert abs(theorem2_bound(BoundRequest(K=1, m=100, delta=0.5))
               - HAND_THM2) <= 1e-12


def test_hand_values_nearest_center_bound():
    assert abs(kmeans_bound(BoundRequest(K=2, m=10**4, delta=0.1))
               - HAND_THM4) <= 1e-6
    assert abs(kmeans_bound(BoundRequest(K=3, m=500, delta=0.25))
               - HAND_THM4_WIDE) <= 1e-12


def test_hand_values_scheme_bounds():
    assert abs(nmf_bound(BoundRequest(K=4, m=10**6, delta=0.05))
               - HAND_NMF) <= 1e-12
    assert abs(sparse_bound(BoundRequest(K=3, m=10**4, delta=0.1, p=1.5))
               - HAND_SPARSE) <= 1e-12
    assert abs(finite_dim_bound(BoundRequest(K=2, m=10**4, delta=0.05, d=8))
               - HAND_FINITE_DIM) <= 1e-12
    assert abs(pca_bound(BoundRequest(K=4, m=400, delta=0.5))
               - HAND_PCA) <= 1e-12


def test_rademacher_term_values():
    assert abs(pca_rademacher(4, 400) - 0.2) <= 1e-15
    assert pca_rademacher(1, 1) == 2.0
    assert abs(pca_rademacher(9, 10**4) - 0.06) <= 1e-15
    with pytest.raises(ValueError):
        pca_rademacher(0, 10)
    with pytest.raises(ValueError):
        pca_rademacher(10, 0)


def test_pca_bound_is_rademacher_plus_confidence():
    req = BoundRequest(K=3, m=900, delta=0.2)
    expect = pca_rademacher(3, 900) + math.sqrt(math.log(5.0) / 1800.0)
    assert abs(pca_bound(req) - expect) <= 1e-15


# ---------------------------------------------------------------------------
# substitution identities


def test_nmf_bound_is_linear_k_bound_at_sqrt_k():
    for K in (1, 2, 5, 17):
        for m in (10, 1000, 10**6):
            for delta in (0.5, 0.01):
                req = BoundRequest(K=K, m=m, delta=delta,
                                   class_norm=max(math.sqrt(K), 1.0))
                a = nmf_bound(req)
                b = theorem2_bound(req)
                assert abs(a - b) <= 1e-12 * max(1.0, a)


def test_sparse_bound_is_linear_k_bound_at_power_of_k():
    for K in (1, 2, 7):
        for p in (1.0, 1.5, 2.0, 3.0):
            for m in (10, 10**4):
                req = BoundRequest(K=K, m=m, delta=0.1, p=p,
                                   class_norm=max(float(K) ** (1.0 - 1.0 / p), 1.0))
                a = sparse_bound(req)
                b = theorem2_bound(req)
                assert abs(a - b) <= 1e-12 * max(1.0, a)


# ---------------------------------------------------------------------------
# shape of the formulas


def _all_bounds(K, m, delta):
    req = BoundRequest(K=K, m=m, delta=delta, p=1.5, d=6,
                       class_norm=max(float(K) ** (1.0 / 3.0), 1.0))
    return [
        theorem1_bound(req),
        theorem2_bound(req),
        kmeans_bound(req),
        nmf_bound(req),
        sparse_bound(req),
        finite_dim_bound(req),
        pca_bound(req),
    ]


def test_bounds_decrease_with_sample_size():
    ms = [10, 100, 1000, 10**4, 10**5, 10**6]
    for prev_m, next_m in zip(ms, ms[1:]):
        lo = _all_bounds(3, next_m, 0.05)
        hi = _all_bounds(3, prev_m, 0.05)
        assert all(a < b for a, b in zip(lo, hi))


def test_bounds_grow_with_k():
    for K in range(1, 12):
        narrow = _all_bounds(K, 10**4, 0.05)
        wide = _all_bounds(K + 1, 10**4, 0.05)
        # the spectral bound grows too; every entry is strictly increasing
        assert all(b > a for a, b in zip(narrow, wide))


def test_bounds_grow_as_confidence_tightens():
    deltas = [0.5, 0.1, 0.01, 1e-4]
    for loose, tight in zip(deltas, deltas[1:]):
        a = _all_bounds(2, 1000, loose)
        b = _all_bounds(2, 1000, tight)
        assert all(y > x for x, y in zip(a, b))


def test_nearest_center_bound_beats_quadratic_k_bound():
    for K in range(1, 9):
        for m in (30, 10**4):
            for delta in (0.3, 0.01):
                req = BoundRequest(K=K, m=m, delta=delta)
                assert kmeans_bound(req) < theorem1_bound(req)


def test_sparse_bound_grows_with_p():
    vals = [sparse_bound(BoundRequest(K=5, m=10**4, delta=0.1, p=p,
                                      class_norm=max(5.0 ** (1 - 1 / p), 1.0)))
            for p in (1.0, 1.5, 2.0, 4.0)]
    for a, b in zip(vals, vals[1:]):
        assert b > a


def test_bounds_are_positive():
    for v in _all_bounds(1, 10**6, 0.5):
        assert v > 0.0


# ---------------------------------------------------------------------------
# requests and reports


def test_request_for_scheme_fills_scheme_quantities():
    req = request_for_scheme(SchemeSpec(SchemeKind.KMEANS, 2), 100, 0.1)
    assert (req.b, req.class_norm, req.c) == (4.0, 1.0, 1.0)
    req = request_for_scheme(SchemeSpec(SchemeKind.KMEANS, 2, c=2.0), 100, 0.1)
    assert (req.b, req.class_norm) == (9.0, 2.0)
    req = request_for_scheme(SchemeSpec(SchemeKind.NMF, 4), 100, 0.1)
    assert (req.b, req.class_norm) == (1.0, 2.0)
    req = request_for_scheme(SchemeSpec(SchemeKind.SPARSE_LP, 4, p=1.0), 100, 0.1)
    assert (req.class_norm, req.p) == (1.0, 1.0)
    req = request_for_scheme(SchemeSpec(SchemeKind.PCA, 3), 100, 0.1, d=7)
    assert (req.b, req.class_norm, req.d) == (1.0, 1.0, 7)


def test_report_applicability_by_scheme():
    pca = evaluate_bounds(BoundRequest(K=1, m=10**4, delta=0.05), SchemeKind.PCA)
    assert pca.pca_rad is not None and pca.thm4_kmeans is None
    assert pca.tightest == "pca_rad"

    km = evaluate_bounds(BoundRequest(K=2, m=10**4, delta=0.1, b=4.0),
                         SchemeKind.KMEANS)
    assert km.thm4_kmeans is not None
    assert km.tightest == "thm4_kmeans"

    loose = evaluate_bounds(BoundRequest(K=2, m=10**4, delta=0.1, c=1.5, b=6.25,
                                         class_norm=1.5), SchemeKind.KMEANS)
    assert loose.thm4_kmeans is None

    nm = evaluate_bounds(BoundRequest(K=3, m=10**4, delta=0.1,
                                      class_norm=math.sqrt(3.0)), SchemeKind.NMF)
    assert nm.nmf is not None and nm.sparse is None

    sp2 = evaluate_bounds(BoundRequest(K=3, m=10**4, delta=0.1, p=2.0,
                                       class_norm=math.sqrt(3.0)),
                          SchemeKind.SPARSE_LP)
    assert sp2.thm1 is not None and sp2.sparse is not None

    sp3 = evaluate_bounds(BoundRequest(K=3, m=10**4, delta=0.1, p=3.0,
                                       class_norm=3.0 ** (2.0 / 3.0)),
                          SchemeKind.SPARSE_LP)
    assert sp3.thm1 is None

    with pytest.raises(ValueError):
        evaluate_bounds(BoundRequest(K=3, m=10**4, delta=0.1), SchemeKind.SPARSE_LP)


def test_report_custom_request_and_dimension_term():
    plain = evaluate_bounds(BoundRequest(K=2, m=1000, delta=0.1))
    assert plain.thm1 is not None and plain.thm2 is not None
    assert plain.pca_rad is None and plain.finite_dim is None

    with_d = evaluate_bounds(BoundRequest(K=2, m=1000, delta=0.1, d=6))
    assert with_d.finite_dim is not None


def test_report_tightest_is_smallest_entry():
    for req, kind in [
        (BoundRequest(K=1, m=10**4, delta=0.05), SchemeKind.PCA),
        (BoundRequest(K=2, m=10**4, delta=0.1, b=4.0), SchemeKind.KMEANS),
        (BoundRequest(K=3, m=100, delta=0.1, class_norm=math.sqrt(3.0), d=5),
         SchemeKind.NMF),
        (BoundRequest(K=3, m=10**5, delta=0.1, p=1.0, d=4), SchemeKind.SPARSE_LP),
    ]:
        report = evaluate_bounds(req, kind)
        vals = {k: v for k, v in report.to_dict().items() if k != "tightest"}
        assert report.tightest in vals
        assert vals[report.tightest] == min(vals.values())


def test_report_to_dict_drops_missing_bounds():
    report = evaluate_bounds(BoundRequest(K=2, m=1000, delta=0.1))
    out = report.to_dict()
    assert set(out) == {"thm1", "thm2", "tightest"}
    assert isinstance(out["tightest"], str)


def test_report_field_order_is_stable():
    assert BoundReport._ORDER == (
        "thm1", "thm2", "thm4_kmeans", "nmf", "sparse", "pca_rad", "finite_dim"
    )


def test_request_validation():
    with pytest.raises(ValueError):
        BoundRequest(K=0, m=10, delta=0.1)
    with pytest.raises(ValueError):
        BoundRequest(K=1, m=0, delta=0.1)
    with pytest.raises(ValueError):
        BoundRequest(K=1, m=10, delta=0.0)
    with pytest.raises(ValueError):
        BoundRequest(K=1, m=10, delta=1.0)
    with pytest.raises(ValueError):
        BoundRequest(K=1, m=10, delta=0.1, c=0.5)
    with pytest.raises(ValueError):
        BoundRequest(K=1, m=10, delta=0.1, class_norm=0.9)
    with pytest.raises(ValueError):
        BoundRequest(K=1, m=10, delta=0.1, b=0.0)
    with pytest.raises(ValueError):
        BoundRequest(K=1, m=10, delta=0.1, p=0.8)
    with pytest.raises(ValueError):
        BoundRequest(K=1, m=10, delta=0.1, d=0)
    with pytest.raises(ValueError):
        sparse_bound(BoundRequest(K=1, m=10, delta=0.1))
    with pytest.raises(ValueError):
        finite_dim_bound(BoundRequest(K=1, m=10, delta=0.1))
