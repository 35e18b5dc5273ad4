import numpy as np
import pytest

import canace


def test_chebyshev_product_rule():
    f = canace.Family("chebyshev", max_degree=6)
    rule = dict((tuple(k), c) for k, c in f.linearize([2], [3]))
    assert rule == pytest.approx({(1,): 0.5, (5,): 0.5})
    assert f.eval([3], [0.5]).real == pytest.approx(4 * 0.5**3 - 3 * 0.5)


def test_purification_matches_brute_force():
    rng = np.random.default_rng(0)
    for kind in ("monomial", "chebyshev", "legendre"):
        f = canace.Family(kind, max_degree=8)
        K = canace.generate_index_set(f, 3, [4])
        P = canace.build_purification_operator(K, f)
        X = rng.uniform(-1, 1, size=5)
        got = canace.canonical(f, P, X)
        want = canace.brute_force_canonical(f, K, X.reshape(-1, 1))
        assert np.allclose(got, want, atol=1e-12)


def test_spherical_canonical_two_body():
    f = canace.Family("spherical", max_degree=4)
    K = canace.generate_index_set(f, 2, [2])
    P = canace.build_purification_operator(K, f)
    rng = np.random.default_rng(1)
    X = rng.normal(size=(4, 3))
    X *= (0.9 / np.linalg.norm(X, axis=1))[:, None]
    assert np.allclose(canace.canonical(f, P, X), canace.brute_force_canonical(f, K, X), atol=1e-11)


def test_operator_structure():
    f = canace.Family("chebyshev", max_degree=40)
    K = canace.generate_index_set(f, 3, [20], include_constant=True)
    P = canace.build_purification_operator(K, f)
    s = P.sparsity(f)
    assert s["unit_diagonal"] and s["order_triangular"] and s["bound_holds"]
    assert max(o["max_nnz"] for o in s["orders"] if o["order"] == 3) <= 11
    D = P.to_dense()
    assert D.shape == (len(P.rows), len(P.cols))
    assert np.count_nonzero(D) == P.nnz


def test_purification_prior_equivalence():
    f = canace.Family("chebyshev", max_degree=12)
    K = canace.generate_index_set(f, 3, [6], include_constant=True)
    P = canace.build_purification_operator(K, f)
    assert P.square
    rng = np.random.default_rng(2)
    configs = [rng.uniform(-1, 1, size=(4, 1)) for _ in range(3 * len(K))]
    Dc = canace.canonical_design(f, P, configs).real
    Ds = canace.self_design(f, P.cols, configs).real
    y = rng.normal(size=len(configs))
    a = canace.tikhonov_solve(Dc, y, 1e-3)
    b = canace.tikhonov_solve(Ds, y, 1e-3, canace.purification_prior(P))
    pa, pb = Dc @ a["coefficients"], Ds @ b["coefficients"]
    assert np.linalg.norm(pa - pb) <= 1e-8 * np.linalg.norm(pa)


def test_solvers_on_small_problem():
    A = np.array([[1.0, 1.0]])
    fit = canace.tsvd_solve(A, np.array([2.0]), 1e-12)
    assert fit["coefficients"] == pytest.approx([1.0, 1.0])
    ridge = canace.tikhonov_solve(np.array([[2.0]]), np.array([1.0]), 1.0)
    assert ridge["coefficients"][0] == pytest.approx(0.4)
    with pytest.raises(ValueError):
        canace.tsvd_solve(A, np.array([2.0]), 0.0)


def test_run_experiments():
    meta, tables, passed = canace.run_experiment("span-check", {"expect": True}, seed=3)
    assert passed and meta["equal"] is True
    assert tables["span_check"][0]["equal"] == "true"
    meta, tables, passed = canace.run_experiment(
        "invariance-check", {"actions": 10, "J": 3, "max_order": 2, "degree_O1": 4, "degree_SO2": 3, "degree_O3": 3}
    )
    assert passed and len(tables["invariance"]) == 6
    with pytest.raises(ValueError):
        canace.run_experiment("fit", {"bogus": 1})
    with pytest.raises(ValueError):
        canace.run_experiment("nope")
