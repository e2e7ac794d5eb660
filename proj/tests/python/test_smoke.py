import math

import numpy as np
import pytest

import spectral_clt as sc


def test_identity_terms_match_table():
    mean, var = sc.identity_test_terms(25, 50)
    assert abs(mean - 8.226) < 5e-4
    assert abs(var - 0.407) < 5e-4
    mean, var = sc.identity_test_terms(25, 50, convention="raw")
    assert abs(mean - 8.017) < 1e-3


def test_equality_terms_match_table():
    mean, var = sc.equality_test_terms(20, 40, 40)
    assert abs(mean - 3.731) < 1e-3
    assert abs(var - 0.127) < 5e-4


def test_mp_law():
    model = sc.SpectralModel(0.3)
    assert abs(sc.mp_linear_functional(model, "x2") - 1.3) < 1e-6
    support = sc.mp_support(sc.SpectralModel(4.0))
    assert support["atom_at_zero"] == pytest.approx(0.75)
    assert support["lower"] == pytest.approx(1.0)
    assert support["upper"] == pytest.approx(9.0)
    two = sc.SpectralModel(0.5, [(1.0, 0.5), (2.0, 0.5)])
    assert sc.mp_linear_functional(two, "x") == pytest.approx(1.5, abs=1e-6)


def test_companion_stieltjes_quadratic_root():
    y, z = 0.5, 1j
    b = z + 1 - y
    roots = np.roots([z, b, 1])
    root = roots[np.argmax(roots.imag)]
    assert abs(sc.solve_companion_stieltjes(sc.SpectralModel(y), z) - root) < 1e-10


def test_callable_functions_match_builtins():
    y = 0.5
    assert sc.contour_J1(lambda z: z, "x", y) == pytest.approx(y, abs=1e-10)
    assert sc.contour_J1(lambda z: z * z, "x", y) == pytest.approx(sc.contour_J1("x2", "x", y), abs=1e-10)


def test_identity_test_against_numpy():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 20))
    report = sc.clrt_identity_test(X)
    S = np.cov(X, rowvar=False)
    sign, logdet = np.linalg.slogdet(S)
    assert sign > 0
    assert report["statistic"] == pytest.approx(np.trace(S) - logdet - 20, rel=1e-12)
    z = (report["statistic"] - report["centering"] - report["mean_correction"]) / math.sqrt(report["variance"])
    assert report["z_score"] == pytest.approx(z, rel=1e-12)


def test_estimators_agree_with_numpy():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 5))
    np.testing.assert_allclose(sc.unbiased_cov(X), np.cov(X, rowvar=False), atol=1e-13)
    np.testing.assert_allclose(sc.mle_cov(X), np.cov(X, rowvar=False, bias=True), atol=1e-13)
    M = sc.unbiased_cov(X)
    np.testing.assert_allclose(sc.eigenvalues_sym(M), np.linalg.eigvalsh(M), atol=1e-12)


def test_errors_carry_kind():
    with pytest.raises(sc.SpectralCltError) as info:
        sc.identity_case_centering(2.0)
    assert info.value.kind == "DomainError"
    with pytest.raises(sc.SpectralCltError):
        sc.clrt_identity_test(np.zeros((2, 1)))


def test_counterexample_formula():
    out = sc.counterexample_variance("A3", m_half=50, n=200)
    assert out["reference_formula"] == pytest.approx(28.0)
    assert math.isnan(out["empirical"])


def test_simulation_is_seeded():
    a = sc.simulate_identity_table(10, 30, 50, seed=5).as_dict()
    b = sc.simulate_identity_table(10, 30, 50, seed=5).as_dict()
    assert a == b
