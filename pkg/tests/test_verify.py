from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from filtered_weights import (
    AlphaSequence,
    FilteredSpace,
    dyadic_space,
    verify_carleson,
    verify_maximal_bounds,
    verify_remark28,
    verify_representation,
    verify_sparsity,
    verify_strong,
    verify_weak,
    weak_constant,
)
from filtered_weights.norms import strong_ratio
from filtered_weights.verify import weak_constant_eta, weak_optimal_eta

S2F = FilteredSpace([[[0, 1]], [[0], [1]]], [0.5, 0.5])


def test_weak_constant_at_two():
    assert math.isclose(weak_constant(2), 12 * math.sqrt(3), rel_tol=1e-15)
    assert math.isclose(weak_constant(2), 20.7846, abs_tol=1e-4)


@pytest.mark.parametrize("q", [1.25, 1.5, 2.0, 3.0, 5.0])
def test_weak_constant_is_the_minimum(q):
    res = minimize_scalar(lambda e: weak_constant_eta(q, e), bounds=(1e-9, 2.0**-q * (1 - 1e-9)), method="bounded", options={"xatol": 1e-14})
    assert math.isclose(res.fun, weak_constant(q), rel_tol=1e-9)
    assert math.isclose(res.x, weak_optimal_eta(q), rel_tol=1e-4)
    assert math.isclose(weak_constant_eta(q, weak_optimal_eta(q)), weak_constant(q), rel_tol=1e-12)


def test_weak_constant_eta_domain():
    with pytest.raises(ValueError):
        weak_constant_eta(2, 0.25)


def test_verify_weak_s2_example():
    a = AlphaSequence.single(S2F, 0)
    rep = verify_weak(S2F, a, [1, 1], [1, 1], 2, 2, trials=50)
    assert rep.passed
    up = rep.check("upper: weak(T f) <= C* fw ||f|| (all samples)")
    # f = 1 gives T f = 1 and weak norm 1 against 12 sqrt 3
    assert up.ratio <= 1 / weak_constant(2) + 1e-12
    assert rep.constants["weak_constant"] == weak_constant(2)


def test_verify_weak_zero_alpha():
    rep = verify_weak(S2F, AlphaSequence.zero(S2F), [1, 2], [3, 1], 2, 3, trials=20)
    assert rep.passed
    assert rep.check("converse: testing_forward <= weak norm").lhs == 0
    assert rep.estimates["weak"].value == 0


def test_verify_strong_unweighted_reduces():
    a = AlphaSequence.single(S2F, 0)
    rep = verify_strong(S2F, a, [1, 1], [1, 1], 2, 2)
    assert rep.passed
    assert rep.constants["a1_w"] == 1 and rep.constants["a1_sigma"] == 1
    eq = rep.check("upper, equal weights: norm <= C (bw + fw)")
    assert math.isclose(eq.lhs, 1.0, rel_tol=1e-12) and eq.rhs == 64 * 2


def test_verify_strong_records_reproducible_ratio():
    S = dyadic_space(3)
    rng = np.random.default_rng(2)
    a = AlphaSequence.from_levels(S, [rng.exponential(size=S.n_atoms(i)) for i in range(S.level_count)])
    s, w = np.exp(rng.normal(size=8)), np.exp(rng.normal(size=8))
    rep = verify_strong(S, a, s, w, 2, 3, seed=4)
    est = rep.estimates["strong"]
    assert math.isclose(strong_ratio(S, a, s, w, 2, 3, est.witness["f"], est.witness["g"]), est.value, rel_tol=1e-12)
    assert rep.as_dict() == verify_strong(S, a, s, w, 2, 3, seed=4).as_dict()


def test_verify_maximal_trivial_weights():
    S = dyadic_space(3)
    rep = verify_maximal_bounds(S, [1.0] * 8, [1.0] * 8, 2)
    for key in ("sp_star", "ainf_star_sigma", "mixed"):
        assert math.isclose(float(rep.constants[key].value), 1.0, rel_tol=1e-12)
    for key in ("bp", "ap_two_weight", "ap_w"):
        assert math.isclose(float(rep.constants[key]), 1.0, rel_tol=1e-12)
    assert rep.estimates["maximal"].value <= 2
    assert rep.passed


def test_verify_maximal_s2_bound1():
    rep = verify_maximal_bounds(S2F, [1, 3], [1, 3], 2)
    b1 = rep.check("bound (1): norm <= C B_p^(1/p)")
    assert math.isclose(b1.rhs / 64, math.sqrt(8 * math.sqrt(3) / 9), rel_tol=1e-9)
    assert math.isclose(b1.rhs / 64, 1.2408, abs_tol=1e-4)
    assert rep.constants["K"] == math.floor(math.log2(4 / 3)) + 1
    assert rep.passed


def test_verify_remark28_exact_fixture(s2):
    rep = verify_remark28(s2, [1, 3])
    assert rep.passed
    assert rep.constants["ap_w[2]"] == F(4, 3)
    assert rep.constants["ainf_star_over_exp"] == pytest.approx(float(F(5, 4)) / (2 / math.sqrt(3)))


def test_principal_verifiers_on_s4(s4):
    h = [1, 1, 1, 13]
    assert verify_sparsity(s4, h, None, 0, 2).passed
    carl = verify_carleson(s4, h, None, 2, 0, 2)
    assert carl.passed and carl.constants["max_ratio"] == 20 / 43
    assert verify_representation(s4, h, None, 0).passed


def test_report_serializes(s4):
    d = verify_sparsity(s4, [1, 1, 1, 13]).as_dict()
    assert d["theorem"] == "sparsity" and d["passed"] is True
    assert {c["name"] for c in d["checks"]} >= {"P1", "P6", "sparsity"}
