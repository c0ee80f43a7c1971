"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (the lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import sys
import time
from fractions import Fraction as F
from pathlib import Path


sys.path.insert(0, str(Path(__file__).resolve().parent))

import oracles  # noqa: E402
from filtered_weights import (  # noqa: E402
    AlphaSequence,
    GeneratorSpec,
    MeasurableSet,
    OperatorSpec,
    a1_const,
    ainf_exp,
    ainf_star,
    ap_one_weight,
    ap_two_weight,
    bilinear_op,
    bp_const,
    build_principal_family,
    carleson_check,
    check_properties,
    cond_exp,
    doob_maximal,
    dyadic_space,
    enumerate_sets,
    estimate_maximal_norm,
    estimate_strong_norm,
    estimate_weak_norm,
    first_passage,
    generate,
    integrate,
    load_instance,
    lp_norm,
    maximal_representation_check,
    mixed_const,
    oracle_exhaustive_norm,
    positive_op,
    principal_cover,
    sp_star,
    tailed_maximal,
    testing_backward,
    testing_forward,
    verify_carleson,
    verify_maximal_bounds,
    verify_remark28,
    verify_representation,
    verify_sparsity,
    verify_strong,
    verify_weak,
    weak_constant,
    weak_norm,
    weighted_cond_exp,
)
from filtered_weights.instances import trial_seed  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "instances"
SEED = 20240601
N_INSTANCES = 100
MAX_ATOMS = 64
C_BUDGET = 64
RTOL = 1e-9

RESULTS: dict[int, str] = {}

_SHAPES = [
    ("dyadic", 3, 2), ("dyadic", 4, 2), ("dyadic", 5, 2), ("dyadic", 6, 2), ("dyadic", 2, 3), ("dyadic", 3, 3),
    ("dyadic", 3, 4), ("random-tree", 3, 3), ("random-tree", 4, 2), ("random-tree", 5, 2), ("random-tree", 3, 4),
]
_LAWS = [("lognormal", (0.0, 1.0)), ("lognormal", (0.0, 2.0)), ("power", (0.5,)), ("power", (-0.6,)), ("two-point", (1.0, 16.0))]


def corpus(exact: bool, n: int = N_INSTANCES, max_atoms: int = MAX_ATOMS, shapes=_SHAPES, salt: int = 0):
    """``n`` seeded instances with at most ``max_atoms`` finest atoms."""
    out, t = [], 0
    while len(out) < n:
        kind, depth, b = shapes[t % len(shapes)]
        law, params = _LAWS[(t // len(shapes)) % len(_LAWS)]
        inst = generate(GeneratorSpec(kind, depth, b, law, params, trial_seed(SEED + salt, t), exact))
        if inst.space.n <= max_atoms:
            out.append((t, inst))
        t += 1
    return out


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {title} [{detail}]"
    RESULTS[n] = line
    print(line)


# -- 1-3: principal sets (rational) -------------------------------------------


def _principal_setting(t, inst):
    S = inst.space
    i = t % S.level_count
    w = inst.weight("w") if t % 2 else None
    return S, inst.function("h"), w, i


def test_criterion_1_sparsity():
    bad, nodes = [], 0
    insts = corpus(exact=True)
    for t, inst in insts:
        S, h, w, i = _principal_setting(t, inst)
        rep = verify_sparsity(S, h, w, i, tol=RTOL)
        nodes += rep.constants["nodes"]
        if not rep.passed:
            bad.append((inst.name, [c.name for c in rep.checks if not c.passed]))
    record(1, "P.1-P.6 and w(P) <= 2 w(E(P)) on every node", not bad, f"{len(insts)} rational instances, {nodes} nodes, failures {bad[:3]}")
    assert not bad


def test_criterion_2_carleson():
    bad, worst = [], (0.0, None)
    ps = [F(3, 2), F(2), F(3)]
    insts = corpus(exact=True, salt=1)
    for t, inst in insts:
        S, h, w, i = _principal_setting(t, inst)
        p = ps[t % 3]
        rep = verify_carleson(S, h, w, p, i, tol=RTOL)
        if "max_ratio" in rep.constants:
            rel = rep.constants["max_ratio"] / rep.constants["constant"]
            if rel > worst[0]:
                worst = (rel, f"{inst.name} p={p} ratio {rep.constants['max_ratio']:.4g} vs {rep.constants['constant']:.4g}")
        if not rep.passed:
            bad.append(inst.name)
    record(2, "Carleson sum <= 2(p')^p ||h||^p", not bad, f"{len(insts)} instances, max ratio/2(p')^p = {worst[0]:.4f} ({worst[1]})")
    assert not bad and worst[0] <= 1


def test_criterion_3_representation():
    bad, worst = [], 0.0
    insts = corpus(exact=True, salt=2)
    for t, inst in insts:
        S, h, w, i = _principal_setting(t, inst)
        rep = verify_representation(S, h, w, i, tol=RTOL)
        worst = max(worst, rep.constants["max_ratio"])
        if not rep.passed:
            bad.append(inst.name)
    record(3, "localization and decomposition equalities exact, bound with constant 4", not bad, f"{len(insts)} rational instances, max *M/(4 2^k2) = {worst:.4f}")
    assert not bad


# -- 4-7: norm bounds (float) -------------------------------------------------

_PQ = [(2.0, 2.0), (1.5, 2.0), (2.0, 3.0), (1.5, 3.0), (3.0, 3.0)]


def test_criterion_4_weak_type():
    up_bad, conv_bad, conv_worst, up_worst = [], [], (0.0, ""), 0.0
    insts = corpus(exact=False, salt=3)
    for t, inst in insts:
        p, q = _PQ[t % len(_PQ)]
        rep = verify_weak(inst.space, inst.alpha, inst.weight("sigma"), inst.weight("w"), p, q, trials=100, seed=trial_seed(SEED, t), tol=RTOL)
        up = rep.check("upper: weak(T f) <= C* fw ||f|| (all samples)")
        up_worst = max(up_worst, up.ratio)
        if not up.passed:
            up_bad.append(inst.name)
        conv = rep.check("converse: testing_forward <= weak norm")
        if conv.ratio > conv_worst[0]:
            conv_worst = (conv.ratio, f"{inst.name} p={p:g} q={q:g}")
        if not conv.passed:
            conv_bad.append(inst.name)
    ok = not up_bad and not conv_bad
    record(
        4,
        "weak(T(f sigma)) <= C* [sigma,w] ||f|| for all samples; [sigma,w] <= weak-norm estimate",
        ok,
        f"C*(2) = {weak_constant(2):.4f}; upper failures {len(up_bad)}/{len(insts)}, max ratio {up_worst:.4f}; "
        f"converse failures {len(conv_bad)}/{len(insts)}, max [sigma,w]/weak = {conv_worst[0]:.4f} ({conv_worst[1]})",
    )
    assert not up_bad, up_bad
    assert not conv_bad, f"testing constant exceeds the weak norm on {len(conv_bad)} instances, worst ratio {conv_worst}"


def test_criterion_5_strong_type():
    bad, worst = [], (0.0, "")
    insts = corpus(exact=False, salt=4)
    for t, inst in insts:
        p, q = _PQ[t % len(_PQ)]
        rep = verify_strong(inst.space, inst.alpha, inst.weight("sigma"), inst.weight("w"), p, q, C_BUDGET, seed=trial_seed(SEED, t), tol=RTOL)
        for name in ("lower: testing_backward <= norm", "lower: testing_forward <= norm"):
            if not rep.check(name).passed:
                bad.append((inst.name, name))
        up = rep.check("upper: norm <= C (bw*A1(w) + fw*A1(sigma))")
        raw = up.lhs / (up.rhs / C_BUDGET) if up.rhs else 0.0
        if raw > worst[0]:
            worst = (raw, inst.name)
    ok = not bad and worst[0] <= C_BUDGET
    record(5, "testing constants <= norm; norm/(bw A1(w) + fw A1(sigma)) <= 64", ok, f"{len(insts)} instances, lower failures {len(bad)}, corpus max upper ratio {worst[0]:.4f} ({worst[1]})")
    assert ok, bad


def test_criterion_6_maximal():
    bad, worst = [], {}
    insts = corpus(exact=False, salt=5)
    bounds = ("bound (1): norm <= C B_p^(1/p)", "bound (2): norm <= C (A_p A*inf(sigma))^(1/p)", "bound (3): norm <= C mixed (1 + log2 A_p)^(1/p)")
    for t, inst in insts:
        p = (1.5, 2.0, 3.0)[t % 3]
        w = inst.weight("w")
        v = w if t % 2 == 0 else inst.weight("v")
        rep = verify_maximal_bounds(inst.space, v, w, p, C_BUDGET, seed=trial_seed(SEED, t), trials=100, tol=RTOL)
        for name in ("lemma lower: sp_star <= norm", "doob: ||Mf||_p <= p' ||f||_p (all samples)") + bounds:
            if not any(c.name == name for c in rep.checks):
                continue
            c = rep.check(name)
            if not c.passed:
                bad.append((inst.name, name))
            if name in bounds:
                worst[name[:9]] = max(worst.get(name[:9], 0.0), c.ratio * C_BUDGET)
    detail = ", ".join(f"{k} max ratio {v:.4f}" for k, v in sorted(worst.items()))
    record(6, "sp_star <= norm; bounds (1)-(3) ratio <= 64; Doob with constant p'", not bad, f"{len(insts)} instances, failures {len(bad)}; {detail}")
    assert not bad, bad


def test_criterion_7_remark28():
    bad, worst = [], 0.0
    insts = corpus(exact=False, salt=6)
    for t, inst in insts:
        rep = verify_remark28(inst.space, inst.weight("w"), ps=(1.5, 2, 3), tol=RTOL)
        worst = max(worst, rep.constants["ainf_star_over_exp"])
        if not rep.passed:
            bad.append((inst.name, [c.name for c in rep.checks if not c.passed]))
    record(7, "A_p' duality within 1e-9; ainf_exp <= A_p for p in {1.5, 2, 3}", not bad, f"{len(insts)} instances, failures {len(bad)}, max ainf_star/ainf_exp = {worst:.4f}")
    assert not bad, bad


# -- 8: oracle certification ----------------------------------------------------

_SMALL = [("random-tree", 1, 6), ("random-tree", 2, 2), ("random-tree", 2, 3), ("dyadic", 2, 2), ("random-tree", 3, 2)]


def test_criterion_8_oracle():
    insts = corpus(exact=False, max_atoms=6, shapes=_SMALL, salt=7)
    bad, worst = [], 1e9
    for t, inst in insts:
        S, a, s, w, v = inst.space, inst.alpha, inst.weight("sigma"), inst.weight("w"), inst.weight("v")
        p, q = _PQ[t % len(_PQ)]
        seed = trial_seed(SEED, t)
        pairs = [
            ("strong", estimate_strong_norm(S, a, s, w, p, q, seed=seed), OperatorSpec("strong", a, s, w), q),
            ("weak", estimate_weak_norm(S, a, s, w, p, q, seed=seed), OperatorSpec("weak", a, s, w), q),
            ("maximal", estimate_maximal_norm(S, v, w, p, seed=seed), OperatorSpec("maximal", v=v, w=w), None),
        ]
        for kind, est, op, qq in pairs:
            ref = oracle_exhaustive_norm(S, op, p, qq)
            r = est.value / ref if ref else 1.0
            worst = min(worst, r)
            if est.value < 0.99 * ref:
                bad.append((inst.name, kind, est.value, ref))
    sizes = sorted({inst.space.n for _, inst in insts})
    record(8, "NormEstimate >= 0.99 x exhaustive oracle", not bad, f"{len(insts)} instances with atoms in {sizes}, 3 objectives each, min estimate/oracle = {worst:.4f}")
    assert not bad, bad


# -- 9: worked fixtures -----------------------------------------------------------


def _fixture_checks():
    s2i, s4i = load_instance(FIXTURES / "s2.json"), load_instance(FIXTURES / "s4.json")
    S2, S4 = s2i.space, s4i.space
    assert S2.exact and S4.exact
    f13, h4 = s2i.function("f"), s4i.function("h")
    w13, one2, one4 = s2i.weight("w"), s2i.weight("one"), s4i.weight("w")
    a0 = s2i.alpha
    P = S2.partitions
    R3 = math.sqrt(3)
    fam4 = build_principal_family(S4, h4, None, 0, 2)
    root2 = build_principal_family(S2, s2i.function("h"), None, 0, 1).root
    child = fam4.root.children[0]
    carl = carleson_check(fam4, 2)
    exact = [
        ("E_0 f on S2", list(cond_exp(S2, f13, 0).pointwise()), [2, 2]),
        ("E_1 h on S4", list(cond_exp(S4, h4, 1).pointwise()), [1, 1, 7, 7]),
        ("E^w_0 f, w=1", list(weighted_cond_exp(S2, f13, one2, 0).pointwise()), [2, 2]),
        ("E^w_0 f, w=(3,1)", list(weighted_cond_exp(S2, f13, [3, 1], 0).pointwise()), [F(3, 2)] * 2),
        ("integral of 1 over Omega", integrate(S2, one2), 1),
        ("integral of f over {a}", integrate(S2, f13, MeasurableSet(1, frozenset({0}))), F(1, 2)),
        ("L^1 norm of f", lp_norm(S2, f13, 1, one2), 2),
        ("atoms at level 1", len(list(enumerate_sets(S2, 1, "atoms"))), 2),
        ("exhaustive sets at level 1", len(list(enumerate_sets(S2, 1, "exhaustive"))), 3),
        ("S4 exhaustive sets at level 1", len(list(enumerate_sets(S4, 1, "exhaustive"))), 3),
        ("M f", list(doob_maximal(S2, f13)), [2, 3]),
        ("*M_1 h", list(tailed_maximal(S4, h4, 1)), [1, 1, 7, 13]),
        ("first passage over 8", first_passage(S4, h4, 0, 8).values.tolist(), [math.inf, math.inf, math.inf, 2]),
        ("T f, alpha_0 = 1", list(positive_op(S2, a0, f13)), [2, 2]),
        ("T f, alpha_0 = alpha_1 = 1", list(positive_op(S2, AlphaSequence.from_levels(S2, [[1], [1, 1]]), f13)), [3, 5]),
        ("bilinear mass", bilinear_op(S2, a0, f13, [3, 1])[1], 4),
        ("A_1(v), v=(1,3)", a1_const(S2, w13), 2),
        ("A_2(v,w), v=w=(1,3)", ap_two_weight(S2, w13, w13, 2), F(4, 3)),
        ("A_2(w), w=(1,3)", ap_one_weight(S2, w13, 2), F(4, 3)),
        ("A*inf(w), w=1", ainf_star(S4, one4, "exhaustive").value, 1),
        ("mixed(w), w=(1,3), exhaustive", mixed_const(S2, w13, 2, "exhaustive").value, oracles.mixed(P, list(S2.mu), list(w13), 2)),
        ("S*_2 v=w=1 against oracle", sp_star(S2, one2, one2, 2, "exhaustive").value, oracles.sp_star(P, list(S2.mu), [1, 1], [1, 1], 2)),
        ("testing forward, sigma=w=1", testing_forward(S2, a0, one2, one2, 2, 2).value, 1),
        ("testing backward, sigma=w=1", testing_backward(S2, a0, one2, one2, 2, 2).value, 1),
        ("S2 principal root", (root2.atoms, root2.exceptional, root2.children), ((0, 1), (0, 1), ())),
        ("S4 principal tree", (fam4.root.exceptional, child.k1, child.k2, child.atoms, child.exceptional), ((0, 1, 2), 2, 4, (3,), (3,))),
        ("S4 properties", all(r.passed for r in check_properties(fam4).values()), True),
        ("*M_0 h on d", tailed_maximal(S4, h4, 0)[3], 13),
        ("representation equalities", (lambda r: r.localization_equal and r.decomposition_equal and r.bound_passed)(maximal_representation_check(fam4)), True),
        ("Carleson lhs, ||h||^2, rhs", (carl.lhs, carl.norm_p, carl.rhs), (20, 43, 344)),
        ("cover at level 1", [f.origin_scale for f in principal_cover(S4, h4, None, 1)], [0, 3]),
        ("dyadic depth 2 shape", dyadic_space(2, exact=True).partitions, S4.partitions),
    ]
    approx = [
        ("L^2 norm of f", lp_norm(S2, f13, 2), math.sqrt(5)),
        ("weak L^2 norm of g", weak_norm(S2, f13, 2), 3 / math.sqrt(2)),
        ("A_inf^exp(w)", ainf_exp(S2, w13), 2 / R3),
        ("B_2(v,w)", bp_const(S2, w13, w13, 2), 8 * R3 / 9),
        ("strong norm estimate", estimate_strong_norm(S2, a0, one2, one2, 2, 2).value, 1.0),
        ("strong norm oracle", oracle_exhaustive_norm(S2, OperatorSpec("strong", a0, one2, one2), 2, 2), 1.0),
        ("weak norm of T 1", weak_norm(S2, positive_op(S2, a0, one2), 2, one2), 1.0),
        ("12 sqrt 3", weak_constant(2), 12 * R3),
        ("RHS(1) = B_2^(1/2)", bp_const(S2, w13, w13, 2) ** 0.5, math.sqrt(8 * R3 / 9)),
    ]
    bounded = [
        ("S*_2 v=w=1 <= p'", sp_star(S2, one2, one2, 2, "exhaustive").value, 2),
        ("maximal estimate v=w=1 <= p'", estimate_maximal_norm(S2, one2, one2, 2).value, 2),
        ("*M_0 h on d <= 4 2^3", tailed_maximal(S4, h4, 0)[3], 32),
    ]
    res = [(n, got == want, got, want) for n, got, want in exact]
    res += [(n, math.isclose(float(got), want, rel_tol=1e-15), got, want) for n, got, want in approx]
    res += [(n, got <= bound, got, bound) for n, got, bound in bounded]
    return res


def test_criterion_9_fixtures():
    res = _fixture_checks()
    bad = [(n, got, want) for n, ok, got, want in res if not ok]
    record(9, "S2/S4 fixtures reproduce the worked numbers in rational mode", not bad, f"{len(res)} values, mismatches {bad}")
    assert not bad


if __name__ == "__main__":
    start = time.time()
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion_")):
        try:
            fn()
        except AssertionError:
            failed += 1
    print(f"{9 - failed}/9 criteria passed in {time.time() - start:.1f}s")
    sys.exit(1 if failed else 0)
