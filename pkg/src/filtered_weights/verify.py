"""End-to-end checks of the two-weight characterizations.

Each verifier computes both sides of an inequality and returns a
``VerificationReport`` holding the constants, the norm estimates with their
witnesses, and one ``Check`` per inequality.  Hard checks decide pass/fail;
report-only checks record a ratio without asserting it.  Inequalities with an
unspecified absolute constant are asserted against ``c_budget``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numeric as nm
from .constants import (
    a1_const,
    ainf_exp,
    ainf_star,
    ap_one_weight,
    ap_two_weight,
    bp_const,
    dual_weight,
    mixed_const,
    sp_star,
    testing_backward,
    testing_forward,
)
from .norms import (
    NormEstimate,
    _lp_rows,
    _projections,
    _weak_rows,
    estimate_maximal_norm,
    estimate_strong_norm,
    estimate_weak_norm,
    indicator_pool,
    positive_matrix,
    random_pool,
    testing_dual_pool,
)
from .operators import AlphaSequence
from .principal import (
    build_principal_family,
    carleson_check,
    carleson_constant,
    check_properties,
    maximal_representation_check,
    principal_cover,
)
from .space import FilteredSpace

C_BUDGET = 64.0
TOL = nm.DEFAULT_RTOL


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    passed: bool
    hard: bool = True
    detail: str = ""

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "ratio": float(self.ratio),
            "passed": bool(self.passed),
            "hard": bool(self.hard),
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    theorem: str
    parameters: dict
    constants: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    mode: str = "atoms"
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.hard)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def add(self, name, lhs, rhs, hard=True, tol=TOL, detail="") -> Check:
        c = Check(name, float(lhs), float(rhs), nm.leq(float(lhs), float(rhs), tol), hard, detail)
        self.checks.append(c)
        return c

    def as_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "parameters": {k: _plain(v) for k, v in self.parameters.items()},
            "constants": {k: _plain(v) for k, v in self.constants.items()},
            "estimates": {k: v.as_dict() for k, v in self.estimates.items()},
            "checks": [c.as_dict() for c in self.checks],
            "passed": self.passed,
            "mode": self.mode,
            "seed": self.seed,
        }


def _plain(v):
    if hasattr(v, "as_dict"):
        return v.as_dict()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, str)) or v is None:
        return v
    return float(v)


def _worst(lhs: np.ndarray, rhs: np.ndarray) -> int:
    """Index of the sample with the largest ``lhs/rhs``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
    return int(np.argmax(r))


# -- weak-type constant -------------------------------------------------------


def weak_constant_eta(q, eta) -> float:
    """``2 / ((1 - 2^q eta)^(1/q) eta)`` for ``0 < eta < 2^-q``."""
    q = float(q)
    if not 0 < eta < 2.0**-q:
        raise ValueError(f"eta must lie in (0, 2^-q), got {eta}")
    return 2.0 / ((1 - 2.0**q * eta) ** (1 / q) * eta)


def weak_optimal_eta(q) -> float:
    q = float(q)
    return q / ((1 + q) * 2.0**q)


def weak_constant(q) -> float:
    """Explicit weak-type constant ``2^(q+1) (1+q)/q (1+q)^(1/q)``."""
    q = float(q)
    return 2.0 ** (q + 1) * (1 + q) / q * (1 + q) ** (1 / q)


# -- strong type ----------------------------------------------------------------


def verify_strong(
    space: FilteredSpace,
    alpha: AlphaSequence,
    sigma,
    w,
    p,
    q,
    c_budget: float = C_BUDGET,
    mode: str = "atoms",
    seed: int = 0,
    budget: int = 8,
    tol: float = TOL,
) -> VerificationReport:
    fw = testing_forward(space, alpha, sigma, w, p, q, mode)
    bw = testing_backward(space, alpha, sigma, w, p, q, mode)
    a1w, a1s = a1_const(space, w), a1_const(space, sigma)
    extra_f = [fw_mask(space, bw)] if bw.witness is not None else []
    extra_g = [fw_mask(space, fw)] if fw.witness is not None else []
    est = estimate_strong_norm(space, alpha, sigma, w, p, q, budget, seed, extra_f, extra_g)
    rep = VerificationReport(
        "strong",
        {"p": p, "q": q, "c_budget": c_budget, "tol": tol},
        {"testing_forward": fw, "testing_backward": bw, "a1_w": a1w, "a1_sigma": a1s},
        {"strong": est},
        mode=mode,
        seed=seed,
    )
    rep.add("lower: testing_backward <= norm", bw.value, est.value, tol=tol)
    rep.add("lower: testing_forward <= norm", fw.value, est.value, tol=tol)
    rhs = float(bw.value) * float(a1w) + float(fw.value) * float(a1s)
    rep.add("upper: norm <= C (bw*A1(w) + fw*A1(sigma))", est.value, c_budget * rhs, tol=tol)
    if nm.all_close(nm.floatify(space.asarray(sigma)), nm.floatify(space.asarray(w)), 1e-12):
        rep.add("upper, equal weights: norm <= C (bw + fw)", est.value, c_budget * (float(bw.value) + float(fw.value)), tol=tol)
    return rep


def fw_mask(space: FilteredSpace, report) -> np.ndarray:
    """Indicator of a constant's witness set, as a float array."""
    return report.witness.mask(space).astype(float)


# -- weak type --------------------------------------------------------------------


def verify_weak(
    space: FilteredSpace,
    alpha: AlphaSequence,
    sigma,
    w,
    p,
    q,
    trials: int = 200,
    mode: str = "atoms",
    seed: int = 0,
    budget: int = 8,
    tol: float = TOL,
) -> VerificationReport:
    """Weak-type bound with the explicit constant, per sampled input.

    The samples are the indicator pool, the testing dual functions and
    ``trials`` log-normal draws.  The converse is checked as stated
    (constant 1) and, report-only, with the Lorentz duality factor ``q'``.
    """
    fs = space.with_backend(False)
    fw = testing_forward(space, alpha, sigma, w, p, q, mode)
    cstar = weak_constant(q)
    s, ww, mu = nm.floatify(fs.asarray(sigma)), nm.floatify(fs.asarray(w)), nm.floatify(fs.mu)
    pf, qf = float(p), float(q)
    rng = np.random.default_rng(seed)
    dual = testing_dual_pool(fs, alpha, s, ww, p)
    F = np.vstack([indicator_pool(fs), dual, random_pool(fs.n, rng, trials)])
    TF = (F * s) @ positive_matrix(fs, alpha).T
    weak = _weak_rows(TF, qf, ww * mu)
    strong = _lp_rows(TF, qf, ww * mu)
    fnorm = _lp_rows(F, pf, s * mu)
    bound = cstar * float(fw.value) * fnorm

    est = estimate_weak_norm(space, alpha, sigma, w, p, q, budget, seed, extra_f=dual)
    rep = VerificationReport(
        "weak",
        {"p": p, "q": q, "trials": trials, "samples": len(F), "tol": tol},
        {"testing_forward": fw, "weak_constant": cstar, "weak_optimal_eta": weak_optimal_eta(q)},
        {"weak": est},
        mode=mode,
        seed=seed,
    )
    k = _worst(weak, bound)
    rep.add("upper: weak(T f) <= C* fw ||f|| (all samples)", weak[k], bound[k], tol=tol, detail=f"worst sample {k}")
    k = _worst(weak, strong)
    rep.add("weak <= strong (all samples)", weak[k], strong[k], tol=tol, detail=f"worst sample {k}")
    rep.add("converse: testing_forward <= weak norm", fw.value, est.value, tol=tol)
    rep.add("converse with q': testing_forward <= q' weak norm", fw.value, nm.conjugate(qf) * est.value, hard=False, tol=tol)
    return rep


# -- maximal operator -----------------------------------------------------------


def verify_maximal_bounds(
    space: FilteredSpace,
    v,
    w,
    p,
    c_budget: float = C_BUDGET,
    mode: str = "atoms",
    seed: int = 0,
    budget: int = 8,
    trials: int = 200,
    tol: float = TOL,
) -> VerificationReport:
    """Mixed bounds for ``||M||: L^p(w) -> L^p(v)`` and the ``S*_p`` two-sidedness."""
    sigma = dual_weight(space, w, p)
    sp = sp_star(space, v, w, p, mode)
    consts = {
        "sp_star": sp,
        "bp": bp_const(space, v, w, p),
        "ap_two_weight": ap_two_weight(space, v, w, p),
        "ainf_star_sigma": ainf_star(space, sigma, mode),
    }
    same = nm.all_close(nm.floatify(space.asarray(v)), nm.floatify(space.asarray(w)), 1e-12)
    if same:
        consts["mixed"] = mixed_const(space, w, p, mode)
        consts["ap_w"] = ap_one_weight(space, w, p)
    extra = [nm.floatify(sigma) * fw_mask(space, sp)] if sp.witness is not None else []
    est = estimate_maximal_norm(space, v, w, p, budget, seed, extra)
    rep = VerificationReport("maximal", {"p": p, "c_budget": c_budget, "trials": trials, "tol": tol}, consts, {"maximal": est}, mode=mode, seed=seed)

    pf = float(p)
    norm = est.value
    rep.add("lemma lower: sp_star <= norm", sp.value, norm, tol=tol)
    rep.add("lemma upper: norm <= C sp_star", norm, c_budget * float(sp.value), tol=tol)
    rep.add("bound (1): norm <= C B_p^(1/p)", norm, c_budget * float(consts["bp"]) ** (1 / pf), tol=tol)
    rep.add(
        "bound (2): norm <= C (A_p A*inf(sigma))^(1/p)",
        norm,
        c_budget * (float(consts["ap_two_weight"]) * float(consts["ainf_star_sigma"].value)) ** (1 / pf),
        tol=tol,
    )
    if same:
        apw = float(consts["ap_w"])
        rhs3 = float(consts["mixed"].value) * (1 + math.log2(apw)) ** (1 / pf)
        rep.add("bound (3): norm <= C mixed (1 + log2 A_p)^(1/p)", norm, c_budget * rhs3, tol=tol)
        K = math.floor(math.log2(apw)) + 1
        rep.constants["K"] = K
        rep.add("bound (3) bookkeeping: K + 1 <= 3 + log2 A_p", K + 1, 3 + math.log2(apw), tol=tol)

    # unweighted Doob inequality on sampled inputs
    fs = space.with_backend(False)
    mu = nm.floatify(fs.mu)
    rng = np.random.default_rng(seed)
    ind = indicator_pool(fs)
    F = np.vstack([ind, ind * nm.floatify(sigma), random_pool(fs.n, rng, trials), est.witness["f"][None, :]])
    MF = np.max(np.einsum("lxy,my->lmx", _projections(fs), F), axis=0)
    lhs = _lp_rows(MF, pf, mu)
    rhs = nm.conjugate(pf) * _lp_rows(F, pf, mu)
    k = _worst(lhs, rhs)
    rep.add("doob: ||Mf||_p <= p' ||f||_p (all samples)", lhs[k], rhs[k], tol=tol, detail=f"worst sample {k} of {len(F)}")
    return rep


# -- principal sets ------------------------------------------------------------


def _families(space, h, w, i, k):
    if k is None:
        return principal_cover(space, h, w, i)
    return [build_principal_family(space, h, w, i, k)]


def verify_sparsity(space: FilteredSpace, h, w=None, i: int = 0, k: int | None = None, tol: float = TOL) -> VerificationReport:
    """P.1-P.6 and the sparsity bound on every family of the cover (or scale ``k``)."""
    fams = _families(space, h, w, i, k)
    rep = VerificationReport("sparsity", {"i": i, "k": k, "families": len(fams), "tol": tol})
    merged: dict = {}
    nodes = 0
    for fam in fams:
        nodes += len(fam.nodes())
        for name, res in check_properties(fam, tol).items():
            cur = merged.setdefault(name, [True, 0.0, ""])
            cur[1] = max(cur[1], res.worst)
            if not res.passed and cur[0]:
                cur[0], cur[2] = False, f"scale {fam.origin_scale}: {res.detail}"
    rep.constants["nodes"] = nodes
    rep.constants["max_depth"] = max((fam.root.depth() for fam in fams), default=0)
    for name, (ok, worst, detail) in sorted(merged.items()):
        rep.checks.append(Check(name, worst, 1.0 if worst else 0.0, ok, True, detail))
    return rep


def verify_carleson(space: FilteredSpace, h, w=None, p=2, i: int = 0, k: int | None = None, tol: float = TOL) -> VerificationReport:
    fams = _families(space, h, w, i, k)
    const = float(carleson_constant(p))
    rep = VerificationReport("carleson", {"p": p, "i": i, "k": k, "families": len(fams), "tol": tol}, {"constant": const})
    worst, ok, detail = None, True, ""
    for fam in fams:
        res = carleson_check(fam, p, tol)
        if worst is None or res.ratio > worst.ratio:
            worst = res
        if not res.passed and ok:
            ok, detail = False, f"scale {fam.origin_scale}: {float(res.lhs)!r} > {float(res.rhs)!r}"
    if worst is not None:
        rep.constants["max_ratio"] = worst.ratio
        rep.checks.append(Check("carleson: sum w(P) 2^(p(k2-1)) <= 2(p')^p ||h||^p", float(worst.lhs), float(worst.rhs), ok, True, detail))
        rep.add("carleson ratio <= 2(p')^p", worst.ratio, const, tol=tol)
    return rep


def verify_representation(space: FilteredSpace, h, w=None, i: int = 0, k: int | None = None, tol: float = TOL) -> VerificationReport:
    fams = _families(space, h, w, i, k)
    rep = VerificationReport("representation", {"i": i, "k": k, "families": len(fams), "tol": tol}, {"constant": 4})
    loc = dec = bnd = True
    worst = 0.0
    for fam in fams:
        res = maximal_representation_check(fam, tol)
        loc &= res.localization_equal
        dec &= res.decomposition_equal
        bnd &= res.bound_passed
        worst = max(worst, res.max_ratio)
    rep.constants["max_ratio"] = worst
    rep.checks.append(Check("localization equality", 0.0, 0.0, loc))
    rep.checks.append(Check("decomposition equality", 0.0, 0.0, dec))
    rep.checks.append(Check("bound with constant 4", worst, 1.0, bnd))
    return rep


# -- duality and A_inf comparisons ----------------------------------------------


def verify_remark28(space: FilteredSpace, w, ps=(1.5, 2, 3), mode: str = "atoms", tol: float = TOL) -> VerificationReport:
    rep = VerificationReport("remark28", {"ps": list(ps), "tol": tol}, mode=mode)
    ainf = ainf_exp(space, w)
    rep.constants["ainf_exp"] = ainf
    star = ainf_star(space, w, mode)
    rep.constants["ainf_star"] = star
    rep.constants["ainf_star_over_exp"] = float(star.value) / ainf
    for p in ps:
        pe = nm.exponent_value(p, space.exact)
        pp = nm.conjugate(pe)
        apw = ap_one_weight(space, w, pe)
        sigma = dual_weight(space, w, pe)
        aps = ap_one_weight(space, sigma, pp)
        lhs, rhs = nm.to_float(aps) ** (1 / float(pp)), nm.to_float(apw) ** (1 / float(pe))
        rep.constants[f"ap_w[{p}]"] = apw
        rep.constants[f"ap_sigma[{p}]"] = aps
        rep.checks.append(Check(f"duality p={p}: A_p'(sigma)^(1/p') = A_p(w)^(1/p)", lhs, rhs, nm.close(lhs, rhs, tol)))
        rep.add(f"ainf_exp <= A_p(w), p={p}", ainf, apw, tol=tol)
    return rep
