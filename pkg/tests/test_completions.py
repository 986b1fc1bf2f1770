from __future__ import annotations

import pytest

from catengine import fincat as fc
from catengine import presheaf as ps
from catengine import flatness as fl
from catengine import virtlim as vl
from catengine import completions as cp
from catengine.errors import NotWeaklyLex, ValidationError
from conftest import hom_functor


BOUNDS = cp.Bounds(max_objects=12, max_iterations=3)


@pytest.fixture(scope="module")
def fams(cats):
    return {name: cp.fam_f(C, 4, cp.Bounds(max_objects=80)) for name, C in cats.items()}


def fam_scope(E, size=2):
    return [
        i
        for i, p in enumerate(E.provenance)
        if p.detail == "(empty)" or len(p.detail.split(",")) <= size
    ]


def test_close_one_lext_is_finite_sets(cats):
    E = cp.close(cats["ONE"], "lext", cp.Bounds(max_objects=5, max_fiber=3, max_iterations=3))
    sizes = sorted(M.total_size() for M in E.objects)
    assert sizes[:4] == [0, 1, 2, 3]


def test_close_reg_matches_direct_on_weakly_lex(cats, weakly_lex_names):
    for name in weakly_lex_names:
        C = cats[name]
        E1 = cp.close(C, "reg", BOUNDS)
        E2 = cp.direct_regular(C, BOUNDS)
        assert E1.saturated
        for M in E2.objects:
            assert E1.find_object(M) is not None, (name, M.name)
        for M in E1.objects:
            assert E2.find_object(M) is not None, (name, M.name)


def test_direct_regular_requires_weak_limits(cats):
    with pytest.raises(NotWeaklyLex) as exc:
        cp.direct_regular(cats["PAR"])
    assert "u,v" in exc.value.witness


def test_direct_regular_arrow_collapses_to_representables(cats):
    E = cp.direct_regular(cats["ARROW"])
    assert len(E.objects) == 2


def test_direct_pretopos_succeeds_everywhere(cats):
    for name, C in cats.items():
        E = cp.direct_pretopos(C, cp.Bounds(max_objects=40, max_arity=2))
        assert len(E.objects) >= C.n_objects, name
        assert E.find_object(ps.initial_presheaf(C)) is not None, name


def test_direct_pretopos_par_contains_empty_presheaf(cats):
    E = cp.direct_pretopos(cats["PAR"], cp.Bounds(max_arity=2))
    assert E.find_object(ps.initial_presheaf(cats["PAR"])) is not None


def test_direct_pretopos_contained_in_closure(cats):
    C = cats["DISC2"]
    direct = cp.direct_pretopos(C, cp.Bounds(max_arity=2))
    closed = cp.close(C, "pret", cp.Bounds(max_objects=16, max_iterations=3, max_fiber=8))
    for M in direct.objects:
        if max(M.fiber_sizes(), default=0) <= 4:
            assert closed.find_object(M) is not None, M.name


def test_disc2_coproduct_of_representables_is_terminal(cats):
    # over a discrete base the two-point family and the constant singleton agree
    DISC2 = cats["DISC2"]
    E = cp.direct_pretopos(DISC2, cp.Bounds(max_arity=2))
    cop = ps.coproduct(DISC2, [ps.yoneda(DISC2, 0), ps.yoneda(DISC2, 1)]).apex
    t = ps.terminal_presheaf(DISC2)
    assert ps.find_iso(cop, t) is not None
    assert E.find_object(t) is not None


def test_fam_f_examples(cats, fams):
    assert sorted(M.total_size() for M in cp.fam_f(cats["ONE"], 3).objects) == [0, 1, 2, 3]
    assert len(cp.family_homs(cats["DISC2"], (0,), (0, 1))) == 1
    assert len(cp.family_homs(cats["PAR"], (0,), (1, 1))) == 4
    # family-form morphisms biject with natural transformations of realizations
    for name in ("DISC2", "PAR", "ARROW"):
        C = cats[name]
        fam1, fam2 = (0,), (0, C.n_objects - 1)
        r1 = ps.coproduct(C, [ps.yoneda(C, a) for a in fam1]).apex
        r2 = ps.coproduct(C, [ps.yoneda(C, a) for a in fam2]).apex
        assert len(cp.family_homs(C, fam1, fam2)) == len(ps.hom_set(r1, r2)), name


def test_lextensive_battery_iff_multifinite(cats, fams):
    for name, C in cats.items():
        E = fams[name]
        rep = cp.verify_axioms(E, scope=fam_scope(E), flavor="lext")
        assert rep.passed == vl.classify_completeness(C, "multifinite").passed, name


def test_fam_par_fails_at_terminal(cats, fams):
    rep = cp.verify_axioms(fams["PAR"], scope=fam_scope(fams["PAR"]), flavor="lext")
    assert not rep.passed
    assert rep.checks["limits"]["witness"] == "terminal"


def test_fam_disc2_passes_lextensive(cats, fams):
    rep = cp.verify_axioms(fams["DISC2"], scope=fam_scope(fams["DISC2"]), flavor="lext")
    assert rep.passed


def test_regular_battery_on_direct_regular(cats, weakly_lex_names):
    for name in weakly_lex_names:
        E = cp.direct_regular(cats[name])
        rep = cp.verify_axioms(E, flavor="reg")
        assert rep.passed, (name, rep.checks)


def test_exactness_battery_on_closure(cats):
    E = cp.close(cats["ARROW"], "ex", BOUNDS)
    rep = cp.verify_axioms(E, flavor="ex")
    assert rep.passed, rep.checks


def test_universal_property_one_lext(cats):
    E = cp.fam_f(cats["ONE"], 2)
    r = cp.universal_property_check(cats["ONE"], E, 2, flavor="lext")
    assert r.correspondence and not r.sampled
    assert r.flat_iso_classes == r.exact_iso_classes == 1


def test_universal_property_arrow_reg(cats):
    E = cp.close(cats["ARROW"], "reg", BOUNDS)
    r = cp.universal_property_check(cats["ARROW"], E, 2, flavor="reg")
    assert r.correspondence
    assert r.flats == 2 and r.exacts == 2


def test_nonflat_extension_fails_structure(cats):
    E = cp.fam_f(cats["DISC2"], 2)
    struct = cp.completion_structure(E, "lext")
    lan = cp.lan_extension(E, ps.constant_set_functor(cats["DISC2"]))
    assert not cp.is_phi_exact_set_functor(lan.functor, struct, "lext")


def test_nonrepresentable_limit_witness_on_par(cats):
    E, idx = cp.nonrepresentable_limit_witness(cats["PAR"], cp.Bounds(max_objects=8, max_iterations=2))
    assert idx is not None
    assert E.provenance[idx].kind == "limit"
    witness = E.objects[idx]
    for a in range(cats["PAR"].n_objects):
        assert ps.find_iso(witness, ps.yoneda(cats["PAR"], a)) is None
    assert fc.is_cauchy_complete(cats["PAR"])
    assert not vl.classify_completeness(cats["PAR"], "weak").passed


def test_limit_closure_saturates_on_lex_bases(cats):
    for name in ("ONE", "ARROW", "CHAIN3"):
        E, idx = cp.nonrepresentable_limit_witness(cats[name], cp.Bounds(max_objects=8, max_iterations=3))
        assert idx is None and E.saturated, name


def test_every_completion_inclusion_is_flat(cats):
    built = [
        cp.direct_regular(cats["ARROW"]),
        cp.direct_pretopos(cats["PAR"], cp.Bounds(max_arity=2)),
        cp.fam_f(cats["DISC2"], 2),
        cp.close(cats["ONE"], "lext", cp.Bounds(max_objects=5, max_fiber=3)),
    ]
    for E in built:
        K = E.inclusion_concrete()
        assert fl.is_flat(K).flat, E.flavor


def test_inclusion_left_covering_on_weakly_lex(cats, weakly_lex_names):
    for name in weakly_lex_names:
        E = cp.direct_regular(cats[name])
        K = E.inclusion_concrete()
        assert fl.left_covering(K).flat, name


def test_completion_category_revalidates(cats):
    E = cp.direct_pretopos(cats["PAR"], cp.Bounds(max_arity=2))
    cat = E.as_category()
    cat.check()
    fd, _ = E.inclusion()
    assert fd.is_faithful()
    assert fd.is_full()


def test_completion_serialization_roundtrip(cats):
    import json

    E = cp.direct_pretopos(cats["PAR"], cp.Bounds(max_arity=2))
    blob = json.dumps(E.to_json(), sort_keys=True)
    E2 = cp.completion_from_json(json.loads(blob))
    assert len(E2.objects) == len(E.objects)
    assert all(E2.find_object(M) is not None for M in E.objects)
    assert E2.saturated == E.saturated


def test_close_pret_contains_direct_pretopos_on_par(cats):
    PAR = cats["PAR"]
    direct = cp.direct_pretopos(PAR, cp.Bounds(max_arity=2))
    closed = cp.close(PAR, "pret", cp.Bounds(max_objects=20, max_iterations=3, max_fiber=12))
    missing = [M.name for M in direct.objects if closed.find_object(M) is None]
    assert not missing, missing


def test_inclusion_into_pretopos_is_fc_continuous(cats):
    for name in ("PAR", "DISC2", "Z2"):
        E = cp.direct_pretopos(cats[name], cp.Bounds(max_arity=2))
        K = E.inclusion_concrete()
        assert fl.fc_continuous(K).flat, name


def test_universal_property_sampling_flag(cats):
    E = cp.fam_f(cats["ONE"], 2)
    r = cp.universal_property_check(cats["ONE"], E, 2, flavor="lext", cap=2, seed=3)
    assert r.sampled


def test_image_presentation_is_strictly_smaller_than_closure(cats):
    # over PAR the double coproduct of the two-element representable has a
    # 2-element fiber at B, but every product of representables has a
    # singleton fiber there, so no mono exists and no image presentation
    # can produce it at any arity; the closure builds it as a coproduct
    PAR = cats["PAR"]
    YB = ps.yoneda(PAR, 1)
    double = ps.coproduct(PAR, [YB, YB]).apex
    direct = cp.direct_pretopos(PAR, cp.Bounds(max_objects=60, max_arity=3))
    assert direct.find_object(double) is None
    closed = cp.close(PAR, "pret", cp.Bounds(max_objects=20, max_iterations=2, max_fiber=12))
    assert closed.find_object(double) is not None
