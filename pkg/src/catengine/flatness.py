"""Flatness of functors out of a finite category, by several routes.

The definitional test compares the colimit weighted by each virtual limit
against the actual limit of the composite.  The structural tests (left
covering, finitely multicontinuous, finitely fc-continuous, merging
multi-finite limits) express the same property through weak limits,
multilimits, fc-limits and multi-finite limits of the domain.

All functor targets are concrete over a presheaf category: limits are
computed pointwise and regular epimorphisms are pointwise surjections.
Comparison maps are always constructed element by element, never inferred
from cardinalities.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import (
    NoMultiFiniteLimit,
    NoMultilimit,
    NoWeakLimit,
    ValidationError,
)
from .fincat import Cone, Diagram, FiniteCategory, elements_category, is_cofiltered
from . import presheaf as ps
from . import virtlim as vl

POINT_BASE = FiniteCategory.build(("*",), ("1",), (0,), (0,), (0,), ((0,),), name="pt")


@dataclass(frozen=True)
class FailingWeight:
    diagram: str
    detail: str

    def to_json(self) -> dict:
        return {"diagram": self.diagram, "detail": self.detail}


@dataclass(frozen=True)
class FlatVerdict:
    flat: bool
    failing_weight: Optional[FailingWeight]
    method: str

    def __bool__(self) -> bool:
        return self.flat

    def to_json(self) -> dict:
        return {
            "flat": self.flat,
            "method": self.method,
            "failing_weight": self.failing_weight.to_json() if self.failing_weight else None,
        }


@dataclass(frozen=True, eq=False)
class ConcreteFunctor:
    """A functor into a full subcategory of presheaves over ``target_base``."""

    source: FiniteCategory
    target_base: FiniteCategory
    objects: tuple[ps.Presheaf, ...]
    morphisms: tuple[ps.NatTransformation, ...]
    name: str = field(default="F", compare=False)

    def __post_init__(self):
        C = self.source
        if len(self.objects) != C.n_objects or len(self.morphisms) != C.n_morphisms:
            raise ValidationError("functor tables sized wrong")
        for m in range(C.n_morphisms):
            t = self.morphisms[m]
            if t.source is not self.objects[C.src[m]] or t.target is not self.objects[C.tgt[m]]:
                raise ValidationError(f"image of {C.morphisms[m]} has bad endpoints")
        for a in range(C.n_objects):
            if self.morphisms[C.identity[a]].key() != ps.identity_nat(self.objects[a]).key():
                raise ValidationError(f"image of the identity at {C.objects[a]} is not the identity")
        for g in range(C.n_morphisms):
            for f in range(C.n_morphisms):
                c = C.table[g][f]
                if c >= 0:
                    comp = ps.compose_nats(self.morphisms[g], self.morphisms[f])
                    if self.morphisms[c].key() != comp.key():
                        raise ValidationError(
                            f"functor breaks composition at ({C.morphisms[g]}, {C.morphisms[f]})"
                        )

    @classmethod
    def from_set_functor(cls, F: ps.SetFunctor) -> "ConcreteFunctor":
        objs = tuple(
            ps.Presheaf(POINT_BASE, (F.values[a],), ({x: x for x in F.values[a]},), name=f"{F.name}({F.base.objects[a]})")
            for a in range(F.base.n_objects)
        )
        mors = tuple(
            ps.NatTransformation(objs[F.base.src[m]], objs[F.base.tgt[m]], (dict(F.actions[m]),), check=False)
            for m in range(F.base.n_morphisms)
        )
        return cls(F.base, POINT_BASE, objs, mors, name=F.name)


def _as_concrete(F) -> ConcreteFunctor:
    if isinstance(F, ConcreteFunctor):
        return F
    if isinstance(F, ps.SetFunctor):
        return ConcreteFunctor.from_set_functor(F)
    raise ValidationError(f"cannot interpret {type(F).__name__} as a concrete functor")


def composite_limit(F: ConcreteFunctor, diagram: Diagram) -> ps.PresheafCone:
    """The pointwise limit of ``F`` composed with a diagram in its source."""
    S = diagram.shape
    vertices = tuple(F.objects[diagram.vertex(d)] for d in range(S.n_objects))
    edges = tuple(F.morphisms[diagram.body.morphism_map[s]] for s in range(S.n_morphisms))
    return ps.limit(ps.PresheafDiagram(S, vertices, edges), base=F.target_base, name=f"lim F{diagram.describe()}")


def comparison_from_cone(F: ConcreteFunctor, cone: Cone, lim: ps.PresheafCone) -> ps.NatTransformation:
    """The comparison ``F(apex) -> lim F∘H`` induced by a cone over ``H``."""
    B = F.target_base
    src = F.objects[cone.apex]
    comps = tuple(
        {
            u: tuple(F.morphisms[leg].components[b][u] for leg in cone.legs)
            for u in src.values[b]
        }
        for b in range(B.n_objects)
    )
    return ps.NatTransformation(src, lim.apex, comps)


def canonical_from_family(
    F: ConcreteFunctor, family: Sequence[tuple[int, Cone]], lim: ps.PresheafCone
) -> ps.NatTransformation:
    """The canonical map from the coproduct of the family's images to the limit."""
    B = F.target_base
    cp = ps.coproduct(B, [F.objects[c] for (c, _) in family])
    comps = []
    for b in range(B.n_objects):
        comp = {}
        for (i, u) in cp.apex.values[b]:
            _, cone = family[i]
            comp[(i, u)] = tuple(F.morphisms[leg].components[b][u] for leg in cone.legs)
        comps.append(comp)
    return ps.NatTransformation(cp.apex, lim.apex, tuple(comps))


def _sweep(cat: FiniteCategory, diagrams, bound: int = 0):
    if diagrams is not None:
        return list(diagrams)
    if bound > 0:
        return vl.swept_diagrams(cat, bound)
    return vl.generating_diagrams(cat)


# -- the definitional tests ---------------------------------------------------


def is_flat_set_valued(F: ps.SetFunctor, diagrams=None, bound: int = 0) -> FlatVerdict:
    """Definitional flatness for finite-set-valued functors.

    For each swept diagram the colimit weighted by the cone presheaf must
    biject with the actual limit of the composite, through the canonical
    comparison.
    """
    C = F.base
    for diagram in _sweep(C, diagrams, bound):
        v = vl.virtual_limit(C, diagram)
        coend = ps.weighted_colimit(v.weight, F)
        S = diagram.shape
        lim_elems = [
            tup
            for tup in itertools.product(*[F.values[diagram.vertex(d)] for d in range(S.n_objects)])
            if all(
                F.actions[diagram.body.morphism_map[s]][tup[S.src[s]]] == tup[S.tgt[s]]
                for s in range(S.n_morphisms)
            )
        ]
        images = {}
        for rep in coend.elements:
            c, w, x = rep
            img = tuple(F.actions[leg][x] for leg in w)
            if img not in lim_elems:
                raise ValidationError("internal: comparison map leaves the limit")
            images[rep] = img
        injective = len(set(images.values())) == len(coend.elements)
        surjective = set(images.values()) == set(lim_elems)
        if not (injective and surjective):
            return FlatVerdict(
                False,
                FailingWeight(
                    diagram.describe(),
                    f"comparison {len(coend.elements)} -> {len(lim_elems)} is not a bijection",
                ),
                "definitional",
            )
    return FlatVerdict(True, None, "definitional")


def is_flat_via_elements(F: ps.SetFunctor) -> FlatVerdict:
    """Flatness via cofilteredness of the category of elements.

    The verdict must agree with the definitional test, and that agreement
    is asserted on every call.
    """
    verdict = is_cofiltered(elements_category(F))
    definitional = is_flat_set_valued(F)
    if bool(verdict) != definitional.flat:
        raise ValidationError(
            "internal: elements-category flatness disagrees with the definitional test"
        )
    failing = None
    if not verdict:
        failing = definitional.failing_weight or FailingWeight("elements", f"{verdict.reason} at {verdict.witness}")
    return FlatVerdict(bool(verdict), failing, "elements")


def weighted_colimit_concrete(W: ps.Presheaf, F: ConcreteFunctor) -> tuple[ps.Presheaf, dict]:
    """Colimit of a concrete functor weighted by a presheaf on its source.

    Computed pointwise over the target base: triples ``(c, w, u)`` with
    ``u`` an element of ``F(c)`` are identified along the usual coend
    relations.  Returns the presheaf together with the class map.
    """
    C, B = F.source, F.target_base
    if W.base != C:
        raise ValidationError("weight must live on the functor's source")
    reps, class_of = [], []
    for b in range(B.n_objects):
        items = [
            (c, w, u)
            for c in range(C.n_objects)
            for w in W.values[c]
            for u in F.objects[c].values[b]
        ]
        idx = {it: i for i, it in enumerate(items)}
        uf = ps._UnionFind(len(items))
        for f in range(C.n_morphisms):
            a, a2 = C.src[f], C.tgt[f]
            for w in W.values[a2]:
                wa = W.actions[f][w]
                for u in F.objects[a].values[b]:
                    uf.union(idx[(a, wa, u)], idx[(a2, w, F.morphisms[f].components[b][u])])
        class_of.append({it: items[uf.find(i)] for it, i in idx.items()})
        reps.append(tuple(it for i, it in enumerate(items) if uf.find(i) == i))
    values = tuple(reps)
    actions = []
    for f in range(B.n_morphisms):
        a, b = B.src[f], B.tgt[f]
        act = {}
        for (c, w, u) in values[b]:
            act[(c, w, u)] = class_of[a][(c, w, F.objects[c].actions[f][u])]
        actions.append(act)
    out = ps.Presheaf(B, values, tuple(actions), name=f"({W.name})*({F.name})")
    return out, {b: class_of[b] for b in range(B.n_objects)}


def is_flat(F, diagrams=None, bound: int = 0) -> FlatVerdict:
    """Definitional flatness for a functor into a concrete target.

    For each swept diagram the weighted colimit of ``F`` by the diagram's
    cone presheaf must map isomorphically onto the pointwise limit of the
    composite.
    """
    F = _as_concrete(F)
    C, B = F.source, F.target_base
    for diagram in _sweep(C, diagrams, bound):
        v = vl.virtual_limit(C, diagram)
        co, class_of = weighted_colimit_concrete(v.weight, F)
        lim = composite_limit(F, diagram)
        comps = []
        for b in range(B.n_objects):
            comp = {}
            for (c, w, u) in co.values[b]:
                comp[(c, w, u)] = tuple(F.morphisms[leg].components[b][u] for leg in w)
                if comp[(c, w, u)] not in set(lim.apex.values[b]):
                    raise ValidationError("internal: comparison map leaves the limit")
            comps.append(comp)
        cmp_nat = ps.NatTransformation(co, lim.apex, tuple(comps))
        if not cmp_nat.is_pointwise_bijective():
            return FlatVerdict(
                False,
                FailingWeight(diagram.describe(), "weighted colimit does not match the limit"),
                "definitional",
            )
    return FlatVerdict(True, None, "definitional")


# -- structural characterizations ---------------------------------------------


def left_covering(F, target=None, diagrams=None, bound: int = 0) -> FlatVerdict:
    """Each weak limit's comparison into the actual limit must be regular epi."""
    F = _as_concrete(F)
    C = F.source
    for diagram in _sweep(C, diagrams, bound):
        v = vl.virtual_limit(C, diagram)
        wl = vl.weak_limit(v)
        if wl is None:
            raise NoWeakLimit(diagram.describe())
        _, cone = wl
        lim = composite_limit(F, diagram)
        comp = comparison_from_cone(F, cone, lim)
        if not comp.is_pointwise_surjective():
            return FlatVerdict(
                False,
                FailingWeight(diagram.describe(), "weak-limit comparison is not a regular epi"),
                "covering",
            )
    return FlatVerdict(True, None, "covering")


def finitely_multicontinuous(F, target=None, diagrams=None, bound: int = 0) -> FlatVerdict:
    """The multilimit family's canonical map must be an isomorphism."""
    F = _as_concrete(F)
    C = F.source
    for diagram in _sweep(C, diagrams, bound):
        v = vl.virtual_limit(C, diagram)
        family = vl.multilimit(v)
        if family is None:
            raise NoMultilimit(diagram.describe())
        lim = composite_limit(F, diagram)
        can = canonical_from_family(F, family, lim)
        if not can.is_pointwise_bijective():
            return FlatVerdict(
                False,
                FailingWeight(diagram.describe(), "multilimit comparison is not an isomorphism"),
                "multi",
            )
    return FlatVerdict(True, None, "multi")


def fc_continuous(F, target=None, diagrams=None, bound: int = 0) -> FlatVerdict:
    """The minimal fc-family's canonical map must be a regular epi."""
    F = _as_concrete(F)
    C = F.source
    for diagram in _sweep(C, diagrams, bound):
        v = vl.virtual_limit(C, diagram)
        family = vl.fc_limit(v)
        lim = composite_limit(F, diagram)
        can = canonical_from_family(F, family, lim)
        if not can.is_pointwise_surjective():
            return FlatVerdict(
                False,
                FailingWeight(diagram.describe(), "fc-family comparison is not a regular epi"),
                "fc",
            )
    return FlatVerdict(True, None, "fc")


def merges_multi_finite(F, target=None, diagrams=None, bound: int = 0) -> FlatVerdict:
    """The multi-finite limit family's canonical map must be an isomorphism."""
    F = _as_concrete(F)
    C = F.source
    for diagram in _sweep(C, diagrams, bound):
        v = vl.virtual_limit(C, diagram)
        family = vl.multi_finite_limit(v)
        if family is None:
            raise NoMultiFiniteLimit(diagram.describe())
        lim = composite_limit(F, diagram)
        can = canonical_from_family(F, family, lim)
        if not can.is_pointwise_bijective():
            return FlatVerdict(
                False,
                FailingWeight(diagram.describe(), "multi-finite comparison is not an isomorphism"),
                "merge",
            )
    return FlatVerdict(True, None, "merge")


# -- lexness of set-valued functors (for lex domains) --------------------------


def preserves_limit(F: ps.SetFunctor, cone: Cone) -> bool:
    """Does ``F`` send the given limiting cone to a limit in finite sets?"""
    conc = ConcreteFunctor.from_set_functor(F)
    lim = composite_limit(conc, cone.diagram)
    comp = comparison_from_cone(conc, cone, lim)
    return comp.is_pointwise_bijective()


def preserves_colimit(F: ps.SetFunctor, cocone) -> bool:
    """Does ``F`` send the given colimiting cocone to a colimit in finite sets?

    The colimit of the image diagram is recomputed from scratch and the
    canonical map onto ``F(apex)`` checked bijective.
    """
    D = cocone.diagram
    S = D.shape
    items = [(d, x) for d in range(S.n_objects) for x in F.values[D.vertex(d)]]
    idx = {it: i for i, it in enumerate(items)}
    uf = ps._UnionFind(len(items))
    for s in range(S.n_morphisms):
        d, d2 = S.src[s], S.tgt[s]
        for x in F.values[D.vertex(d)]:
            uf.union(idx[(d, x)], idx[(d2, F.actions[D.body.morphism_map[s]][x])])
    classes: dict[int, set] = {}
    for it, i in idx.items():
        classes.setdefault(uf.find(i), set()).add(it)
    images = []
    for root, members in sorted(classes.items()):
        imgs = {F.actions[cocone.legs[d]][x] for (d, x) in members}
        if len(imgs) != 1:
            return False
        images.append(next(iter(imgs)))
    return len(set(images)) == len(images) and set(images) == set(F.values[cocone.apex])


def is_lex_set_valued(F: ps.SetFunctor, diagrams=None, bound: int = 0) -> FlatVerdict:
    """Preservation of the (assumed existing) generating limits of the domain.

    Raises if some swept diagram has no limit in the domain; intended for
    categories that are already lex.
    """
    from .fincat import limit_in_category

    C = F.base
    for diagram in _sweep(C, diagrams, bound):
        cone = limit_in_category(diagram)
        if cone is None:
            raise NoWeakLimit(diagram.describe())
        if not preserves_limit(F, cone):
            return FlatVerdict(
                False, FailingWeight(diagram.describe(), "limit not preserved"), "lex"
            )
    return FlatVerdict(True, None, "lex")
