"""Virtual limits of finite diagrams and their classification.

The virtual limit of a diagram ``H`` is the presheaf of cones over ``H``;
its structure decides whether the diagram has a weak limit, a multilimit,
a finite-family cover (fc-limit), a multi-finite limit, or a polylimit.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .errors import ValidationError
from .fincat import (
    Cone,
    Diagram,
    FiniteCategory,
    FunctorData,
    empty_diagram,
    pair_diagram,
    parallel_pair_diagram,
)
from . import presheaf as ps


@dataclass(frozen=True, eq=False)
class VirtualLimit:
    diagram: Diagram
    weight: ps.Presheaf
    cone_index: dict  # (object, weight element) -> Cone

    def __post_init__(self):
        C = self.diagram.target
        n_cones = 0
        for c in range(C.n_objects):
            for w in self.weight.values[c]:
                cone = self.cone_index[(c, w)]
                if cone.apex != c or tuple(cone.legs) != tuple(w):
                    raise ValidationError("cone index out of step with the weight")
                n_cones += 1
        if n_cones != len(self.cone_index):
            raise ValidationError("cone index not a bijection")

    def elements(self) -> list[tuple[int, tuple]]:
        return [
            (c, w)
            for c in range(self.diagram.target.n_objects)
            for w in self.weight.values[c]
        ]

    def arrows(self, e1: tuple[int, tuple], e2: tuple[int, tuple]) -> list[int]:
        """Morphisms ``e1 -> e2`` in the category of elements of the weight."""
        (c1, w1), (c2, w2) = e1, e2
        C = self.diagram.target
        return [f for f in C.hom(c1, c2) if self.weight.actions[f][w2] == w1]

    def components(self) -> list[list[tuple[int, tuple]]]:
        elems = self.elements()
        index = {e: i for i, e in enumerate(elems)}
        uf = ps._UnionFind(len(elems))
        for i, e1 in enumerate(elems):
            for j, e2 in enumerate(elems):
                if i < j and (self.arrows(e1, e2) or self.arrows(e2, e1)):
                    uf.union(i, j)
        comps: dict[int, list] = {}
        for i, e in enumerate(elems):
            comps.setdefault(uf.find(i), []).append(e)
        return [comps[k] for k in sorted(comps)]


_VL_CACHE: dict[Diagram, VirtualLimit] = {}


def virtual_limit(cat: FiniteCategory, diagram: Diagram) -> VirtualLimit:
    """Compute the cone presheaf of ``diagram`` pointwise over representables.

    Results are memoized: the weight does not depend on any functor under
    test, and sweeps revisit the same diagrams constantly.
    """
    if diagram.target != cat:
        raise ValidationError("diagram does not land in the given category")
    if diagram in _VL_CACHE:
        return _VL_CACHE[diagram]
    S = diagram.shape
    vertices = tuple(ps.yoneda(cat, diagram.vertex(d)) for d in range(S.n_objects))
    edges = tuple(
        ps.yoneda_map(cat, diagram.body.morphism_map[s], vertices[S.src[s]], vertices[S.tgt[s]])
        for s in range(S.n_morphisms)
    )
    cone = ps.limit(ps.PresheafDiagram(S, vertices, edges), base=cat, name=f"lim Y{diagram.describe()}")
    weight = cone.apex
    index = {
        (c, w): Cone(diagram, c, tuple(w))
        for c in range(cat.n_objects)
        for w in weight.values[c]
    }
    out = VirtualLimit(diagram, weight, index)
    _VL_CACHE[diagram] = out
    return out


def weight_elements_category(v: VirtualLimit) -> FiniteCategory:
    """The weight's category of elements, materialized and re-validated.

    Arrows point the factorization way: ``(c,w) -> (c',w')`` is a base
    morphism carrying the cone ``w'`` back onto ``w``.
    """
    from .fincat import elements_category, opposite
    from .presheaf import presheaf_as_covariant

    return opposite(elements_category(presheaf_as_covariant(v.weight)))


def weak_limit(v: VirtualLimit) -> Optional[tuple[int, Cone]]:
    """An object whose representable covers the weight, with its cone."""
    C = v.diagram.target
    for c in range(C.n_objects):
        for w in v.weight.values[c]:
            t = ps.classifying_nat(v.weight, c, w)
            if t.is_pointwise_surjective():
                return c, v.cone_index[(c, w)]
    return None


def multilimit(v: VirtualLimit) -> Optional[list[tuple[int, Cone]]]:
    """The finite family through which every cone factors uniquely, if any.

    Present exactly when every connected component of the weight's category
    of elements has a terminal element; the result is verified against the
    coproduct of the corresponding representables.
    """
    C = v.diagram.target
    family = []
    for comp in v.components():
        terminal = None
        for t in comp:
            if all(len(v.arrows(e, t)) == 1 for e in comp):
                terminal = t
                break
        if terminal is None:
            return None
        family.append(terminal)
    cover = ps.coproduct(C, [ps.yoneda(C, c) for (c, _) in family]).apex
    if ps.find_iso(v.weight, cover) is None:
        raise ValidationError("internal: multilimit family does not cover the weight")
    return [(c, v.cone_index[(c, w)]) for (c, w) in family]


def fc_limit(v: VirtualLimit) -> list[tuple[int, Cone]]:
    """A minimum-size family of cones jointly covering every cone."""
    elems = v.elements()
    candidates = elems
    cover = [
        frozenset(j for j, e in enumerate(elems) if v.arrows(e, cand))
        for cand in candidates
    ]
    everything = frozenset(range(len(elems)))
    for k in range(len(candidates) + 1):
        for combo in itertools.combinations(range(len(candidates)), k):
            hit = frozenset().union(*(cover[i] for i in combo)) if combo else frozenset()
            if hit == everything:
                return [(elems[i][0], v.cone_index[elems[i]]) for i in combo]
    raise ValidationError("internal: the full family of cones must cover itself")


def multi_finite_limit(v: VirtualLimit) -> Optional[list[tuple[int, Cone]]]:
    """The multilimit when it exists as a finite family.

    On a finite base every multilimit family is finite; that coincidence is
    re-checked here rather than assumed.
    """
    family = multilimit(v)
    if family is None:
        return None
    if len(family) > v.weight.total_size():
        raise ValidationError("internal: multilimit family cannot exceed the cone count")
    return family


@dataclass(frozen=True)
class PolyMember:
    obj: int
    cone: Cone
    automorphisms: tuple[int, ...]


def polylimit(v: VirtualLimit) -> Optional[list[PolyMember]]:
    """A family with factorizations unique up to unique automorphism.

    Each component of the weight's category of elements must contain an
    element ``t`` reached by every element, whose automorphism group acts
    freely and transitively on the arrows into ``t``.
    """
    C = v.diagram.target
    isos = C.isos()
    out = []
    for comp in v.components():
        chosen = None
        for t in comp:
            auts = [f for f in v.arrows(t, t) if f in isos]
            ok = True
            for e in comp:
                homs = v.arrows(e, t)
                if not homs:
                    ok = False
                    break
                for h in homs:
                    orbit = [C.table[g][h] for g in auts]
                    if sorted(map(repr, orbit)) != sorted(map(repr, set(orbit))) or set(orbit) != set(homs):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                chosen = (t, tuple(auts))
                break
        if chosen is None:
            return None
        (c, w), auts = chosen
        out.append(PolyMember(c, v.cone_index[(c, w)], auts))
    return out


# -- diagram sweeps ----------------------------------------------------------


def generating_diagrams(cat: FiniteCategory) -> list[Diagram]:
    """Empty, distinct-parallel-pair and binary-pair diagrams.

    Parallel pairs come before products so that a category failing both
    reports the sharper equalizer-style witness first.
    """
    out = [empty_diagram(cat)]
    for (u, u2) in cat.parallel_pairs():
        if not cat.is_identity(u) or not cat.is_identity(u2):
            out.append(parallel_pair_diagram(cat, u, u2))
    for a in range(cat.n_objects):
        for b in range(a, cat.n_objects):
            out.append(pair_diagram(cat, a, b))
    return out


def _free_dag_category(n: int, edges: tuple[tuple[int, int], ...]) -> FiniteCategory:
    paths = [(i, ()) for i in range(n)]
    frontier = list(paths)
    while frontier:
        nxt = []
        for (start, es) in frontier:
            end = edges[es[-1]][1] if es else start
            for k, (i, j) in enumerate(edges):
                if i == end:
                    p = (start, es + (k,))
                    nxt.append(p)
        paths.extend(nxt)
        frontier = nxt
    idx = {p: i for i, p in enumerate(paths)}

    def endpoint(p):
        return edges[p[1][-1]][1] if p[1] else p[0]

    n_mor = len(paths)
    table = [[-1] * n_mor for _ in range(n_mor)]
    for gi, g in enumerate(paths):
        for fi, f in enumerate(paths):
            if g[0] == endpoint(f):
                table[gi][fi] = idx[(f[0], f[1] + g[1])]
    return FiniteCategory.build(
        tuple(f"n{i}" for i in range(n)),
        tuple("1_n%d" % p[0] if not p[1] else "e" + "".join(map(str, p[1])) + f"@n{p[0]}" for p in paths),
        tuple(p[0] for p in paths),
        tuple(endpoint(p) for p in paths),
        tuple(idx[(i, ())] for i in range(n)),
        table,
        name=f"dag{n}:{edges}",
    )


_DAG_SHAPES: dict[int, list[FiniteCategory]] = {}


def dag_shapes(bound: int) -> list[FiniteCategory]:
    """Free categories on acyclic multigraphs with at most ``bound`` nodes/edges."""
    if bound in _DAG_SHAPES:
        return _DAG_SHAPES[bound]
    shapes = []
    for n in range(1, bound + 1):
        slots = [(i, j) for i in range(n) for j in range(i + 1, n)]
        for mults in itertools.product(range(3), repeat=len(slots)):
            if sum(mults) > bound:
                continue
            edges = tuple(
                slot for slot, m in zip(slots, mults) for _ in range(m)
            )
            shapes.append(_free_dag_category(n, edges))
    _DAG_SHAPES[bound] = shapes
    return shapes


def diagrams_of_shape(shape: FiniteCategory, cat: FiniteCategory) -> list[Diagram]:
    from .fincat import enumerate_functors

    return [Diagram(shape, fd) for fd in enumerate_functors(shape, cat)]


def swept_diagrams(cat: FiniteCategory, bound: int) -> list[Diagram]:
    """The generating diagrams plus every diagram on a small free shape."""
    out = generating_diagrams(cat)
    for shape in dag_shapes(bound):
        out.extend(diagrams_of_shape(shape, cat))
    return out


# -- completeness classification ---------------------------------------------

MODES = ("weak", "multi", "multifinite", "fc", "poly")


def _detect(mode: str, v: VirtualLimit) -> tuple[bool, object]:
    if mode == "weak":
        r = weak_limit(v)
        return r is not None, r
    if mode == "multi":
        r = multilimit(v)
        return r is not None, r
    if mode == "multifinite":
        r = multi_finite_limit(v)
        return r is not None, r
    if mode == "fc":
        return True, fc_limit(v)
    if mode == "poly":
        r = polylimit(v)
        return r is not None, r
    raise ValidationError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class CompletenessReport:
    category: str
    mode: str
    bound: int
    passed: bool
    witness: Optional[str]
    records: tuple = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "mode": self.mode,
            "bound": self.bound,
            "passed": self.passed,
            "witness": self.witness,
            "records": [
                {"diagram": d, "ok": ok, "family_size": size} for (d, ok, size) in self.records
            ],
        }


def classify_completeness(cat: FiniteCategory, mode: str, bound: int = 0) -> CompletenessReport:
    """Run one virtual-limit detector over the generating diagrams.

    The headline verdict comes from the empty, pair and parallel-pair
    diagrams, which generate all finite limits; with ``bound > 0`` every
    diagram on a free shape of that size is swept as well.
    """
    diagrams = swept_diagrams(cat, bound) if bound > 0 else generating_diagrams(cat)
    records = []
    passed, witness = True, None
    for diagram in diagrams:
        v = virtual_limit(cat, diagram)
        ok, data = _detect(mode, v)
        size = len(data) if isinstance(data, list) else (1 if data else 0)
        records.append((diagram.describe(), ok, size))
        if not ok and passed:
            passed, witness = False, diagram.describe()
    return CompletenessReport(cat.name, mode, bound, passed, witness, tuple(records))
