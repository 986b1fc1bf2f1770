"""Finite categories with exhaustively validated composition tables.

Objects and morphisms are dense integer ids; human-readable names live in
parallel tables so input files stay legible while the core stays fast.
Everything here is immutable after validation and safe to share.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from .errors import (
    AssociativityViolation,
    IdentityViolation,
    MissingComposite,
    ValidationError,
)


@dataclass(frozen=True)
class FiniteCategory:
    """A finite category as a total composition table over composable pairs.

    ``table[g][f]`` is the id of ``g∘f`` when ``tgt(f) == src(g)`` and -1
    otherwise.  Instances are only produced through :func:`validate_category`
    or :meth:`build`, which verify the identity and associativity laws over
    every composable pair and triple.
    """

    objects: tuple[str, ...]
    morphisms: tuple[str, ...]
    src: tuple[int, ...]
    tgt: tuple[int, ...]
    identity: tuple[int, ...]
    table: tuple[tuple[int, ...], ...]
    name: str = field(default="C", compare=False)
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, objects, morphisms, src, tgt, identity, table, name="C"):
        cat = cls(
            tuple(objects),
            tuple(morphisms),
            tuple(src),
            tuple(tgt),
            tuple(identity),
            tuple(tuple(row) for row in table),
            name,
        )
        cat.check()
        return cat

    def check(self) -> None:
        """Exhaustively verify the category laws; raise on the first failure."""
        n_obj, n_mor = len(self.objects), len(self.morphisms)
        if len(set(self.objects)) != n_obj or len(set(self.morphisms)) != n_mor:
            raise ValidationError("duplicate object or morphism names")
        if len(self.src) != n_mor or len(self.tgt) != n_mor:
            raise ValidationError("src/tgt tables sized wrong")
        for m in range(n_mor):
            if not (0 <= self.src[m] < n_obj and 0 <= self.tgt[m] < n_obj):
                raise ValidationError(f"morphism {self.morphisms[m]} has bad endpoints")
        if len(self.identity) != n_obj:
            raise ValidationError("identity table sized wrong")
        for a, e in enumerate(self.identity):
            if not (0 <= e < n_mor) or self.src[e] != a or self.tgt[e] != a:
                raise ValidationError(f"identity of {self.objects[a]} is not an endomorphism")
        if len(self.table) != n_mor or any(len(row) != n_mor for row in self.table):
            raise ValidationError("composition table sized wrong")
        # defined exactly on composable pairs, with correct endpoints
        for g in range(n_mor):
            for f in range(n_mor):
                c = self.table[g][f]
                if self.tgt[f] == self.src[g]:
                    if c < 0:
                        raise MissingComposite(self.morphisms[g], self.morphisms[f])
                    if not (0 <= c < n_mor) or self.src[c] != self.src[f] or self.tgt[c] != self.tgt[g]:
                        raise ValidationError(
                            f"composite of ({self.morphisms[g]}, {self.morphisms[f]}) has bad endpoints"
                        )
                elif c != -1:
                    raise ValidationError(
                        f"compose defined on non-composable pair ({self.morphisms[g]}, {self.morphisms[f]})"
                    )
        # identity laws
        for f in range(n_mor):
            if self.table[f][self.identity[self.src[f]]] != f:
                raise IdentityViolation(
                    self.morphisms[self.identity[self.src[f]]], self.morphisms[f],
                    self.morphisms[self.table[f][self.identity[self.src[f]]]],
                )
            if self.table[self.identity[self.tgt[f]]][f] != f:
                raise IdentityViolation(
                    self.morphisms[self.identity[self.tgt[f]]], self.morphisms[f],
                    self.morphisms[self.table[self.identity[self.tgt[f]]][f]],
                )
        # associativity over every composable triple
        out_of = [[] for _ in range(n_obj)]
        for m in range(n_mor):
            out_of[self.src[m]].append(m)
        for f in range(n_mor):
            for g in out_of[self.tgt[f]]:
                gf = self.table[g][f]
                for h in out_of[self.tgt[g]]:
                    if self.table[h][gf] != self.table[self.table[h][g]][f]:
                        raise AssociativityViolation(
                            self.morphisms[h], self.morphisms[g], self.morphisms[f]
                        )

    # -- basic queries -----------------------------------------------------

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_morphisms(self) -> int:
        return len(self.morphisms)

    def compose(self, g: int, f: int) -> int:
        c = self.table[g][f]
        if c < 0:
            raise ValidationError(
                f"morphisms not composable: ({self.morphisms[g]}, {self.morphisms[f]})"
            )
        return c

    def composable(self, g: int, f: int) -> bool:
        return self.tgt[f] == self.src[g]

    def hom(self, a: int, b: int) -> tuple[int, ...]:
        key = "hom"
        if key not in self._cache:
            homs = [[[] for _ in range(self.n_objects)] for _ in range(self.n_objects)]
            for m in range(self.n_morphisms):
                homs[self.src[m]][self.tgt[m]].append(m)
            self._cache[key] = tuple(tuple(tuple(cell) for cell in row) for row in homs)
        return self._cache[key][a][b]

    def is_identity(self, m: int) -> bool:
        return self.identity[self.src[m]] == m

    def object_index(self, name: str) -> int:
        return self.objects.index(name)

    def morphism_index(self, name: str) -> int:
        return self.morphisms.index(name)

    def inverse(self, m: int) -> Optional[int]:
        a, b = self.src[m], self.tgt[m]
        for w in self.hom(b, a):
            if self.table[w][m] == self.identity[a] and self.table[m][w] == self.identity[b]:
                return w
        return None

    def isos(self) -> frozenset[int]:
        if "isos" not in self._cache:
            self._cache["isos"] = frozenset(
                m for m in range(self.n_morphisms) if self.inverse(m) is not None
            )
        return self._cache["isos"]

    def automorphisms(self, a: int) -> tuple[int, ...]:
        return tuple(m for m in self.hom(a, a) if m in self.isos())

    def parallel_pairs(self, distinct: bool = True) -> Iterator[tuple[int, int]]:
        for u in range(self.n_morphisms):
            for v in range(u + 1 if distinct else u, self.n_morphisms):
                if self.src[u] == self.src[v] and self.tgt[u] == self.tgt[v]:
                    if distinct and u == v:
                        continue
                    yield (u, v)

    def describe_morphism(self, m: int) -> str:
        return (
            f"{self.morphisms[m]}: {self.objects[self.src[m]]}"
            f" -> {self.objects[self.tgt[m]]}"
        )


def validate_category(raw: dict, name: Optional[str] = None, infer_identities: bool = True) -> FiniteCategory:
    """Validate a composition-table description and return the category.

    ``raw`` has keys ``objects`` (names), ``morphisms`` (``{id, src, tgt}``),
    ``identities`` (object name -> morphism name) and ``compose``
    (``{g, f, result}``).  Composites with an identity factor may be omitted
    unless ``infer_identities`` is off, in which case a missing entry raises
    :class:`MissingComposite` with the offending pair.
    """
    try:
        objects = list(raw["objects"])
        mor_rows = list(raw["morphisms"])
        identities = dict(raw["identities"])
        compose_rows = list(raw.get("compose", []))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed category description: {exc}") from exc
    obj_id = {o: i for i, o in enumerate(objects)}
    if len(obj_id) != len(objects):
        raise ValidationError("duplicate object names")
    names, src, tgt = [], [], []
    mor_id: dict[str, int] = {}
    for row in mor_rows:
        m = row["id"]
        if m in mor_id:
            raise ValidationError(f"duplicate morphism name {m}")
        if row["src"] not in obj_id or row["tgt"] not in obj_id:
            raise ValidationError(f"morphism {m} refers to unknown object")
        mor_id[m] = len(names)
        names.append(m)
        src.append(obj_id[row["src"]])
        tgt.append(obj_id[row["tgt"]])
    identity = [-1] * len(objects)
    for o, m in identities.items():
        if o not in obj_id or m not in mor_id:
            raise ValidationError(f"identity entry ({o}, {m}) refers to unknown name")
        identity[obj_id[o]] = mor_id[m]
    if any(e < 0 for e in identity):
        missing = objects[identity.index(-1)]
        raise ValidationError(f"object {missing} has no identity")
    n = len(names)
    table = [[-1] * n for _ in range(n)]
    for row in compose_rows:
        try:
            g, f, r = mor_id[row["g"]], mor_id[row["f"]], mor_id[row["result"]]
        except KeyError as exc:
            raise ValidationError(f"compose entry refers to unknown morphism: {exc}") from exc
        if tgt[f] != src[g]:
            raise ValidationError(
                f"compose entry ({row['g']}, {row['f']}) is not a composable pair"
            )
        if table[g][f] not in (-1, r):
            raise ValidationError(f"conflicting compose entries for ({row['g']}, {row['f']})")
        table[g][f] = r
    if infer_identities:
        for f in range(n):
            e = identity[src[f]]
            if table[f][e] == -1:
                table[f][e] = f
            e = identity[tgt[f]]
            if table[e][f] == -1:
                table[e][f] = f
    return FiniteCategory.build(
        objects, names, src, tgt, identity, table, name or raw.get("name", "C")
    )


def opposite(cat: FiniteCategory) -> FiniteCategory:
    """Reverse all morphisms.  An involution up to the stored name."""
    n = cat.n_morphisms
    table = [[-1] * n for _ in range(n)]
    for g in range(n):
        for f in range(n):
            if cat.table[f][g] >= 0:
                table[g][f] = cat.table[f][g]
    name = cat.name[:-3] if cat.name.endswith("^op") else cat.name + "^op"
    return FiniteCategory.build(
        cat.objects, cat.morphisms, cat.tgt, cat.src, cat.identity, table, name
    )


def elements_category(functor) -> FiniteCategory:
    """Category of elements of a covariant finite-set-valued functor.

    Objects are pairs ``(c, x)`` with ``x`` in the value of the functor at
    ``c``; a morphism ``(c, x) -> (d, y)`` is a base morphism ``f: c -> d``
    whose action sends ``x`` to ``y``.
    """
    base: FiniteCategory = functor.base
    objs: list[tuple[int, object]] = []
    obj_of: dict[tuple[int, object], int] = {}
    for c in range(base.n_objects):
        for x in functor.at(c):
            obj_of[(c, x)] = len(objs)
            objs.append((c, x))
    mors: list[tuple[int, int]] = []  # (base morphism, source element index)
    mor_of: dict[tuple[int, int], int] = {}
    for f in range(base.n_morphisms):
        c = base.src[f]
        for x in functor.at(c):
            i = obj_of[(c, x)]
            mor_of[(f, i)] = len(mors)
            mors.append((f, i))
    src = [i for (_, i) in mors]
    tgt = [obj_of[(base.tgt[f], functor.apply(f, objs[i][1]))] for (f, i) in mors]
    identity = [mor_of[(base.identity[c], i)] for i, (c, _) in enumerate(objs)]
    n = len(mors)
    table = [[-1] * n for _ in range(n)]
    for gi, (g, jg) in enumerate(mors):
        for fi, (f, jf) in enumerate(mors):
            if tgt[fi] == src[gi]:
                table[gi][fi] = mor_of[(base.table[g][f], jf)]
    names = [f"({base.objects[c]},{x})" for (c, x) in objs]
    mnames = [f"{base.morphisms[f]}@{names[i]}" for (f, i) in mors]
    return FiniteCategory.build(
        names, mnames, src, tgt, identity, table, name=f"El({getattr(functor, 'name', 'F')})"
    )


@dataclass(frozen=True)
class CofilterednessVerdict:
    holds: bool
    reason: str = ""
    witness: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.holds


def is_cofiltered(cat: FiniteCategory) -> CofilterednessVerdict:
    """Decide cofilteredness, returning the violating pair on failure.

    Checks: nonempty; every object pair admits a span over it; every
    parallel pair admits an equalizing morphism into its source.
    """
    if cat.n_objects == 0:
        return CofilterednessVerdict(False, "empty", None)
    for a in range(cat.n_objects):
        for b in range(a, cat.n_objects):
            if not any(
                cat.hom(c, a) and cat.hom(c, b) for c in range(cat.n_objects)
            ):
                return CofilterednessVerdict(
                    False, "pair-without-span", (cat.objects[a], cat.objects[b])
                )
    for u, v in cat.parallel_pairs():
        a = cat.src[u]
        if not any(
            cat.table[u][w] == cat.table[v][w]
            for c in range(cat.n_objects)
            for w in cat.hom(c, a)
        ):
            return CofilterednessVerdict(
                False, "parallel-pair-without-equalizing-arrow",
                (cat.morphisms[u], cat.morphisms[v]),
            )
    return CofilterednessVerdict(True)


def is_filtered(cat: FiniteCategory) -> CofilterednessVerdict:
    return is_cofiltered(opposite(cat))


def is_cauchy_complete(cat: FiniteCategory) -> bool:
    """All idempotents split."""
    for e in range(cat.n_morphisms):
        a = cat.src[e]
        if cat.tgt[e] != a or cat.table[e][e] != e:
            continue
        split = any(
            cat.table[s][r] == e and cat.table[r][s] == cat.identity[b]
            for b in range(cat.n_objects)
            for r in cat.hom(a, b)
            for s in cat.hom(b, a)
        )
        if not split:
            return False
    return True


def full_subcategory(cat: FiniteCategory, objs: Sequence[int], name: Optional[str] = None) -> FiniteCategory:
    objs = list(objs)
    keep = [m for m in range(cat.n_morphisms) if cat.src[m] in objs and cat.tgt[m] in objs]
    oid = {o: i for i, o in enumerate(objs)}
    mid = {m: i for i, m in enumerate(keep)}
    table = [[-1] * len(keep) for _ in keep]
    for g in keep:
        for f in keep:
            if cat.tgt[f] == cat.src[g]:
                table[mid[g]][mid[f]] = mid[cat.table[g][f]]
    return FiniteCategory.build(
        [cat.objects[o] for o in objs],
        [cat.morphisms[m] for m in keep],
        [oid[cat.src[m]] for m in keep],
        [oid[cat.tgt[m]] for m in keep],
        [mid[cat.identity[o]] for o in objs],
        table,
        name or f"{cat.name}|{len(objs)}",
    )


# -- functors, diagrams, and (co)cones --------------------------------------


@dataclass(frozen=True)
class FunctorData:
    source: FiniteCategory
    target: FiniteCategory
    object_map: tuple[int, ...]
    morphism_map: tuple[int, ...]
    check: bool = field(default=True, compare=False)

    def __post_init__(self):
        if not self.check:
            return
        C, T = self.source, self.target
        if len(self.object_map) != C.n_objects or len(self.morphism_map) != C.n_morphisms:
            raise ValidationError("functor tables sized wrong")
        for m in range(C.n_morphisms):
            fm = self.morphism_map[m]
            if T.src[fm] != self.object_map[C.src[m]] or T.tgt[fm] != self.object_map[C.tgt[m]]:
                raise ValidationError(
                    f"functor breaks endpoints at {C.morphisms[m]}"
                )
        for a in range(C.n_objects):
            if self.morphism_map[C.identity[a]] != T.identity[self.object_map[a]]:
                raise ValidationError(f"functor breaks identity at {C.objects[a]}")
        for g in range(C.n_morphisms):
            for f in range(C.n_morphisms):
                if C.table[g][f] >= 0:
                    if self.morphism_map[C.table[g][f]] != T.table[self.morphism_map[g]][self.morphism_map[f]]:
                        raise ValidationError(
                            f"functor breaks composition at ({C.morphisms[g]}, {C.morphisms[f]})"
                        )

    def apply_obj(self, a: int) -> int:
        return self.object_map[a]

    def apply_mor(self, m: int) -> int:
        return self.morphism_map[m]

    def is_full(self) -> bool:
        for a in range(self.source.n_objects):
            for b in range(self.source.n_objects):
                image = {self.morphism_map[m] for m in self.source.hom(a, b)}
                if set(self.target.hom(self.object_map[a], self.object_map[b])) - image:
                    return False
        return True

    def is_faithful(self) -> bool:
        for a in range(self.source.n_objects):
            for b in range(self.source.n_objects):
                ms = self.source.hom(a, b)
                if len({self.morphism_map[m] for m in ms}) != len(ms):
                    return False
        return True

    def is_essentially_surjective(self) -> bool:
        hit = set()
        T = self.target
        for a in self.object_map:
            for b in range(T.n_objects):
                if any(m in T.isos() for m in T.hom(a, b)):
                    hit.add(b)
        return len(hit) == T.n_objects

    def is_equivalence(self) -> bool:
        return self.is_full() and self.is_faithful() and self.is_essentially_surjective()


def compose_functors(g: FunctorData, f: FunctorData) -> FunctorData:
    return FunctorData(
        f.source,
        g.target,
        tuple(g.object_map[o] for o in f.object_map),
        tuple(g.morphism_map[m] for m in f.morphism_map),
    )


@dataclass(frozen=True)
class Diagram:
    shape: FiniteCategory
    body: FunctorData

    def __post_init__(self):
        if self.body.source is not self.shape and self.body.source != self.shape:
            raise ValidationError("diagram body must be a functor out of its shape")

    @property
    def target(self) -> FiniteCategory:
        return self.body.target

    def vertex(self, d: int) -> int:
        return self.body.object_map[d]

    def describe(self) -> str:
        C = self.target
        if self.shape.n_objects == 0:
            return "empty"
        objs = ",".join(C.objects[self.vertex(d)] for d in range(self.shape.n_objects))
        arrows = ",".join(
            C.morphisms[self.body.morphism_map[s]]
            for s in range(self.shape.n_morphisms)
            if not self.shape.is_identity(s)
        )
        return f"[{objs}|{arrows}]" if arrows else f"[{objs}]"


EMPTY_SHAPE = FiniteCategory.build((), (), (), (), (), (), name="0")
POINT_SHAPE = FiniteCategory.build(("d0",), ("1_d0",), (0,), (0,), (0,), ((0,),), name="pt")
PAIR_SHAPE = FiniteCategory.build(
    ("d0", "d1"), ("1_d0", "1_d1"), (0, 1), (0, 1), (0, 1),
    ((0, -1), (-1, 1)), name="pair",
)
PARALLEL_SHAPE = FiniteCategory.build(
    ("d0", "d1"), ("1_d0", "1_d1", "s", "t"),
    (0, 1, 0, 0), (0, 1, 1, 1), (0, 1),
    (
        (0, -1, -1, -1),
        (-1, 1, 2, 3),
        (2, -1, -1, -1),
        (3, -1, -1, -1),
    ),
    name="parallel",
)
COSPAN_SHAPE = FiniteCategory.build(
    ("d0", "d1", "d2"), ("1_d0", "1_d1", "1_d2", "l", "r"),
    (0, 1, 2, 0, 2), (0, 1, 2, 1, 1), (0, 1, 2),
    (
        (0, -1, -1, -1, -1),
        (-1, 1, -1, 3, 4),
        (-1, -1, 2, -1, -1),
        (3, -1, -1, -1, -1),
        (-1, -1, 4, -1, -1),
    ),
    name="cospan",
)


def empty_diagram(cat: FiniteCategory) -> Diagram:
    return Diagram(EMPTY_SHAPE, FunctorData(EMPTY_SHAPE, cat, (), ()))


def pair_diagram(cat: FiniteCategory, a: int, b: int) -> Diagram:
    return Diagram(
        PAIR_SHAPE,
        FunctorData(PAIR_SHAPE, cat, (a, b), (cat.identity[a], cat.identity[b])),
    )


def parallel_pair_diagram(cat: FiniteCategory, u: int, v: int) -> Diagram:
    if cat.src[u] != cat.src[v] or cat.tgt[u] != cat.tgt[v]:
        raise ValidationError("parallel pair must share endpoints")
    a, b = cat.src[u], cat.tgt[u]
    return Diagram(
        PARALLEL_SHAPE,
        FunctorData(PARALLEL_SHAPE, cat, (a, b), (cat.identity[a], cat.identity[b], u, v)),
    )


def cospan_diagram(cat: FiniteCategory, l: int, r: int) -> Diagram:
    if cat.tgt[l] != cat.tgt[r]:
        raise ValidationError("cospan legs must share a target")
    return Diagram(
        COSPAN_SHAPE,
        FunctorData(
            COSPAN_SHAPE, cat,
            (cat.src[l], cat.tgt[l], cat.src[r]),
            (cat.identity[cat.src[l]], cat.identity[cat.tgt[l]], cat.identity[cat.src[r]], l, r),
        ),
    )


@dataclass(frozen=True)
class Cone:
    diagram: Diagram
    apex: int
    legs: tuple[int, ...]

    def __post_init__(self):
        D, C = self.diagram, self.diagram.target
        if len(self.legs) != D.shape.n_objects:
            raise ValidationError("cone needs one leg per shape object")
        for d, leg in enumerate(self.legs):
            if C.src[leg] != self.apex or C.tgt[leg] != D.vertex(d):
                raise ValidationError(f"cone leg {d} has bad endpoints")
        for s in range(D.shape.n_morphisms):
            d, d2 = D.shape.src[s], D.shape.tgt[s]
            if C.table[D.body.morphism_map[s]][self.legs[d]] != self.legs[d2]:
                raise ValidationError("cone legs do not commute")


@dataclass(frozen=True)
class Cocone:
    diagram: Diagram
    apex: int
    legs: tuple[int, ...]

    def __post_init__(self):
        D, C = self.diagram, self.diagram.target
        if len(self.legs) != D.shape.n_objects:
            raise ValidationError("cocone needs one leg per shape object")
        for d, leg in enumerate(self.legs):
            if C.src[leg] != D.vertex(d) or C.tgt[leg] != self.apex:
                raise ValidationError(f"cocone leg {d} has bad endpoints")
        for s in range(D.shape.n_morphisms):
            d, d2 = D.shape.src[s], D.shape.tgt[s]
            if C.table[self.legs[d2]][D.body.morphism_map[s]] != self.legs[d]:
                raise ValidationError("cocone legs do not commute")


def _search_legs(diagram: Diagram, apex: int, into_apex: bool):
    """DFS over leg assignments, pruning on every decided commutation."""
    C, S = diagram.target, diagram.shape
    n = S.n_objects
    pools = [
        C.hom(diagram.vertex(d), apex) if into_apex else C.hom(apex, diagram.vertex(d))
        for d in range(n)
    ]
    constraints = [[] for _ in range(n)]  # checks runnable once object d is assigned
    for s in range(S.n_morphisms):
        d, d2 = S.src[s], S.tgt[s]
        constraints[max(d, d2)].append(s)
    legs: list[int] = []
    out = []

    def ok(s: int) -> bool:
        d, d2 = S.src[s], S.tgt[s]
        m = diagram.body.morphism_map[s]
        if into_apex:
            return C.table[legs[d2]][m] == legs[d]
        return C.table[m][legs[d]] == legs[d2]

    def rec(d: int):
        if d == n:
            out.append(tuple(legs))
            return
        for leg in pools[d]:
            legs.append(leg)
            if all(ok(s) for s in constraints[d]):
                rec(d + 1)
            legs.pop()

    rec(0)
    return out


def all_cones(diagram: Diagram, apex: Optional[int] = None) -> list[Cone]:
    C = diagram.target
    apexes = range(C.n_objects) if apex is None else [apex]
    return [
        Cone(diagram, c, legs)
        for c in apexes
        for legs in _search_legs(diagram, c, into_apex=False)
    ]


def all_cocones(diagram: Diagram, apex: Optional[int] = None) -> list[Cocone]:
    C = diagram.target
    apexes = range(C.n_objects) if apex is None else [apex]
    return [
        Cocone(diagram, c, legs)
        for c in apexes
        for legs in _search_legs(diagram, c, into_apex=True)
    ]


_LIMIT_CACHE: dict[Diagram, Optional[Cone]] = {}


def limit_in_category(diagram: Diagram) -> Optional[Cone]:
    """The limiting cone found by universal-property search, if any.

    Memoized; the search depends only on the diagram.
    """
    if diagram in _LIMIT_CACHE:
        return _LIMIT_CACHE[diagram]
    out = _limit_search(diagram)
    _LIMIT_CACHE[diagram] = out
    return out


def _limit_search(diagram: Diagram) -> Optional[Cone]:
    C = diagram.target
    cones = all_cones(diagram)
    for cand in cones:
        good = True
        for other in cones:
            mediators = [
                m
                for m in C.hom(other.apex, cand.apex)
                if all(C.table[cand.legs[d]][m] == other.legs[d] for d in range(len(cand.legs)))
            ]
            if len(mediators) != 1:
                good = False
                break
        if good:
            return cand
    return None


def colimit_in_category(diagram: Diagram) -> Optional[Cocone]:
    C = diagram.target
    cocones = all_cocones(diagram)
    for cand in cocones:
        good = True
        for other in cocones:
            mediators = [
                m
                for m in C.hom(cand.apex, other.apex)
                if all(C.table[m][cand.legs[d]] == other.legs[d] for d in range(len(cand.legs)))
            ]
            if len(mediators) != 1:
                good = False
                break
        if good:
            return cand
    return None


def pullback_in_category(cat: FiniteCategory, l: int, r: int) -> Optional[Cone]:
    return limit_in_category(cospan_diagram(cat, l, r))


def category_to_json(cat: FiniteCategory) -> dict:
    """Round-trippable composition-table description of the category."""
    return {
        "name": cat.name,
        "objects": list(cat.objects),
        "morphisms": [
            {"id": cat.morphisms[m], "src": cat.objects[cat.src[m]], "tgt": cat.objects[cat.tgt[m]]}
            for m in range(cat.n_morphisms)
        ],
        "identities": {cat.objects[a]: cat.morphisms[cat.identity[a]] for a in range(cat.n_objects)},
        "compose": [
            {"g": cat.morphisms[g], "f": cat.morphisms[f], "result": cat.morphisms[cat.table[g][f]]}
            for g in range(cat.n_morphisms)
            for f in range(cat.n_morphisms)
            if cat.table[g][f] >= 0 and not cat.is_identity(g) and not cat.is_identity(f)
        ],
    }


# -- functor enumeration -----------------------------------------------------


def _generators(cat: FiniteCategory) -> tuple[list[int], dict[int, tuple[int, int]]]:
    """A generating set of non-identity morphisms plus derivations for the rest."""
    nonid = [m for m in range(cat.n_morphisms) if not cat.is_identity(m)]
    gens = [
        m
        for m in nonid
        if not any(
            cat.table[g][f] == m
            for g in nonid
            for f in nonid
            if cat.tgt[f] == cat.src[g]
        )
    ]
    derivation: dict[int, tuple[int, int]] = {}
    known = set(gens) | {cat.identity[a] for a in range(cat.n_objects)}
    while True:
        grown = False
        for g in list(known):
            for f in list(known):
                if cat.tgt[f] == cat.src[g]:
                    c = cat.table[g][f]
                    if c not in known:
                        known.add(c)
                        derivation[c] = (g, f)
                        grown = True
        if not grown:
            if len(known) == cat.n_morphisms:
                break
            # e.g. an idempotent only expressible through itself
            extra = min(m for m in nonid if m not in known)
            gens.append(extra)
            known.add(extra)
    order = sorted(derivation, key=lambda c: _derivation_depth(c, derivation))
    return gens, {c: derivation[c] for c in order}


def _derivation_depth(c, derivation, seen=None):
    if c not in derivation:
        return 0
    g, f = derivation[c]
    return 1 + max(_derivation_depth(g, derivation), _derivation_depth(f, derivation))


def enumerate_functors(source: FiniteCategory, target: FiniteCategory, rng=None) -> Iterator[FunctorData]:
    """Yield every functor ``source -> target`` in a deterministic order.

    Backtracks over a generating set of morphisms; every composite whose
    factors are decided is forced immediately, so contradictions prune
    branches early.  With ``rng`` the branch orders are shuffled
    (deterministically for a seeded generator), which turns truncated
    enumeration into fair sampling.
    """
    gens, _ = _generators(source)
    n = source.n_morphisms
    left_of = [[] for _ in range(n)]   # m -> [(g, g∘m)]
    right_of = [[] for _ in range(n)]  # m -> [(f, m∘f)]
    for g in range(n):
        for f in range(n):
            c = source.table[g][f]
            if c >= 0:
                left_of[f].append((g, c))
                right_of[g].append((f, c))

    def choices(seq):
        seq = list(seq)
        if rng is not None:
            rng.shuffle(seq)
        return seq

    for omap in itertools.product(*[choices(range(target.n_objects)) for _ in range(source.n_objects)]):
        pools = []
        feasible = True
        for m in gens:
            pool = choices(target.hom(omap[source.src[m]], omap[source.tgt[m]]))
            if not pool:
                feasible = False
                break
            pools.append(pool)
        if not feasible:
            continue
        mmap = [-1] * n
        for a in range(source.n_objects):
            mmap[source.identity[a]] = target.identity[omap[a]]

        def assign(m, val, trail) -> bool:
            stack = [(m, val)]
            while stack:
                mm, vv = stack.pop()
                if mmap[mm] != -1:
                    if mmap[mm] != vv:
                        return False
                    continue
                mmap[mm] = vv
                trail.append(mm)
                for (g, c) in left_of[mm]:
                    if mmap[g] != -1:
                        stack.append((c, target.table[mmap[g]][vv]))
                for (f, c) in right_of[mm]:
                    if mmap[f] != -1:
                        stack.append((c, target.table[vv][mmap[f]]))
            return True

        def rec(k):
            if k == len(gens):
                ok = all(
                    mmap[source.table[g][f]] == target.table[mmap[g]][mmap[f]]
                    for g in range(n)
                    for f in range(n)
                    if source.table[g][f] >= 0
                )
                if ok and all(v != -1 for v in mmap):
                    yield FunctorData(source, target, tuple(omap), tuple(mmap), check=False)
                return
            m = gens[k]
            if mmap[m] != -1:
                yield from rec(k + 1)
                return
            for val in pools[k]:
                trail: list[int] = []
                if assign(m, val, trail):
                    yield from rec(k + 1)
                for mm in trail:
                    mmap[mm] = -1

        yield from rec(0)


# -- the category of bounded finite sets ------------------------------------

_FINSET_CACHE: dict[int, tuple[FiniteCategory, list]] = {}


def finset_category(n: int) -> tuple[FiniteCategory, list[tuple[int, int, tuple[int, ...]]]]:
    """The skeleton of finite sets of size <= n, plus a decode table.

    Objects are the sizes ``0..n``; the morphism ``a -> b`` with graph ``t``
    sends ``i`` to ``t[i]``.  The decode table maps morphism id to
    ``(a, b, t)``.
    """
    if n in _FINSET_CACHE:
        return _FINSET_CACHE[n]
    objects = [str(k) for k in range(n + 1)]
    decode: list[tuple[int, int, tuple[int, ...]]] = []
    index: dict[tuple[int, int, tuple[int, ...]], int] = {}
    for a in range(n + 1):
        for b in range(n + 1):
            for t in itertools.product(range(b), repeat=a):
                index[(a, b, t)] = len(decode)
                decode.append((a, b, t))
    names = [f"{a}>{b}:{''.join(map(str, t))}" for (a, b, t) in decode]
    src = [a for (a, _, _) in decode]
    tgt = [b for (_, b, _) in decode]
    identity = [index[(a, a, tuple(range(a)))] for a in range(n + 1)]
    m = len(decode)
    table = [[-1] * m for _ in range(m)]
    for gi, (b2, c, tg) in enumerate(decode):
        for fi, (a, b, tf) in enumerate(decode):
            if b == b2:
                table[gi][fi] = index[(a, c, tuple(tg[i] for i in tf))]
    cat = FiniteCategory.build(objects, names, src, tgt, identity, table, name=f"FinSet<={n}")
    _FINSET_CACHE[n] = (cat, decode)
    return cat, decode
