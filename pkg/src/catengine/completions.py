"""Bounded materializations of free completions inside presheaves.

``close`` saturates the representables under finite limits and a chosen
family of colimit generators (none, kernel-pair quotients, quotients of
equivalence relations, finite coproducts, both, or free-action colimits).
``direct_regular``, ``direct_pretopos`` and ``fam_f`` build the regular,
pretopos and finite-coproduct completions from their explicit object
presentations instead, so the two routes can be cross-checked.

An object of a completion is an isomorphism class; one canonical
representative presheaf is stored along with the construction step that
produced it.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import FiberCapExceeded, NotWeaklyLex, ValidationError
from .fincat import (
    Cocone,
    Cone,
    Diagram,
    FiniteCategory,
    FunctorData,
    colimit_in_category,
    empty_diagram,
    limit_in_category,
    pair_diagram,
    parallel_pair_diagram,
)
from . import flatness as fl
from . import presheaf as ps
from . import virtlim as vl

FLAVORS = ("none", "reg", "ex", "lext", "pret", "poly", "fam_f")


@dataclass(frozen=True)
class Bounds:
    max_objects: int = 24
    max_fiber: int = 64
    max_iterations: int = 4
    max_arity: int = 2
    hom_cap: int = 24
    functor_value_bound: int = 3
    enumeration_cap: int = 20000
    seed: int = 0

    def __post_init__(self):
        if min(self.max_objects, self.max_fiber, self.max_iterations, self.max_arity, self.hom_cap) <= 0:
            raise ValidationError("bounds must be positive")

    def to_json(self) -> dict:
        return {
            "max_objects": self.max_objects,
            "max_fiber": self.max_fiber,
            "max_iterations": self.max_iterations,
            "max_arity": self.max_arity,
            "hom_cap": self.hom_cap,
            "functor_value_bound": self.functor_value_bound,
            "enumeration_cap": self.enumeration_cap,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Provenance:
    kind: str  # representable | limit | image | coproduct | quotient | free-quotient | family
    detail: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "detail": self.detail}


@dataclass(frozen=True, eq=False)
class ConcreteCompletion:
    base: FiniteCategory
    flavor: str
    bounds: Bounds
    objects: tuple[ps.Presheaf, ...]
    provenance: tuple[Provenance, ...]
    saturated: bool
    bound_events: tuple[str, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValidationError(f"unknown flavor {self.flavor!r}")
        if len(self.objects) != len(self.provenance):
            raise ValidationError("provenance must track objects")

    def find_object(self, M: ps.Presheaf) -> Optional[int]:
        for i, N in enumerate(self.objects):
            if M.fiber_sizes() == N.fiber_sizes() and ps.find_iso(M, N) is not None:
                return i
        return None

    def homs(self, i: int, j: int) -> list[ps.NatTransformation]:
        key = ("hom", i, j)
        if key not in self._cache:
            self._cache[key] = ps.hom_set(self.objects[i], self.objects[j])
        return self._cache[key]

    def as_category(self) -> FiniteCategory:
        """The completion re-validated as a finite category.

        Morphism ids enumerate every natural transformation between
        representatives, ordered by (source, target, component order).
        """
        if "category" in self._cache:
            return self._cache["category"]
        n = len(self.objects)
        mors: list[tuple[int, int, ps.NatTransformation]] = []
        index: dict[tuple[int, int, tuple], int] = {}
        for i in range(n):
            for j in range(n):
                for t in self.homs(i, j):
                    index[(i, j, t.key())] = len(mors)
                    mors.append((i, j, t))
        identity = []
        for i in range(n):
            identity.append(index[(i, i, ps.identity_nat(self.objects[i]).key())])
        table = [[-1] * len(mors) for _ in mors]
        for gi, (j2, k, g) in enumerate(mors):
            for fi, (i, j, f) in enumerate(mors):
                if j == j2:
                    table[gi][fi] = index[(i, k, ps.compose_nats(g, f).key())]
        cat = FiniteCategory.build(
            tuple(f"M{i}" for i in range(n)),
            tuple(f"t{k}" for k in range(len(mors))),
            tuple(i for (i, _, _) in mors),
            tuple(j for (_, j, _) in mors),
            tuple(identity),
            table,
            name=f"{self.flavor}({self.base.name})",
        )
        self._cache["category"] = cat
        self._cache["category_mors"] = mors
        self._cache["category_index"] = index
        return cat

    def morphism_nat(self, mid: int) -> tuple[int, int, ps.NatTransformation]:
        self.as_category()
        return self._cache["category_mors"][mid]

    def morphism_id(self, i: int, j: int, t: ps.NatTransformation) -> int:
        self.as_category()
        return self._cache["category_index"][(i, j, t.key())]

    def inclusion(self) -> tuple[FunctorData, list[ps.NatTransformation]]:
        """The functor from the base picking out the representables.

        Returns the functor into :meth:`as_category` plus, per base object,
        the chosen isomorphism from its representable onto the stored
        representative.
        """
        if "inclusion" in self._cache:
            return self._cache["inclusion"]
        C = self.base
        cat = self.as_category()
        obj_map, isos = [], []
        for a in range(C.n_objects):
            Ya = ps.yoneda(C, a)
            k = self.find_object(Ya)
            if k is None:
                raise ValidationError("completion does not contain all representables")
            obj_map.append(k)
            isos.append(ps.find_iso(Ya, self.objects[k]))
        mor_map = []
        for f in range(C.n_morphisms):
            a, b = C.src[f], C.tgt[f]
            Yf = ps.yoneda_map(C, f)
            t = ps.compose_nats(isos[b], ps.compose_nats(Yf, isos[a].inverse()))
            mor_map.append(self.morphism_id(obj_map[a], obj_map[b], t))
        fd = FunctorData(C, cat, tuple(obj_map), tuple(mor_map))
        self._cache["inclusion"] = (fd, isos)
        return self._cache["inclusion"]

    def inclusion_concrete(self) -> fl.ConcreteFunctor:
        """The inclusion as a concrete functor into presheaves over the base."""
        fd, _ = self.inclusion()
        return self.concrete_functor(fd, name=f"K:{self.base.name}")

    def concrete_functor(self, fd: FunctorData, name: str = "F") -> fl.ConcreteFunctor:
        """Reify a functor into this completion's category as a concrete one."""
        C = fd.source
        if fd.target != self.as_category():
            raise ValidationError("functor does not land in this completion")
        objs = tuple(self.objects[fd.object_map[a]] for a in range(C.n_objects))
        mors = []
        for f in range(C.n_morphisms):
            _, _, t = self.morphism_nat(fd.morphism_map[f])
            mors.append(ps.NatTransformation(objs[C.src[f]], objs[C.tgt[f]], t.components, check=False))
        return fl.ConcreteFunctor(C, self.base, objs, tuple(mors), name=name)

    def to_json(self) -> dict:
        from .fincat import category_to_json

        return {
            "base": category_to_json(self.base),
            "flavor": self.flavor,
            "bounds": self.bounds.to_json(),
            "saturated": self.saturated,
            "bound_events": list(self.bound_events),
            "objects": [
                {
                    "name": M.name,
                    "values": [[repr(x) for x in M.values[a]] for a in range(self.base.n_objects)],
                    "actions": [
                        [[repr(x), repr(y)] for x, y in sorted(M.actions[f].items(), key=repr)]
                        for f in range(self.base.n_morphisms)
                    ],
                    "provenance": self.provenance[i].to_json(),
                }
                for i, M in enumerate(self.objects)
            ],
        }


def _relabelled(M: ps.Presheaf, name: str) -> ps.Presheaf:
    out, _ = ps.relabel(M, name=name)
    return out


class _Builder:
    def __init__(self, base: FiniteCategory, flavor: str, bounds: Bounds):
        self.base = base
        self.flavor = flavor
        self.bounds = bounds
        self.objects: list[ps.Presheaf] = []
        self.provenance: list[Provenance] = []
        self.events: list[str] = []
        self._seen_events: set[str] = set()

    def full(self) -> bool:
        return len(self.objects) >= self.bounds.max_objects

    def note(self, event: str) -> None:
        if event not in self._seen_events:
            self._seen_events.add(event)
            self.events.append(event)

    def add(self, M: ps.Presheaf, prov: Provenance) -> Optional[int]:
        for i, N in enumerate(self.objects):
            if M.fiber_sizes() == N.fiber_sizes() and ps.find_iso(M, N) is not None:
                return i
        if self.full():
            self.note(f"max_objects at {prov.kind}")
            return None
        if max(M.fiber_sizes(), default=0) > self.bounds.max_fiber:
            self.note(f"max_fiber at {prov.kind}:{prov.detail}")
            return None
        self.objects.append(_relabelled(M, f"M{len(self.objects)}"))
        self.provenance.append(prov)
        return len(self.objects) - 1

    def guarded(self, thunk, prov: Provenance) -> Optional[int]:
        try:
            M = thunk()
        except FiberCapExceeded:
            self.note(f"max_fiber at {prov.kind}:{prov.detail}")
            return None
        return self.add(M, prov)

    def bounded_homs(self, M: ps.Presheaf, N: ps.Presheaf, context: str) -> list[ps.NatTransformation]:
        cap = self.bounds.hom_cap
        ts = ps.hom_set(M, N, max_results=cap + 1)
        if len(ts) > cap:
            self.note(f"hom_cap at {context}")
            ts = ts[:cap]
        return ts

    def seed_representables(self):
        for a in range(self.base.n_objects):
            self.add(ps.yoneda(self.base, a), Provenance("representable", self.base.objects[a]))

    def limit_step(self) -> bool:
        C = self.base
        before = len(self.objects)
        self.guarded(lambda: ps.terminal_presheaf(C), Provenance("limit", "terminal"))
        snapshot = list(enumerate(self.objects))
        for (i, M), (j, N) in itertools.combinations_with_replacement(snapshot, 2):
            if self.full():
                break
            self.guarded(
                lambda M=M, N=N: ps.product(C, [M, N]).apex,
                Provenance("limit", f"product M{i} x M{j}"),
            )
        for (i, M) in snapshot:
            if self.full():
                break
            for (j, N) in snapshot:
                ts = self.bounded_homs(M, N, f"equalizers M{i} => M{j}")
                for p, q in itertools.combinations(range(len(ts)), 2):
                    self.guarded(
                        lambda t=ts[p], u=ts[q]: ps.equalizer(t, u).apex,
                        Provenance("limit", f"equalizer of M{i} => M{j} ({p},{q})"),
                    )
        return len(self.objects) > before

    def colimit_step(self) -> bool:
        before = len(self.objects)
        flavor = self.flavor
        if flavor in ("reg", "pret"):
            self._image_step()
        if flavor in ("ex", "pret"):
            self._equivalence_quotient_step()
        if flavor in ("lext", "pret", "poly"):
            self._coproduct_step()
        if flavor == "poly":
            self._free_quotient_step()
        return len(self.objects) > before

    def _image_step(self):
        snapshot = list(enumerate(self.objects))
        for (i, M) in snapshot:
            if self.full():
                break
            for (j, N) in snapshot:
                for k, t in enumerate(self.bounded_homs(M, N, f"images M{i} -> M{j}")):
                    q, _ = ps.epi_mono_factorize(t)
                    self.add(q.target, Provenance("image", f"M{i} -> M{j} ({k})"))

    def _equivalence_quotient_step(self):
        C = self.base
        snapshot = list(enumerate(self.objects))
        for (i, R) in snapshot:
            if self.full():
                break
            for (j, M) in snapshot:
                ts = self.bounded_homs(R, M, f"relations M{i} => M{j}")
                for p, q in itertools.combinations_with_replacement(range(len(ts)), 2):
                    r1, r2 = ts[p], ts[q]
                    if not _is_internal_equivalence(R, M, r1, r2):
                        continue
                    pairs = [
                        (a, r1.components[a][x], r2.components[a][x])
                        for a in range(C.n_objects)
                        for x in R.values[a]
                    ]
                    self.guarded(
                        lambda M=M, pairs=pairs: ps.quotient_presheaf(M, pairs)[0],
                        Provenance("quotient", f"M{j} by relation M{i} ({p},{q})"),
                    )

    def _coproduct_step(self):
        C = self.base
        self.guarded(lambda: ps.initial_presheaf(C), Provenance("coproduct", "empty"))
        snapshot = list(enumerate(self.objects))
        for (i, M), (j, N) in itertools.combinations_with_replacement(snapshot, 2):
            if self.full():
                break
            self.guarded(
                lambda M=M, N=N: ps.coproduct(C, [M, N]).apex,
                Provenance("coproduct", f"M{i} + M{j}"),
            )

    def _free_quotient_step(self):
        C = self.base
        snapshot = list(enumerate(self.objects))
        for (i, M) in snapshot:
            if self.full():
                break
            auts = [t for t in self.bounded_homs(M, M, f"actions on M{i}") if t.is_pointwise_bijective()]
            for group in _subgroups(M, auts):
                if len(group) < 2 or not _acts_freely(M, group):
                    continue
                pairs = [
                    (a, x, g.components[a][x])
                    for g in group
                    for a in range(C.n_objects)
                    for x in M.values[a]
                ]
                self.guarded(
                    lambda M=M, pairs=pairs: ps.quotient_presheaf(M, pairs)[0],
                    Provenance("free-quotient", f"M{i} by a free action of order {len(group)}"),
                )

    def finish(self, saturated: bool) -> ConcreteCompletion:
        # a builder that filled up may have stopped scanning early, so it
        # cannot honestly claim to have verified a fixpoint
        if self.full():
            self.note("max_objects reached")
        return ConcreteCompletion(
            self.base,
            self.flavor,
            self.bounds,
            tuple(self.objects),
            tuple(self.provenance),
            saturated and not self.events,
            tuple(self.events),
        )


def _is_internal_equivalence(R: ps.Presheaf, M: ps.Presheaf, r1, r2) -> bool:
    """Is the pair jointly monic with an equivalence relation as image?"""
    for a in range(M.base.n_objects):
        graph = [(r1.components[a][x], r2.components[a][x]) for x in R.values[a]]
        if len(set(graph)) != len(graph):
            return False
        rel = set(graph)
        elems = set(M.values[a])
        if not all((x, x) in rel for x in elems):
            return False
        if not all((y, x) in rel for (x, y) in rel):
            return False
        if not all(
            (x, z) in rel for (x, y) in rel for (y2, z) in rel if y == y2
        ):
            return False
    return True


def _subgroups(M: ps.Presheaf, auts: list[ps.NatTransformation]):
    """All subgroups of the automorphism group, as lists of transformations."""
    keys = {t.key(): t for t in auts}
    ids = sorted(keys)
    comp = {
        (k1, k2): ps.compose_nats(keys[k1], keys[k2]).key() for k1 in ids for k2 in ids
    }
    out = []
    for r in range(1, len(ids) + 1):
        for subset in itertools.combinations(ids, r):
            sset = set(subset)
            if ps.identity_nat(M).key() not in sset:
                continue
            if all(comp[(k1, k2)] in sset for k1 in subset for k2 in subset):
                out.append([keys[k] for k in subset])
    return out


def _acts_freely(M: ps.Presheaf, group: list[ps.NatTransformation]) -> bool:
    ident = ps.identity_nat(M).key()
    for g in group:
        if g.key() == ident:
            continue
        for a in range(M.base.n_objects):
            if any(g.components[a][x] == x for x in M.values[a]):
                return False
    return True


def close(base: FiniteCategory, flavor: str, bounds: Bounds = Bounds()) -> ConcreteCompletion:
    """Alternate finite-limit closure and flavor-colimit closure to a fixpoint.

    Saturation is reported honestly: if an iteration cap or a size bound
    trips, the completion is returned truncated and flagged.
    """
    if flavor not in FLAVORS or flavor == "fam_f":
        raise ValidationError(f"close() accepts flavors {FLAVORS[:-1]}")
    b = _Builder(base, flavor, bounds)
    b.seed_representables()
    saturated = False
    for _ in range(bounds.max_iterations):
        grew_l = b.limit_step()
        grew_c = b.colimit_step()
        if not (grew_l or grew_c):
            saturated = True
            break
    return b.finish(saturated)


def direct_regular(base: FiniteCategory, bounds: Bounds = Bounds()) -> ConcreteCompletion:
    """Images of representables inside finite products of representables.

    Requires the base to be weakly lex on the generating diagrams; the
    witness diagram is reported otherwise.
    """
    report = vl.classify_completeness(base, "weak")
    if not report.passed:
        raise NotWeaklyLex(report.witness)
    b = _Builder(base, "reg", bounds)
    b.seed_representables()
    for a in range(base.n_objects):
        Ya = ps.yoneda(base, a)
        outs = [m for m in range(base.n_morphisms) if base.src[m] == a]
        for n in range(bounds.max_arity + 1):
            for hs in itertools.combinations_with_replacement(outs, n):
                b.guarded(
                    lambda a=a, hs=hs, Ya=Ya: _span_image(base, Ya, a, hs),
                    Provenance("image", f"{base.objects[a]} -> ({', '.join(base.morphisms[h] for h in hs)})"),
                )
    return b.finish(True)


def _span_image(base: FiniteCategory, Ya: ps.Presheaf, a: int, hs: Sequence[int]) -> ps.Presheaf:
    targets = [ps.yoneda(base, base.tgt[h]) for h in hs]
    pr = ps.product(base, targets)
    comps = tuple(
        {m: tuple(base.table[h][m] for h in hs) for m in Ya.values[x]}
        for x in range(base.n_objects)
    )
    t = ps.NatTransformation(Ya, pr.apex, comps)
    q, _ = ps.epi_mono_factorize(t)
    return q.target


def direct_pretopos(base: FiniteCategory, bounds: Bounds = Bounds()) -> ConcreteCompletion:
    """Images of finite coproducts of representables in finite products.

    Always succeeds on a finite base: every finite category has fc-limits.
    """
    b = _Builder(base, "pret", bounds)
    b.seed_representables()
    objs = range(base.n_objects)
    for k in range(bounds.max_arity + 1):
        for sources in itertools.combinations_with_replacement(objs, k):
            for m in range(bounds.max_arity + 1):
                for targets in itertools.combinations_with_replacement(objs, m):
                    pools = [
                        [(i, j, h) for h in base.hom(sources[i], targets[j])]
                        for i in range(k)
                        for j in range(m)
                    ]
                    if any(not pool for pool in pools):
                        continue
                    for matrix in itertools.product(*pools):
                        b.guarded(
                            lambda sources=sources, targets=targets, matrix=matrix: _matrix_image(
                                base, sources, targets, matrix
                            ),
                            Provenance(
                                "image",
                                f"sum{[base.objects[s] for s in sources]} -> "
                                f"prod{[base.objects[t] for t in targets]} via "
                                f"{[base.morphisms[h] for (_, _, h) in matrix]}",
                            ),
                        )
    return b.finish(True)


def _matrix_image(base, sources, targets, matrix) -> ps.Presheaf:
    k, m = len(sources), len(targets)
    h = {(i, j): hh for (i, j, hh) in matrix}
    cp = ps.coproduct(base, [ps.yoneda(base, s) for s in sources])
    pr = ps.product(base, [ps.yoneda(base, t) for t in targets])
    comps = []
    for x in range(base.n_objects):
        comp = {}
        for (i, mm) in cp.apex.values[x]:
            comp[(i, mm)] = tuple(base.table[h[(i, j)]][mm] for j in range(m))
        comps.append(comp)
    t = ps.NatTransformation(cp.apex, pr.apex, tuple(comps))
    q, _ = ps.epi_mono_factorize(t)
    return q.target


def fam_f(base: FiniteCategory, max_family: int = 3, bounds: Bounds = Bounds()) -> ConcreteCompletion:
    """Finite families of objects, realized as coproducts of representables."""
    b = _Builder(base, "fam_f", replace(bounds, max_objects=max(bounds.max_objects, 64)))
    for k in range(max_family + 1):
        for fam in itertools.combinations_with_replacement(range(base.n_objects), k):
            b.guarded(
                lambda fam=fam: ps.coproduct(base, [ps.yoneda(base, a) for a in fam]).apex,
                Provenance("family", ",".join(base.objects[a] for a in fam) or "(empty)"),
            )
    return b.finish(True)


def family_homs(base: FiniteCategory, fam1: Sequence[int], fam2: Sequence[int]):
    """Family-form morphisms: an index map plus one base morphism per index."""
    out = []
    if any(
        all(not base.hom(a, b) for b in fam2) for a in fam1
    ):
        return out
    for phi in itertools.product(range(len(fam2)), repeat=len(fam1)):
        pools = [base.hom(fam1[i], fam2[phi[i]]) for i in range(len(fam1))]
        if any(not p for p in pools):
            continue
        for fs in itertools.product(*pools):
            out.append((phi, fs))
    return out


# -- axiom batteries -----------------------------------------------------------


@dataclass(frozen=True)
class AxiomReport:
    completion: str
    flavor: str
    checks: dict
    passed: bool

    def to_json(self) -> dict:
        return {
            "completion": self.completion,
            "flavor": self.flavor,
            "passed": self.passed,
            "checks": self.checks,
        }


_FLAVOR_AXIOMS = {
    "none": ("limits",),
    "reg": ("limits", "regular_epi_stability", "kernel_pair_quotients"),
    "ex": ("limits", "regular_epi_stability", "kernel_pair_quotients", "effective_equivalence_relations"),
    "lext": ("limits", "coproducts", "coproducts_disjoint", "coproducts_universal"),
    "pret": (
        "limits", "regular_epi_stability", "kernel_pair_quotients",
        "effective_equivalence_relations", "coproducts", "coproducts_disjoint",
        "coproducts_universal",
    ),
    "poly": ("limits", "coproducts"),
    "fam_f": ("limits", "coproducts", "coproducts_disjoint", "coproducts_universal"),
}


def verify_axioms(E: ConcreteCompletion, scope: Optional[Sequence[int]] = None, flavor: Optional[str] = None) -> AxiomReport:
    """Run the exactness battery appropriate for the completion's flavor.

    ``scope`` restricts the objects quantified over (so a bounded
    materialization is judged on the region it actually closed); defaults
    to every object.  Each failed check carries a witness.
    """
    flavor = flavor or E.flavor
    scope = list(scope) if scope is not None else list(range(len(E.objects)))
    checks: dict[str, dict] = {}
    names = _FLAVOR_AXIOMS[flavor]

    def record(name, passed, witness=None):
        checks[name] = {"passed": passed, "witness": witness}

    base = E.base
    if "limits" in names:
        witness = None
        if E.find_object(ps.terminal_presheaf(base)) is None:
            witness = "terminal"
        if witness is None:
            for i, j in itertools.combinations_with_replacement(scope, 2):
                pr = ps.product(base, [E.objects[i], E.objects[j]])
                if E.find_object(pr.apex) is None:
                    witness = f"product M{i} x M{j}"
                    break
        if witness is None:
            for i in scope:
                for j in scope:
                    ts = ps.hom_set(E.objects[i], E.objects[j])
                    for p, q in itertools.combinations(range(len(ts)), 2):
                        if E.find_object(ps.equalizer(ts[p], ts[q]).apex) is None:
                            witness = f"equalizer of M{i} => M{j} ({p},{q})"
                            break
                    if witness:
                        break
                if witness:
                    break
        record("limits", witness is None, witness)

    morphs = [
        (i, j, t)
        for i in scope
        for j in scope
        for t in E.homs(i, j)
    ]

    if "regular_epi_stability" in names:
        witness = None
        epis = [(i, j, t) for (i, j, t) in morphs if t.is_pointwise_surjective()]
        for (i, j, e) in epis:
            for (i2, j2, g) in morphs:
                if j2 != j:
                    continue
                pb = ps.pullback(e, g)
                if E.find_object(pb.apex) is None:
                    witness = f"pullback of epi M{i}->M{j} along M{i2}->M{j} missing"
                    break
                if not pb.legs[2].is_pointwise_surjective():
                    witness = f"pulled-back epi M{i}->M{j} along M{i2}->M{j} not epi"
                    break
            if witness:
                break
        record("regular_epi_stability", witness is None, witness)

    if "kernel_pair_quotients" in names:
        witness = None
        for (i, j, t) in morphs:
            kp = ps.pullback(t, t)
            if E.find_object(kp.apex) is None:
                witness = f"kernel pair of M{i}->M{j} missing"
                break
            q, _ = ps.epi_mono_factorize(t)
            if E.find_object(q.target) is None:
                witness = f"coequalizer of the kernel pair of M{i}->M{j} missing"
                break
        record("kernel_pair_quotients", witness is None, witness)

    if "effective_equivalence_relations" in names:
        witness = None
        for (i, j, r1) in morphs:
            for r2 in E.homs(i, j):
                if not _is_internal_equivalence(E.objects[i], E.objects[j], r1, r2):
                    continue
                pairs = [
                    (a, r1.components[a][x], r2.components[a][x])
                    for a in range(base.n_objects)
                    for x in E.objects[i].values[a]
                ]
                Q, qm = ps.quotient_presheaf(E.objects[j], pairs)
                if E.find_object(Q) is None:
                    witness = f"quotient of M{j} by M{i} missing"
                    break
                kp = ps.pullback(qm, qm)
                graph = {
                    a: {(r1.components[a][x], r2.components[a][x]) for x in E.objects[i].values[a]}
                    for a in range(base.n_objects)
                }
                for a in range(base.n_objects):
                    kp_rel = {(tup[0], tup[2]) for tup in kp.apex.values[a]}
                    if kp_rel != graph[a]:
                        witness = f"relation M{i} over M{j} is not its quotient's kernel pair"
                        break
                if witness:
                    break
            if witness:
                break
        record("effective_equivalence_relations", witness is None, witness)

    if "coproducts" in names:
        witness = None
        if E.find_object(ps.initial_presheaf(base)) is None:
            witness = "initial"
        if witness is None:
            for i, j in itertools.combinations_with_replacement(scope, 2):
                if E.find_object(ps.coproduct(base, [E.objects[i], E.objects[j]]).apex) is None:
                    witness = f"coproduct M{i} + M{j}"
                    break
        record("coproducts", witness is None, witness)

    if "coproducts_disjoint" in names:
        witness = None
        for i, j in itertools.combinations_with_replacement(scope, 2):
            cp = ps.coproduct(base, [E.objects[i], E.objects[j]])
            if not (cp.legs[0].is_pointwise_injective() and cp.legs[1].is_pointwise_injective()):
                witness = f"injections of M{i} + M{j} not monic"
                break
            for a in range(base.n_objects):
                im0 = set(cp.legs[0].components[a].values())
                im1 = set(cp.legs[1].components[a].values())
                if im0 & im1:
                    witness = f"images of M{i} + M{j} overlap"
                    break
            if witness:
                break
        record("coproducts_disjoint", witness is None, witness)

    if "coproducts_universal" in names:
        witness = None
        for i, j in itertools.combinations_with_replacement(scope, 2):
            cp = ps.coproduct(base, [E.objects[i], E.objects[j]])
            k = E.find_object(cp.apex)
            if k is None:
                continue
            iso = ps.find_iso(E.objects[k], cp.apex)
            for x in scope:
                for h in E.homs(x, k):
                    hx = ps.compose_nats(iso, h)
                    for piece in (0, 1):
                        keep = [
                            [u for u in E.objects[x].values[a] if hx.components[a][u][0] == piece]
                            for a in range(base.n_objects)
                        ]
                        S, _ = ps.subpresheaf(E.objects[x], keep)
                        if E.find_object(S) is None:
                            witness = f"pullback of injection {piece} of M{i}+M{j} along M{x}->M{k} missing"
                            break
                    if witness:
                        break
                if witness:
                    break
            if witness:
                break
        record("coproducts_universal", witness is None, witness)

    passed = all(c["passed"] for c in checks.values())
    return AxiomReport(f"{E.flavor}({E.base.name})", flavor, checks, passed)


# -- the universal property ----------------------------------------------------


@dataclass(frozen=True)
class CompletionStructure:
    """Categorical structure of a completion, found by universal-property search."""

    limit_cones: tuple[Cone, ...]
    coproduct_cocones: tuple[Cocone, ...]
    regular_epis: tuple[int, ...]
    free_action_cocones: tuple[Cocone, ...]


def completion_structure(E: ConcreteCompletion, flavor: Optional[str] = None) -> CompletionStructure:
    """Search the completion category for its limits and flavor colimits.

    Everything is determined by the universal property inside the category
    itself, not read off the construction provenance.
    """
    flavor = flavor or E.flavor
    cat = E.as_category()
    cones: list[Cone] = []
    c = limit_in_category(empty_diagram(cat))
    if c is not None:
        cones.append(c)
    for i, j in itertools.combinations_with_replacement(range(cat.n_objects), 2):
        c = limit_in_category(pair_diagram(cat, i, j))
        if c is not None:
            cones.append(c)
    for (u, v) in cat.parallel_pairs():
        if cat.is_identity(u) and cat.is_identity(v):
            continue
        c = limit_in_category(parallel_pair_diagram(cat, u, v))
        if c is not None:
            cones.append(c)

    cocones: list[Cocone] = []
    epis: list[int] = []
    frees: list[Cocone] = []
    if flavor in ("lext", "pret", "poly", "fam_f"):
        cc = colimit_in_category(empty_diagram(cat))
        if cc is not None:
            cocones.append(cc)
        for i, j in itertools.combinations_with_replacement(range(cat.n_objects), 2):
            cc = colimit_in_category(pair_diagram(cat, i, j))
            if cc is not None:
                cocones.append(cc)
    if flavor in ("reg", "ex", "pret"):
        for e in range(cat.n_morphisms):
            if _is_regular_epi_in(cat, e):
                epis.append(e)
    if flavor == "poly":
        frees.extend(_free_action_cocones(cat))
    return CompletionStructure(tuple(cones), tuple(cocones), tuple(epis), tuple(frees))


def _is_regular_epi_in(cat: FiniteCategory, e: int) -> bool:
    """Is ``e`` the coequalizer of its own kernel pair, inside ``cat``?"""
    kp = limit_in_category(cospan_diagram_of(cat, e))
    if kp is None:
        return False
    p1, p2 = kp.legs[0], kp.legs[2]
    diagram = parallel_pair_diagram(cat, p1, p2)
    from .fincat import all_cocones

    target = cat.tgt[e]
    legs = (cat.table[e][p1], e)
    try:
        cand = Cocone(diagram, target, legs)
    except ValidationError:
        return False
    for other in all_cocones(diagram):
        mediators = [
            m
            for m in cat.hom(target, other.apex)
            if all(cat.table[m][cand.legs[d]] == other.legs[d] for d in range(2))
        ]
        if len(mediators) != 1:
            return False
    return True


def cospan_diagram_of(cat: FiniteCategory, e: int) -> Diagram:
    from .fincat import cospan_diagram

    return cospan_diagram(cat, e, e)


def _group_shape(n: int, table: dict) -> FiniteCategory:
    mor_names = [f"g{k}" for k in range(n)]
    t = [[table[(g, f)] for f in range(n)] for g in range(n)]
    return FiniteCategory.build(("*",), tuple(mor_names), (0,) * n, (0,) * n, (0,), t, name=f"grp{n}")


def _free_action_cocones(cat: FiniteCategory) -> list[Cocone]:
    """Colimiting cocones of free one-object group actions in the category."""
    out = []
    initial = colimit_in_category(empty_diagram(cat))
    init_obj = initial.apex if initial is not None else None
    for a in range(cat.n_objects):
        auts = list(cat.automorphisms(a))
        for r in range(1, len(auts) + 1):
            for subset in itertools.combinations(auts, r):
                sset = set(subset)
                if cat.identity[a] not in sset:
                    continue
                if any(cat.table[g][f] not in sset for g in subset for f in subset):
                    continue
                if len(subset) < 2:
                    continue
                free = True
                for g in subset:
                    for h in subset:
                        if g < h:
                            eq = limit_in_category(parallel_pair_diagram(cat, g, h))
                            if eq is None or init_obj is None or eq.apex != init_obj:
                                free = False
                                break
                    if not free:
                        break
                if not free:
                    continue
                idx = {g: k for k, g in enumerate(subset)}
                table = {(idx[g], idx[f]): idx[cat.table[g][f]] for g in subset for f in subset}
                shape = _group_shape(len(subset), table)
                body = FunctorData(shape, cat, (a,), tuple(subset))
                cc = colimit_in_category(Diagram(shape, body))
                if cc is not None:
                    out.append(cc)
    return out


def is_phi_exact_set_functor(G: ps.SetFunctor, struct: CompletionStructure, flavor: str) -> bool:
    """Does ``G`` preserve the materialized limits and flavor colimits?"""
    cat = G.base
    for cone in struct.limit_cones:
        if not fl.preserves_limit(G, cone):
            return False
    for cocone in struct.coproduct_cocones:
        if not fl.preserves_colimit(G, cocone):
            return False
    for e in struct.regular_epis:
        image = set(G.actions[e].values())
        if image != set(G.values[cat.tgt[e]]):
            return False
    for cocone in struct.free_action_cocones:
        if not fl.preserves_colimit(G, cocone):
            return False
    return True


@dataclass(frozen=True, eq=False)
class LanExtension:
    """The left extension of a set-valued functor along the inclusion."""

    functor: ps.SetFunctor
    class_maps: tuple[dict, ...]  # per completion object: triple -> representative


def lan_extension(E: ConcreteCompletion, F: ps.SetFunctor) -> LanExtension:
    """Extend ``F`` over the completion by weighted colimits at each object."""
    cat = E.as_category()
    coends = [ps.weighted_colimit(E.objects[i], F) for i in range(len(E.objects))]
    values = tuple(q.elements for q in coends)
    actions = []
    for mid in range(cat.n_morphisms):
        i, j, t = E.morphism_nat(mid)
        act = {}
        for (c, w, x) in values[i]:
            act[(c, w, x)] = coends[j].class_of[(c, t.components[c][w], x)]
        actions.append(act)
    G = ps.SetFunctor(cat, values, tuple(actions), name=f"Lan({F.name})")
    return LanExtension(G, tuple(q.class_of for q in coends))


def restriction(E: ConcreteCompletion, G: ps.SetFunctor) -> ps.SetFunctor:
    """Restrict a functor on the completion along the inclusion of the base."""
    C = E.base
    fd, _ = E.inclusion()
    values = tuple(G.values[fd.object_map[a]] for a in range(C.n_objects))
    actions = tuple(dict(G.actions[fd.morphism_map[f]]) for f in range(C.n_morphisms))
    return ps.SetFunctor(C, values, actions, name=f"{G.name}|")


def _restriction_agrees(E: ConcreteCompletion, F: ps.SetFunctor, lan: LanExtension) -> bool:
    """Canonical comparison of the extension's restriction with the original."""
    C = E.base
    fd, isos = E.inclusion()
    can = []
    for c in range(C.n_objects):
        k = fd.object_map[c]
        w0 = isos[c].components[c][C.identity[c]]
        can.append({x: lan.class_maps[k][(c, w0, x)] for x in F.values[c]})
        if len(set(can[c].values())) != len(F.values[c]):
            return False
        if set(can[c].values()) != set(lan.functor.values[k]):
            return False
    for f in range(C.n_morphisms):
        a, b = C.src[f], C.tgt[f]
        for x in F.values[a]:
            if lan.functor.actions[fd.morphism_map[f]][can[a][x]] != can[b][F.actions[f][x]]:
                return False
    return True


def _lan_of_restriction_agrees(E: ConcreteCompletion, G: ps.SetFunctor) -> bool:
    """Canonical comparison of the extension of the restriction with ``G``."""
    C = E.base
    cat = E.as_category()
    fd, isos = E.inclusion()
    GK = restriction(E, G)
    lan = lan_extension(E, GK)
    cans = []
    for i in range(len(E.objects)):
        can = {}
        for (c, w, x) in lan.class_maps[i]:
            t = ps.compose_nats(
                ps.classifying_nat(E.objects[i], c, w), isos[c].inverse()
            )
            mid = E.morphism_id(fd.object_map[c], i, t)
            val = G.actions[mid][x]
            rep = lan.class_maps[i][(c, w, x)]
            if rep in can and can[rep] != val:
                return False
            can[rep] = val
        if len(set(can.values())) != len(lan.functor.values[i]):
            return False
        if set(can.values()) != set(G.values[i]):
            return False
        cans.append(can)
    for mid in range(cat.n_morphisms):
        i, j = cat.src[mid], cat.tgt[mid]
        for rep in lan.functor.values[i]:
            if G.actions[mid][cans[i][rep]] != cans[j][lan.functor.actions[mid][rep]]:
                return False
    return True


@dataclass(frozen=True)
class UniversalPropertyReport:
    flavor: str
    value_bound: int
    flats: int
    exacts: int
    flat_iso_classes: int
    exact_iso_classes: int
    extensions_exact: bool
    restrictions_flat: bool
    round_trips_ok: bool
    correspondence: bool
    sampled: bool
    failures: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "flavor": self.flavor,
            "value_bound": self.value_bound,
            "flats": self.flats,
            "exacts": self.exacts,
            "flat_iso_classes": self.flat_iso_classes,
            "exact_iso_classes": self.exact_iso_classes,
            "extensions_exact": self.extensions_exact,
            "restrictions_flat": self.restrictions_flat,
            "round_trips_ok": self.round_trips_ok,
            "correspondence": self.correspondence,
            "sampled": self.sampled,
            "failures": list(self.failures),
        }


def _collect(gen, cap: int, note: list):
    out = []
    for item in gen:
        out.append(item)
        if len(out) > cap:
            note.append("sampled")
            return out[:cap]
    return out


def _iso_classes(functors: Sequence[ps.SetFunctor]) -> int:
    reps: list[ps.SetFunctor] = []
    for F in functors:
        if not any(
            F.total_size() == R.total_size() and ps.find_set_functor_iso(F, R) is not None
            for R in reps
        ):
            reps.append(F)
    return len(reps)


def universal_property_check(
    C: FiniteCategory,
    E: ConcreteCompletion,
    value_bound: int,
    flavor: Optional[str] = None,
    cap: Optional[int] = None,
    seed: int = 0,
) -> UniversalPropertyReport:
    """Verify the extension/restriction equivalence on enumerable functors.

    Every flat functor on the base must extend to a functor preserving the
    completion's materialized structure; every structure-preserving functor
    must restrict to a flat one; both canonical round-trip comparisons must
    be isomorphisms; and the two sides must have the same number of
    isomorphism classes.
    """
    flavor = flavor or E.flavor
    cap = cap or E.bounds.enumeration_cap
    notes: list[str] = []
    rng = random.Random(seed)
    cat = E.as_category()
    struct = completion_structure(E, flavor)
    candidates = _collect(ps.enumerate_set_functors(C, value_bound, rng=rng), cap, notes)
    flats = [F for F in candidates if fl.is_flat_set_valued(F).flat]
    exacts = [
        G
        for G in _collect(ps.enumerate_set_functors(cat, value_bound, rng=rng), cap, notes)
        if is_phi_exact_set_functor(G, struct, flavor)
    ]
    failures: list[str] = []
    extensions_exact = restrictions_flat = round_trips_ok = True
    lans = []
    for F in flats:
        lan = lan_extension(E, F)
        lans.append(lan)
        if not is_phi_exact_set_functor(lan.functor, struct, flavor):
            extensions_exact = False
            failures.append(f"extension of flat functor {F.values} is not structure-preserving")
        if not _restriction_agrees(E, F, lan):
            round_trips_ok = False
            failures.append(f"restriction of the extension differs from {F.values}")
    for G in exacts:
        GK = restriction(E, G)
        if not fl.is_flat_set_valued(GK).flat:
            restrictions_flat = False
            failures.append(f"restriction of structure-preserving functor {G.values} is not flat")
        if not _lan_of_restriction_agrees(E, G):
            round_trips_ok = False
            failures.append(f"extension of the restriction differs from {G.values}")
    flat_classes = _iso_classes(flats)
    exact_classes = _iso_classes(exacts)
    correspondence = (
        extensions_exact and restrictions_flat and round_trips_ok
        and flat_classes == exact_classes
    )
    return UniversalPropertyReport(
        flavor, value_bound, len(flats), len(exacts), flat_classes, exact_classes,
        extensions_exact, restrictions_flat, round_trips_ok, correspondence,
        "sampled" in notes, tuple(failures),
    )


def nonrepresentable_limit_witness(C: FiniteCategory, bounds: Bounds = Bounds()):
    """A finite limit of representables not isomorphic to any representable.

    Runs the colimit-free closure; any object it adds beyond the seeded
    representables certifies that the closure strictly extends the base,
    which for a Cauchy-complete non-lex base rules out a free completion
    with no colimit generators.  Returns ``(completion, index or None)``.
    """
    E = close(C, "none", bounds)
    for i, prov in enumerate(E.provenance):
        if prov.kind != "representable":
            return E, i
    return E, None


def completion_from_json(data: dict) -> ConcreteCompletion:
    """Rebuild a serialized completion; every presheaf is re-validated."""
    from .fincat import validate_category

    base = validate_category(data["base"])
    bounds = Bounds(**data["bounds"])
    objects, provenance = [], []
    for entry in data["objects"]:
        values = tuple(tuple(fiber) for fiber in entry["values"])
        actions = tuple(
            {x: y for (x, y) in entry["actions"][f]} for f in range(base.n_morphisms)
        )
        objects.append(ps.Presheaf(base, values, actions, name=entry["name"]))
        provenance.append(Provenance(**entry["provenance"]))
    return ConcreteCompletion(
        base,
        data["flavor"],
        bounds,
        tuple(objects),
        tuple(provenance),
        data["saturated"],
        tuple(data["bound_events"]),
    )
