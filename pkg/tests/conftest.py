from __future__ import annotations

import pytest

from catengine import corpus
from catengine import fincat as fc
from catengine import presheaf as ps


@pytest.fixture(scope="session")
def cats():
    return corpus.all_categories()


def hom_functor(cat: fc.FiniteCategory, a: int) -> ps.SetFunctor:
    """The covariant functor of maps out of ``a``."""
    values = tuple(cat.hom(a, b) for b in range(cat.n_objects))
    actions = tuple(
        {m: cat.table[f][m] for m in values[cat.src[f]]} for f in range(cat.n_morphisms)
    )
    return ps.SetFunctor(cat, values, actions, name=f"hom({cat.objects[a]},-)")


@pytest.fixture(scope="session")
def weakly_lex_names():
    return ("ONE", "ARROW", "CHAIN3")


@pytest.fixture(scope="session")
def multifinite_names():
    return ("ONE", "ARROW", "CHAIN3", "DISC2", "SPLIT")
