"""Desk-scale computational category theory engine.

Finite categories with validated composition tables, finite-set-valued
presheaves, virtual-limit classification (weak / multi / multi-finite /
fc / poly), flatness testing by definitional and structural routes,
bounded free completions with exactness batteries and the
extension/restriction equivalence, universal ultraproducts, categories of
fractions, orthogonality, and sketch model search.
"""

from . import corpus, errors, fincat, presheaf, virtlim, flatness, completions, ultra, localize

__version__ = "0.1.0"

__all__ = [
    "corpus", "errors", "fincat", "presheaf", "virtlim",
    "flatness", "completions", "ultra", "localize",
]
