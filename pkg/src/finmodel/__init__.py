"""Finite structures, reduced products, limits and the profinite retraction."""
from .formulas import (
    And, Application, Constant, Equality, Exists, Falsity, Forall, Implies, Not, Or,
    RelationAtom, Signature, Truth, Variable, classify, ep_to_pp_disjunction, to_text,
)
from .parser import parse_formula
from .structures import (
    Morphism, Structure, evaluate, find_retraction, homomorphisms, is_embedding,
    is_homomorphism, is_pure,
)
from .orders import Filter, Poset, directed_ultrafilter, principal_filter
from .constructions import (
    CofilteredDiagram, Diagram, FilteredDiagram, colimit_is_reduced_product, equalizer,
    filtered_colimit, limit, product, reduced_product, ultraproduct,
)
from .profinite import gamma_global, profinite_closure_check, retraction_theorem_check
from .fileformat import Workspace, load, load_examples, loads

__version__ = "0.1.0"
