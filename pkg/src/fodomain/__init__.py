"""Bounded first-order languages, subsumption-based weakening and an
antichain abstract domain for bounded invariant inference."""

__version__ = "0.1.0"

from .fol import Signature, State, Structure, Var, Const, Literal
from .lang import (Atoms, Or2, And2, OrK, AndW, Exists, Forall, EF, Formula, render, subsumes,
                   canonicalize, minimal, enumerate_language, build_kpdnf, bottom, satisfies)
from .weaken import weaken_formula, weaken_set, abstract_states, represent
from .lset import make_lset
from .fixpoint import (ProtocolModel, Action, lfp_symbolic_abstraction, check_inductive,
                       check_safety, reachable)

__all__ = [
    "Signature", "State", "Structure", "Var", "Const", "Literal",
    "Atoms", "Or2", "And2", "OrK", "AndW", "Exists", "Forall", "EF", "Formula", "render",
    "subsumes", "canonicalize", "minimal", "enumerate_language", "build_kpdnf", "bottom",
    "satisfies", "weaken_formula", "weaken_set", "abstract_states", "represent", "make_lset",
    "ProtocolModel", "Action", "lfp_symbolic_abstraction", "check_inductive", "check_safety",
    "reachable",
]
