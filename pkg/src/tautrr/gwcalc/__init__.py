"""Correlator calculus on the big phase space."""
from .expr import CorrelatorExpr, DELTA_READINGS, ParseError, read_expression_file
from .calculus import (
    DATA_DIR, Reducer, Rule, RuleSet, ScopeError, BudgetExceeded, default_rules, differentiate,
    load_rule_file, normal_form, psi_power_identity, reduce, t_reduce, translate, verify_identity,
)

__all__ = [
    "CorrelatorExpr", "DELTA_READINGS", "ParseError", "read_expression_file", "DATA_DIR",
    "Reducer", "Rule", "RuleSet", "ScopeError", "BudgetExceeded", "default_rules", "differentiate",
    "load_rule_file", "normal_form", "psi_power_identity", "reduce", "t_reduce", "translate",
    "verify_identity",
]
