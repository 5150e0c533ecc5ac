"""Weak-memory litmus checking: explorer, axioms and brute-force oracle."""

from .bruteforce import OracleLimit, enumerate_bruteforce, sc_executions
from .explore import ExplorationLimit, explore
from .graph import ExecutionGraph, Kind, MemEvent, check_consistent
from .litmus import LitmusError, LitmusTest, parse_litmus
from .report import Report, evaluate_postcondition, outcome_set

__all__ = [
    "ExecutionGraph", "ExplorationLimit", "Kind", "LitmusError", "LitmusTest", "MemEvent",
    "OracleLimit", "Report", "check_consistent", "enumerate_bruteforce", "evaluate_postcondition",
    "explore", "outcome_set", "parse_litmus", "sc_executions",
]
