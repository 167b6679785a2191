"""Sparse container for mixed-integer linear programs."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

CONTINUOUS = "continuous"
INTEGER = "integer"
BINARY = "binary"
VAR_TYPES = (CONTINUOUS, INTEGER, BINARY)

LE, EQ, GE = "<=", "=", ">="
SENSES = (LE, EQ, GE)


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = math.inf
    vtype: str = CONTINUOUS

    @property
    def is_integer(self) -> bool:
        return self.vtype != CONTINUOUS


@dataclass
class Constraint:
    name: str
    indices: List[int]
    coefs: List[float]
    sense: str
    rhs: float


@dataclass
class MilpProblem:
    """A minimisation problem ``min c'x + c0`` over linear rows and bounds.

    ``index`` maps semantic keys such as ``("pG", "g1", 0, 5)`` to variable
    positions; ``row_index`` does the same for constraints.  Builders fill
    ``meta`` with whatever they need to decode a solution later.
    """

    name: str = "problem"
    variables: List[Variable] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    objective: Dict[int, float] = field(default_factory=dict)
    objective_constant: float = 0.0
    index: Dict[Hashable, int] = field(default_factory=dict)
    row_index: Dict[Hashable, int] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)
    _lookup: Optional[Dict[str, int]] = field(default=None, repr=False, compare=False)

    # -- construction -----------------------------------------------------

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf,
                vtype: str = CONTINUOUS, obj: float = 0.0,
                key: Optional[Hashable] = None) -> int:
        if vtype not in VAR_TYPES:
            raise ValueError(f"unknown variable type {vtype!r}")
        if lb > ub:
            raise ValueError(f"variable {name}: lower bound {lb} exceeds upper bound {ub}")
        if vtype == BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        j = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), vtype))
        if obj:
            self.objective[j] = float(obj)
        if key is not None:
            if key in self.index:
                raise KeyError(f"duplicate variable key {key!r}")
            self.index[key] = j
        return j

    def add_constraint(self, name: str, terms: Sequence[Tuple[int, float]],
                       sense: str, rhs: float,
                       key: Optional[Hashable] = None) -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        merged: Dict[int, float] = {}
        n = len(self.variables)
        for j, a in terms:
            if not 0 <= j < n:
                raise IndexError(f"constraint {name} references unknown variable {j}")
            merged[j] = merged.get(j, 0.0) + float(a)
        idx = [j for j, a in merged.items() if a != 0.0]
        i = len(self.constraints)
        self.constraints.append(Constraint(name, idx, [merged[j] for j in idx], sense, float(rhs)))
        if key is not None:
            if key in self.row_index:
                raise KeyError(f"duplicate constraint key {key!r}")
            self.row_index[key] = i
        return i

    def copy(self) -> "MilpProblem":
        return copy.deepcopy(self)

    # -- views ------------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    @property
    def integer_indices(self) -> List[int]:
        return [j for j, v in enumerate(self.variables) if v.is_integer]

    def var_id(self, name: str) -> int:
        if self._lookup is None or len(self._lookup) != len(self.variables):
            self._lookup = {v.name: j for j, v in enumerate(self.variables)}
        return self._lookup[name]

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, a in self.objective.items():
            c[j] = a
        return c

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return lb, ub

    def matrix(self) -> sparse.csr_matrix:
        rows, cols, vals = [], [], []
        for i, con in enumerate(self.constraints):
            rows.extend([i] * len(con.indices))
            cols.extend(con.indices)
            vals.extend(con.coefs)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_vars))

    def senses(self) -> List[str]:
        return [c.sense for c in self.constraints]

    def rhs(self) -> np.ndarray:
        return np.array([c.rhs for c in self.constraints], dtype=float)

    def evaluate(self, x: Sequence[float]) -> float:
        return float(self.objective_constant + sum(a * x[j] for j, a in self.objective.items()))

    def violations(self, x: Sequence[float], rel_tol: float = 1e-6,
                   abs_tol: float = 1e-4) -> List[Tuple[str, float]]:
        """Rows and bounds violated by ``x``, worst first, as ``(name, amount)``.

        A row counts as violated when it misses by more than
        ``max(abs_tol, rel_tol * scale)`` where ``scale`` is the larger of the
        rhs magnitude and the largest term magnitude.
        """
        x = np.asarray(x, dtype=float)
        out: List[Tuple[str, float]] = []
        for con in self.constraints:
            terms = [a * x[j] for j, a in zip(con.indices, con.coefs)]
            lhs = math.fsum(terms)
            scale = max([abs(con.rhs)] + [abs(t) for t in terms] + [1.0])
            tol = max(abs_tol, rel_tol * scale)
            if con.sense == LE:
                miss = lhs - con.rhs
            elif con.sense == GE:
                miss = con.rhs - lhs
            else:
                miss = abs(lhs - con.rhs)
            if miss > tol:
                out.append((con.name, miss))
        for j, v in enumerate(self.variables):
            scale = max(1.0, abs(x[j]))
            tol = max(abs_tol, rel_tol * scale)
            miss = max(v.lb - x[j], x[j] - v.ub)
            if miss > tol:
                out.append((f"bound:{v.name}", miss))
        out.sort(key=lambda t: -t[1])
        return out

    def check_integrality(self, x: Sequence[float], tol: float = 1e-6) -> List[Tuple[str, float]]:
        bad = []
        for j in self.integer_indices:
            frac = abs(x[j] - round(x[j]))
            if frac > tol:
                bad.append((self.variables[j].name, float(x[j])))
        return bad

    def relaxed(self) -> "MilpProblem":
        """Copy with every integrality mark dropped."""
        out = self.copy()
        for v in out.variables:
            v.vtype = CONTINUOUS
        return out

    def census(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for key in self.index:
            role = key[0] if isinstance(key, tuple) else str(key)
            counts[role] = counts.get(role, 0) + 1
        return counts

    def row_census(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for key in self.row_index:
            family = key[0] if isinstance(key, tuple) else str(key)
            counts[family] = counts.get(family, 0) + 1
        return counts
