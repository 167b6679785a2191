"""LP-text and MPS export/import plus ``name value`` solution files.

Names are sanitised before writing: every character outside
``[A-Za-z0-9_.]`` becomes ``_`` and a name starting with a digit or ``.``
gets an ``x`` prefix.  Two different names that sanitise to the same string
raise :class:`NameCollisionError` instead of being silently merged.

Numbers are written with Python's shortest round-trip ``repr`` (at most 17
significant digits), so re-reading a file reproduces every coefficient
bit for bit.  The MPS writer keeps the classic fixed column layout while
names and numbers fit their fields and widens a field otherwise; the reader
splits on whitespace, which every mainstream MPS reader also accepts.
"""

from __future__ import annotations

import math
import os
import re
import time
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..model.problem import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, MilpProblem
from .bnb import MilpSolution

_ILLEGAL = re.compile(r"[^A-Za-z0-9_.]")
IMPORTED = "imported"


class NameCollisionError(ValueError):
    pass


class SolutionImportError(ValueError):
    pass


def sanitize_name(name: str) -> str:
    out = _ILLEGAL.sub("_", name)
    if not out or out[0].isdigit() or out[0] == ".":
        out = "x" + out
    return out


def _sanitized(names: List[str], kind: str) -> List[str]:
    seen: Dict[str, str] = {}
    out = []
    for name in names:
        s = sanitize_name(name)
        if s in seen and seen[s] != name:
            raise NameCollisionError(f"{kind} names {seen[s]!r} and {name!r} both map to {s!r}")
        if s in seen:
            raise NameCollisionError(f"duplicate {kind} name {name!r}")
        seen[s] = name
        out.append(s)
    return out


def fmt(a: float) -> str:
    if math.isinf(a):
        return "inf" if a > 0 else "-inf"
    if a == int(a) and abs(a) < 1e15:
        return str(int(a))
    return repr(float(a))


# -- LP text ---------------------------------------------------------------

def _lp_terms(pairs: List[Tuple[float, str]]) -> List[str]:
    parts = []
    for a, name in pairs:
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        parts.append(f"{sign} {name}" if mag == 1 else f"{sign} {fmt(mag)} {name}")
    return parts


def _wrap(head: str, parts: List[str], per_line: int = 6) -> List[str]:
    if not parts:
        return [head + " 0"]
    lines = []
    for k in range(0, len(parts), per_line):
        chunk = " ".join(parts[k:k + per_line])
        lines.append((head + " " if k == 0 else "   ") + chunk)
    return lines


def write_lp(problem: MilpProblem, path: str) -> None:
    vnames = _sanitized([v.name for v in problem.variables], "variable")
    rnames = _sanitized([c.name for c in problem.constraints], "constraint")
    lines = [f"\\ Problem: {sanitize_name(problem.name)}", "Minimize"]
    obj = [(a, vnames[j]) for j, a in sorted(problem.objective.items()) if a != 0]
    parts = _lp_terms(obj)
    if problem.objective_constant:
        c0 = problem.objective_constant
        parts.append(f"{'-' if c0 < 0 else '+'} {fmt(abs(c0))}")
    lines += _wrap(" obj:", parts)
    lines.append("Subject To")
    for name, con in zip(rnames, problem.constraints):
        parts = _lp_terms([(a, vnames[j]) for j, a in zip(con.indices, con.coefs)])
        body = _wrap(f" {name}:", parts)
        body[-1] += f" {con.sense} {fmt(con.rhs)}"
        lines += body
    lines.append("Bounds")
    for name, v in zip(vnames, problem.variables):
        if v.vtype == BINARY and v.lb == 0 and v.ub == 1:
            continue
        lo, hi = v.lb, v.ub
        if lo == hi:
            lines.append(f" {name} = {fmt(lo)}")
        elif math.isinf(lo) and math.isinf(hi):
            lines.append(f" {name} free")
        elif lo == 0 and math.isinf(hi):
            continue
        elif math.isinf(hi):
            lines.append(f" {name} >= {fmt(lo)}")
        else:
            lines.append(f" {fmt(lo)} <= {name} <= {fmt(hi)}")
    gens = [n for n, v in zip(vnames, problem.variables)
            if v.vtype == INTEGER or (v.vtype == BINARY and (v.lb, v.ub) != (0, 1))]
    bins = [n for n, v in zip(vnames, problem.variables) if v.vtype == BINARY and (v.lb, v.ub) == (0, 1)]
    if gens:
        lines.append("Generals")
        lines += [f" {n}" for n in gens]
    if bins:
        lines.append("Binaries")
        lines += [f" {n}" for n in bins]
    lines.append("End")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_SECTIONS = {
    "minimize": "obj", "minimise": "obj", "minimum": "obj", "min": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "bound": "bounds",
    "generals": "gen", "general": "gen", "gen": "gen",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "end": "end",
}


def _parse_linear(tokens: List[str]) -> Tuple[List[Tuple[str, float]], float]:
    """Parse ``[+|-] [coef] name ...`` into terms and a constant."""
    terms: List[Tuple[str, float]] = []
    const = 0.0
    sign = 1.0
    coef: Optional[float] = None
    for tok in tokens:
        if tok in ("+", "-"):
            if coef is not None:
                const += sign * coef
                coef = None
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            val = float(tok)
        except ValueError:
            terms.append((tok, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
            continue
        if coef is not None:
            const += sign * coef
            sign = 1.0
        coef = val
    if coef is not None:
        const += sign * coef
    return terms, const


def _tokenize(text: str) -> List[str]:
    text = re.sub(r"(<=|>=|=<|=>|<|>|=)", r" \1 ", text)
    text = re.sub(r"(?<![eE])([+-])", r" \1 ", text)
    return text.split()


def _merge_signs(tokens: List[str]) -> List[str]:
    out: List[str] = []
    for tok in tokens:
        if out and out[-1] in ("+", "-") and (len(out) == 1 or out[-2] in ("<=", ">=", "=", "=<", "=>", "<", ">")):
            out[-1] = out[-1] + tok
        else:
            out.append(tok)
    return out


def read_lp(path: str) -> MilpProblem:
    with open(path, encoding="ascii") as fh:
        raw = fh.read().splitlines()
    name = "problem"
    section = None
    blocks: Dict[str, List[str]] = {"obj": [], "rows": [], "bounds": [], "gen": [], "bin": []}
    for line in raw:
        if line.startswith("\\"):
            m = re.match(r"\\\s*Problem:\s*(\S+)", line)
            if m:
                name = m.group(1)
            continue
        stripped = line.strip()
        if not stripped:
            continue
        key = stripped.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "end":
                break
            continue
        if section is None:
            raise ValueError(f"{path}: content before any section: {line!r}")
        if line[0].isspace() and blocks[section] and section in ("obj", "rows") \
                and not re.match(r"\s*[A-Za-z_][\w.]*\s*:", line):
            blocks[section][-1] += " " + stripped
        else:
            blocks[section].append(stripped)

    p = MilpProblem(name=name)

    def var(n: str) -> int:
        try:
            return p.var_id(n)
        except KeyError:
            return p.add_var(n)

    obj_terms: List[Tuple[str, float]] = []
    const = 0.0
    for entry in blocks["obj"]:
        body = entry.split(":", 1)[1] if ":" in entry else entry
        t, c = _parse_linear(_tokenize(body))
        obj_terms += t
        const += c
    rows = []
    for entry in blocks["rows"]:
        rname, body = entry.split(":", 1)
        toks = _tokenize(body)
        k = next(i for i, t in enumerate(toks) if t in ("<=", ">=", "=", "=<", "=>", "<", ">"))
        sense = {"<": LE, "=<": LE, "<=": LE, ">": GE, "=>": GE, ">=": GE, "=": EQ}[toks[k]]
        terms, c = _parse_linear(toks[:k])
        rhs = _num("".join(toks[k + 1:])) - c
        rows.append((rname.strip(), terms, sense, rhs))
    for n, _ in obj_terms:
        var(n)
    for _, terms, _, _ in rows:
        for n, _ in terms:
            var(n)
    for j_name, a in obj_terms:
        j = p.var_id(j_name)
        p.objective[j] = p.objective.get(j, 0.0) + a
    p.objective_constant = const
    for rname, terms, sense, rhs in rows:
        p.add_constraint(rname, [(p.var_id(n), a) for n, a in terms], sense, rhs)
    for entry in blocks["bounds"]:
        toks = _merge_signs(_tokenize(entry))
        if len(toks) == 2 and toks[1].lower() == "free":
            v = p.variables[var(toks[0])]
            v.lb, v.ub = -math.inf, math.inf
        elif len(toks) == 3:
            a, op, b = toks
            if _is_num(a):
                a, b = b, a
                op = {"<=": ">=", ">=": "<=", "=": "="}[op]
            v = p.variables[var(a)]
            val = _num(b)
            if op == "=":
                v.lb = v.ub = val
            elif op in ("<=", "=<"):
                v.ub = val
            else:
                v.lb = val
        elif len(toks) == 5:
            lo, _, n, _, hi = toks
            v = p.variables[var(n)]
            v.lb, v.ub = _num(lo), _num(hi)
        else:
            raise ValueError(f"{path}: cannot parse bound {entry!r}")
    for entry in blocks["gen"]:
        for n in entry.split():
            p.variables[var(n)].vtype = INTEGER
    for entry in blocks["bin"]:
        for n in entry.split():
            v = p.variables[var(n)]
            v.vtype = BINARY
            v.lb, v.ub = max(v.lb, 0.0), min(v.ub, 1.0)
    return p


def _is_num(tok: str) -> bool:
    try:
        _num(tok)
        return True
    except ValueError:
        return False


def _num(tok: str) -> float:
    low = tok.lower()
    if low in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    return float(tok)


# -- MPS -------------------------------------------------------------------

def _mps_line(*fields: str) -> str:
    # classic field starts: 2, 5, 15, 25, 40, 50 (1-based)
    starts = [1, 4, 14, 24, 39, 49]
    out = ""
    for pos, f in zip(starts, fields):
        if f == "":
            continue
        if len(out) < pos:
            out = out.ljust(pos)
        else:
            out += " "
        out += f
    return out.rstrip()


def write_mps(problem: MilpProblem, path: str) -> None:
    vnames = _sanitized([v.name for v in problem.variables], "variable")
    rnames = _sanitized([c.name for c in problem.constraints], "constraint")
    obj_row = "obj"
    while obj_row in rnames:
        obj_row = "_" + obj_row
    cols: List[List[Tuple[str, float]]] = [[] for _ in problem.variables]
    for j, a in sorted(problem.objective.items()):
        if a != 0:
            cols[j].append((obj_row, a))
    for rname, con in zip(rnames, problem.constraints):
        for j, a in zip(con.indices, con.coefs):
            cols[j].append((rname, a))
    lines = [f"NAME          {sanitize_name(problem.name)}", "ROWS", _mps_line("N", obj_row)]
    code = {LE: "L", GE: "G", EQ: "E"}
    for rname, con in zip(rnames, problem.constraints):
        lines.append(_mps_line(code[con.sense], rname))
    lines.append("COLUMNS")
    in_int = False
    for j, (name, v) in enumerate(zip(vnames, problem.variables)):
        if v.is_integer and not in_int:
            lines.append(_mps_line("", "MARKER", "'MARKER'", "", "'INTORG'"))
            in_int = True
        elif not v.is_integer and in_int:
            lines.append(_mps_line("", "MARKER", "'MARKER'", "", "'INTEND'"))
            in_int = False
        if not cols[j]:
            lines.append(_mps_line("", name, obj_row, "0"))
        for rname, a in cols[j]:
            lines.append(_mps_line("", name, rname, fmt(a)))
    if in_int:
        lines.append(_mps_line("", "MARKER", "'MARKER'", "", "'INTEND'"))
    lines.append("RHS")
    if problem.objective_constant:
        lines.append(_mps_line("", "RHS", obj_row, fmt(-problem.objective_constant)))
    for rname, con in zip(rnames, problem.constraints):
        if con.rhs != 0:
            lines.append(_mps_line("", "RHS", rname, fmt(con.rhs)))
    lines.append("BOUNDS")
    for name, v in zip(vnames, problem.variables):
        lo, hi = v.lb, v.ub
        if v.vtype == BINARY and lo == 0 and hi == 1:
            lines.append(_mps_line("BV", "BND", name))
            continue
        if lo == hi:
            lines.append(_mps_line("FX", "BND", name, fmt(lo)))
            continue
        if math.isinf(lo) and math.isinf(hi):
            lines.append(_mps_line("FR", "BND", name))
            continue
        if math.isinf(lo):
            lines.append(_mps_line("MI", "BND", name))
        elif lo != 0 or v.is_integer:
            lines.append(_mps_line("LO", "BND", name, fmt(lo)))
        if math.isinf(hi):
            if v.is_integer:
                lines.append(_mps_line("PL", "BND", name))
        else:
            lines.append(_mps_line("UP", "BND", name, fmt(hi)))
    lines.append("ENDATA")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mps(path: str) -> MilpProblem:
    p = MilpProblem()
    section = None
    obj_row = None
    row_sense: Dict[str, str] = {}
    row_order: List[str] = []
    row_terms: Dict[str, List[Tuple[int, float]]] = {}
    rhs: Dict[str, float] = {}
    integer_mode = False
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("*"):
                continue
            toks = line.split()
            if not line[0].isspace():
                head = toks[0].upper()
                if head == "NAME":
                    p.name = toks[1] if len(toks) > 1 else "problem"
                    continue
                if head == "ENDATA":
                    break
                section = head
                continue
            if section == "ROWS":
                kind, rname = toks[0].upper(), toks[1]
                if kind == "N":
                    if obj_row is None:
                        obj_row = rname
                    continue
                row_sense[rname] = {"L": LE, "G": GE, "E": EQ}[kind]
                row_order.append(rname)
                row_terms[rname] = []
            elif section == "COLUMNS":
                if len(toks) >= 3 and toks[1] == "'MARKER'":
                    integer_mode = toks[2] == "'INTORG'"
                    continue
                cname = toks[0]
                try:
                    j = p.var_id(cname)
                except KeyError:
                    j = p.add_var(cname, vtype=INTEGER if integer_mode else CONTINUOUS)
                for k in range(1, len(toks) - 1, 2):
                    rname, val = toks[k], float(toks[k + 1])
                    if rname == obj_row:
                        if val:
                            p.objective[j] = p.objective.get(j, 0.0) + val
                    elif rname in row_terms:
                        row_terms[rname].append((j, val))
                    else:
                        raise ValueError(f"{path}:{lineno}: unknown row {rname!r}")
            elif section == "RHS":
                for k in range(1, len(toks) - 1, 2):
                    rhs[toks[k]] = float(toks[k + 1])
            elif section == "BOUNDS":
                kind, cname = toks[0].upper(), toks[2]
                v = p.variables[p.var_id(cname)]
                val = float(toks[3]) if len(toks) > 3 else None
                if kind == "UP":
                    v.ub = val
                elif kind == "LO":
                    v.lb = val
                elif kind == "FX":
                    v.lb = v.ub = val
                elif kind == "FR":
                    v.lb, v.ub = -math.inf, math.inf
                elif kind == "MI":
                    v.lb = -math.inf
                elif kind == "PL":
                    v.ub = math.inf
                elif kind == "BV":
                    v.vtype = BINARY
                    v.lb, v.ub = 0.0, 1.0
                else:
                    raise ValueError(f"{path}:{lineno}: unsupported bound type {kind}")
            elif section == "RANGES":
                raise ValueError(f"{path}:{lineno}: RANGES are not supported")
    if obj_row is not None and obj_row in rhs:
        p.objective_constant = -rhs.pop(obj_row)
    for rname in row_order:
        p.add_constraint(rname, row_terms[rname], row_sense[rname], rhs.get(rname, 0.0))
    return p


# -- dispatch ----------------------------------------------------------------

def _format_for(path: str, fmt_name: Optional[str]) -> str:
    if fmt_name:
        return {"lp": "lp", "lp-text": "lp", "mps": "mps"}[fmt_name.lower()]
    ext = os.path.splitext(path)[1].lower()
    if ext == ".lp":
        return "lp"
    if ext == ".mps":
        return "mps"
    raise ValueError(f"cannot infer file format from {path!r}")


def export_problem(problem: MilpProblem, path: str, format: Optional[str] = None) -> str:
    kind = _format_for(path, format)
    (write_lp if kind == "lp" else write_mps)(problem, path)
    return path


def read_problem(path: str, format: Optional[str] = None) -> MilpProblem:
    kind = _format_for(path, format)
    return read_lp(path) if kind == "lp" else read_mps(path)


# -- solutions ---------------------------------------------------------------

def write_solution(problem: MilpProblem, x, path: str) -> None:
    names = _sanitized([v.name for v in problem.variables], "variable")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for n, val in zip(names, x):
            fh.write(f"{n} {fmt(float(val))}\n")


def import_solution(problem: MilpProblem, path: str, rel_tol: float = 1e-6,
                    abs_tol: float = 1e-4, int_tol: float = 1e-6) -> MilpSolution:
    """Read a ``name value`` file and accept it only if it is feasible."""
    t0 = time.perf_counter()
    names = _sanitized([v.name for v in problem.variables], "variable")
    pos = {n: j for j, n in enumerate(names)}
    x = np.full(problem.n_vars, math.nan)
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            toks = s.split()
            if len(toks) != 2:
                raise SolutionImportError(f"{path}:{lineno}: expected 'name value'")
            if toks[0] not in pos:
                raise SolutionImportError(f"{path}:{lineno}: unknown variable {toks[0]!r}")
            x[pos[toks[0]]] = float(toks[1])
    missing = [names[j] for j in np.flatnonzero(np.isnan(x))]
    if missing:
        shown = ", ".join(missing[:5])
        raise SolutionImportError(f"{path}: missing value for variable(s) {shown}")
    bad_int = problem.check_integrality(x, int_tol)
    if bad_int:
        raise SolutionImportError(f"{path}: integrality violated: {bad_int[:3]}")
    viol = problem.violations(x, rel_tol, abs_tol)
    if viol:
        top = "; ".join(f"{n} (by {v:.6g})" for n, v in viol[:3])
        raise SolutionImportError(f"{path}: infeasible point, worst violations: {top}")
    obj = problem.evaluate(x)
    return MilpSolution(IMPORTED, x, obj, math.nan, math.nan, 0, time.perf_counter() - t0)
