"""LP-format text exchange and plain-text solution files.

The writer emits the CPLEX-style LP dialect understood by common solvers
(HiGHS, CBC, GLPK, Gurobi, CPLEX).  The reader handles the same subset and
exists so files can be round-tripped and solved without external tools.

Solution files hold one ``name value`` pair per line; ``#`` starts a comment
and an ``=obj= value`` line carries the objective.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import SolverError
from .problem import BINARY, CONTINUOUS, INTEGER, MilpProblem, ProblemBuilder, Variable

_TERMS_PER_LINE = 8


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.17g}"


def _expr(problem: MilpProblem, terms) -> list[str]:
    """Linear expression split into lines of at most ``_TERMS_PER_LINE`` terms."""
    parts = []
    for k, (vid, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = problem.variables[vid].name if mag == 1 else f"{_num(mag)} {problem.variables[vid].name}"
        if k == 0:
            parts.append(f"- {body}" if sign == "-" else body)
        else:
            parts.append(f"{sign} {body}")
    return [" ".join(parts[i:i + _TERMS_PER_LINE]) for i in range(0, len(parts), _TERMS_PER_LINE)]


def _bound_line(name: str, lb: float, ub: float) -> str:
    if lb == ub:
        return f" {name} = {_num(lb)}"
    lo = "-inf" if lb == -math.inf else _num(lb)
    if ub == math.inf:
        return f" {name} free" if lb == -math.inf else f" {name} >= {lo}"
    return f" {lo} <= {name} <= {_num(ub)}"


def write_lp_text(problem: MilpProblem) -> str:
    """Serialize ``problem``.

    Every continuous variable gets a line in ``Bounds``; binaries appear there
    only when fixed or otherwise narrowed from [0, 1].
    """
    lines = [f"\\ Problem: {problem.name}", "Maximize" if problem.sense == "max" else "Minimize"]
    obj = _expr(problem, problem.objective)
    if obj:
        lines.append(" obj: " + obj[0])
        lines.extend("   " + extra for extra in obj[1:])
    else:
        lines.append(" obj:")
    lines.append("Subject To")
    for con in problem.constraints:
        expr = _expr(problem, con.terms) or ["0"]
        head = f" {con.name}: " + expr[0]
        body = [head] + ["   " + e for e in expr[1:]]
        body[-1] += f" {con.sense} {_num(con.rhs)}"
        lines.extend(body)
    lines.append("Bounds")
    binaries, generals = [], []
    for v in problem.variables:
        if v.kind == BINARY:
            binaries.append(v.name)
            if (v.lb, v.ub) != (0.0, 1.0):
                lines.append(_bound_line(v.name, v.lb, v.ub))
        else:
            if v.kind == INTEGER:
                generals.append(v.name)
            lines.append(_bound_line(v.name, v.lb, v.ub))
    lines.append("Binaries")
    lines.extend(f" {name}" for name in binaries)
    if generals:
        lines.append("Generals")
        lines.extend(f" {name}" for name in generals)
    lines.append("End")
    return "\n".join(lines) + "\n"


_SECTION = re.compile(
    r"^(maximi[sz]e|maximum|max|minimi[sz]e|minimum|min|subject\s+to|such\s+that|s\.t\.|st|"
    r"bounds?|binar(?:y|ies)|bin|generals?|gen|end)$",
    re.IGNORECASE,
)
_TOKEN = re.compile(r"\s*([<>]=?|=[<>]?|[+-]|[A-Za-z_][\w.\[\]]*|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|-?inf(?:inity)?)",
                    re.IGNORECASE)


def _parse_expr(text: str, where: str) -> tuple[list[tuple[str, float]], float]:
    """Parse ``±c x ± c y ...``; returns (terms, constant)."""
    terms: list[tuple[str, float]] = []
    const = 0.0
    sign, coef = 1.0, None
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SolverError(f"{where}: cannot parse near {text[pos:pos + 20]!r}", code="LP_PARSE_ERROR")
        tok = m.group(1)
        pos = m.end()
        if tok in "+-":
            if coef is not None:
                const += sign * coef
                coef = None
            sign = -1.0 if tok == "-" else 1.0
        elif re.match(r"^[\d.]", tok):
            coef = float(tok) if coef is None else coef * float(tok)
        else:
            terms.append((tok, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
        while pos < len(text) and text[pos].isspace():
            pos += 1
    if coef is not None:
        const += sign * coef
    return terms, const


def _logical_entries(lines: list[str]) -> list[str]:
    """Join continuation lines: a new entry starts at ``name:`` or after a sense+rhs."""
    entries: list[str] = []
    buf = ""
    for line in lines:
        if re.match(r"^\s*[A-Za-z_][\w.\[\]]*\s*:", line) and buf:
            entries.append(buf)
            buf = ""
        buf = (buf + " " + line.strip()).strip()
        if re.search(r"(<=|>=|=<|=>|<|>|=)\s*[+-]?(\d|\.|inf)[^\s]*\s*$", buf, re.IGNORECASE):
            entries.append(buf)
            buf = ""
    if buf:
        entries.append(buf)
    return entries


def _norm_sense(s: str) -> str:
    return {"<": "<=", "=<": "<=", "<=": "<=", ">": ">=", "=>": ">=", ">=": ">=", "=": "="}[s]


def _float(tok: str) -> float:
    t = tok.lower()
    if t in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    return float(tok)


def read_lp_text(text: str) -> MilpProblem:
    """Parse LP text produced by :func:`write_lp_text` (and similar hand-written files)."""
    sections: dict[str, list[str]] = {"obj": [], "st": [], "bounds": [], "bin": [], "gen": []}
    sense = "max"
    name = "resilix"
    current = None
    for raw in text.splitlines():
        if raw.startswith("\\"):
            m = re.match(r"\\\s*Problem:\s*(\S+)", raw)
            if m:
                name = m.group(1)
            continue
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if _SECTION.match(key):
            if key.startswith("max"):
                current, sense = "obj", "max"
            elif key.startswith("min"):
                current, sense = "obj", "min"
            elif key.startswith(("subject", "such", "s.t", "st")):
                current = "st"
            elif key.startswith("bound"):
                current = "bounds"
            elif key.startswith("bin"):
                current = "bin"
            elif key.startswith("gen"):
                current = "gen"
            else:
                current = None
            continue
        if current is None:
            raise SolverError(f"content outside any section: {raw!r}", code="LP_PARSE_ERROR")
        sections[current].append(line)

    order: list[str] = []
    seen: set[str] = set()

    def touch(n: str) -> None:
        if n not in seen:
            seen.add(n)
            order.append(n)

    obj_text = " ".join(l.strip() for l in sections["obj"])
    obj_text = re.sub(r"^[A-Za-z_][\w.]*\s*:", "", obj_text).strip()
    obj_terms, _ = _parse_expr(obj_text, "objective")
    for n, _c in obj_terms:
        touch(n)

    cons = []
    for k, entry in enumerate(_logical_entries(sections["st"])):
        m = re.match(r"^\s*([A-Za-z_][\w.\[\]]*)\s*:(.*)$", entry)
        cname, body = (m.group(1), m.group(2)) if m else (f"c{k}", entry)
        sm = re.search(r"(<=|>=|=<|=>|<|>|=)", body)
        if not sm:
            raise SolverError(f"constraint {cname}: missing sense", code="LP_PARSE_ERROR")
        lhs, rhs_text = body[:sm.start()], body[sm.end():]
        terms, const = _parse_expr(lhs, cname)
        for n, _c in terms:
            touch(n)
        cons.append((cname, terms, _norm_sense(sm.group(1)), _float(rhs_text.strip()) - const))

    bounds: dict[str, list[float]] = {}
    for line in sections["bounds"]:
        s = line.strip()
        toks = re.split(r"\s*(<=|>=|=<|=>|<|>|=)\s*", s)
        if len(toks) == 1:
            parts = s.split()
            if len(parts) == 2 and parts[1].lower() == "free":
                touch(parts[0])
                bounds[parts[0]] = [-math.inf, math.inf]
                continue
            raise SolverError(f"bad bound line {s!r}", code="LP_PARSE_ERROR")
        if len(toks) == 5:
            lo, _, var, _, hi = toks
            touch(var)
            bounds[var] = [_float(lo), _float(hi)]
        elif len(toks) == 3:
            a, op, b = toks
            op = _norm_sense(op)
            if re.match(r"^[A-Za-z_]", a) and not re.match(r"^[+-]?inf", a, re.IGNORECASE):
                var, val = a, _float(b)
            else:
                var, val = b, _float(a)
                op = {"<=": ">=", ">=": "<=", "=": "="}[op]
            touch(var)
            lohi = bounds.setdefault(var, [0.0, math.inf])
            if op == "=":
                lohi[0] = lohi[1] = val
            elif op == ">=":
                lohi[0] = val
            else:
                lohi[1] = val
        else:
            raise SolverError(f"bad bound line {s!r}", code="LP_PARSE_ERROR")

    binset, genset = set(), set()
    for line in sections["bin"]:
        for n in line.split():
            touch(n)
            binset.add(n)
    for line in sections["gen"]:
        for n in line.split():
            touch(n)
            genset.add(n)

    b = ProblemBuilder(name=name, sense=sense)
    ids = {}
    for n in order:
        kind = BINARY if n in binset else INTEGER if n in genset else CONTINUOUS
        lo, hi = bounds.get(n, [0.0, 1.0] if kind == BINARY else [0.0, math.inf])
        ids[n] = b.add_raw_var(Variable(n, lo, hi, kind))
    b.set_objective((ids[n], c) for n, c in obj_terms)
    for cname, terms, s, rhs in cons:
        b.add_constraint(((ids[n], c) for n, c in terms), s, rhs, name=cname)
    return b.build()


def parse_solution_text(text: str, problem: MilpProblem) -> tuple[np.ndarray, float | None]:
    """Values per variable id (missing names default to 0) and the reported objective."""
    ids = problem.name_to_id
    x = np.zeros(problem.n_vars)
    reported = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolverError(f"line {lineno}: expected 'name value', got {raw!r}", code="SOLUTION_PARSE_ERROR")
        key, val = parts
        try:
            num = float(val)
        except ValueError:
            raise SolverError(f"line {lineno}: bad number {val!r}", code="SOLUTION_PARSE_ERROR") from None
        if key == "=obj=":
            reported = num
            continue
        if key not in ids:
            raise SolverError(f"line {lineno}: unknown variable {key!r}", code="SOLUTION_PARSE_ERROR")
        x[ids[key]] = num
    return x, reported


def format_solution_text(problem: MilpProblem, x: np.ndarray, objective: float | None = None) -> str:
    lines = ["# resilix solution"]
    if objective is not None:
        lines.append(f"=obj= {objective:.17g}")
    lines.extend(f"{v.name} {float(val):.17g}" for v, val in zip(problem.variables, x))
    return "\n".join(lines) + "\n"
