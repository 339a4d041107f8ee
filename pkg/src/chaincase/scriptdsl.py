"""Small statement language for scripts, guards and task data mappings.

Programs are lists of assignments over typed process variables:

    t2Field = _t2Field;
    count = count + 1;

Guard entries are single boolean expressions. Task annotations follow

    (bool t1Field) : (bool _t2Field) -> { t2Field = _t2Field; }

where the left list declares exported variables (read at check-out) and the
right list declares import parameters bound from the check-in payload.

Three value types exist: bool, int (signed 64-bit, overflow and division by
zero fail the transaction) and text. Operators: ! && || == != < <= > >= and
+ - * / (+ also concatenates text). Programs are type-checked against the
declared variables before a model registers; evaluation failures surface as
SCRIPT_ERROR reverts.
"""

from __future__ import annotations

from dataclasses import dataclass

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1

TYPES = ("bool", "int", "text")


class ScriptParseError(ValueError):
    pass


class ScriptTypeError(ValueError):
    pass


class ScriptError(RuntimeError):
    """Runtime evaluation failure (overflow, zero division, bad payload)."""


# -- tokens ------------------------------------------------------------------

_PUNCT = ("&&", "||", "==", "!=", "<=", ">=", "->",
          "(", ")", "{", "}", ",", ";", ":", "=", "<", ">",
          "!", "+", "-", "*", "/")


@dataclass(frozen=True)
class Token:
    kind: str     # "ident" | "int" | "text" | "punct" | "eof"
    value: str
    pos: int


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(Token("ident", src[i:j], i))
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("int", src[i:j], i))
            i = j
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n and src[j] != '"':
                if src[j] == "\\" and j + 1 < n:
                    esc = src[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                else:
                    buf.append(src[j])
                    j += 1
            if j >= n:
                raise ScriptParseError(f"unterminated text literal at {i}")
            toks.append(Token("text", "".join(buf), i))
            i = j + 1
            continue
        for p in _PUNCT:
            if src.startswith(p, i):
                toks.append(Token("punct", p, i))
                i += len(p)
                break
        else:
            raise ScriptParseError(f"unexpected character {c!r} at {i}")
    toks.append(Token("eof", "", n))
    return toks


# -- AST ---------------------------------------------------------------------
# expressions: ("lit", value) ("var", name) ("un", op, e) ("bin", op, l, r)
# statements:  ("assign", name, expr)


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> Token:
        tok = self.next()
        if tok.value != value:
            raise ScriptParseError(f"expected {value!r}, got {tok.value!r} at {tok.pos}")
        return tok

    def at(self, value: str) -> bool:
        return self.peek().value == value and self.peek().kind in ("punct", "ident")

    # precedence climbing
    def expression(self):
        return self.binary(0)

    _LEVELS = [("||",), ("&&",), ("==", "!=", "<", "<=", ">", ">="),
               ("+", "-"), ("*", "/")]

    def binary(self, level: int):
        if level == len(self._LEVELS):
            return self.unary()
        node = self.binary(level + 1)
        while self.peek().kind == "punct" and self.peek().value in self._LEVELS[level]:
            op = self.next().value
            rhs = self.binary(level + 1)
            node = ("bin", op, node, rhs)
        return node

    def unary(self):
        tok = self.peek()
        if tok.kind == "punct" and tok.value in ("!", "-"):
            self.next()
            return ("un", tok.value, self.unary())
        return self.primary()

    def primary(self):
        tok = self.next()
        if tok.kind == "int":
            value = int(tok.value)
            if value > INT_MAX:
                raise ScriptParseError(f"integer literal out of range at {tok.pos}")
            return ("lit", value)
        if tok.kind == "text":
            return ("lit", tok.value)
        if tok.kind == "ident":
            if tok.value == "true":
                return ("lit", True)
            if tok.value == "false":
                return ("lit", False)
            return ("var", tok.value)
        if tok.value == "(":
            node = self.expression()
            self.expect(")")
            return node
        raise ScriptParseError(f"unexpected token {tok.value!r} at {tok.pos}")

    def statements(self, closing: str | None = None):
        stmts = []
        while True:
            tok = self.peek()
            if tok.kind == "eof" or (closing and tok.value == closing):
                return stmts
            name = self.next()
            if name.kind != "ident":
                raise ScriptParseError(f"expected variable name at {name.pos}")
            self.expect("=")
            expr = self.expression()
            self.expect(";")
            stmts.append(("assign", name.value, expr))


def parse_program(src: str) -> list:
    p = _Parser(tokenize(src))
    stmts = p.statements()
    if p.peek().kind != "eof":
        raise ScriptParseError(f"trailing input at {p.peek().pos}")
    return stmts


def parse_expression(src: str):
    p = _Parser(tokenize(src))
    expr = p.expression()
    if p.peek().kind != "eof":
        raise ScriptParseError(f"trailing input at {p.peek().pos}")
    return expr


def parse_declarations(src: str) -> list[tuple[str, str]]:
    """Variable declaration blocks: zero or more `type name;` entries."""
    p = _Parser(tokenize(src))
    decls = []
    while p.peek().kind != "eof":
        t = p.next()
        if t.kind != "ident" or t.value not in TYPES:
            raise ScriptParseError(f"expected a type at {t.pos}")
        name = p.next()
        if name.kind != "ident" or name.value in TYPES or name.value in ("true", "false"):
            raise ScriptParseError(f"expected a variable name at {name.pos}")
        p.expect(";")
        decls.append((t.value, name.value))
    return decls


@dataclass
class Annotation:
    exports: list[tuple[str, str]]
    imports: list[tuple[str, str]]
    body: str                       # statement block source


def parse_annotation(src: str) -> Annotation:
    """`(type name, ...) : (type name, ...) -> { statements }`"""
    p = _Parser(tokenize(src))
    exports = _param_list(p)
    p.expect(":")
    imports = _param_list(p)
    p.expect("->")
    open_tok = p.expect("{")
    # cut the raw body text back out so programs stay stored as source
    stmts_start = open_tok.pos + 1
    p.statements(closing="}")
    close_tok = p.expect("}")
    if p.peek().kind != "eof":
        raise ScriptParseError(f"trailing input at {p.peek().pos}")
    return Annotation(exports=exports, imports=imports,
                      body=src[stmts_start:close_tok.pos])


def _param_list(p: _Parser) -> list[tuple[str, str]]:
    p.expect("(")
    params = []
    if not p.at(")"):
        while True:
            t = p.next()
            if t.kind != "ident" or t.value not in TYPES:
                raise ScriptParseError(f"expected a type at {t.pos}")
            name = p.next()
            if name.kind != "ident":
                raise ScriptParseError(f"expected a name at {name.pos}")
            params.append((t.value, name.value))
            if p.at(","):
                p.next()
            else:
                break
    p.expect(")")
    seen = set()
    for _, name in params:
        if name in seen:
            raise ScriptParseError(f"duplicate parameter {name!r}")
        seen.add(name)
    return params


# -- type checking -----------------------------------------------------------

_CMP_OPS = ("<", "<=", ">", ">=")
_EQ_OPS = ("==", "!=")
_ARITH_OPS = ("-", "*", "/")


def check_expression(expr, types: dict[str, str]) -> str:
    tag = expr[0]
    if tag == "lit":
        v = expr[1]
        if v is True or v is False:
            return "bool"
        return "int" if isinstance(v, int) else "text"
    if tag == "var":
        t = types.get(expr[1])
        if t is None:
            raise ScriptTypeError(f"unknown variable {expr[1]!r}")
        return t
    if tag == "un":
        t = check_expression(expr[2], types)
        if expr[1] == "!":
            if t != "bool":
                raise ScriptTypeError("! needs a bool operand")
            return "bool"
        if t != "int":
            raise ScriptTypeError("unary - needs an int operand")
        return "int"
    _, op, lhs, rhs = expr
    lt = check_expression(lhs, types)
    rt = check_expression(rhs, types)
    if op in ("&&", "||"):
        if lt != "bool" or rt != "bool":
            raise ScriptTypeError(f"{op} needs bool operands")
        return "bool"
    if op in _EQ_OPS:
        if lt != rt:
            raise ScriptTypeError(f"{op} across {lt} and {rt}")
        return "bool"
    if op in _CMP_OPS:
        if lt != "int" or rt != "int":
            raise ScriptTypeError(f"{op} needs int operands")
        return "bool"
    if op == "+":
        if lt == rt == "int":
            return "int"
        if lt == rt == "text":
            return "text"
        raise ScriptTypeError(f"+ across {lt} and {rt}")
    if lt != "int" or rt != "int":
        raise ScriptTypeError(f"{op} needs int operands")
    return "int"


def check_program(stmts, var_types: dict[str, str],
                  param_types: dict[str, str] | None = None) -> None:
    scope = dict(var_types)
    if param_types:
        for name, t in param_types.items():
            scope[name] = t
    for _, name, expr in stmts:
        if name not in var_types:
            if param_types and name in param_types:
                raise ScriptTypeError(f"cannot assign to parameter {name!r}")
            raise ScriptTypeError(f"assignment to undeclared variable {name!r}")
        t = check_expression(expr, scope)
        if t != var_types[name]:
            raise ScriptTypeError(f"{name} is {var_types[name]}, expression is {t}")


# -- evaluation --------------------------------------------------------------

def _wrap_int(v: int) -> int:
    if v < INT_MIN or v > INT_MAX:
        raise ScriptError("integer overflow")
    return v


def eval_expression(expr, vars: dict, params: dict | None = None):
    tag = expr[0]
    if tag == "lit":
        return expr[1]
    if tag == "var":
        name = expr[1]
        if params is not None and name in params:
            return params[name]
        if name in vars:
            return vars[name]
        raise ScriptError(f"unknown variable {name!r}")
    if tag == "un":
        v = eval_expression(expr[2], vars, params)
        return (not v) if expr[1] == "!" else _wrap_int(-v)
    _, op, lhs, rhs = expr
    if op == "&&":
        return bool(eval_expression(lhs, vars, params)) and bool(eval_expression(rhs, vars, params))
    if op == "||":
        return bool(eval_expression(lhs, vars, params)) or bool(eval_expression(rhs, vars, params))
    lv = eval_expression(lhs, vars, params)
    rv = eval_expression(rhs, vars, params)
    if op == "==":
        return lv == rv
    if op == "!=":
        return lv != rv
    if op == "<":
        return lv < rv
    if op == "<=":
        return lv <= rv
    if op == ">":
        return lv > rv
    if op == ">=":
        return lv >= rv
    if op == "+":
        if isinstance(lv, str):
            return lv + rv
        return _wrap_int(lv + rv)
    if op == "-":
        return _wrap_int(lv - rv)
    if op == "*":
        return _wrap_int(lv * rv)
    # truncating division, like the usual contract semantics
    if rv == 0:
        raise ScriptError("division by zero")
    q = abs(lv) // abs(rv)
    return _wrap_int(q if (lv >= 0) == (rv >= 0) else -q)


def eval_program(stmts, vars: dict, params: dict | None = None) -> dict:
    """Run assignments; returns the ordered {name: value} updates."""
    updates: dict = {}
    scope = dict(vars)
    for _, name, expr in stmts:
        value = eval_expression(expr, scope, params)
        scope[name] = value
        updates[name] = value
    return updates


def coerce_payload(signature: list[tuple[str, str]], payload: dict) -> dict:
    """Validate a check-in payload against an import signature."""
    if not isinstance(payload, dict):
        raise ScriptError("payload must be a mapping")
    out = {}
    for t, name in signature:
        if name not in payload:
            raise ScriptError(f"missing payload field {name!r}")
        v = payload[name]
        if t == "bool":
            if not isinstance(v, bool):
                raise ScriptError(f"{name} must be bool")
        elif t == "int":
            if isinstance(v, bool) or not isinstance(v, int) or not INT_MIN <= v <= INT_MAX:
                raise ScriptError(f"{name} must be a 64-bit int")
        else:
            if not isinstance(v, str):
                raise ScriptError(f"{name} must be text")
        out[name] = v
    extra = set(payload) - {n for _, n in signature}
    if extra:
        raise ScriptError(f"unexpected payload fields: {sorted(extra)}")
    return out
