"""JSON spec files, the expression grammar for coefficients, and run configuration.

Expressions use ``+ - * / ^`` and parentheses over the variable ``z`` and
Gaussian-rational literals ``\\d+(/\\d+)?i?`` (``i`` alone is the imaginary
unit). A literal ``p/q`` binds tighter than any operator, so ``2/3^2`` is
``(2/3)^2``; the serializer never produces that ambiguity. Exponents are
integer literals, optionally negative.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from . import SCHEMA
from .exact import GaussianRational, Poly, RatFunc, format_gaussian, format_ratfunc
from .perturbative import ODESpec, SpecError

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?i?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))")


class SpecParseError(ValueError):
    """Malformed spec file or expression; carries a 1-based line and column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 field: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.field = field
        where = f"line {line}, column {column}: " if line is not None else ""
        what = f"{field}: " if field else ""
        super().__init__(f"{where}{what}{message}")


class ExpressionError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    text = text.replace("−", "-")
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = len(text[pos:]) - len(text[pos:].lstrip()) + pos
            raise ExpressionError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


def _literal(tok: str) -> GaussianRational:
    imag = tok.endswith("i")
    body = tok[:-1] if imag else tok
    q = Fraction(body)
    return GaussianRational(0, q) if imag else GaussianRational(q)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def take(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def expect(self, value: str):
        kind, v, pos = self.take()
        if v != value:
            raise ExpressionError(f"expected {value!r}, found {v or 'end of input'!r}", pos)

    def parse(self) -> RatFunc:
        r = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected {v!r}", pos)
        return r

    def expr(self) -> RatFunc:
        r = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            r = r + rhs if op == "+" else r - rhs
        return r

    def term(self) -> RatFunc:
        r = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                r = r * rhs
            else:
                if rhs.is_zero():
                    raise ExpressionError("division by zero", pos)
                r = r / rhs
        return r

    def unary(self) -> RatFunc:
        if self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            r = self.unary()
            return -r if op == "-" else r
        return self.power()

    def power(self) -> RatFunc:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, v, pos = self.take()
            if kind != "num" or not v.isdigit():
                raise ExpressionError("exponent must be an integer literal", pos)
            k = int(v)
            if sign < 0:
                if base.is_zero():
                    raise ExpressionError("division by zero", pos)
                return base.reciprocal() ** k
            return base ** k
        return base

    def atom(self) -> RatFunc:
        kind, v, pos = self.take()
        if kind == "num":
            return RatFunc.const(_literal(v))
        if kind == "name":
            if v == "z":
                return RatFunc.z()
            if v == "i":
                return RatFunc.const(GaussianRational(0, 1))
            raise ExpressionError(f"unknown name {v!r}", pos)
        if v == "(":
            r = self.expr()
            self.expect(")")
            return r
        raise ExpressionError(f"unexpected {v or 'end of input'!r}", pos)


def parse_expression(text: str) -> RatFunc:
    """Exact rational function of z from an expression string."""
    if not isinstance(text, str):
        raise ExpressionError("expression must be a string", 0)
    return _Parser(text).parse()


def parse_coefficient(value: Any) -> RatFunc:
    """A coefficient given as an expression string, an integer, or an ascending coefficient list."""
    if isinstance(value, bool):
        raise ExpressionError("booleans are not coefficients", 0)
    if isinstance(value, int):
        return RatFunc.const(value)
    if isinstance(value, str):
        return parse_expression(value)
    if isinstance(value, list):
        cs = []
        for c in value:
            r = parse_coefficient(c)
            if not r.is_const():
                raise ExpressionError("list entries must be constants", 0)
            cs.append(r.num.coeffs[0] / r.den.coeffs[0] if not r.is_zero() else GaussianRational(0))
        return RatFunc.coerce(Poly(cs))
    raise ExpressionError(f"cannot read a coefficient from {type(value).__name__}", 0)


def _locate(text: str, needle: str, offset: int = 0) -> tuple[int, int] | None:
    """(line, column) of a JSON string value plus an offset into it."""
    enc = json.dumps(needle)
    idx = text.find(enc)
    if idx < 0:
        return None
    idx += 1 + offset
    line = text.count("\n", 0, idx) + 1
    col = idx - (text.rfind("\n", 0, idx) + 1) + 1
    return line, col


@dataclass(frozen=True)
class SpecFile:
    order: int
    coeffs: tuple
    forcing: tuple = ()
    precision_bits: int | None = None
    series_order: int = 200
    independent: str = "z"

    def to_spec(self) -> ODESpec:
        return ODESpec(self.coeffs, self.forcing, self.independent)

    @classmethod
    def from_spec(cls, spec: ODESpec, precision_bits: int | None = None, series_order: int = 200) -> "SpecFile":
        return cls(spec.order, spec.coeffs, spec.forcing, precision_bits, series_order, spec.independent)

    def to_json(self) -> dict:
        out = {"schema": SCHEMA, "order": self.order,
               "coeffs": [format_ratfunc(c) for c in self.coeffs],
               "forcing": [format_ratfunc(f) for f in self.forcing],
               "series_order": self.series_order}
        if self.precision_bits is not None:
            out["precision_bits"] = self.precision_bits
        if self.independent != "z":
            out["independent"] = self.independent
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SpecFile":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecParseError(exc.msg, exc.lineno, exc.colno) from exc
        if not isinstance(doc, dict):
            raise SpecParseError("top level must be an object", 1, 1)
        if "coeffs" not in doc:
            raise SpecParseError("missing field", field="coeffs")

        def read(name: str, items) -> tuple:
            if not isinstance(items, list):
                raise SpecParseError("must be a list", field=name)
            out = []
            for k, item in enumerate(items):
                try:
                    out.append(parse_coefficient(item))
                except ExpressionError as exc:
                    loc = _locate(text, item, exc.offset) if isinstance(item, str) else None
                    line, col = loc if loc else (None, None)
                    raise SpecParseError(exc.message, line, col, f"{name}[{k}]") from exc
            return tuple(out)

        coeffs = read("coeffs", doc["coeffs"])
        forcing = read("forcing", doc.get("forcing", []))
        order = doc.get("order", len(coeffs) - 1)
        if order != len(coeffs) - 1:
            raise SpecParseError(f"order {order} does not match {len(coeffs)} coefficients", field="order")
        prec = doc.get("precision_bits")
        terms = doc.get("series_order", 200)
        if prec is not None and (not isinstance(prec, int) or prec < 64):
            raise SpecParseError("must be an integer >= 64", field="precision_bits")
        if not isinstance(terms, int) or terms < 1:
            raise SpecParseError("must be a positive integer", field="series_order")
        out = cls(order, coeffs, forcing, prec, terms, doc.get("independent", "z"))
        try:
            out.to_spec()
        except SpecError as exc:
            raise SpecParseError(str(exc)) from exc
        return out


def load_spec(path) -> SpecFile:
    with open(path, encoding="utf-8") as fh:
        return SpecFile.loads(fh.read())


@dataclass
class RunConfig:
    command: str
    spec: str | None = None
    out: str = "."
    precision: int = 256
    terms: int | None = None
    pade: tuple | None = None
    z: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    domain: tuple | None = None
    tol: float = 1e-6

    def __post_init__(self):
        if self.precision < 64:
            raise ValueError("precision must be at least 64 bits")
        if not self.tol > 0:
            raise ValueError("tolerances must be positive")

    def to_json(self) -> dict:
        d = asdict(self)
        d["z"] = [str(x) for x in self.z]
        d["eps"] = [str(x) for x in self.eps]
        return d

    def comment(self) -> str:
        return "# " + json.dumps({"schema": SCHEMA, "config": self.to_json()}, sort_keys=True)


def parse_complex_arg(text: str) -> complex:
    """``RE,IM`` or a single real number."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(f"expected RE,IM, got {text!r}")


def parse_number(text: str):
    """Real or rational number, e.g. ``0.05`` or ``1/20``, kept exact."""
    return Fraction(text.strip())


def format_value(c: GaussianRational) -> str:
    return format_gaussian(c)


def ratfunc_strings(rs: Sequence[RatFunc]) -> list[str]:
    return [format_ratfunc(r) for r in rs]
