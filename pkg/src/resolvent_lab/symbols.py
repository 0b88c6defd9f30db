"""Symbol expressions on phase space: classical resolvent factors, Weyl symbols,
constants, products and integer powers.

Grammar::

    expr    := term { "*" term } ;
    term    := factor [ "^" INT ] ;
    factor  := "R" "(" complex ";" vector ")" | "W" "(" vector ")" | complex | "(" expr ")" ;
    vector  := "[" complex { "," complex } "]" ;
    complex := REAL [ ("+"|"-") REAL "i" ] | REAL "i" ;

``R(lam; z)`` is the function ``w -> (lam - 2i sigma_t(w, z))^-1`` and ``W(z)`` is
``w -> exp(|z|_t^2 / 2 + 2i sigma_t(w, z))``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .fock import DimensionError, WeightVector, as_phase, norm_t_sq


class SymbolSyntaxError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}")


class SymbolDomainError(ValueError):
    """Parameter outside the admissible domain (e.g. Re lambda = 0)."""


class UnsupportedForm(ValueError):
    """Expression is not a pure product of resolvent factors."""


def _vec(z) -> tuple:
    return tuple(complex(x) for x in np.atleast_1d(z))


@dataclass(frozen=True)
class Constant:
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True)
class ResolventFactor:
    lam: complex
    z: tuple
    k: int = 1

    def __post_init__(self):
        lam = complex(self.lam)
        if lam.real == 0.0:
            raise SymbolDomainError(f"lambda = {lam} lies on the imaginary axis")
        if int(self.k) < 1:
            raise SymbolDomainError("resolvent exponent must be >= 1")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "z", _vec(self.z))
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class WeylSymbol:
    z: tuple

    def __post_init__(self):
        object.__setattr__(self, "z", _vec(self.z))


@dataclass(frozen=True)
class Product:
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("empty product")


@dataclass(frozen=True)
class Power:
    base: object
    k: int

    def __post_init__(self):
        if int(self.k) < 1:
            raise SymbolDomainError("power exponent must be a positive integer")
        object.__setattr__(self, "k", int(self.k))


SymbolExpr = Constant | ResolventFactor | WeylSymbol | Product | Power


# ---------------------------------------------------------------- parsing

_REAL = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN = re.compile(rf"\s*(?:(?P<num>{_REAL})|(?P<sym>[RW()\[\];,*^+\-i]))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                j = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise SymbolSyntaxError(f"unexpected character {text[j]!r}", j, text)
            kind = "num" if m.group("num") is not None else m.group("sym")
            self.toks.append((kind, m.group(kind if kind == "num" else "sym"), m.start(m.lastgroup)))
            pos = m.end()
        self.toks.append(("eof", "", len(text)))
        self.i = 0

    def peek(self, off=0):
        return self.toks[self.i + off]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            want = "end of input" if kind == "eof" else repr(kind)
            got = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise SymbolSyntaxError(f"expected {want}, found {got}", tok[2], self.text)
        self.i += 1
        return tok

    def expr(self):
        terms = [self.term()]
        while self.peek()[0] == "*":
            self.take("*")
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Product(tuple(terms))

    def term(self):
        f = self.factor()
        if self.peek()[0] == "^":
            self.take("^")
            tok = self.take("num")
            if not re.fullmatch(r"\d+", tok[1]) or int(tok[1]) < 1:
                raise SymbolSyntaxError("exponent must be a positive integer", tok[2], self.text)
            return Power(f, int(tok[1]))
        return f

    def factor(self):
        kind, _, pos = self.peek()
        if kind == "R":
            self.take("R")
            self.take("(")
            lam = self.complex()
            self.take(";")
            z = self.vector()
            self.take(")")
            try:
                return ResolventFactor(lam, z)
            except SymbolDomainError as exc:
                raise SymbolDomainError(f"{exc} (position {pos})") from None
        if kind == "W":
            self.take("W")
            self.take("(")
            z = self.vector()
            self.take(")")
            return WeylSymbol(z)
        if kind == "(":
            self.take("(")
            e = self.expr()
            self.take(")")
            return e
        if kind in ("num", "-", "+"):
            return Constant(self.complex())
        got = "end of input" if kind == "eof" else repr(self.peek()[1])
        raise SymbolSyntaxError(f"expected a factor, found {got}", pos, self.text)

    def real(self):
        sign = 1.0
        if self.peek()[0] in "+-" and self.peek()[0] != "eof":
            sign = -1.0 if self.take()[0] == "-" else 1.0
        return sign * float(self.take("num")[1])

    def complex(self):
        a = self.real()
        if self.peek()[0] == "i":
            self.take("i")
            return complex(0.0, a)
        if self.peek()[0] in ("+", "-") and self.peek(1)[0] == "num" and self.peek(2)[0] == "i":
            s = -1.0 if self.take()[0] == "-" else 1.0
            b = float(self.take("num")[1])
            self.take("i")
            return complex(a, s * b)
        return complex(a, 0.0)

    def vector(self):
        self.take("[")
        out = [self.complex()]
        while self.peek()[0] == ",":
            self.take(",")
            out.append(self.complex())
        self.take("]")
        return tuple(out)


def parse_symbol(text: str, n: int | None = None) -> SymbolExpr:
    p = _Parser(text)
    expr = p.expr()
    p.take("eof")
    if n is not None:
        check_dimension(expr, n)
    return expr


def check_dimension(expr, n: int):
    for node in walk(expr):
        if isinstance(node, (ResolventFactor, WeylSymbol)) and len(node.z) != n:
            raise DimensionError(f"vector {node.z} has {len(node.z)} entries, expected {n}")


def walk(expr):
    yield expr
    if isinstance(expr, Product):
        for f in expr.factors:
            yield from walk(f)
    elif isinstance(expr, Power):
        yield from walk(expr.base)


# ---------------------------------------------------------------- printing

def _fmt_real(x: float) -> str:
    return repr(float(x))


def format_complex(c: complex) -> str:
    c = complex(c)
    re_, im = c.real, c.imag
    if im == 0.0 and math.copysign(1.0, im) > 0:
        return _fmt_real(re_)
    if re_ == 0.0 and math.copysign(1.0, re_) > 0:
        return f"{_fmt_real(im)}i"
    sign = "-" if math.copysign(1.0, im) < 0 else "+"
    return f"{_fmt_real(re_)}{sign}{_fmt_real(abs(im))}i"


def _fmt_vec(z) -> str:
    return "[" + ", ".join(format_complex(x) for x in z) + "]"


def to_text(expr) -> str:
    if isinstance(expr, Constant):
        return format_complex(expr.value)
    if isinstance(expr, ResolventFactor):
        s = f"R({format_complex(expr.lam)}; {_fmt_vec(expr.z)})"
        return s if expr.k == 1 else f"{s}^{expr.k}"
    if isinstance(expr, WeylSymbol):
        return f"W({_fmt_vec(expr.z)})"
    if isinstance(expr, Product):
        return " * ".join(f"({to_text(f)})" if isinstance(f, Product) else to_text(f)
                          for f in expr.factors)
    if isinstance(expr, Power):
        b = expr.base
        inner = to_text(b)
        if isinstance(b, (Product, Power, Constant)) or (isinstance(b, ResolventFactor) and b.k > 1):
            inner = f"({inner})"
        return f"{inner}^{expr.k}"
    raise TypeError(f"not a symbol expression: {expr!r}")


# ---------------------------------------------------------------- evaluation

def vectors(expr) -> list[tuple]:
    """Distinct phase vectors referenced by the expression, in first-seen order."""
    seen: dict[tuple, None] = {}
    for node in walk(expr):
        if isinstance(node, (ResolventFactor, WeylSymbol)):
            seen.setdefault(node.z, None)
    return list(seen)


def _ev(expr, sig, t):
    if isinstance(expr, Constant):
        return expr.value
    if isinstance(expr, ResolventFactor):
        return (expr.lam - 2j * sig[expr.z]) ** (-expr.k)
    if isinstance(expr, WeylSymbol):
        return np.exp(0.5 * norm_t_sq(expr.z, t) + 2j * sig[expr.z])
    if isinstance(expr, Product):
        out = 1.0 + 0j
        for f in expr.factors:
            out = out * _ev(f, sig, t)
        return out
    if isinstance(expr, Power):
        return _ev(expr.base, sig, t) ** expr.k
    raise TypeError(f"not a symbol expression: {expr!r}")


def eval_from_sigma(expr, sig: dict, t):
    """Evaluate given ``sig[z] = sigma_t(w, z)`` (scalars or equal-shape arrays)."""
    return _ev(expr, sig, t)


def sigma_batch(points: np.ndarray, z, t) -> np.ndarray:
    """``sigma_t(w, z)`` for each row w of ``points``."""
    tt = t.array if isinstance(t, WeightVector) else np.asarray(t, float)
    return np.imag(points @ (np.conj(np.asarray(z)) / tt))


def eval_batch(expr, points, t) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=np.complex128))
    sig = {z: sigma_batch(points, z, t) for z in vectors(expr)}
    val = _ev(expr, sig, t)
    return np.broadcast_to(np.asarray(val, dtype=np.complex128), (points.shape[0],)).copy()


def eval_symbol(expr, w, t) -> complex:
    tt = t if isinstance(t, WeightVector) else WeightVector(t)
    w = as_phase(w, tt.n)
    check_dimension(expr, tt.n)
    return complex(eval_batch(expr, w[None, :], tt)[0])


def resolvent_bound(expr) -> float:
    """``prod |Re lam_j|^-k_j`` for a pure resolvent product."""
    return float(np.prod([abs(lam.real) ** -k for lam, _, k in flatten_resolvents(expr)]))


# ---------------------------------------------------------------- Laplace data

def flatten_resolvents(expr) -> list[tuple[complex, tuple, int]]:
    """Ordered list of (lambda, z, k); powers of products repeat their factor sequence."""
    if isinstance(expr, ResolventFactor):
        return [(expr.lam, expr.z, expr.k)]
    if isinstance(expr, Power):
        if isinstance(expr.base, ResolventFactor):
            b = expr.base
            return [(b.lam, b.z, b.k * expr.k)]
        return flatten_resolvents(expr.base) * expr.k
    if isinstance(expr, Product):
        out = []
        for f in expr.factors:
            out.extend(flatten_resolvents(f))
        return out
    raise UnsupportedForm(f"{type(expr).__name__} is not a product of resolvent factors")


@dataclass(frozen=True)
class LaplaceDescriptor:
    m: int
    k: tuple
    lambdas: tuple
    Lam: tuple          # sign(Re lam_j) * lam_j
    z: tuple
    signs: tuple
    C: float            # constant exactly as printed: (-1)^(|k|-m) prod sign_j^k_j
    C_corrected: float  # prod sign_j^k_j, paired with zeta_j = sign_j z_j
    zeta: tuple

    @property
    def total_k(self) -> int:
        return sum(self.k)


def laplace_form(expr) -> LaplaceDescriptor:
    items = flatten_resolvents(expr)
    lams = tuple(complex(l) for l, _, _ in items)
    ks = tuple(k for _, _, k in items)
    zs = tuple(z for _, z, _ in items)
    signs = tuple(1 if l.real > 0 else -1 for l in lams)
    m = len(items)
    prod_sign = int(np.prod([s ** k for s, k in zip(signs, ks)]))
    printed = (-1) ** (sum(ks) - m) * prod_sign
    zeta = tuple(tuple(s * x for x in z) for s, z in zip(signs, zs))
    return LaplaceDescriptor(m=m, k=ks, lambdas=lams, Lam=tuple(s * l for s, l in zip(signs, lams)),
                             z=zs, signs=signs, C=float(printed), C_corrected=float(prod_sign),
                             zeta=zeta)
