"""Tiny parser for Laurent-series literals like "p^-2*(1+se) + 2*p".

Grammar: expr := term (('+'|'-') term)*; term := factor ('*' factor)*;
factor := atom ('^' signed_int)?; atom := 'p' | 'se' | int | '(' expr ')'.
`p` is the uniformizer, `se` the square root of the fixed non-square.
"""

from __future__ import annotations

import re

from .arith import LocalElem

_TOKEN = re.compile(r"\s*(p|se|\d+|\^|\*|\+|\-|\(|\))")


class ParseError(Exception):
    pass


def tokenize(s):
    out = []
    pos = 0
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m:
            if s[pos:].strip():
                raise ParseError(f"bad token at {s[pos:]!r}")
            break
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, ctx, tokens):
        self.ctx = ctx
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def eat(self, tok=None):
        got = self.peek()
        if got is None or (tok is not None and got != tok):
            raise ParseError(f"expected {tok!r}, got {got!r}")
        self.i += 1
        return got

    def expr(self):
        if self.peek() == "-":
            self.eat()
            acc = -self.term()
        else:
            acc = self.term()
        while self.peek() in ("+", "-"):
            op = self.eat()
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self):
        acc = self.factor()
        while self.peek() == "*":
            self.eat()
            acc = acc * self.factor()
        return acc

    def factor(self):
        base = self.atom()
        if self.peek() == "^":
            self.eat()
            sign = 1
            if self.peek() == "-":
                self.eat()
                sign = -1
            k = sign * int(self.eat())
            if (base - self.ctx.pi()).is_zero_known():
                return self.ctx.pi(k)
            out = self.ctx.one()
            if k < 0:
                base = base.inverse()
                k = -k
            for _ in range(k):
                out = out * base
            return out
        return base

    def atom(self):
        tok = self.peek()
        if tok == "p":
            self.eat()
            return self.ctx.pi()
        if tok == "se":
            self.eat()
            return self.ctx.se()
        if tok == "(":
            self.eat()
            out = self.expr()
            self.eat(")")
            return out
        if tok is not None and tok.isdigit():
            self.eat()
            return self.ctx.num(int(tok))
        raise ParseError(f"unexpected token {tok!r}")


def parse_local(ctx, s) -> LocalElem:
    """Parse a Laurent literal into an exact local-field element."""
    if not s or not s.strip() or s.strip() == "0":
        return ctx.zero()
    p = _Parser(ctx, tokenize(s))
    out = p.expr()
    if p.i != len(p.toks):
        raise ParseError(f"trailing tokens {p.toks[p.i:]}")
    return out
