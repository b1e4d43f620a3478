"""Surface syntax for generator definitions and qualifier formulas.

The concrete syntax is a small ML dialect.  parse_program accepts a
sequence of definitions:

    let rec genList (n : nat) : [v : int list | len(v) <= n] =
      match n with
      | 0 -> []
      | _ ->
        let x = int_gen () in
        let r = genList (n - 1) in
        x :: r

Expressions are normalized on the way in: every operator, constructor
and function application is let-bound to a fresh `_vK` name, so the
terms handed to the rest of the pipeline are in monadic normal form.
Binders are freshened to be globally distinct within a definition.

Notes on the few syntactic liberties taken:
  * `(+)` is the binary choice operator and lexes as one token.
  * `if c then a else b` is sugar for a boolean match on c.
  * a lone `()` argument means a nullary call: `int_gen ()`.
  * inside qualifiers `=` and `==` are both equality.
  * chained comparisons in qualifiers (`lo <= x <= hi`) conjoin.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import lang as T
from . import logic as L
from .typesys import CoverageType, RefinementType
from .values import LEAF, UNIT, BaseType, BOOL, INT, NAT, UNIT_T, list_of, tree_of


class ParseError(Exception):
    def __init__(self, msg, line=None, col=None):
        where = f" at {line}:{col}" if line is not None else ""
        super().__init__(f"{msg}{where}")
        self.line = line
        self.col = col


# -- lexer -------------------------------------------------------------------

_KEYWORDS = {
    "let", "rec", "in", "match", "with", "if", "then", "else", "err",
    "true", "false", "not", "forall", "exists", "mod", "Leaf", "Node",
}

_THREE = ("==>", "(+)")
_TWO = ("==", "!=", "<=", ">=", "::", "->", "||", "&&", "++", "??")
_ONE = "()[]{}|:;,.=<>+-*_"


@dataclass(frozen=True)
class Token:
    kind: str  # INT NAME KW OP EOF
    value: object
    line: int
    col: int


def tokenize(src: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        if src.startswith("(*", i):
            depth, j = 1, i + 2
            while j < n and depth:
                if src.startswith("(*", j):
                    depth += 1
                    j += 2
                elif src.startswith("*)", j):
                    depth -= 1
                    j += 2
                else:
                    if src[j] == "\n":
                        line += 1
                        col = 0
                    j += 1
            if depth:
                raise ParseError("unterminated comment", line, col)
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("INT", int(src[i:j]), line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            word = src[i:j]
            if word == "_":
                toks.append(Token("OP", "_", line, col))
            else:
                kind = "KW" if word in _KEYWORDS else "NAME"
                toks.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        m3 = src[i : i + 3]
        if m3 in _THREE:
            toks.append(Token("OP", m3, line, col))
            i += 3
            col += 3
            continue
        m2 = src[i : i + 2]
        if m2 in _TWO:
            toks.append(Token("OP", m2, line, col))
            i += 2
            col += 2
            continue
        if c in _ONE:
            toks.append(Token("OP", c, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"stray character {c!r}", line, col)
    toks.append(Token("EOF", None, line, col))
    return toks


# -- surface expression nodes -------------------------------------------------

# Tuples keep the surface tree light: ("const", v) ("var", x)
# ("app", name, [args]) ("op", op, [args]) ("let", x, rhs, body)
# ("match", scrut, [(pattern, binders, body)]) ("choice", l, r)
# ("if", c, t, e) ("err",) ("hole", hid, ctype)


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    # -- token plumbing --

    def peek(self, ahead=0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at_op(self, *vals) -> bool:
        t = self.peek()
        return t.kind == "OP" and t.value in vals

    def at_kw(self, *vals) -> bool:
        t = self.peek()
        return t.kind == "KW" and t.value in vals

    def expect_op(self, val) -> Token:
        t = self.next()
        if t.kind != "OP" or t.value != val:
            raise ParseError(f"expected {val!r}, found {t.value!r}", t.line, t.col)
        return t

    def expect_kw(self, val) -> Token:
        t = self.next()
        if t.kind != "KW" or t.value != val:
            raise ParseError(f"expected {val!r}, found {t.value!r}", t.line, t.col)
        return t

    def expect_name(self) -> str:
        t = self.next()
        if t.kind != "NAME":
            raise ParseError(f"expected a name, found {t.value!r}", t.line, t.col)
        return t.value

    def fail(self, msg):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # -- types --

    def parse_base(self) -> BaseType:
        t = self.next()
        scalars = {"int": INT, "nat": NAT, "bool": BOOL, "unit": UNIT_T}
        if t.kind != "NAME" or t.value not in scalars:
            raise ParseError(f"expected a base type, found {t.value!r}", t.line, t.col)
        b = scalars[t.value]
        while self.peek().kind == "NAME" and self.peek().value in ("list", "tree"):
            w = self.next().value
            b = list_of(b) if w == "list" else tree_of(b)
        return b

    def parse_ctype(self) -> CoverageType:
        self.expect_op("[")
        bound = self.expect_name()
        self.expect_op(":")
        base = self.parse_base()
        self.expect_op("|")
        qual = self.parse_prop()
        self.expect_op("]")
        return CoverageType(bound, base, qual)

    def parse_rtype(self, default_bound: str) -> RefinementType:
        if self.at_op("{"):
            self.next()
            bound = self.expect_name()
            self.expect_op(":")
            base = self.parse_base()
            self.expect_op("|")
            qual = self.parse_prop()
            self.expect_op("}")
            return RefinementType(bound, base, qual)
        base = self.parse_base()
        return RefinementType(default_bound, base, L.TRUE)

    # -- qualifier formulas --

    def parse_prop(self):
        return self.p_implies()

    def p_implies(self):
        lhs = self.p_or()
        if self.at_op("==>"):
            self.next()
            return L.Implies(lhs, self.p_implies())
        return lhs

    def p_or(self):
        parts = [self.p_and()]
        while self.at_op("||"):
            self.next()
            parts.append(self.p_and())
        return parts[0] if len(parts) == 1 else L.disj(parts)

    def p_and(self):
        parts = [self.p_not()]
        while self.at_op("&&"):
            self.next()
            parts.append(self.p_not())
        return parts[0] if len(parts) == 1 else L.conj(parts)

    def p_not(self):
        if self.at_kw("not"):
            self.next()
            return L.Not(self.p_not())
        if self.at_kw("forall", "exists"):
            kw = self.next().value
            var = self.expect_name()
            self.expect_op(":")
            base = self.parse_base()
            self.expect_op(".")
            body = self.p_implies()
            return (L.Forall if kw == "forall" else L.Exists)(var, base, body)
        return self.p_cmp()

    _CMP = ("==", "=", "!=", "<", "<=", ">", ">=")

    def p_cmp(self):
        first = self.p_cons()
        parts = []
        prev = first
        while self.at_op(*self._CMP):
            op = self.next().value
            op = "==" if op == "=" else op
            rhs = self.p_cons()
            parts.append(L.App(op, (prev, rhs)))
            prev = rhs
        if not parts:
            return first
        return parts[0] if len(parts) == 1 else L.conj(parts)

    def p_cons(self):
        head = self.p_add()
        if self.at_op("::"):
            self.next()
            return L.App("Cons", (head, self.p_cons()))
        return head

    def p_add(self):
        e = self.p_mul()
        while self.at_op("+", "-", "++"):
            op = self.next().value
            e = L.App(op, (e, self.p_mul()))
        return e

    def p_mul(self):
        e = self.p_patom()
        while self.at_op("*") or self.at_kw("mod"):
            op = self.next().value
            e = L.App(op, (e, self.p_patom()))
        return e

    def p_patom(self):
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return L.Lit(t.value)
        if self.at_op("-") and self.peek(1).kind == "INT":
            self.next()
            return L.Lit(-self.next().value)
        if self.at_kw("true", "false"):
            return L.Lit(self.next().value == "true")
        if self.at_kw("Leaf"):
            self.next()
            return L.Lit(LEAF)
        if self.at_kw("Node"):
            self.next()
            self.expect_op("(")
            args = [self.p_cons()]
            while self.at_op(","):
                self.next()
                args.append(self.p_cons())
            self.expect_op(")")
            return L.App("Node", tuple(args))
        if self.at_op("["):
            self.next()
            if self.at_op("]"):
                self.next()
                return L.Lit(())
            items = [self.p_cons()]
            while self.at_op(";"):
                self.next()
                items.append(self.p_cons())
            self.expect_op("]")
            out = L.Lit(())
            for it in reversed(items):
                out = L.App("Cons", (it, out))
            return out
        if self.at_op("("):
            self.next()
            if self.at_op(")"):
                self.next()
                return L.Lit(UNIT)
            p = self.p_implies()
            self.expect_op(")")
            return p
        if t.kind == "NAME":
            name = self.next().value
            if self.at_op("("):
                self.next()
                args = []
                if not self.at_op(")"):
                    args.append(self.p_implies())
                    while self.at_op(","):
                        self.next()
                        args.append(self.p_implies())
                self.expect_op(")")
                return L.App(name, tuple(args))
            return L.Var(name)
        self.fail(f"cannot start a formula with {t.value!r}")

    # -- expressions --

    _EXPR_ATOM_START = ("(", "[")

    def parse_expr(self):
        e = self.parse_seq()
        while self.at_op("(+)"):
            self.next()
            e = ("choice", e, self.parse_seq())
        return e

    def parse_seq(self):
        if self.at_kw("let"):
            self.next()
            name = self.expect_name() if self.peek().kind == "NAME" else self._wild()
            self.expect_op("=")
            rhs = self.parse_expr()
            self.expect_kw("in")
            return ("let", name, rhs, self.parse_expr())
        if self.at_kw("match"):
            self.next()
            scrut = self.parse_expr()
            self.expect_kw("with")
            branches = []
            while self.at_op("|"):
                self.next()
                pat, binders = self.parse_pattern()
                self.expect_op("->")
                branches.append((pat, binders, self.parse_expr()))
            if not branches:
                self.fail("match needs at least one branch")
            return ("match", scrut, branches)
        if self.at_kw("if"):
            self.next()
            c = self.parse_expr()
            self.expect_kw("then")
            a = self.parse_expr()
            self.expect_kw("else")
            return ("if", c, a, self.parse_expr())
        return self.parse_cmp()

    def _wild(self):
        self.expect_op("_")
        return "_"

    def parse_pattern(self):
        t = self.peek()
        if self.at_op("_"):
            self.next()
            return T.PatWild(), ()
        if t.kind == "INT":
            self.next()
            return T.PatLit(t.value), ()
        if self.at_op("-") and self.peek(1).kind == "INT":
            self.next()
            return T.PatLit(-self.next().value), ()
        if self.at_kw("true", "false"):
            return T.PatLit(self.next().value == "true"), ()
        if self.at_op("["):
            self.next()
            self.expect_op("]")
            return T.PatCon("Nil"), ()
        if self.at_kw("Leaf"):
            self.next()
            return T.PatCon("Leaf"), ()
        if self.at_kw("Node"):
            self.next()
            self.expect_op("(")
            x = self.expect_name()
            self.expect_op(",")
            l = self.expect_name()
            self.expect_op(",")
            r = self.expect_name()
            self.expect_op(")")
            return T.PatCon("Node"), (x, l, r)
        if t.kind == "NAME":
            x = self.next().value
            self.expect_op("::")
            r = self.expect_name()
            return T.PatCon("Cons"), (x, r)
        self.fail(f"cannot start a pattern with {t.value!r}")

    def parse_cmp(self):
        e = self.parse_econs()
        if self.at_op("==", "!=", "<", "<=", ">", ">="):
            op = self.next().value
            return ("op", op, [e, self.parse_econs()])
        return e

    def parse_econs(self):
        e = self.parse_eadd()
        if self.at_op("::"):
            self.next()
            return ("op", "Cons", [e, self.parse_econs()])
        return e

    def parse_eadd(self):
        e = self.parse_emul()
        while self.at_op("+", "-", "++"):
            op = self.next().value
            e = ("op", op, [e, self.parse_emul()])
        return e

    def parse_emul(self):
        e = self.parse_eapp()
        while self.at_op("*") or self.at_kw("mod"):
            op = self.next().value
            e = ("op", op, [e, self.parse_eapp()])
        return e

    def _at_atom_start(self) -> bool:
        t = self.peek()
        if t.kind in ("INT", "NAME"):
            return True
        if t.kind == "KW" and t.value in ("true", "false", "Leaf", "Node"):
            return True
        return t.kind == "OP" and t.value in self._EXPR_ATOM_START

    def parse_eapp(self):
        head = self.parse_eatom()
        if head[0] == "var" and self._at_atom_start():
            args = []
            while self._at_atom_start():
                args.append(self.parse_eatom())
            if len(args) == 1 and args[0] == ("const", UNIT):
                args = []
            return ("app", head[1], args)
        return head

    def parse_eatom(self):
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return ("const", t.value)
        if self.at_op("-") and self.peek(1).kind == "INT":
            self.next()
            return ("const", -self.next().value)
        if self.at_kw("true", "false"):
            return ("const", self.next().value == "true")
        if self.at_kw("err"):
            self.next()
            return ("err",)
        if self.at_kw("Leaf"):
            self.next()
            return ("const", LEAF)
        if self.at_kw("Node"):
            self.next()
            self.expect_op("(")
            a = self.parse_expr()
            self.expect_op(",")
            b = self.parse_expr()
            self.expect_op(",")
            c = self.parse_expr()
            self.expect_op(")")
            return ("op", "Node", [a, b, c])
        if self.at_op("??"):
            self.next()
            k = self.next()
            if k.kind != "INT":
                raise ParseError("hole needs a numeric id", k.line, k.col)
            self.expect_op(":")
            return ("hole", k.value, self.parse_ctype())
        if self.at_op("["):
            self.next()
            if self.at_op("]"):
                self.next()
                return ("const", ())
            items = [self.parse_expr()]
            while self.at_op(";"):
                self.next()
                items.append(self.parse_expr())
            self.expect_op("]")
            out = ("const", ())
            for it in reversed(items):
                out = ("op", "Cons", [it, out])
            return out
        if self.at_op("("):
            self.next()
            if self.at_op(")"):
                self.next()
                return ("const", UNIT)
            e = self.parse_expr()
            self.expect_op(")")
            return e
        if t.kind == "NAME":
            return ("var", self.next().value)
        self.fail(f"cannot start an expression with {t.value!r}")

    # -- definitions --

    def parse_def(self) -> T.GeneratorDef:
        self.expect_kw("let")
        rec = False
        if self.at_kw("rec"):
            self.next()
            rec = True
        name = self.expect_name()
        params = []
        while self.at_op("("):
            self.next()
            pname = self.expect_name()
            self.expect_op(":")
            rt = self.parse_rtype(pname)
            self.expect_op(")")
            params.append((pname, rt.rename(pname)))
        self.expect_op(":")
        ret = self.parse_ctype()
        self.expect_op("=")
        surface = self.parse_expr()
        body = _Normalizer(params).run(surface)
        return T.GeneratorDef(name, tuple(params), ret, body, rec)

    def parse_program(self) -> list:
        defs = []
        while self.peek().kind != "EOF":
            defs.append(self.parse_def())
        if not defs:
            self.fail("no definitions found")
        return defs


# -- normalization into monadic normal form -----------------------------------

# Builtin operators take let-op form; anything else applied by name is a
# generator call.  Keep in sync with the signature registry.
BUILTIN_OPS = frozenset(
    {
        "int_gen", "nat_gen", "bool_gen", "int_list_gen", "int_tree_gen",
        "int_range", "int_notin_gen",
        "+", "-", "*", "mod", "++", "Cons", "Node",
        "==", "!=", "<", "<=", ">", ">=",
    }
)


class _Normalizer:
    def __init__(self, params):
        self.used = {p for p, _ in params}
        self.supply = T.NameSupply()

    def fresh(self) -> str:
        while True:
            n = self.supply.fresh()
            if n not in self.used:
                self.used.add(n)
                return n

    def rebind(self, name: str) -> str:
        """Keep source names unless they would shadow; then freshen."""
        if name == "_":
            return self.fresh()
        if name in self.used:
            k = 2
            while f"{name}{k}" in self.used:
                k += 1
            name = f"{name}{k}"
        self.used.add(name)
        return name

    def run(self, e):
        return self.norm(e, {})

    def norm(self, e, env):
        kind = e[0]
        if kind == "const":
            return T.Const(e[1])
        if kind == "var":
            name = env.get(e[1], e[1])
            return T.Var(name)
        if kind == "err":
            return T.ERR
        if kind == "hole":
            _, hid, ct = e
            qual = L.subst(ct.qual, {k: L.Var(v) for k, v in env.items() if k != ct.bound})
            return T.Hole(hid, CoverageType(ct.bound, ct.base, qual))
        if kind == "choice":
            return T.Choice(self.norm(e[1], env), self.norm(e[2], env))
        if kind == "if":
            _, c, a, b = e
            return self.norm(
                ("match", c, [(T.PatLit(True), (), a), (T.PatWild(), (), b)]), env
            )
        if kind == "let":
            _, name, rhs, body = e
            fresh = self.rebind(name)
            env2 = {**env, name: fresh}
            if rhs[0] in ("op", "app"):
                return self.bind_call(rhs, env, fresh, lambda: self.norm(body, env2))
            return T.Let(fresh, self.norm(rhs, env), self.norm(body, env2))
        if kind == "match":
            _, scrut, branches = e
            return self.norm_value(
                scrut, env, lambda sv: self.norm_match(sv, branches, env)
            )
        if kind in ("op", "app"):
            tmp = self.fresh()
            return self.bind_call(e, env, tmp, lambda: T.Var(tmp))
        raise ParseError(f"unexpected surface node {kind!r}")

    def norm_match(self, sv, branches, env):
        out = []
        for pat, binders, body in branches:
            fresh_binders = tuple(self.rebind(b) for b in binders)
            env2 = {**env, **dict(zip(binders, fresh_binders))}
            out.append(T.Branch(pat, fresh_binders, self.norm(body, env2)))
        return T.Match(sv, tuple(out))

    def bind_call(self, call, env, name, mk_body):
        """Normalize an op/app right-hand side, binding it to name."""
        _, head, args = call

        def with_args(vals):
            if call[0] == "op" or head in BUILTIN_OPS:
                return T.LetOp(name, head, tuple(vals), mk_body())
            return T.LetApp(name, env.get(head, head), tuple(vals), mk_body())

        def go(i, acc):
            if i == len(args):
                return with_args(acc)
            return self.norm_value(args[i], env, lambda v: go(i + 1, acc + [v]))

        return go(0, [])

    def norm_value(self, e, env, k):
        """Normalize e to a Const/Var, let-binding anything bigger."""
        if e[0] == "const":
            return k(T.Const(e[1]))
        if e[0] == "var":
            return k(T.Var(env.get(e[1], e[1])))
        if e[0] in ("op", "app"):
            tmp = self.fresh()
            return self.bind_call(e, env, tmp, lambda: k(T.Var(tmp)))
        tmp = self.fresh()
        return T.Let(tmp, self.norm(e, env), k(T.Var(tmp)))


# -- entry points --------------------------------------------------------------


def parse_program(src: str) -> list:
    return _Parser(tokenize(src)).parse_program()


def parse_generator(src: str) -> T.GeneratorDef:
    defs = parse_program(src)
    if len(defs) != 1:
        raise ParseError(f"expected one definition, found {len(defs)}")
    return defs[0]


def parse_prop(src: str) -> L.Prop:
    p = _Parser(tokenize(src))
    out = p.parse_prop()
    t = p.peek()
    if t.kind != "EOF":
        raise ParseError(f"trailing input {t.value!r}", t.line, t.col)
    return out


def parse_ctype(src: str) -> CoverageType:
    p = _Parser(tokenize(src))
    out = p.parse_ctype()
    t = p.peek()
    if t.kind != "EOF":
        raise ParseError(f"trailing input {t.value!r}", t.line, t.col)
    return out


def parse_expr_term(src: str, params=()):
    """Parse a bare expression into a normalized term (tests, patches)."""
    p = _Parser(tokenize(src))
    e = p.parse_expr()
    t = p.peek()
    if t.kind != "EOF":
        raise ParseError(f"trailing input {t.value!r}", t.line, t.col)
    return _Normalizer(tuple((x, None) for x in params)).run(e)
