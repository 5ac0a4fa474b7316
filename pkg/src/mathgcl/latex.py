"""LaTeX subset parser producing expression trees.

The supported grammar (see docs/grammar.md for the full table):
single-letter identifiers, decimal numbers, Greek commands, the infix
operators + - * / = < > with \\cdot, \\times and \\in, ^ and _ scripts,
\\frac, \\sqrt, named functions (\\log, \\sin, ...), ( ) [ ] grouping,
invisible { } grouping, and bmatrix/pmatrix/vmatrix environments.
Big-O is the ordinary identifier O.

Parsing is deterministic: the same source always yields the same tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EmptyInput, UnbalancedDelimiter, UnsupportedCommand

GREEK = {
    "alpha", "beta", "gamma", "delta", "epsilon", "varepsilon", "zeta",
    "eta", "theta", "vartheta", "iota", "kappa", "lambda", "mu", "nu",
    "xi", "pi", "rho", "sigma", "tau", "upsilon", "phi", "varphi", "chi",
    "psi", "omega",
    "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Upsilon",
    "Phi", "Psi", "Omega",
}

FUNCTIONS = {
    "log", "ln", "exp", "sin", "cos", "tan", "cot", "sec", "csc",
    "sinh", "cosh", "tanh", "min", "max", "gcd", "det",
}

# control sequence -> (token kind, normalized value)
SYMBOL_COMMANDS = {
    "cdot": ("MUL", "cdot"),
    "times": ("MUL", "times"),
    "in": ("REL", "in"),
    "leq": ("REL", "leq"),
    "le": ("REL", "leq"),
    "geq": ("REL", "geq"),
    "ge": ("REL", "geq"),
    "neq": ("REL", "neq"),
    "ne": ("REL", "neq"),
}

MATRIX_ENVS = {"bmatrix", "pmatrix", "vmatrix"}

_REL_CHARS = {"=": "eq", "<": "lt", ">": "gt"}


@dataclass
class Tok:
    kind: str
    value: str
    pos: int


@dataclass
class ExprNode:
    """AST node. `kind` is one of:

    var, num, relop, plus, minus, mul, divide, neg, script, func,
    frac, sqrt, group, matrix.

    `value` refines the kind (symbol name, relation name, multiplication
    style, group delimiter, matrix dimensions, present scripts).
    """

    kind: str
    value: str = ""
    children: list["ExprNode"] = field(default_factory=list)


def _clamp(source: str, pos: int) -> int:
    # errors at end-of-input anchor on the last character
    return min(pos, max(len(source) - 1, 0))


def tokenize(source: str) -> list[Tok]:
    toks: list[Tok] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c.isalpha():
            toks.append(Tok("LETTER", c, i))
            i += 1
            continue
        if c.isdigit():
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            toks.append(Tok("NUM", source[i:j], i))
            i = j
            continue
        if c == "\\":
            if i + 1 < n and source[i + 1] == "\\":
                toks.append(Tok("NEWROW", "\\\\", i))
                i += 2
                continue
            j = i + 1
            while j < n and source[j].isalpha():
                j += 1
            name = source[i + 1:j]
            if not name:
                raise UnsupportedCommand(f"lone backslash", i)
            if name in GREEK:
                toks.append(Tok("GREEK", name, i))
            elif name in FUNCTIONS:
                toks.append(Tok("FUNC", name, i))
            elif name in ("frac", "sqrt"):
                toks.append(Tok(name.upper(), name, i))
            elif name in SYMBOL_COMMANDS:
                kind, value = SYMBOL_COMMANDS[name]
                toks.append(Tok(kind, value, i))
            elif name in ("begin", "end"):
                if j >= n or source[j] != "{":
                    raise UnbalancedDelimiter(f"\\{name} missing {{env}}", _clamp(source, j))
                k = source.find("}", j)
                if k < 0:
                    raise UnbalancedDelimiter(f"\\{name} environment never closed", _clamp(source, n))
                env = source[j + 1:k]
                if env not in MATRIX_ENVS:
                    raise UnsupportedCommand(f"unsupported environment {env!r}", i)
                toks.append(Tok("BEGIN" if name == "begin" else "ENDENV", env, i))
                i = k + 1
                continue
            else:
                raise UnsupportedCommand(f"unknown command \\{name}", i)
            i = j
            continue
        simple = {
            "+": ("PLUS", "plus"), "-": ("MINUS", "minus"),
            "*": ("MUL", "ast"), "/": ("DIV", "divide"),
            "^": ("CARET", "^"), "_": ("UNDER", "_"),
            "{": ("LBRACE", "{"), "}": ("RBRACE", "}"),
            "(": ("LPAREN", "("), ")": ("RPAREN", ")"),
            "[": ("LBRACK", "["), "]": ("RBRACK", "]"),
            "&": ("AMP", "&"),
        }
        if c in simple:
            kind, value = simple[c]
            toks.append(Tok(kind, value, i))
            i += 1
            continue
        if c in _REL_CHARS:
            toks.append(Tok("REL", _REL_CHARS[c], i))
            i += 1
            continue
        raise UnsupportedCommand(f"unsupported character {c!r}", i)
    toks.append(Tok("EOF", "", n))
    return toks


_ATOM_STARTS = {
    "LETTER", "NUM", "GREEK", "FUNC", "FRAC", "SQRT",
    "LPAREN", "LBRACK", "LBRACE", "BEGIN",
}


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.toks = tokenize(source)
        self.i = 0

    def peek(self) -> Tok:
        return self.toks[self.i]

    def next(self) -> Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def _err_pos(self, tok: Tok) -> int:
        return _clamp(self.source, tok.pos)

    def expect(self, kind: str, what: str) -> Tok:
        tok = self.peek()
        if tok.kind != kind:
            raise UnbalancedDelimiter(f"expected {what}", self._err_pos(tok))
        return self.next()

    # relation := additive (RELOP additive)*     left-associative
    def parse_relation(self) -> ExprNode:
        node = self.parse_additive()
        while self.peek().kind == "REL":
            op = self.next()
            rhs = self.parse_additive()
            node = ExprNode("relop", op.value, [node, rhs])
        return node

    # additive := term (('+'|'-') term)*         left-associative
    def parse_additive(self) -> ExprNode:
        node = self.parse_term()
        while self.peek().kind in ("PLUS", "MINUS"):
            op = self.next()
            rhs = self.parse_term()
            kind = "plus" if op.kind == "PLUS" else "minus"
            node = ExprNode(kind, op.value, [node, rhs])
        return node

    # term := unary (('*'|\cdot|\times|'/'| juxtaposition) unary)*
    def parse_term(self) -> ExprNode:
        node = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "MUL":
                self.next()
                rhs = self.parse_unary()
                node = ExprNode("mul", tok.value, [node, rhs])
            elif tok.kind == "DIV":
                self.next()
                rhs = self.parse_unary()
                node = ExprNode("divide", "divide", [node, rhs])
            elif tok.kind in _ATOM_STARTS:
                rhs = self.parse_unary()
                node = ExprNode("mul", "juxt", [node, rhs])
            else:
                return node

    def parse_unary(self) -> ExprNode:
        if self.peek().kind == "MINUS":
            self.next()
            return ExprNode("neg", "minus", [self.parse_unary()])
        if self.peek().kind == "PLUS":  # unary plus is layout noise; keep operand
            self.next()
            return self.parse_unary()
        return self.parse_postfix()

    # postfix := atom ('^' scriptarg | '_' scriptarg)*   at most one of each
    def parse_postfix(self) -> ExprNode:
        base = self.parse_atom()
        sub = sup = None
        while self.peek().kind in ("CARET", "UNDER"):
            tok = self.next()
            arg = self.parse_script_arg()
            if tok.kind == "CARET":
                if sup is not None:
                    raise UnsupportedCommand("double superscript", self._err_pos(tok))
                sup = arg
            else:
                if sub is not None:
                    raise UnsupportedCommand("double subscript", self._err_pos(tok))
                sub = arg
        if sub is None and sup is None:
            return base
        which = "subsup" if (sub is not None and sup is not None) else ("sub" if sub is not None else "sup")
        children = [base] + [c for c in (sub, sup) if c is not None]
        return ExprNode("script", which, children)

    def parse_script_arg(self) -> ExprNode:
        tok = self.peek()
        if tok.kind == "LBRACE":
            return self.parse_braced()
        if tok.kind == "LETTER":
            self.next()
            return ExprNode("var", tok.value)
        if tok.kind == "GREEK":
            self.next()
            return ExprNode("var", tok.value)
        if tok.kind == "NUM":
            self.next()
            return ExprNode("num", tok.value)
        raise UnbalancedDelimiter("expected script argument", self._err_pos(tok))

    def parse_braced(self) -> ExprNode:
        self.expect("LBRACE", "'{'")
        node = self.parse_relation()
        tok = self.peek()
        if tok.kind != "RBRACE":
            raise UnbalancedDelimiter("unclosed '{'", self._err_pos(tok))
        self.next()
        return node

    def parse_atom(self) -> ExprNode:
        tok = self.peek()
        if tok.kind == "LETTER":
            self.next()
            return ExprNode("var", tok.value)
        if tok.kind == "GREEK":
            self.next()
            return ExprNode("var", tok.value)
        if tok.kind == "NUM":
            self.next()
            return ExprNode("num", tok.value)
        if tok.kind == "FUNC":
            self.next()
            if self.peek().kind in ("CARET", "UNDER"):
                raise UnsupportedCommand("script on function name", self._err_pos(self.peek()))
            arg = self.parse_func_arg()
            return ExprNode("func", tok.value, [arg])
        if tok.kind == "FRAC":
            self.next()
            num = self.parse_braced()
            den = self.parse_braced()
            return ExprNode("frac", "frac", [num, den])
        if tok.kind == "SQRT":
            self.next()
            if self.peek().kind == "LBRACK":
                raise UnsupportedCommand("\\sqrt[...] index not supported", self._err_pos(self.peek()))
            body = self.parse_braced()
            return ExprNode("sqrt", "sqrt", [body])
        if tok.kind == "LPAREN":
            return self.parse_group("LPAREN", "RPAREN", "paren", "')'")
        if tok.kind == "LBRACK":
            return self.parse_group("LBRACK", "RBRACK", "bracket", "']'")
        if tok.kind == "LBRACE":
            return self.parse_braced()
        if tok.kind == "BEGIN":
            return self.parse_matrix()
        if tok.kind in ("RBRACE", "RPAREN", "RBRACK", "ENDENV"):
            raise UnbalancedDelimiter(f"unmatched {tok.value!r}", self._err_pos(tok))
        raise UnsupportedCommand(f"expected an expression, found {tok.value!r}" if tok.kind != "EOF"
                                 else "unexpected end of input", self._err_pos(tok))

    def parse_group(self, open_kind: str, close_kind: str, style: str, close_name: str) -> ExprNode:
        self.expect(open_kind, style)
        node = self.parse_relation()
        tok = self.peek()
        if tok.kind != close_kind:
            raise UnbalancedDelimiter(f"expected {close_name}", self._err_pos(tok))
        self.next()
        return ExprNode("group", style, [node])

    # argument of a named function: a parenthesized group or one scripted atom
    def parse_func_arg(self) -> ExprNode:
        tok = self.peek()
        if tok.kind == "LPAREN":
            return self.parse_group("LPAREN", "RPAREN", "paren", "')'")
        if tok.kind == "LBRACE":
            return self.parse_braced()
        if tok.kind not in _ATOM_STARTS:
            raise UnbalancedDelimiter("function needs an argument", self._err_pos(tok))
        return self.parse_postfix()

    def parse_matrix(self) -> ExprNode:
        begin = self.expect("BEGIN", "matrix environment")
        env = begin.value
        rows: list[list[ExprNode]] = [[]]
        while True:
            rows[-1].append(self.parse_relation())
            tok = self.peek()
            if tok.kind == "AMP":
                self.next()
            elif tok.kind == "NEWROW":
                self.next()
                rows.append([])
            elif tok.kind == "ENDENV":
                if tok.value != env:
                    raise UnbalancedDelimiter(f"\\end{{{tok.value}}} does not match \\begin{{{env}}}",
                                              self._err_pos(tok))
                self.next()
                break
            elif tok.kind == "EOF":
                raise UnbalancedDelimiter(f"unclosed environment {env!r}", self._err_pos(tok))
            else:
                raise UnsupportedCommand(f"unexpected {tok.value!r} inside matrix", self._err_pos(tok))
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise UnsupportedCommand("ragged matrix rows", self._err_pos(begin))
        cells = [c for row in rows for c in row]
        return ExprNode("matrix", f"{len(rows)}x{ncols}", cells)


def parse_latex(source: str) -> ExprNode:
    """Parse a LaTeX formula into an expression tree.

    Raises EmptyInput, UnbalancedDelimiter, or UnsupportedCommand; the
    delimiter and command errors carry the character offset at fault
    (clamped to the last character when the problem is premature EOF).
    """
    if not source or not source.strip():
        raise EmptyInput()
    parser = _Parser(source)
    tree = parser.parse_relation()
    tok = parser.peek()
    if tok.kind != "EOF":
        if tok.kind in ("RBRACE", "RPAREN", "RBRACK", "ENDENV", "AMP", "NEWROW"):
            raise UnbalancedDelimiter(f"unmatched {tok.value!r}", parser._err_pos(tok))
        raise UnsupportedCommand(f"trailing input {tok.value!r}", parser._err_pos(tok))
    return tree
