"""Recursive-descent parser for the supported Solidity subset.

Statements the grammar below does not cover are not dropped: they are skipped
token-balanced and kept as :class:`Opaque` nodes with the identifiers they
touch.  Only input that cannot be re-synchronised (unbalanced braces, early
end of file) raises :class:`ParseError`.
"""

from __future__ import annotations

from typing import Callable, Optional, TypeVar

from .ast import (
    ELEMENTARY_TYPES,
    ArrayLit,
    AstUnit,
    Assign,
    Binary,
    Block,
    Break,
    Call,
    CatchClause,
    Conditional,
    Continue,
    ContractDef,
    DoWhile,
    ElementaryTypeExpr,
    Emit,
    EnumDef,
    ErrorDef,
    EventDef,
    Expr,
    ExprStmt,
    For,
    FunctionDef,
    Ident,
    If,
    Import,
    Index,
    IndexRange,
    InheritanceSpec,
    Literal,
    LocalVar,
    Member,
    ModifierDef,
    ModifierInvocation,
    NewExpr,
    Node,
    Opaque,
    Param,
    Placeholder,
    Return,
    RevertStmt,
    Span,
    StateVar,
    Stmt,
    StructDef,
    Try,
    TupleExpr,
    TypeExpr,
    TypeName,
    Unary,
    UsingFor,
    VarDecl,
    While,
)
from .lexer import LexError, Token, TokKind, tokenize


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, path: str = ""):
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.path = path


class _Backtrack(Exception):
    """Internal: the current alternative does not match."""


T = TypeVar("T")

_BINARY_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, ">": 4, "<=": 4, ">=": 4,
    "|": 5,
    "^": 6,
    "&": 7,
    "<<": 8, ">>": 8, ">>>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
    "**": 11,
}
_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<=", ">>=", ">>>="}
_UNITS = {"wei", "gwei", "szabo", "finney", "ether", "seconds", "minutes", "hours", "days", "weeks", "years"}
_LOCATIONS = {"memory", "storage", "calldata"}
_VISIBILITY = {"public", "private", "internal", "external"}
_MUTABILITY = {"pure", "view", "payable", "constant", "nonpayable"}
_STATE_VAR_ATTRS = {"public", "private", "internal", "constant", "immutable", "transient"}

# Yul builtins mapped to environment atoms
_YUL_ATOMS = {
    "chainid": "block.chainid",
    "address": "address(this)",
    "caller": "msg.sender",
    "origin": "tx.origin",
    "callvalue": "msg.value",
    "timestamp": "block.timestamp",
    "calldataload": "msg.data",
    "calldatacopy": "msg.data",
    "calldatasize": "msg.data",
}
_YUL_KEYWORDS = {"let", "if", "for", "switch", "case", "default", "function", "leave", "break", "continue", "true", "false"}


class Parser:
    def __init__(self, source: str, path: str = ""):
        self.source = source
        self.path = path
        try:
            self.toks, comments = tokenize(source)
        except LexError as exc:
            raise ParseError(str(exc).split(": ", 1)[-1], exc.line, exc.col, path) from None
        self.comments = [c.text for c in comments]
        self.i = 0
        self.next_id = 1
        self.index: dict[int, Span] = {}

    # ------------------------------------------------------------ token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        j = min(self.i + k, len(self.toks) - 1)
        return self.toks[j]

    def at(self, text: str) -> bool:
        return self.tok.is_(text)

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of file'!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind is not TokKind.IDENT:
            self.fail(f"expected identifier, found {t.text or 'end of file'!r}")
        self.i += 1
        return t.text

    def fail(self, msg: str):
        raise _Backtrack(msg)

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col, self.path)

    def attempt(self, fn: Callable[[], T]) -> Optional[T]:
        """Run ``fn``; on mismatch rewind and return None."""
        save_i, save_id = self.i, self.next_id
        save_keys = len(self.index)
        try:
            return fn()
        except _Backtrack:
            self.i = save_i
            self.next_id = save_id
            if len(self.index) != save_keys:
                for k in [k for k in self.index if k >= save_id]:
                    del self.index[k]
            return None

    # ------------------------------------------------------------ node helpers

    def mk(self, cls, start: Token, *args, **kw):
        nid = self.next_id
        self.next_id += 1
        node = cls(nid, *args, **kw)
        prev = self.toks[self.i - 1] if self.i > 0 else start
        end = max(prev.end, start.end)
        self.index[nid] = Span(self.path, start.line, start.col, start.offset, end)
        return node

    # ------------------------------------------------------------ source unit

    def parse_unit(self) -> AstUnit:
        contracts: list[ContractDef] = []
        imports: list[Import] = []
        free_functions: list[FunctionDef] = []
        pragma = ""
        while self.tok.kind is not TokKind.EOF:
            start = self.tok
            try:
                if self.at("pragma"):
                    text = self._skip_to_semicolon()
                    if text.startswith("pragma solidity"):
                        pragma = text[len("pragma solidity"):].strip().rstrip(";").strip()
                elif self.at("import"):
                    self.i += 1
                    path = ""
                    while not self.at(";"):
                        if self.tok.kind is TokKind.EOF:
                            raise self.error("unterminated import", start)
                        if self.tok.kind is TokKind.STRING and not path:
                            path = self.tok.text[1:-1]
                        self.i += 1
                    self.i += 1
                    imports.append(self.mk(Import, start, path))
                elif self.at("abstract") or self.at("contract") or self.at("interface") or self.at("library"):
                    contracts.append(self.parse_contract())
                elif self.at("function"):
                    fn = self.parse_function("")
                    free_functions.append(fn)
                else:
                    # file-level struct / enum / constant / error / using / type
                    self._skip_member()
            except _Backtrack as exc:
                raise self.error(str(exc)) from None
        unit = AstUnit(
            contracts=contracts,
            pragma=pragma,
            source_path=self.path,
            node_index=self.index,
            source=self.source,
            comments=self.comments,
            imports=imports,
            free_functions=free_functions,
            next_id=self.next_id,
        )
        return unit

    def _skip_to_semicolon(self) -> str:
        start = self.tok
        while not self.at(";"):
            if self.tok.kind is TokKind.EOF:
                raise self.error("missing ';'", start)
            self.i += 1
        end = self.tok.end
        self.i += 1
        return self.source[start.offset:end]

    def _skip_member(self) -> Opaque:
        """Balanced skip of one declaration or statement."""
        start = self.tok
        depth = 0
        reads: list[str] = []
        writes: list[str] = []
        prev_ident: Optional[str] = None
        while True:
            t = self.tok
            if t.kind is TokKind.EOF:
                raise self.error("unexpected end of file", start)
            if t.is_("{") or t.is_("(") or t.is_("["):
                depth += 1
            elif t.is_("}") or t.is_(")") or t.is_("]"):
                depth -= 1
                if depth < 0:
                    raise self.error(f"unbalanced {t.text!r}", t)
                if depth == 0 and t.is_("}"):
                    self.i += 1
                    break
            elif t.is_(";") and depth == 0:
                self.i += 1
                break
            if t.kind is TokKind.IDENT:
                if t.text not in reads:
                    reads.append(t.text)
                prev_ident = t.text
            elif t.kind is TokKind.PUNCT and t.text in _ASSIGN_OPS and depth == 0 and prev_ident:
                if prev_ident not in writes:
                    writes.append(prev_ident)
            self.i += 1
        text = self.source[start.offset:self.toks[self.i - 1].end]
        return self.mk(Opaque, start, "unparsed", text, reads, writes)

    # ------------------------------------------------------------ contracts

    def parse_contract(self) -> ContractDef:
        start = self.tok
        kind = "contract"
        if self.accept("abstract"):
            kind = "abstract"
            self.expect("contract")
        else:
            kind = self.tok.text
            self.i += 1
        name = self.ident()
        bases: list[InheritanceSpec] = []
        if self.accept("is"):
            while True:
                bstart = self.tok
                bname = self._dotted()
                args = self._call_args_opt()
                bases.append(self.mk(InheritanceSpec, bstart, bname, args))
                if not self.accept(","):
                    break
        c = ContractDef(0, name, kind, bases)
        self.expect("{")
        while not self.at("}"):
            if self.tok.kind is TokKind.EOF:
                raise self.error(f"unterminated contract {name!r}", start)
            self._parse_member(c)
        self.i += 1
        node = self.mk(ContractDef, start, name, kind, bases)
        for attr in ("state_vars", "functions", "modifiers", "structs", "enums", "events", "errors", "using_for", "opaque"):
            setattr(node, attr, getattr(c, attr))
        return node

    def _dotted(self) -> str:
        parts = [self.ident()]
        while self.at(".") and self.peek().kind is TokKind.IDENT:
            self.i += 1
            parts.append(self.ident())
        return ".".join(parts)

    def _call_args_opt(self) -> Optional[list[Expr]]:
        if not self.at("("):
            return None
        self.i += 1
        args: list[Expr] = []
        while not self.at(")"):
            args.append(self.parse_expression())
            if not self.accept(","):
                break
        self.expect(")")
        return args

    def _parse_member(self, c: ContractDef) -> None:
        save = self.i
        try:
            if self.at("function") or self.at("constructor") or self.at("fallback") or self.at("receive"):
                if not (self.at("fallback") or self.at("receive")) or self.peek().is_("("):
                    c.functions.append(self.parse_function(c.name))
                    return
            if self.at("modifier"):
                c.modifiers.append(self.parse_modifier(c.name))
                return
            if self.at("event"):
                c.events.append(self._parse_event())
                return
            if self.at("error") and self.peek().kind is TokKind.IDENT and self.peek(2).is_("("):
                start = self.tok
                self.i += 1
                ename = self.ident()
                params = self.parse_params()
                self.expect(";")
                c.errors.append(self.mk(ErrorDef, start, ename, params))
                return
            if self.at("struct"):
                c.structs.append(self._parse_struct())
                return
            if self.at("enum"):
                c.enums.append(self._parse_enum())
                return
            if self.at("using"):
                c.using_for.append(self._parse_using())
                return
            sv = self.attempt(lambda: self._parse_state_var(c.name))
            if sv is not None:
                c.state_vars.append(sv)
                return
        except _Backtrack:
            self.i = save
        c.opaque.append(self._skip_member())

    def _parse_event(self) -> EventDef:
        start = self.tok
        self.expect("event")
        name = self.ident()
        params = self.parse_params(allow_indexed=True)
        self.accept("anonymous")
        self.expect(";")
        return self.mk(EventDef, start, name, params)

    def _parse_struct(self) -> StructDef:
        start = self.tok
        self.expect("struct")
        name = self.ident()
        self.expect("{")
        members: list[Param] = []
        while not self.at("}"):
            mstart = self.tok
            t = self.parse_type()
            mname = self.ident()
            self.expect(";")
            members.append(self.mk(Param, mstart, mname, t))
        self.i += 1
        return self.mk(StructDef, start, name, members)

    def _parse_enum(self) -> EnumDef:
        start = self.tok
        self.expect("enum")
        name = self.ident()
        self.expect("{")
        values: list[str] = []
        while not self.at("}"):
            values.append(self.ident())
            if not self.accept(","):
                break
        self.expect("}")
        return self.mk(EnumDef, start, name, values)

    def _parse_using(self) -> UsingFor:
        start = self.tok
        self.expect("using")
        if self.at("{"):
            depth = 0
            names: list[str] = []
            while True:
                if self.at("{"):
                    depth += 1
                elif self.at("}"):
                    depth -= 1
                elif self.tok.kind is TokKind.IDENT and depth == 1 and not names[-1:] == ["as"]:
                    names.append(self.tok.text)
                self.i += 1
                if depth == 0:
                    break
            lib = ",".join(n for n in names if n != "as")
        else:
            lib = self._dotted()
        self.expect("for")
        if self.accept("*"):
            target = "*"
        else:
            target = self.parse_type().text()
        self.accept("global")
        self.expect(";")
        return self.mk(UsingFor, start, lib, target)

    def _parse_state_var(self, contract: str) -> StateVar:
        start = self.tok
        t = self.parse_type()
        visibility = "internal"
        constant = immutable = False
        while True:
            if self.tok.text in _STATE_VAR_ATTRS and self.tok.kind is TokKind.IDENT:
                word = self.ident()
                if word in _VISIBILITY:
                    visibility = word
                elif word == "constant":
                    constant = True
                elif word == "immutable":
                    immutable = True
            elif self.at("override"):
                self.i += 1
                if self.at("("):
                    self._skip_parens()
            else:
                break
        name = self.ident()
        value = None
        if self.accept("="):
            value = self.parse_expression()
        self.expect(";")
        return self.mk(StateVar, start, name, t, visibility, constant, immutable, value, contract)

    def _skip_parens(self) -> None:
        depth = 0
        while True:
            if self.tok.kind is TokKind.EOF:
                self.fail("unbalanced parentheses")
            if self.at("("):
                depth += 1
            elif self.at(")"):
                depth -= 1
            self.i += 1
            if depth == 0:
                return

    # ------------------------------------------------------------ functions

    def parse_params(self, allow_indexed: bool = False) -> list[Param]:
        self.expect("(")
        params: list[Param] = []
        while not self.at(")"):
            pstart = self.tok
            t = self.parse_type()
            loc = ""
            indexed = False
            while True:
                if self.tok.text in _LOCATIONS and self.tok.kind is TokKind.IDENT:
                    loc = self.ident()
                elif allow_indexed and self.at("indexed"):
                    self.i += 1
                    indexed = True
                else:
                    break
            pname = None
            if self.tok.kind is TokKind.IDENT:
                pname = self.ident()
            params.append(self.mk(Param, pstart, pname, t, loc, indexed))
            if not self.accept(","):
                break
        self.expect(")")
        return params

    def parse_function(self, contract: str) -> FunctionDef:
        start = self.tok
        head = self.ident()
        if head == "function":
            if self.at("("):
                name, kind = "fallback", "fallback"
            else:
                name = self.ident()
                kind = "function"
        else:
            name, kind = head, head
        params = self.parse_params()
        visibility = "public" if kind == "constructor" else ("external" if kind in ("fallback", "receive") else "public")
        explicit_vis = False
        mutability = "nonpayable"
        modifiers: list[ModifierInvocation] = []
        returns: list[Param] = []
        is_virtual = overrides = False
        while True:
            t = self.tok
            if t.kind is not TokKind.IDENT:
                break
            if t.text in _VISIBILITY:
                visibility = t.text
                explicit_vis = True
                self.i += 1
            elif t.text in _MUTABILITY:
                mutability = "view" if t.text == "constant" else t.text
                self.i += 1
            elif t.text == "virtual":
                is_virtual = True
                self.i += 1
            elif t.text == "override":
                overrides = True
                self.i += 1
                if self.at("("):
                    self._skip_parens()
            elif t.text == "returns":
                self.i += 1
                returns = self.parse_params()
            else:
                mstart = self.tok
                mname = self._dotted()
                args = self._call_args_opt()
                modifiers.append(self.mk(ModifierInvocation, mstart, mname, args))
        if not explicit_vis and kind == "function":
            visibility = "public"
        body = None
        if not self.accept(";"):
            body = self.parse_block()
        return self.mk(
            FunctionDef, start, name, kind, params, returns, visibility, mutability, modifiers, body,
            contract, is_virtual, overrides,
        )

    def parse_modifier(self, contract: str) -> ModifierDef:
        start = self.tok
        self.expect("modifier")
        name = self.ident()
        params = self.parse_params() if self.at("(") else []
        while self.at("virtual") or self.at("override"):
            self.i += 1
            if self.at("("):
                self._skip_parens()
        body = None
        if not self.accept(";"):
            body = self.parse_block()
        return self.mk(ModifierDef, start, name, params, body, contract)

    # ------------------------------------------------------------ types

    def parse_type(self) -> TypeName:
        start = self.tok
        t = self.tok
        if t.is_("mapping"):
            self.i += 1
            self.expect("(")
            key = self.parse_type()
            if self.tok.kind is TokKind.IDENT and not self.at("=>"):
                self.i += 1  # named key
            self.expect("=>")
            value = self.parse_type()
            if self.tok.kind is TokKind.IDENT:
                self.i += 1  # named value
            self.expect(")")
            tn = self.mk(TypeName, start, "mapping", key, value)
        elif t.is_("function"):
            self.i += 1
            self._skip_parens()
            while self.tok.kind is TokKind.IDENT and (
                self.tok.text in _VISIBILITY or self.tok.text in _MUTABILITY or self.tok.text == "returns"
            ):
                if self.tok.text == "returns":
                    self.i += 1
                    self._skip_parens()
                else:
                    self.i += 1
            tn = self.mk(TypeName, start, "function")
        elif t.kind is TokKind.IDENT and t.text in ELEMENTARY_TYPES:
            self.i += 1
            name = t.text
            if name == "address" and self.at("payable"):
                self.i += 1
                name = "address payable"
            tn = self.mk(TypeName, start, name)
        elif t.kind is TokKind.IDENT and t.text not in _KEYWORDS:
            tn = self.mk(TypeName, start, self._dotted())
        else:
            self.fail(f"expected type name, found {t.text!r}")
        while self.at("["):
            self.i += 1
            length = None
            if not self.at("]"):
                length = self.parse_expression()
            self.expect("]")
            tn = self.mk(TypeName, start, "array", base=tn, length=length)
        return tn

    # ------------------------------------------------------------ statements

    def parse_block(self, unchecked: bool = False) -> Block:
        start = self.tok
        self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.tok.kind is TokKind.EOF:
                raise self.error("unterminated block", start)
            stmts.append(self.parse_statement())
        self.i += 1
        return self.mk(Block, start, stmts, unchecked)

    def parse_statement(self) -> Stmt:
        save = self.i
        try:
            return self._statement()
        except _Backtrack:
            self.i = save
            if self.at("{"):
                return self._skip_member()
            return self._skip_member()

    def _statement(self) -> Stmt:
        start = self.tok
        t = self.tok
        if t.is_("{"):
            return self.parse_block()
        if t.is_("unchecked") and self.peek().is_("{"):
            self.i += 1
            return self.parse_block(unchecked=True)
        if t.is_("if"):
            self.i += 1
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            then = self.parse_statement()
            orelse = None
            if self.accept("else"):
                orelse = self.parse_statement()
            return self.mk(If, start, cond, then, orelse)
        if t.is_("for"):
            self.i += 1
            self.expect("(")
            init = None
            if not self.accept(";"):
                init = self._simple_statement()
            cond = None
            if not self.at(";"):
                cond = self.parse_expression()
            self.expect(";")
            post = None
            if not self.at(")"):
                post = self.parse_expression()
            self.expect(")")
            body = self.parse_statement()
            return self.mk(For, start, init, cond, post, body)
        if t.is_("while"):
            self.i += 1
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            body = self.parse_statement()
            return self.mk(While, start, cond, body)
        if t.is_("do"):
            self.i += 1
            body = self.parse_statement()
            self.expect("while")
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            self.expect(";")
            return self.mk(DoWhile, start, body, cond)
        if t.is_("return"):
            self.i += 1
            value = None
            if not self.at(";"):
                value = self.parse_expression()
            self.expect(";")
            return self.mk(Return, start, value)
        if t.is_("emit"):
            self.i += 1
            call = self.parse_expression()
            self.expect(";")
            return self.mk(Emit, start, call)
        if t.is_("revert") and self.peek().kind is TokKind.IDENT:
            self.i += 1
            call = self.parse_expression()
            self.expect(";")
            return self.mk(RevertStmt, start, call)
        if t.is_("break") and self.peek().is_(";"):
            self.i += 2
            return self.mk(Break, start)
        if t.is_("continue") and self.peek().is_(";"):
            self.i += 2
            return self.mk(Continue, start)
        if t.is_("_") and self.peek().is_(";"):
            self.i += 2
            return self.mk(Placeholder, start)
        if t.is_("assembly"):
            return self._assembly()
        if t.is_("try"):
            return self._try()
        return self._simple_statement()

    def _simple_statement(self) -> Stmt:
        """Variable declaration or expression statement, terminated by ';'."""
        decl = self.attempt(self._var_decl)
        if decl is not None:
            return decl
        start = self.tok
        expr = self.parse_expression()
        self.expect(";")
        return self.mk(ExprStmt, start, expr)

    def _local_var(self) -> LocalVar:
        start = self.tok
        t = self.parse_type()
        loc = ""
        if self.tok.text in _LOCATIONS and self.tok.kind is TokKind.IDENT:
            loc = self.ident()
        if self.tok.text in _KEYWORDS:
            self.fail("keyword")
        name = self.ident()
        return self.mk(LocalVar, start, name, t, loc)

    def _var_decl(self) -> VarDecl:
        start = self.tok
        decls: list[Optional[LocalVar]] = []
        if self.at("("):
            self.i += 1
            while not self.at(")"):
                if self.at(","):
                    decls.append(None)
                    self.i += 1
                    continue
                decls.append(self._local_var())
                if not self.accept(","):
                    break
                if self.at(")"):
                    decls.append(None)
            self.expect(")")
            if not any(decls):
                self.fail("not a declaration")
            self.expect("=")
            value = self.parse_expression()
        else:
            decls.append(self._local_var())
            value = None
            if self.accept("="):
                value = self.parse_expression()
        self.expect(";")
        return self.mk(VarDecl, start, decls, value)

    def _try(self) -> Try:
        start = self.tok
        self.expect("try")
        expr = self.parse_expression()
        returns: list[Param] = []
        if self.accept("returns"):
            returns = self.parse_params()
        body = self.parse_block()
        catches: list[CatchClause] = []
        while self.at("catch"):
            cstart = self.tok
            self.i += 1
            cname = ""
            params: list[Param] = []
            if self.tok.kind is TokKind.IDENT:
                cname = self.ident()
            if self.at("("):
                params = self.parse_params()
            cbody = self.parse_block()
            catches.append(self.mk(CatchClause, cstart, cname, params, cbody))
        return self.mk(Try, start, expr, returns, body, catches)

    def _assembly(self) -> Opaque:
        start = self.tok
        self.expect("assembly")
        if self.tok.kind is TokKind.STRING:
            self.i += 1
        if self.at("("):
            self._skip_parens()
        if not self.at("{"):
            raise self.error("expected '{' after assembly")
        body_start = self.i
        depth = 0
        while True:
            t = self.tok
            if t.kind is TokKind.EOF:
                raise self.error("unterminated assembly block", start)
            if t.is_("{"):
                depth += 1
            elif t.is_("}"):
                depth -= 1
                if depth == 0:
                    self.i += 1
                    break
            self.i += 1
        body = self.toks[body_start:self.i]
        reads, writes, atoms, ecrecovers = _scan_yul(body)
        text = self.source[start.offset:self.toks[self.i - 1].end]
        return self.mk(Opaque, start, "assembly", text, reads, writes, atoms, ecrecovers)

    # ------------------------------------------------------------ expressions

    def parse_expression(self) -> Expr:
        start = self.tok
        lhs = self._conditional()
        if self.tok.kind is TokKind.PUNCT and self.tok.text in _ASSIGN_OPS:
            op = self.tok.text
            self.i += 1
            rhs = self.parse_expression()
            return self.mk(Assign, start, op, lhs, rhs)
        return lhs

    def _conditional(self) -> Expr:
        start = self.tok
        cond = self._binary(1)
        if self.accept("?"):
            then = self.parse_expression()
            self.expect(":")
            orelse = self.parse_expression()
            return self.mk(Conditional, start, cond, then, orelse)
        return cond

    def _binary(self, min_prec: int) -> Expr:
        start = self.tok
        left = self._unary()
        while True:
            t = self.tok
            prec = _BINARY_PREC.get(t.text) if t.kind is TokKind.PUNCT else None
            if prec is None or prec < min_prec:
                return left
            self.i += 1
            # ** is right-associative
            right = self._binary(prec if t.text == "**" else prec + 1)
            left = self.mk(Binary, start, t.text, left, right)

    def _unary(self) -> Expr:
        start = self.tok
        t = self.tok
        if t.kind is TokKind.PUNCT and t.text in ("!", "-", "~", "++", "--", "+"):
            self.i += 1
            operand = self._unary()
            return self.mk(Unary, start, t.text, operand, True)
        if t.is_("delete"):
            self.i += 1
            operand = self._unary()
            return self.mk(Unary, start, "delete", operand, True)
        return self._postfix()

    def _postfix(self) -> Expr:
        start = self.tok
        e = self._primary()
        while True:
            if self.at("."):
                self.i += 1
                if self.tok.kind is not TokKind.IDENT:
                    self.fail("expected member name")
                name = self.ident()
                e = self.mk(Member, start, e, name)
            elif self.at("["):
                self.i += 1
                if self.at("]"):
                    self.i += 1
                    e = self.mk(Index, start, e, None)
                    continue
                first = None if self.at(":") else self.parse_expression()
                if self.accept(":"):
                    stop = None if self.at("]") else self.parse_expression()
                    self.expect("]")
                    e = self.mk(IndexRange, start, e, first, stop)
                else:
                    self.expect("]")
                    e = self.mk(Index, start, e, first)
            elif self.at("("):
                e = self._call(start, e, {})
            elif self.at("{") and self._looks_like_call_options():
                self.i += 1
                options: dict[str, Expr] = {}
                while not self.at("}"):
                    key = self.ident()
                    self.expect(":")
                    options[key] = self.parse_expression()
                    if not self.accept(","):
                        break
                self.expect("}")
                if self.at("("):
                    e = self._call(start, e, options)
                else:
                    e = self.mk(Call, start, e, [], [], options)
            elif self.tok.kind is TokKind.PUNCT and self.tok.text in ("++", "--"):
                op = self.tok.text
                self.i += 1
                e = self.mk(Unary, start, op, e, False)
            else:
                return e

    def _looks_like_call_options(self) -> bool:
        return self.peek().kind is TokKind.IDENT and self.peek(2).is_(":")

    def _call(self, start: Token, callee: Expr, options: dict[str, Expr]) -> Call:
        self.expect("(")
        args: list[Expr] = []
        names: list[str] = []
        if self.at("{"):
            self.i += 1
            while not self.at("}"):
                names.append(self.ident())
                self.expect(":")
                args.append(self.parse_expression())
                if not self.accept(","):
                    break
            self.expect("}")
        else:
            while not self.at(")"):
                args.append(self.parse_expression())
                if not self.accept(","):
                    break
        self.expect(")")
        return self.mk(Call, start, callee, args, names, options)

    def _primary(self) -> Expr:
        start = self.tok
        t = self.tok
        if t.kind is TokKind.NUMBER:
            self.i += 1
            text = t.text
            if self.tok.kind is TokKind.IDENT and self.tok.text in _UNITS:
                text = f"{text} {self.tok.text}"
                self.i += 1
            return self.mk(Literal, start, "number", text)
        if t.kind is TokKind.STRING:
            self.i += 1
            text = t.text
            while self.tok.kind is TokKind.STRING:  # adjacent literals concatenate
                text += " " + self.tok.text
                self.i += 1
            return self.mk(Literal, start, "string", text)
        if t.kind is TokKind.HEXSTR:
            self.i += 1
            return self.mk(Literal, start, "hex", t.text)
        if t.is_("true") or t.is_("false"):
            self.i += 1
            return self.mk(Literal, start, "bool", t.text)
        if t.is_("("):
            self.i += 1
            items: list[Optional[Expr]] = []
            while not self.at(")"):
                if self.at(","):
                    items.append(None)
                    self.i += 1
                    if self.at(")"):
                        items.append(None)
                    continue
                items.append(self.parse_expression())
                if self.at(","):
                    self.i += 1
                    if self.at(")"):
                        items.append(None)
                else:
                    break
            self.expect(")")
            return self.mk(TupleExpr, start, items)
        if t.is_("["):
            self.i += 1
            elems: list[Expr] = []
            while not self.at("]"):
                elems.append(self.parse_expression())
                if not self.accept(","):
                    break
            self.expect("]")
            return self.mk(ArrayLit, start, elems)
        if t.is_("new"):
            self.i += 1
            tn = self.parse_type()
            return self.mk(NewExpr, start, tn)
        if t.is_("mapping") or t.is_("function"):
            tn = self.parse_type()
            return self.mk(TypeExpr, start, tn)
        if t.kind is TokKind.IDENT:
            if t.text in ELEMENTARY_TYPES:
                self.i += 1
                name = t.text
                if name == "address" and self.at("payable"):
                    self.i += 1
                    name = "address payable"
                return self.mk(ElementaryTypeExpr, start, name)
            if t.text in _KEYWORDS and t.text not in ("this", "super", "type", "now"):
                self.fail(f"unexpected keyword {t.text!r}")
            self.i += 1
            return self.mk(Ident, start, t.text)
        self.fail(f"unexpected token {t.text or 'end of file'!r}")


_KEYWORDS = {
    "if", "else", "for", "while", "do", "return", "returns", "emit", "break", "continue",
    "function", "modifier", "contract", "interface", "library", "struct", "enum", "event",
    "mapping", "new", "delete", "assembly", "try", "catch", "pragma", "import", "using",
    "constructor", "memory", "storage", "calldata", "public", "private", "internal",
    "external", "pure", "view", "payable", "constant", "immutable", "virtual", "override",
    "indexed", "anonymous", "unchecked", "is", "this", "super", "type", "now",
}


def _scan_yul(body: list[Token]) -> tuple[list[str], list[str], list[str], int]:
    """Identifier reads/writes of a Yul block, plus environment atoms."""
    reads: list[str] = []
    writes: list[str] = []
    atoms: list[str] = []
    local: set[str] = set()
    ecrecovers = 0
    n = len(body)

    def add(lst: list[str], name: str) -> None:
        if name not in lst:
            lst.append(name)

    k = 0
    while k < n:
        t = body[k]
        if t.kind is not TokKind.IDENT:
            k += 1
            continue
        name = t.text
        nxt = body[k + 1] if k + 1 < n else None
        if name == "ecrecover" or (name == "staticcall" and _precompile_target(body, k + 1) == 1):
            ecrecovers += 1
        if name == "let":
            # let a, b := ...
            k += 1
            while k < n and body[k].kind is TokKind.IDENT:
                local.add(body[k].text)
                k += 1
                if k < n and body[k].is_(","):
                    k += 1
                else:
                    break
            continue
        if name == "function":
            # skip the function name; its parameters become local
            k += 1
            if k < n:
                local.add(body[k].text)
            k += 1
            while k < n and not body[k].is_("{"):
                if body[k].kind is TokKind.IDENT:
                    local.add(body[k].text)
                k += 1
            continue
        if name in _YUL_KEYWORDS:
            k += 1
            continue
        if nxt is not None and nxt.is_("("):
            if name in _YUL_ATOMS:
                add(atoms, _YUL_ATOMS[name])
            k += 1
            continue
        if nxt is not None and nxt.is_(".") and k + 2 < n and body[k + 2].text in ("slot", "offset", "length"):
            if name not in local:
                add(reads, name)
            k += 3
            continue
        # assignment targets: a, b := ...
        j = k
        targets = [name]
        while j + 2 < n and body[j + 1].is_(",") and body[j + 2].kind is TokKind.IDENT:
            targets.append(body[j + 2].text)
            j += 2
        prev = body[k - 1] if k > 0 else None
        if j + 1 < n and body[j + 1].is_(":=") and not (prev is not None and prev.is_(",")):
            for tgt in targets:
                if tgt not in local:
                    add(writes, tgt)
            k = j + 2
            continue
        if name not in local:
            add(reads, name)
        k += 1
    return reads, writes, atoms, ecrecovers


def _precompile_target(body: list[Token], k: int) -> Optional[int]:
    """Numeric address argument of a ``staticcall(gas, address, ...)`` opening at ``k``."""
    if k >= len(body) or not body[k].is_("("):
        return None
    depth = 0
    for j in range(k, len(body)):
        t = body[j]
        if t.is_("("):
            depth += 1
        elif t.is_(")"):
            depth -= 1
            if depth == 0:
                return None
        elif t.is_(",") and depth == 1:
            if j + 2 < len(body) and body[j + 1].kind is TokKind.NUMBER and body[j + 2].is_(","):
                try:
                    return int(body[j + 1].text, 0)
                except ValueError:
                    return None
            return None
    return None


def parse_source(source_text: str, path: str = "") -> AstUnit:
    """Parse Solidity text into an :class:`AstUnit` (inheritance not yet resolved)."""
    return Parser(source_text, path).parse_unit()
