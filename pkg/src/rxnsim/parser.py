"""Reader and writer for the line-oriented ``.rxn`` network format.

Example::

    # enzyme kinetics
    species: E, S, ES, P
    params: k1=1e6, k2=1e-4, k3=0.1
    init: E=5e-5, S=2e-4
    E + S <-> ES : k1, k2
    ES -> E + P : k3
    scale: P@3=0.5

Statements are one per line; ``#`` starts a comment.  Reactant and product
sides are ``+``-joined terms ``[coeff ]name``; ``0`` or an empty side is the
empty complex.  ``<->`` expands into a forward and a reverse reaction.  A
``scale`` item ``name@r=factor`` multiplies the step-change entry of species
``name`` in (1-based) reaction ``r``; ``name=factor`` applies to every
reaction that changes ``name``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import NetworkError, RxnSimError
from .network import NetworkSpec, ReactionSpec

__all__ = [
    "ParseDiagnostic",
    "NetworkParseError",
    "parse_network",
    "parse_with_diagnostics",
    "load_network",
    "serialize_network",
]

NAME = r"[A-Za-z_][A-Za-z0-9_]*"
NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_NAME_RE = re.compile(NAME)
_NUMBER_RE = re.compile(r"[+-]?" + NUMBER)
_KEYWORD_RE = re.compile(r"\s*(species|params|init|scale)\s*:")
# '+' that is not the sign of an exponent
_PLUS_RE = re.compile(r"(?<![0-9.][eE])\+")

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str
    line: int
    column: int
    message: str
    text: str = ""

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class NetworkParseError(RxnSimError, ValueError):
    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        errors = [d for d in diagnostics if d.severity == ERROR]
        super().__init__("\n".join(str(d) for d in errors) or "invalid network")


@dataclass
class _Term:
    name: str
    coeff: float
    line: int
    col: int


@dataclass
class _Reaction:
    reactants: list[_Term]
    products: list[_Term]
    rate: str
    line: int
    rate_col: int


@dataclass
class _State:
    diags: list[ParseDiagnostic] = field(default_factory=list)
    declared: list[str] = field(default_factory=list)
    declared_at: dict[str, tuple[int, int]] = field(default_factory=dict)
    has_species_line: bool = False
    params: dict[str, float] = field(default_factory=dict)
    init: list[tuple[str, float, int, int]] = field(default_factory=list)
    scales: list[tuple[str, int | None, float, int, int]] = field(default_factory=list)
    reactions: list[_Reaction] = field(default_factory=list)

    def error(self, line, col, msg, text=""):
        self.diags.append(ParseDiagnostic(ERROR, line, max(col, 1), msg, text))

    def warn(self, line, col, msg, text=""):
        self.diags.append(ParseDiagnostic(WARNING, line, max(col, 1), msg, text))


def _split(text: str, sep, start: int):
    """Split ``text`` on ``sep`` (str or compiled regex), yielding
    ``(stripped_piece, 1-based column of the piece)``."""
    pieces = []
    pos = 0
    matches = sep.finditer(text) if hasattr(sep, "finditer") else re.finditer(re.escape(sep), text)
    for m in matches:
        pieces.append((text[pos:m.start()], pos))
        pos = m.end()
    pieces.append((text[pos:], pos))
    out = []
    for piece, off in pieces:
        lead = len(piece) - len(piece.lstrip())
        out.append((piece.strip(), start + off + lead))
    return out


def _parse_assignments(st: _State, body: str, lineno: int, col0: int, what: str):
    items = []
    for item, col in _split(body, ",", col0):
        if not item:
            if body.strip():
                st.error(lineno, col, f"empty {what} entry")
            continue
        if "=" not in item:
            st.error(lineno, col, f"expected name=value in {what} line", item)
            continue
        name, value = (s.strip() for s in item.split("=", 1))
        if not _NAME_RE.fullmatch(name):
            st.error(lineno, col, f"invalid name {name!r}", item)
            continue
        vcol = col + item.index("=") + 1 + (len(item.split("=", 1)[1]) - len(item.split("=", 1)[1].lstrip()))
        if not _NUMBER_RE.fullmatch(value):
            st.error(lineno, vcol, f"malformed number {value!r}", value)
            continue
        items.append((name, float(value), col, vcol))
    return items


def _parse_side(st: _State, side: str, lineno: int, col0: int) -> list[_Term]:
    if side.strip() in ("", "0"):
        return []
    terms = []
    for piece, col in _split(side, _PLUS_RE, col0):
        if not piece:
            st.error(lineno, col, "empty term")
            continue
        parts = piece.split()
        if len(parts) == 1:
            coeff_txt, name = None, parts[0]
        elif len(parts) == 2:
            coeff_txt, name = parts
        else:
            st.error(lineno, col, f"malformed term {piece!r}", piece)
            continue
        coeff = 1.0
        if coeff_txt is not None:
            if not re.fullmatch(NUMBER, coeff_txt):
                st.error(lineno, col, f"malformed stoichiometric coefficient {coeff_txt!r}", coeff_txt)
                continue
            coeff = float(coeff_txt)
        if not _NAME_RE.fullmatch(name):
            ncol = col + piece.index(name)
            if coeff_txt is None and re.match(r"[+-]?[\d.]", name):
                msg = f"malformed stoichiometric coefficient in {name!r}"
            else:
                msg = f"invalid species name {name!r}"
            st.error(lineno, ncol, msg, name)
            continue
        terms.append(_Term(name, coeff, lineno, col + piece.index(name)))
    return _merge(st, terms)


def _merge(st: _State, terms: list[_Term]) -> list[_Term]:
    merged: dict[str, _Term] = {}
    for t in terms:
        if t.name in merged:
            st.warn(t.line, t.col, f"species {t.name!r} repeated on one side; coefficients summed", t.name)
            merged[t.name].coeff += t.coeff
        else:
            merged[t.name] = _Term(t.name, t.coeff, t.line, t.col)
    return list(merged.values())


def _parse_reaction(st: _State, code: str, lineno: int):
    if ":" not in code:
        st.error(lineno, len(code.rstrip()) + 1, "reaction has no rate (expected ': rate')")
        return
    colon = code.index(":")
    lhs_rhs, rates = code[:colon], code[colon + 1:]
    reversible = "<->" in lhs_rhs
    arrow = "<->" if reversible else "->"
    if lhs_rhs.count(arrow) != 1 or (reversible and "->" in lhs_rhs.replace("<->", "")):
        st.error(lineno, 1, "expected exactly one '->' or '<->'", lhs_rhs.strip())
        return
    a = lhs_rhs.index(arrow)
    left = _parse_side(st, lhs_rhs[:a], lineno, 1)
    right = _parse_side(st, lhs_rhs[a + len(arrow):], lineno, a + len(arrow) + 1)
    rate_items = _split(rates, ",", colon + 2)
    want = 2 if reversible else 1
    if len(rate_items) != want or any(not r for r, _ in rate_items):
        st.error(lineno, colon + 1, f"expected {want} rate expression(s)", rates.strip())
        return
    st.reactions.append(_Reaction(left, right, rate_items[0][0], lineno, rate_items[0][1]))
    if reversible:
        st.reactions.append(_Reaction(
            [_Term(t.name, t.coeff, t.line, t.col) for t in right],
            [_Term(t.name, t.coeff, t.line, t.col) for t in left],
            rate_items[1][0], lineno, rate_items[1][1],
        ))


def _parse_line(st: _State, code: str, lineno: int):
    kw = _KEYWORD_RE.match(code)
    if kw:
        key, body, col0 = kw.group(1), code[kw.end():], kw.end() + 1
        if key == "species":
            st.has_species_line = True
            for name, col in _split(body, ",", col0):
                if not name:
                    if body.strip():
                        st.error(lineno, col, "empty species entry")
                    continue
                if not _NAME_RE.fullmatch(name):
                    st.error(lineno, col, f"invalid species name {name!r}", name)
                elif name in st.declared_at:
                    prev = st.declared_at[name]
                    st.error(lineno, col, f"species {name!r} already declared at line {prev[0]}", name)
                else:
                    st.declared.append(name)
                    st.declared_at[name] = (lineno, col)
        elif key == "params":
            for name, value, col, vcol in _parse_assignments(st, body, lineno, col0, "params"):
                if name in st.params:
                    st.error(lineno, col, f"parameter {name!r} defined twice", name)
                else:
                    if value < 0:
                        st.error(lineno, vcol, f"negative rate constant {name}={value!r}", name)
                    st.params[name] = value
        elif key == "init":
            for name, value, col, vcol in _parse_assignments(st, body, lineno, col0, "init"):
                if value < 0:
                    st.error(lineno, vcol, f"negative initial concentration for {name!r}", name)
                else:
                    st.init.append((name, value, lineno, col))
        else:
            for item, col in _split(body, ",", col0):
                if not item:
                    continue
                m = re.fullmatch(rf"({NAME})\s*(?:@\s*(\d+))?\s*=\s*(\S+)", item)
                if not m:
                    st.error(lineno, col, "expected species@reaction=factor or species=factor", item)
                    continue
                factor_txt = m.group(3)
                if not _NUMBER_RE.fullmatch(factor_txt) or float(factor_txt) <= 0:
                    st.error(lineno, col + m.start(3), f"scale factor must be a positive number, got {factor_txt!r}", item)
                    continue
                rxn = int(m.group(2)) if m.group(2) else None
                st.scales.append((m.group(1), rxn, float(factor_txt), lineno, col))
        return
    if "->" in code:
        _parse_reaction(st, code, lineno)
        return
    st.error(lineno, len(code) - len(code.lstrip()) + 1, "unrecognised statement", code.strip())


def parse_with_diagnostics(text: str) -> tuple[NetworkSpec | None, list[ParseDiagnostic]]:
    """Parse ``text``; return ``(spec, diagnostics)``.

    ``spec`` is None when any diagnostic has severity ``"error"``.
    """
    if text.startswith("\ufeff"):
        text = text[1:]
    st = _State()
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        code = raw.split("#", 1)[0].rstrip()
        if code.strip():
            _parse_line(st, code, lineno)

    # species indexing
    if st.has_species_line:
        species = list(st.declared)
        known = set(species)
        for r in st.reactions:
            for t in r.reactants + r.products:
                if t.name not in known:
                    st.error(t.line, t.col, f"unknown species {t.name!r} (not in species declaration)", t.name)
    else:
        species, seen = [], set()
        for r in st.reactions:
            for t in r.reactants + r.products:
                if t.name not in seen:
                    seen.add(t.name)
                    species.append(t.name)
    index = {name: i for i, name in enumerate(species)}

    initial = [0.0] * len(species)
    given = set()
    for name, value, lineno, col in st.init:
        if name not in index:
            st.error(lineno, col, f"unknown species {name!r} in init", name)
        elif name in given:
            st.error(lineno, col, f"initial value for {name!r} given twice", name)
        else:
            given.add(name)
            initial[index[name]] = value
    missing = [s for s in species if s not in given]
    if missing and species:
        st.warn(1, 1, "no initial value for " + ", ".join(missing) + "; defaulting to 0")

    rates = []
    for r in st.reactions:
        expr = r.rate
        if _NUMBER_RE.fullmatch(expr):
            value = float(expr)
            if value < 0:
                st.error(r.line, r.rate_col, f"negative rate {expr!r}", expr)
        elif _NAME_RE.fullmatch(expr):
            value = st.params.get(expr)
            if value is None:
                st.error(r.line, r.rate_col, f"undefined rate symbol {expr!r}", expr)
        else:
            st.error(r.line, r.rate_col, f"rate must be a number or a parameter name, got {expr!r}", expr)
            value = None
        rates.append(value)

    modifiers: list[dict[int, float]] = [{} for _ in st.reactions]
    for name, rxn, factor, lineno, col in st.scales:
        if name not in index:
            st.error(lineno, col, f"unknown species {name!r} in scale", name)
            continue
        changes = [
            m for m, r in enumerate(st.reactions)
            if _net_change(r, name) != 0
        ]
        if rxn is None:
            targets = changes
            if not targets:
                st.error(lineno, col, f"species {name!r} is not changed by any reaction", name)
        elif not 1 <= rxn <= len(st.reactions):
            st.error(lineno, col, f"reaction {rxn} does not exist (network has {len(st.reactions)})", name)
            continue
        elif rxn - 1 not in changes:
            st.error(lineno, col, f"species {name!r} is not changed by reaction {rxn}", name)
            continue
        else:
            targets = [rxn - 1]
        for m in targets:
            if index[name] in modifiers[m]:
                st.error(lineno, col, f"species {name!r} scaled twice in reaction {m + 1}", name)
            modifiers[m][index[name]] = factor

    if not species and not any(d.severity == ERROR for d in st.diags):
        st.error(1, 1, "network declares no species")

    if any(d.severity == ERROR for d in st.diags):
        return None, _sorted(st.diags)

    reactions = tuple(
        ReactionSpec(
            reactants=tuple((index[t.name], t.coeff) for t in r.reactants),
            products=tuple((index[t.name], t.coeff) for t in r.products),
            rate=rate,
            modifiers=tuple(modifiers[m].items()),
        )
        for m, (r, rate) in enumerate(zip(st.reactions, rates))
    )
    spec = NetworkSpec(tuple(species), reactions, tuple(initial))
    return spec, _sorted(st.diags)


def _net_change(r: _Reaction, name: str) -> float:
    lhs = sum(t.coeff for t in r.reactants if t.name == name)
    rhs = sum(t.coeff for t in r.products if t.name == name)
    return rhs - lhs


def _sorted(diags):
    return sorted(diags, key=lambda d: (d.line, d.column))


def parse_network(text: str) -> NetworkSpec:
    """Parse ``.rxn`` text, raising :class:`NetworkParseError` on errors."""
    spec, diags = parse_with_diagnostics(text)
    if spec is None:
        raise NetworkParseError(diags)
    return spec


def load_network(path) -> NetworkSpec:
    return parse_network(Path(path).read_text(encoding="utf-8"))


def _num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _side(spec: NetworkSpec, terms) -> str:
    if not terms:
        return "0"
    out = []
    for i, c in terms:
        name = spec.species[i]
        out.append(name if c == 1 else f"{_num(c)} {name}")
    return " + ".join(out)


def serialize_network(spec: NetworkSpec) -> str:
    """Canonical ``.rxn`` text for ``spec``.

    Species are declared in index order, every initial value is written,
    rates are emitted as shortest round-trip literals and reactions appear
    in index order, so ``parse_network(serialize_network(s)) == s``.
    """
    spec.validate()
    for name in spec.species:
        if not _NAME_RE.fullmatch(name):
            raise NetworkError(f"species name {name!r} cannot be written in .rxn format")
    lines = [
        "species: " + ", ".join(spec.species),
        "init: " + ", ".join(f"{n}={_num(v)}" for n, v in zip(spec.species, spec.initial)),
    ]
    scales = []
    for m, rxn in enumerate(spec.reactions, start=1):
        lines.append(f"{_side(spec, rxn.reactants)} -> {_side(spec, rxn.products)} : {_num(rxn.rate)}")
        scales.extend(f"{spec.species[i]}@{m}={_num(f)}" for i, f in rxn.modifiers)
    if scales:
        lines.append("scale: " + ", ".join(scales))
    return "\n".join(lines) + "\n"
