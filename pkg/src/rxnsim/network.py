"""Network data model and compilation into the sparse evaluation layout.

A :class:`NetworkSpec` is the human-oriented description produced by the
parser.  :func:`compile_network` turns it into a :class:`CompiledNetwork`,
which holds

* the sparse stoichiometry (reactant/product index-value pairs and the
  rate-scaled step-change matrix ``Dk``),
* one :class:`JacobianColumn` per species with the reduced blocks used to
  assemble column ``j`` of the Jacobian, and
* a precomputed evaluation plan consumed by :mod:`rxnsim.kinetics`.

Species and reactions are indexed from 0 throughout the Python API.  The
padded index matrices ``l_idx``/``r_idx`` follow the classic layout with
1-based species indices and ``0`` as the empty-slot sentinel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyNetwork,
    ModifierOnZeroEntry,
    NegativeCoefficient,
    NetworkError,
    NonIntegerOrderInStrictMode,
    NonPositiveFactor,
    UnknownSpecies,
)

__all__ = [
    "ReactionSpec",
    "NetworkSpec",
    "SparseStoichiometry",
    "JacobianColumn",
    "CompiledNetwork",
    "compile_network",
    "apply_modifiers",
    "dense_stoichiometry",
    "STRICT",
    "GENERALIZED",
]

STRICT = "strict"
GENERALIZED = "generalized"

Terms = tuple[tuple[int, float], ...]


def _is_integral(v: float) -> bool:
    return float(v).is_integer()


@dataclass(frozen=True)
class ReactionSpec:
    """One elementary reaction.

    ``reactants`` and ``products`` are ``(species_index, coefficient)``
    pairs.  ``modifiers`` holds ``(species_index, factor)`` pairs that scale
    the step-change entry of that species in this reaction.
    """

    reactants: Terms
    products: Terms
    rate: float
    modifiers: Terms = ()

    def __post_init__(self):
        object.__setattr__(self, "reactants", tuple((int(i), float(c)) for i, c in self.reactants))
        object.__setattr__(self, "products", tuple((int(i), float(c)) for i, c in self.products))
        object.__setattr__(self, "modifiers", tuple((int(i), float(c)) for i, c in self.modifiers))
        object.__setattr__(self, "rate", float(self.rate))

    def validate(self, n_species: int, index: int | None = None) -> None:
        where = "" if index is None else f" in reaction {index}"
        if not math.isfinite(self.rate) or self.rate < 0:
            raise NegativeCoefficient(f"rate must be finite and non-negative{where}, got {self.rate}")
        for side, terms in (("reactant", self.reactants), ("product", self.products)):
            seen = set()
            for i, c in terms:
                if not 0 <= i < n_species:
                    raise UnknownSpecies(i)
                if i in seen:
                    raise NetworkError(f"species {i} listed twice as {side}{where}")
                seen.add(i)
                if not math.isfinite(c) or c < 0:
                    raise NegativeCoefficient(f"{side} coefficient {c} of species {i}{where}")
        seen = set()
        for i, f in self.modifiers:
            if not 0 <= i < n_species:
                raise UnknownSpecies(i)
            if i in seen:
                raise NetworkError(f"species {i} has two modifiers{where}")
            seen.add(i)
            if not math.isfinite(f) or f <= 0:
                raise NonPositiveFactor(f"modifier factor must be finite and positive{where}, got {f}")


@dataclass(frozen=True)
class NetworkSpec:
    """Parsed network: species names, elementary reactions, initial state."""

    species: tuple[str, ...]
    reactions: tuple[ReactionSpec, ...]
    initial: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        init = tuple(float(v) for v in self.initial)
        if not init:
            init = (0.0,) * len(self.species)
        object.__setattr__(self, "initial", init)

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    def index(self, name: str) -> int:
        try:
            return self.species.index(name)
        except ValueError:
            raise UnknownSpecies(name) from None

    def validate(self) -> None:
        if not self.species:
            raise NetworkError("network declares no species")
        names = set()
        for name in self.species:
            if not name:
                raise NetworkError("empty species name")
            if name in names:
                raise NetworkError(f"duplicate species {name!r}")
            names.add(name)
        if len(self.initial) != len(self.species):
            raise NetworkError("initial state length does not match species count")
        for name, v in zip(self.species, self.initial):
            if not math.isfinite(v) or v < 0:
                raise NegativeCoefficient(f"initial concentration of {name!r} must be non-negative")
        for m, rxn in enumerate(self.reactions):
            rxn.validate(self.n_species, m)


def dense_stoichiometry(spec: NetworkSpec) -> tuple[np.ndarray, np.ndarray]:
    """Dense reactant and product matrices ``L`` and ``R`` (N x M)."""
    L = np.zeros((spec.n_species, spec.n_reactions))
    R = np.zeros_like(L)
    for m, rxn in enumerate(spec.reactions):
        for i, c in rxn.reactants:
            L[i, m] += c
        for i, c in rxn.products:
            R[i, m] += c
    return L, R


def _csc(columns: Sequence[Sequence[tuple[int, float]]]):
    ptr = np.zeros(len(columns) + 1, dtype=np.int64)
    idx: list[int] = []
    val: list[float] = []
    for m, col in enumerate(columns):
        for i, v in sorted(col):
            idx.append(i)
            val.append(v)
        ptr[m + 1] = len(idx)
    return ptr, np.asarray(idx, dtype=np.int64), np.asarray(val, dtype=float)


def _padded(ptr: np.ndarray, idx: np.ndarray, val: np.ndarray):
    counts = np.diff(ptr)
    width = int(counts.max()) if counts.size else 0
    pidx = np.zeros((width, counts.size), dtype=np.int64)
    pval = np.zeros((width, counts.size))
    for m in range(counts.size):
        a, b = ptr[m], ptr[m + 1]
        pidx[: b - a, m] = idx[a:b] + 1
        pval[: b - a, m] = val[a:b]
    return pidx, pval


@dataclass(frozen=True, eq=False)
class SparseStoichiometry:
    """Column-compressed reactant, product and rate-scaled step-change data.

    Only nonzero entries are stored.  Column ``m`` of ``L`` occupies
    ``l_species[l_ptr[m]:l_ptr[m+1]]`` (ascending species) with orders in
    ``l_order``; ``R`` and ``Dk`` use the same layout.  ``Dk`` holds an entry
    for every structurally nonzero ``d_nm = r_nm - l_nm``, even when the rate
    constant is zero, so the sparsity pattern depends only on the topology.
    """

    n_species: int
    n_reactions: int
    rates: np.ndarray
    l_ptr: np.ndarray
    l_species: np.ndarray
    l_order: np.ndarray
    r_ptr: np.ndarray
    r_species: np.ndarray
    r_mult: np.ndarray
    dk_ptr: np.ndarray
    dk_rows: np.ndarray
    dk_vals: np.ndarray

    @property
    def stored_entries(self) -> int:
        return self.l_species.size + self.r_species.size + self.dk_rows.size

    @property
    def dk_cols(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_reactions), np.diff(self.dk_ptr))

    @property
    def l_idx(self) -> np.ndarray:
        """Padded reactant index matrix (1-based, 0 = empty slot)."""
        return _padded(self.l_ptr, self.l_species, self.l_order)[0]

    @property
    def l_val(self) -> np.ndarray:
        return _padded(self.l_ptr, self.l_species, self.l_order)[1]

    @property
    def r_idx(self) -> np.ndarray:
        return _padded(self.r_ptr, self.r_species, self.r_mult)[0]

    @property
    def r_val(self) -> np.ndarray:
        return _padded(self.r_ptr, self.r_species, self.r_mult)[1]

    def _dense(self, ptr, idx, val) -> np.ndarray:
        out = np.zeros((self.n_species, self.n_reactions))
        out[idx, np.repeat(np.arange(self.n_reactions), np.diff(ptr))] = val
        return out

    def dense_L(self) -> np.ndarray:
        return self._dense(self.l_ptr, self.l_species, self.l_order)

    def dense_R(self) -> np.ndarray:
        return self._dense(self.r_ptr, self.r_species, self.r_mult)

    def dense_D(self) -> np.ndarray:
        return self.dense_R() - self.dense_L()

    def dense_dk(self) -> np.ndarray:
        return self._dense(self.dk_ptr, self.dk_rows, self.dk_vals)

    def dk_position(self, n: int, m: int) -> int | None:
        """Offset of entry (n, m) inside ``dk_vals``, or None if absent."""
        a, b = self.dk_ptr[m], self.dk_ptr[m + 1]
        k = int(np.searchsorted(self.dk_rows[a:b], n))
        if k < b - a and self.dk_rows[a + k] == n:
            return int(a + k)
        return None


@dataclass(frozen=True, eq=False)
class JacobianColumn:
    """Reduced blocks for Jacobian column ``species``.

    ``reactions`` lists the reactions consuming the species.  ``l_idx`` and
    ``tilde_val`` are the matching columns of the padded reactant matrices,
    with the species' own exponent lowered by one in ``tilde_val``.  The
    reduced ``Dk`` block is kept as coordinates ``(dk_rows, dk_cols, dk_vals)``
    with ``dk_cols`` local to ``reactions``.
    """

    species: int
    reactions: np.ndarray
    orders: np.ndarray
    l_idx: np.ndarray
    tilde_val: np.ndarray
    dk_rows: np.ndarray
    dk_cols: np.ndarray
    dk_vals: np.ndarray


@dataclass(frozen=True, eq=False)
class _Plan:
    # monomials: gather x into X (width x M), raise to L^v, multiply down columns
    l_idx: np.ndarray
    l_val: np.ndarray
    nonint: np.ndarray | None
    # RHS accumulation over dk entries in row-major order
    rhs_cols: np.ndarray
    rhs_vals: np.ndarray
    rhs_rows: np.ndarray
    rhs_starts: np.ndarray
    # Jacobian terms, one per (species j, reaction m) with l_jm > 0
    term_idx: np.ndarray
    term_exp: np.ndarray
    term_coef: np.ndarray
    term_nonint: np.ndarray | None
    term_negexp: np.ndarray | None
    # contributions dk_nm * term, grouped by Jacobian storage position
    contrib_term: np.ndarray
    contrib_vals: np.ndarray
    contrib_starts: np.ndarray
    jac_indptr: np.ndarray
    jac_indices: np.ndarray


@dataclass(frozen=True, eq=False)
class CompiledNetwork:
    stoich: SparseStoichiometry
    jac_columns: tuple[JacobianColumn, ...]
    species_names: tuple[str, ...]
    mode: str = STRICT
    modifiers: tuple[tuple[int, int, float], ...] = ()
    plan: _Plan = field(repr=False, default=None)

    @property
    def n_species(self) -> int:
        return self.stoich.n_species

    @property
    def n_reactions(self) -> int:
        return self.stoich.n_reactions

    @property
    def generalized(self) -> bool:
        """True when some kinetic order is not an integer."""
        return self.plan.nonint is not None

    @property
    def jacobian_nnz(self) -> int:
        return int(self.plan.jac_indices.size)


def _build_plan(st: SparseStoichiometry) -> tuple[_Plan, tuple[JacobianColumn, ...]]:
    N, M = st.n_species, st.n_reactions
    l_idx, l_val = _padded(st.l_ptr, st.l_species, st.l_order)
    width = l_idx.shape[0]
    has_real = not all(_is_integral(v) for v in st.l_order)
    nonint = (l_val != np.round(l_val)) if has_real else None

    dk_cols = st.dk_cols
    order = np.lexsort((dk_cols, st.dk_rows))
    rhs_rows_all = st.dk_rows[order]
    rhs_rows, rhs_starts = np.unique(rhs_rows_all, return_index=True)

    # per-species reduced blocks
    l_cols = np.repeat(np.arange(M), np.diff(st.l_ptr))
    columns = []
    t_idx, t_exp, t_coef, t_species, t_reaction = [], [], [], [], []
    for j in range(N):
        sel = np.nonzero(st.l_species == j)[0]
        ms = l_cols[sel]
        orders = st.l_order[sel]
        block_idx = l_idx[:, ms]
        tilde = l_val[:, ms].copy()
        for c in range(ms.size):
            slot = int(np.nonzero(block_idx[:, c] == j + 1)[0][0])
            tilde[slot, c] = orders[c] - 1.0
        rows, cols, vals = [], [], []
        for c, m in enumerate(ms):
            a, b = st.dk_ptr[m], st.dk_ptr[m + 1]
            rows.extend(st.dk_rows[a:b])
            cols.extend([c] * (b - a))
            vals.extend(st.dk_vals[a:b])
        columns.append(
            JacobianColumn(
                species=j,
                reactions=ms,
                orders=orders,
                l_idx=block_idx,
                tilde_val=tilde,
                dk_rows=np.asarray(rows, dtype=np.int64),
                dk_cols=np.asarray(cols, dtype=np.int64),
                dk_vals=np.asarray(vals, dtype=float),
            )
        )
        t_idx.append(block_idx)
        t_exp.append(tilde)
        t_coef.append(orders)
        t_species.append(np.full(ms.size, j, dtype=np.int64))
        t_reaction.append(ms)

    term_idx = np.concatenate(t_idx, axis=1) if t_idx else np.zeros((width, 0), dtype=np.int64)
    term_exp = np.concatenate(t_exp, axis=1) if t_exp else np.zeros((width, 0))
    term_coef = np.concatenate(t_coef) if t_coef else np.zeros(0)
    term_species = np.concatenate(t_species) if t_species else np.zeros(0, dtype=np.int64)
    term_reaction = np.concatenate(t_reaction) if t_reaction else np.zeros(0, dtype=np.int64)

    # contributions dk_nm * term(j, m); sorted by (j, n, m)
    c_term, c_dk, c_col, c_row, c_rxn = [], [], [], [], []
    for t in range(term_coef.size):
        m = term_reaction[t]
        a, b = st.dk_ptr[m], st.dk_ptr[m + 1]
        for p in range(a, b):
            c_term.append(t)
            c_dk.append(p)
            c_col.append(term_species[t])
            c_row.append(st.dk_rows[p])
            c_rxn.append(m)
    c_term = np.asarray(c_term, dtype=np.int64)
    c_dk = np.asarray(c_dk, dtype=np.int64)
    c_col = np.asarray(c_col, dtype=np.int64)
    c_row = np.asarray(c_row, dtype=np.int64)
    c_rxn = np.asarray(c_rxn, dtype=np.int64)
    order_c = np.lexsort((c_rxn, c_row, c_col))
    c_term, c_dk, c_col, c_row = c_term[order_c], c_dk[order_c], c_col[order_c], c_row[order_c]
    key = c_col * max(N, 1) + c_row
    positions, c_starts = np.unique(key, return_index=True)
    pos_col = positions // max(N, 1)
    jac_indices = positions % max(N, 1)
    jac_indptr = np.zeros(N + 1, dtype=np.int64)
    np.add.at(jac_indptr, pos_col + 1, 1)
    jac_indptr = np.cumsum(jac_indptr)

    if has_real:
        term_nonint = term_exp != np.round(term_exp)
        term_negexp = term_exp < 0
    else:
        term_nonint = term_negexp = None

    plan = _Plan(
        l_idx=l_idx,
        l_val=l_val,
        nonint=nonint,
        rhs_cols=dk_cols[order],
        rhs_vals=st.dk_vals[order],
        rhs_rows=rhs_rows.astype(np.int64),
        rhs_starts=rhs_starts.astype(np.int64),
        term_idx=term_idx,
        term_exp=term_exp,
        term_coef=term_coef,
        term_nonint=term_nonint,
        term_negexp=term_negexp,
        contrib_term=c_term,
        contrib_vals=st.dk_vals[c_dk],
        contrib_starts=c_starts.astype(np.int64),
        jac_indptr=jac_indptr,
        jac_indices=jac_indices.astype(np.int64),
    )
    for name, value in plan.__dict__.items():
        if isinstance(value, np.ndarray):
            object.__setattr__(plan, name, np.ascontiguousarray(value))
    return plan, tuple(columns)


def _assemble(st, names, mode, modifiers) -> CompiledNetwork:
    plan, columns = _build_plan(st)
    return CompiledNetwork(
        stoich=st,
        jac_columns=columns,
        species_names=tuple(names),
        mode=mode,
        modifiers=tuple(modifiers),
        plan=plan,
    )


def compile_network(spec: NetworkSpec, mode: str = STRICT) -> CompiledNetwork:
    """Compile ``spec`` into the sparse evaluation-ready representation.

    In ``"strict"`` mode every coefficient must be an integer; ``"generalized"``
    accepts non-negative real kinetic orders.  Per-reaction modifiers recorded
    in the spec are applied after ``Dk`` has been formed.
    """
    if mode not in (STRICT, GENERALIZED):
        raise ValueError(f"unknown compile mode {mode!r}")
    spec.validate()
    if spec.n_reactions == 0:
        raise EmptyNetwork("network has no reactions")
    if mode == STRICT:
        for m, rxn in enumerate(spec.reactions):
            for i, c in rxn.reactants + rxn.products:
                if not _is_integral(c):
                    raise NonIntegerOrderInStrictMode(spec.species[i], m)

    l_cols, r_cols, d_cols = [], [], []
    for rxn in spec.reactions:
        lc = {i: c for i, c in rxn.reactants if c > 0}
        rc = {i: c for i, c in rxn.products if c > 0}
        l_cols.append(list(lc.items()))
        r_cols.append(list(rc.items()))
        d = {}
        for i in sorted(set(lc) | set(rc)):
            v = rc.get(i, 0.0) - lc.get(i, 0.0)
            if v != 0:
                d[i] = rxn.rate * v
        d_cols.append(list(d.items()))
    l_ptr, l_sp, l_or = _csc(l_cols)
    r_ptr, r_sp, r_mu = _csc(r_cols)
    dk_ptr, dk_rows, dk_vals = _csc(d_cols)
    st = SparseStoichiometry(
        n_species=spec.n_species,
        n_reactions=spec.n_reactions,
        rates=np.array([r.rate for r in spec.reactions]),
        l_ptr=l_ptr,
        l_species=l_sp,
        l_order=l_or,
        r_ptr=r_ptr,
        r_species=r_sp,
        r_mult=r_mu,
        dk_ptr=dk_ptr,
        dk_rows=dk_rows,
        dk_vals=dk_vals,
    )
    net = _assemble(st, spec.species, mode, ())
    mods = [(i, m, f) for m, rxn in enumerate(spec.reactions) for i, f in rxn.modifiers]
    if mods:
        net = apply_modifiers(net, mods)
    return net


def apply_modifiers(
    net: CompiledNetwork, modifiers: Iterable[tuple[int, int, float]]
) -> CompiledNetwork:
    """Return a copy of ``net`` with ``Dk[n, m]`` multiplied by ``factor``.

    Each modifier is ``(species, reaction, factor)``.  The RHS and Jacobian
    plans are rebuilt from the scaled ``Dk`` so both stay consistent.
    """
    modifiers = [(int(n), int(m), float(f)) for n, m, f in modifiers]
    if not modifiers:
        return net
    st = net.stoich
    vals = st.dk_vals.copy()
    for n, m, f in modifiers:
        if not (math.isfinite(f) and f > 0):
            raise NonPositiveFactor(f"modifier factor must be finite and positive, got {f}")
        if not (0 <= n < st.n_species and 0 <= m < st.n_reactions):
            raise ModifierOnZeroEntry(n, m)
        pos = st.dk_position(n, m)
        if pos is None:
            raise ModifierOnZeroEntry(n, m)
        vals[pos] *= f
    scaled = SparseStoichiometry(**{**st.__dict__, "dk_vals": vals})
    return _assemble(scaled, net.species_names, net.mode, net.modifiers + tuple(modifiers))
