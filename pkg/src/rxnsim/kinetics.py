"""Rate, right-hand side and analytic Jacobian evaluation.

All evaluators accept an optional :class:`Workspace` and output buffer.
When both are supplied no array is allocated, which keeps the integrators'
inner loops allocation-free.  Contributions are accumulated in
reaction-index order so results are reproducible bit for bit.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .network import CompiledNetwork, NetworkSpec, dense_stoichiometry

__all__ = [
    "Workspace",
    "eval_rates",
    "eval_rhs",
    "eval_jacobian",
    "jacobian_pattern",
    "eval_rhs_dense_oracle",
]


class Workspace:
    """Scratch buffers sized for one compiled network."""

    def __init__(self, net: CompiledNetwork):
        p = net.plan
        N, M = net.n_species, net.n_reactions
        self.xpad = np.ones(N + 1)
        self.X = np.empty(p.l_idx.shape)
        self.mono = np.empty(M)
        self.terms_rhs = np.empty(p.rhs_cols.size)
        self.rowsum = np.empty(p.rhs_rows.size)
        self.XT = np.empty(p.term_idx.shape)
        self.term = np.empty(p.term_coef.size)
        self.contrib = np.empty(p.contrib_term.size)
        self.mask = np.empty(p.l_idx.shape, dtype=bool)
        self.maskT = np.empty(p.term_idx.shape, dtype=bool)
        self.maskT2 = np.empty(p.term_idx.shape, dtype=bool)


def _load(net: CompiledNetwork, x, work: Workspace) -> None:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n_species,):
        raise ValueError(f"state must have shape ({net.n_species},), got {x.shape}")
    work.xpad[1:] = x


def _column_product(X: np.ndarray, out: np.ndarray) -> None:
    # row-by-row product: a reduction over axis 0 would allocate iterator buffers
    if X.shape[0] == 0:
        out.fill(1.0)
        return
    np.copyto(out, X[0])
    for r in range(1, X.shape[0]):
        np.multiply(out, X[r], out=out)


def _monomials(net: CompiledNetwork, work: Workspace) -> np.ndarray:
    """prod_i x_i^{l_im} for every reaction, into ``work.mono``."""
    p = net.plan
    X = work.X
    np.take(work.xpad, p.l_idx, out=X, mode="clip")
    if p.nonint is not None:
        np.less(X, 0.0, out=work.mask)
        np.logical_and(work.mask, p.nonint, out=work.mask)
        if work.mask.any():
            raise DomainError("negative concentration raised to a non-integer order")
    np.power(X, p.l_val, out=X)
    _column_product(X, work.mono)
    return work.mono


def eval_rates(net: CompiledNetwork, x, out=None, work: Workspace | None = None) -> np.ndarray:
    """Reaction rates ``k_m * prod_i x_i^{l_im}`` (empty product is 1)."""
    work = work or Workspace(net)
    if out is None:
        out = np.empty(net.n_reactions)
    _load(net, x, work)
    np.multiply(_monomials(net, work), net.stoich.rates, out=out)
    return out


def eval_rhs(net: CompiledNetwork, x, out=None, work: Workspace | None = None) -> np.ndarray:
    """Right-hand side ``f(x) = Dk @ monomials(x)`` over the nonzeros of ``Dk``."""
    work = work or Workspace(net)
    if out is None:
        out = np.empty(net.n_species)
    p = net.plan
    _load(net, x, work)
    mono = _monomials(net, work)
    out.fill(0.0)
    if p.rhs_cols.size:
        np.take(mono, p.rhs_cols, out=work.terms_rhs, mode="clip")
        np.multiply(work.terms_rhs, p.rhs_vals, out=work.terms_rhs)
        np.add.reduceat(work.terms_rhs, p.rhs_starts, out=work.rowsum)
        np.put(out, p.rhs_rows, work.rowsum)
    return out


def jacobian_pattern(net: CompiledNetwork) -> sp.csc_matrix:
    """Empty CSC matrix carrying the network's structural Jacobian pattern."""
    p = net.plan
    N = net.n_species
    return sp.csc_matrix(
        (np.zeros(p.jac_indices.size), p.jac_indices.copy(), p.jac_indptr.copy()), shape=(N, N)
    )


def eval_jacobian(net: CompiledNetwork, x, out: sp.csc_matrix | None = None,
                  work: Workspace | None = None) -> sp.csc_matrix:
    """Analytic Jacobian ``df/dx`` assembled column by column.

    Column ``j`` is ``Dk_j @ (l_j * prod(X_j ** Lt_j))`` where the reduced
    blocks only involve reactions consuming species ``j``; all columns are
    evaluated in one vectorised pass.  ``out`` must come from
    :func:`jacobian_pattern` (its ``data`` array is overwritten).
    """
    work = work or Workspace(net)
    if out is None:
        out = jacobian_pattern(net)
    p = net.plan
    _load(net, x, work)
    XT = work.XT
    np.take(work.xpad, p.term_idx, out=XT, mode="clip")
    if p.term_nonint is not None:
        np.less(XT, 0.0, out=work.maskT)
        np.logical_and(work.maskT, p.term_nonint, out=work.maskT)
        if work.maskT.any():
            raise DomainError("negative concentration raised to a non-integer order")
        np.equal(XT, 0.0, out=work.maskT2)
        np.logical_and(work.maskT2, p.term_negexp, out=work.maskT2)
        if work.maskT2.any():
            raise DomainError("derivative is unbounded: zero concentration with kinetic order below one")
    np.power(XT, p.term_exp, out=XT)
    _column_product(XT, work.term)
    np.multiply(work.term, p.term_coef, out=work.term)
    if p.contrib_term.size:
        np.take(work.term, p.contrib_term, out=work.contrib, mode="clip")
        np.multiply(work.contrib, p.contrib_vals, out=work.contrib)
        np.add.reduceat(work.contrib, p.contrib_starts, out=out.data)
    return out


def eval_rhs_dense_oracle(spec: NetworkSpec, x) -> np.ndarray:
    """Dense reference: ``D @ (k * prod(repmat(x, 1, M) ** L, axis=0))``.

    Uses full N x M matrices including zero entries (``0 ** 0 == 1``).
    Modifiers are applied to the dense ``D`` entrywise.
    """
    x = np.asarray(x, dtype=float)
    L, R = dense_stoichiometry(spec)
    D = R - L
    for m, rxn in enumerate(spec.reactions):
        for i, f in rxn.modifiers:
            D[i, m] *= f
    if np.any((x[:, None] < 0) & (L != np.round(L))):
        raise DomainError("negative concentration raised to a non-integer order")
    k = np.array([r.rate for r in spec.reactions])
    xx = np.repeat(x[:, None], spec.n_reactions, axis=1)
    return D @ (k * np.prod(xx ** L, axis=0))
