"""Linear conservation laws (left null space of the step-change matrix)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .network import CompiledNetwork

__all__ = ["ConservationBasis", "conservation_laws", "left_null_space"]

PIVOT_THRESHOLD = 1e-10


@dataclass(frozen=True)
class ConservationBasis:
    """Basis vectors ``c`` with ``c @ D == 0``.

    ``vectors`` hold :class:`fractions.Fraction` entries when the
    elimination was exact, floats otherwise.
    """

    vectors: tuple[tuple, ...]
    species: tuple[str, ...]
    exact: bool

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    def as_array(self) -> np.ndarray:
        return np.array([[float(v) for v in c] for c in self.vectors]).reshape(-1, len(self.species))

    def format(self, i: int) -> str:
        """Render law ``i`` as e.g. ``"S + ES + P = const"``."""
        parts = []
        for name, c in zip(self.species, self.vectors[i]):
            if c == 0:
                continue
            mag = abs(c)
            coef = "" if mag == 1 else f"{_fmt_coef(mag)} "
            sign = "-" if c < 0 else "+"
            parts.append((sign, f"{coef}{name}"))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, term in parts[1:]:
            text += f" {sign} {term}"
        return text + " = const"


def _fmt_coef(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return repr(float(c))


def _rref(rows: list[list], exact: bool):
    """Row-reduce ``rows`` in place; return pivot columns."""
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for col in range(n_cols):
        if r == n_rows:
            break
        if exact:
            p = next((i for i in range(r, n_rows) if rows[i][col] != 0), None)
        else:
            best = max(range(r, n_rows), key=lambda i: abs(rows[i][col]))
            p = best if abs(rows[best][col]) > PIVOT_THRESHOLD else None
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        piv = rows[r][col]
        rows[r] = [v / piv for v in rows[r]]
        for i in range(n_rows):
            if i != r and rows[i][col] != 0:
                fac = rows[i][col]
                rows[i] = [a - fac * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    return pivots


def left_null_space(D: np.ndarray) -> tuple[list[list], bool]:
    """Basis of ``{c : c @ D = 0}`` by Gauss-Jordan elimination on ``D.T``.

    Integer matrices are eliminated exactly over the rationals.  Species are
    eliminated from the last one backwards so the free coordinates (and hence
    the basis vectors' leading entries) fall on the earliest species.
    """
    D = np.asarray(D, dtype=float)
    N = D.shape[0]
    exact = bool(np.all(D == np.round(D)))
    # columns of the system are species in reverse order
    if exact:
        rows = [[Fraction(int(D[n, m])) for n in reversed(range(N))] for m in range(D.shape[1])]
    else:
        rows = [[float(D[n, m]) for n in reversed(range(N))] for m in range(D.shape[1])]
    pivots = _rref(rows, exact)
    free = [c for c in range(N) if c not in pivots]
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    basis = []
    for f in sorted(free, reverse=True):
        v = [zero] * N
        v[f] = one
        for r, p in enumerate(pivots):
            v[p] = -rows[r][f]
        vec = v[::-1]
        basis.append(_normalise(vec, exact))
    return basis, exact


def _normalise(vec: list, exact: bool) -> list:
    if exact:
        den = math.lcm(*(x.denominator for x in vec))
        ints = [int(x * den) for x in vec]
        g = math.gcd(*ints)
        vec = [Fraction(x // g) for x in ints]
    else:
        vec = [0.0 if abs(x) < PIVOT_THRESHOLD else x for x in vec]
        lead = next(x for x in vec if x != 0)
        vec = [x / abs(lead) for x in vec]
    lead = next(x for x in vec if x != 0)
    if lead < 0:
        vec = [-x for x in vec]
    return vec


def conservation_laws(net: CompiledNetwork) -> ConservationBasis:
    """Conservation laws of the unscaled stoichiometry of ``net``.

    Rates and modifiers are ignored: the result depends only on ``R - L``.
    """
    basis, exact = left_null_space(net.stoich.dense_D())
    return ConservationBasis(
        vectors=tuple(tuple(v) for v in basis),
        species=net.species_names,
        exact=exact,
    )
