"""Random reaction networks for property tests."""
from __future__ import annotations

import numpy as np

from rxnsim.network import NetworkSpec, ReactionSpec, dense_stoichiometry


def random_spec(
    rng: np.random.Generator,
    n_species: int,
    n_reactions: int,
    max_order: int = 3,
    max_terms: int = 3,
    k_range=(0.0, 10.0),
    real_orders: bool = False,
    zero_order_fraction: float = 0.15,
) -> NetworkSpec:
    """A random valid network; about ``zero_order_fraction`` of reactions
    have no reactants."""
    reactions = []
    for _ in range(n_reactions):
        sides = []
        for side in range(2):
            if side == 0 and rng.random() < zero_order_fraction:
                sides.append(())
                continue
            n_terms = int(rng.integers(0 if side else 1, min(max_terms, n_species) + 1))
            idx = rng.choice(n_species, size=n_terms, replace=False)
            if real_orders:
                coeffs = np.round(rng.uniform(0.1, max_order, size=n_terms), 3)
            else:
                coeffs = rng.integers(1, max_order + 1, size=n_terms)
            sides.append(tuple((int(i), float(c)) for i, c in zip(idx, coeffs)))
        k = float(rng.uniform(*k_range))
        if k == 0.0:
            k = 1.0
        reactions.append(ReactionSpec(sides[0], sides[1], k))
    names = tuple(f"X{i + 1}" for i in range(n_species))
    init = tuple(float(v) for v in np.round(rng.uniform(0, 5, n_species), 6))
    return NetworkSpec(names, tuple(reactions), init)


def spec_with_conservation(rng: np.random.Generator, n_species: int, n_reactions: int) -> NetworkSpec:
    """Random network whose reactions all preserve the total molecule count.

    The all-ones vector is then a conservation law, and because it is
    positive the trajectories stay bounded.
    """
    while True:
        spec = random_spec(rng, n_species, n_reactions, max_order=2, max_terms=2,
                           k_range=(0.1, 5.0), zero_order_fraction=0.0)
        L, R = dense_stoichiometry(spec)
        D = R - L
        keep = [m for m in range(spec.n_reactions) if D[:, m].sum() == 0]
        if len(keep) >= 2:
            reactions = tuple(spec.reactions[m] for m in keep)
            return NetworkSpec(spec.species, reactions, spec.initial)
