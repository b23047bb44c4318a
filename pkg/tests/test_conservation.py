from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import enzyme_spec
from netgen import random_spec
from rxnsim import NetworkSpec, ReactionSpec, compile_network, conservation_laws, eval_rhs
from rxnsim.conservation import left_null_space
from rxnsim.network import GENERALIZED


def _span_equal(a, b):
    a, b = sympy.Matrix(a), sympy.Matrix(b)
    return a.rank() == b.rank() == sympy.Matrix.vstack(a, b).rank()


def test_enzyme_basis(enzyme):
    basis = conservation_laws(enzyme)
    assert basis.exact
    vectors = [[int(v) for v in c] for c in basis]
    assert vectors == [[1, 0, 1, 0], [0, 1, 1, 1]]
    D = enzyme.stoich.dense_D()
    for c in basis.as_array():
        np.testing.assert_array_equal(c @ D, 0)
    # independent oracle: sympy nullspace of D^T
    oracle = [list(v) for v in sympy.Matrix(D.astype(int)).T.nullspace()]
    assert _span_equal(vectors, oracle)


def test_enzyme_formatting(enzyme):
    basis = conservation_laws(enzyme)
    assert [basis.format(i) for i in range(len(basis))] == ["E + ES = const", "S + ES + P = const"]


def test_isomerisation():
    net = compile_network(NetworkSpec(("X1", "X2"), (ReactionSpec(((0, 1),), ((1, 1),), 1.0),)))
    assert [[int(v) for v in c] for c in conservation_laws(net)] == [[1, 1]]


def test_source_has_no_law():
    net = compile_network(NetworkSpec(("X1",), (ReactionSpec((), ((0, 1),), 1.0),)))
    assert len(conservation_laws(net)) == 0


def test_rates_and_modifiers_ignored(enzyme):
    from rxnsim import apply_modifiers
    scaled = apply_modifiers(compile_network(enzyme_spec(k=(3.0, 0.0, 7.0))), [(3, 2, 0.25)])
    assert conservation_laws(scaled).vectors == conservation_laws(enzyme).vectors


def test_weighted_law_and_format():
    # 2 A -> B conserves A + 2 B
    net = compile_network(NetworkSpec(("A", "B"), (ReactionSpec(((0, 2),), ((1, 1),), 1.0),)))
    basis = conservation_laws(net)
    assert basis.vectors == ((Fraction(1), Fraction(2)),)
    assert basis.format(0) == "A + 2 B = const"


def test_float_elimination_for_real_coefficients():
    spec = NetworkSpec(("A", "B"), (ReactionSpec(((0, 0.5),), ((1, 0.25),), 1.0),))
    basis = conservation_laws(compile_network(spec, mode=GENERALIZED))
    assert not basis.exact
    c = basis.as_array()[0]
    assert c @ np.array([-0.5, 0.25]) == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(c, [1.0, 2.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_basis_matches_sympy(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, int(rng.integers(1, 9)), int(rng.integers(1, 10)))
    net = compile_network(spec)
    D = net.stoich.dense_D().astype(int)
    basis, exact = left_null_space(D)
    assert exact
    oracle = sympy.Matrix(D).T.nullspace()
    assert len(basis) == len(oracle)
    if basis:
        assert _span_equal([[int(v) for v in c] for c in basis], [list(v) for v in oracle])
        for c in basis:
            assert any(v != 0 for v in c)
            assert all(sum(c[n] * int(D[n, m]) for n in range(D.shape[0])) == 0 for m in range(D.shape[1]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rhs_orthogonal_to_laws(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, int(rng.integers(2, 9)), int(rng.integers(1, 12)))
    net = compile_network(spec)
    for c in conservation_laws(net).as_array():
        for _ in range(5):
            x = rng.uniform(0, 5, net.n_species)
            f = eval_rhs(net, x)
            assert abs(c @ f) <= 1e-12 * np.linalg.norm(c) * np.linalg.norm(f)
