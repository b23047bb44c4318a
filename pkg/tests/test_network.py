import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import enzyme_spec
from netgen import random_spec
from rxnsim import (
    EmptyNetwork,
    ModifierOnZeroEntry,
    NegativeCoefficient,
    NetworkSpec,
    NonIntegerOrderInStrictMode,
    NonPositiveFactor,
    ReactionSpec,
    UnknownSpecies,
    apply_modifiers,
    compile_network,
)
from rxnsim.network import GENERALIZED, dense_stoichiometry

ENZYME_D = np.array([[-1, 1, 1], [-1, 1, 0], [1, -1, -1], [0, 0, 1]])
ENZYME_L = np.array([[1, 0, 0], [1, 0, 0], [0, 1, 1], [0, 0, 0]])


def test_enzyme_compact_reactant_matrices(enzyme):
    assert enzyme.stoich.l_idx.tolist() == [[1, 3, 3], [2, 0, 0]]
    assert enzyme.stoich.l_val.tolist() == [[1, 1, 1], [1, 0, 0]]


def test_enzyme_dense_matrices(enzyme):
    np.testing.assert_array_equal(enzyme.stoich.dense_D(), ENZYME_D)
    np.testing.assert_array_equal(enzyme.stoich.dense_L(), ENZYME_L)
    # k = (1, 1, 1) so Dk equals D
    np.testing.assert_array_equal(enzyme.stoich.dense_dk(), ENZYME_D)


def test_enzyme_product_matrices(enzyme):
    assert enzyme.stoich.r_idx.tolist() == [[3, 1, 1], [0, 2, 4]]
    assert enzyme.stoich.r_val.tolist() == [[1, 1, 1], [0, 1, 1]]


def test_dk_scales_columns_by_rate():
    net = compile_network(enzyme_spec(k=(2.0, 3.0, 5.0)))
    np.testing.assert_array_equal(net.stoich.dense_dk(), ENZYME_D * [2.0, 3.0, 5.0])


def test_zero_order_source():
    spec = NetworkSpec(("X1",), (ReactionSpec((), ((0, 1),), 2.0),))
    net = compile_network(spec)
    assert net.stoich.l_idx.shape == (0, 1)
    np.testing.assert_array_equal(net.stoich.dense_dk(), [[2.0]])


def test_jac_columns_enzyme(enzyme):
    cols = enzyme.jac_columns
    assert [c.reactions.tolist() for c in cols] == [[0], [0], [1, 2], []]
    es = cols[2]
    assert es.orders.tolist() == [1.0, 1.0]
    # the ES entry of each column is lowered to l - 1 = 0
    assert es.l_idx.tolist() == [[3, 3], [0, 0]]
    assert es.tilde_val.tolist() == [[0.0, 0.0], [0.0, 0.0]]
    e = cols[0]
    assert e.l_idx[:, 0].tolist() == [1, 2]
    assert e.tilde_val[:, 0].tolist() == [0.0, 1.0]


def test_tilde_only_changes_own_entry():
    spec = NetworkSpec(("A", "B"), (ReactionSpec(((0, 2), (1, 3)), (), 1.0),))
    net = compile_network(spec)
    a, b = net.jac_columns
    assert a.tilde_val[:, 0].tolist() == [1.0, 3.0]
    assert b.tilde_val[:, 0].tolist() == [2.0, 2.0]


class TestModifiers:
    def test_single_entry(self, enzyme):
        scaled = apply_modifiers(enzyme, [(3, 2, 0.5)])
        expected = ENZYME_D.astype(float)
        expected[3, 2] = 0.5
        np.testing.assert_array_equal(scaled.stoich.dense_dk(), expected)
        # original untouched
        np.testing.assert_array_equal(enzyme.stoich.dense_dk(), ENZYME_D)

    def test_empty_list_is_identity(self, enzyme):
        assert apply_modifiers(enzyme, []) is enzyme

    def test_inverse_restores(self, enzyme):
        twice = apply_modifiers(apply_modifiers(enzyme, [(0, 1, 2.0)]), [(0, 1, 0.5)])
        np.testing.assert_array_equal(twice.stoich.dense_dk(), enzyme.stoich.dense_dk())

    def test_jacobian_blocks_follow(self, enzyme):
        scaled = apply_modifiers(enzyme, [(3, 2, 0.5)])
        col = scaled.jac_columns[2]
        sel = (col.dk_rows == 3)
        assert col.dk_vals[sel].tolist() == [0.5]

    def test_zero_entry_rejected(self, enzyme):
        with pytest.raises(ModifierOnZeroEntry):
            apply_modifiers(enzyme, [(3, 0, 2.0)])

    @pytest.mark.parametrize("factor", [0.0, -1.0, float("inf"), float("nan")])
    def test_bad_factor(self, enzyme, factor):
        with pytest.raises(NonPositiveFactor):
            apply_modifiers(enzyme, [(0, 0, factor)])

    def test_spec_modifiers_applied_at_compile(self):
        spec = enzyme_spec()
        rx = list(spec.reactions)
        rx[2] = ReactionSpec(rx[2].reactants, rx[2].products, 1.0, modifiers=((3, 0.5),))
        net = compile_network(NetworkSpec(spec.species, tuple(rx), spec.initial))
        assert net.stoich.dense_dk()[3, 2] == 0.5
        assert net.modifiers == ((3, 2, 0.5),)


class TestCompileErrors:
    def test_non_integer_in_strict_mode(self):
        spec = NetworkSpec(("A", "B"), (ReactionSpec(((0, 0.5),), ((1, 1),), 1.0),))
        with pytest.raises(NonIntegerOrderInStrictMode):
            compile_network(spec)
        net = compile_network(spec, mode=GENERALIZED)
        assert net.generalized

    def test_negative_coefficient(self):
        spec = NetworkSpec(("A",), (ReactionSpec(((0, -1),), (), 1.0),))
        with pytest.raises(NegativeCoefficient):
            compile_network(spec)

    def test_negative_rate(self):
        spec = NetworkSpec(("A",), (ReactionSpec(((0, 1),), (), -1.0),))
        with pytest.raises(NegativeCoefficient):
            compile_network(spec)

    def test_unknown_species(self):
        spec = NetworkSpec(("A",), (ReactionSpec(((3, 1),), (), 1.0),))
        with pytest.raises(UnknownSpecies):
            compile_network(spec)

    def test_no_reactions(self):
        with pytest.raises(EmptyNetwork):
            compile_network(NetworkSpec(("A",), ()))

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            compile_network(enzyme_spec(), mode="fuzzy")


def _random(seed, real=False):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 11))
    m = int(rng.integers(1, 21))
    return random_spec(rng, n, m, max_order=3, real_orders=real)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_roundtrip_dense(seed, real):
    spec = _random(seed, real)
    net = compile_network(spec, mode=GENERALIZED)
    L, R = dense_stoichiometry(spec)
    np.testing.assert_array_equal(net.stoich.dense_L(), L)
    np.testing.assert_array_equal(net.stoich.dense_R(), R)
    np.testing.assert_array_equal(net.stoich.dense_D(), R - L)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dk_consistency(seed):
    spec = _random(seed)
    net = compile_network(spec)
    L, R = dense_stoichiometry(spec)
    k = np.array([r.rate for r in spec.reactions])
    np.testing.assert_array_equal(net.stoich.dense_dk(), k * (R - L))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_jac_columns_completeness(seed):
    spec = _random(seed)
    net = compile_network(spec)
    L, _ = dense_stoichiometry(spec)
    for j, col in enumerate(net.jac_columns):
        assert col.species == j
        assert col.reactions.tolist() == np.nonzero(L[j] > 0)[0].tolist()
        np.testing.assert_array_equal(col.orders, L[j, col.reactions])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_padded_columns_sentinel_last(seed):
    net = compile_network(_random(seed))
    idx = net.stoich.l_idx
    for m in range(idx.shape[1]):
        col = idx[:, m]
        nz = col[col > 0]
        assert len(set(nz.tolist())) == nz.size
        assert np.all(col[: nz.size] > 0) and np.all(col[nz.size:] == 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_stored_entries_are_nonzeros(seed):
    spec = _random(seed)
    net = compile_network(spec)
    L, R = dense_stoichiometry(spec)
    nnz = np.count_nonzero(L) + np.count_nonzero(R) + np.count_nonzero(R - L)
    assert net.stoich.stored_entries == nnz
