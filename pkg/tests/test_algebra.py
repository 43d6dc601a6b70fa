from fractions import Fraction as F
import itertools

import pytest
from hypothesis import given, strategies as st

from priority_asep.algebra import (
    SiteOperator,
    cartan,
    cyclic_lower,
    duality_closed_form,
    duality_matrix,
    duality_value,
    embed,
    global_cyclic,
    projector,
    rep_N,
    rep_X,
    rep_Y,
    sigma_minus,
    sigma_plus,
    site_identity,
    species_flip,
    upsilon,
    verify_duality,
    verify_duality_family,
    verify_measure_transform,
    verify_perk_schultz,
    verify_q_continuity,
    verify_symmetry,
    verify_upsilon_single_species,
    verify_x_commutator,
)
from priority_asep.generator import RateParams, basis_index, build_H
from priority_asep.model import Config, CoordConfig, Lattice, counts, enumerate_configs
from priority_asep.qcalc import QContext
from priority_asep.sparse import SparseOperator, commutator

grid_q = [F(1), F(3, 2), F(2)]


def dense(op):
    return [[op[i, j] for j in range(op.dim)] for i in range(op.dim)]


# -- site operators ---------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_site_operator_algebra(n):
    for a in range(1, n + 1):
        assert (sigma_plus(a, n) @ sigma_plus(a, n)).entries == ()
        assert (sigma_minus(a, n) @ sigma_minus(a, n)).entries == ()
        assert sigma_plus(a, n) @ sigma_minus(a, n) == projector(a - 1, n)
        assert cartan(a, n) == projector(a - 1, n) + projector(a, n).scale(-1)
    for a in range(n + 1):
        assert projector(a, n) @ projector(a, n) == projector(a, n)
    power = site_identity(n)
    for _ in range(n + 1):
        power = power @ cyclic_lower(n)
    assert power == site_identity(n)


def test_site_operator_rejects_out_of_range():
    with pytest.raises(ValueError):
        sigma_plus(0, 2)
    with pytest.raises(ValueError):
        SiteOperator.from_dict(1, {(2, 0): 1})


def test_single_site_upsilon_is_unipotent():
    # a lone site has no neighbours, so Y+ reduces to the raising matrix
    assert (site_identity(1) + sigma_plus(1, 1)).dense() == [[1, 1], [0, 1]]


def test_embedded_projector_and_flip():
    lat = Lattice(1, 2)
    p = embed(projector(1, 1), 1, lat)
    assert [p[i, i] for i in range(4)] == [0, 1, 0, 1]
    flip = embed(species_flip(0, 1, 1), 2, lat)
    # |1,1> -> |1,0> and |0,1> -> |0,0>
    assert flip[1, 3] == 1 and flip[0, 2] == 1
    assert flip.nnz == 2


@pytest.mark.parametrize("n", [1, 2])
def test_operators_at_different_sites_commute(n):
    lat = Lattice(1, 3)
    ops = [sigma_plus(1, n), sigma_minus(n, n), cartan(1, n), cyclic_lower(n)]
    for a, b in itertools.product(ops, repeat=2):
        assert commutator(embed(a, 1, lat), embed(b, 3, lat)).is_zero()
        assert commutator(embed(a, 2, lat), embed(b, 1, lat)).is_zero()


def test_number_operators_are_diagonal_counts():
    lat = Lattice(1, 3)
    for a in range(3):
        N = rep_N(a, lat, 2)
        for c in enumerate_configs(lat, 2):
            i = basis_index(c) - 1
            assert N[i, i] == counts(c).N[a]
        assert N.nnz == sum(1 for c in enumerate_configs(lat, 2) if counts(c).N[a])


def test_raising_generator_two_sites_by_hand():
    ctx = QContext.exact(2)
    Y = rep_Y(1, 1, Lattice(1, 2), 1, ctx)
    expect = [[0] * 4 for _ in range(4)]
    expect[0][1] = 1        # (1,0) -> (0,0)
    expect[0][2] = 1        # (0,1) -> (0,0)
    expect[2][3] = 2        # (1,1) -> (0,1): particle to the right
    expect[1][3] = F(1, 2)  # (1,1) -> (1,0): particle to the left
    assert dense(Y) == expect


def test_x_commutator_needs_square_root():
    with pytest.raises(ValueError):
        rep_X(1, 1, Lattice(1, 2), 1, QContext.exact(2))
    assert verify_x_commutator(Lattice(1, 2), 1, QContext.exact(2)).skipped
    assert verify_x_commutator(Lattice(1, 2), 1, QContext.from_square_root(F(3, 2))).max_violation == 0
    assert verify_x_commutator(Lattice(1, 3), 2, QContext.from_square_root(F(2))).max_violation == 0
    assert verify_x_commutator(Lattice(1, 3), 2, QContext.exact(1)).max_violation == 0


# -- upsilon and duality ---------------------------------------------------------

@pytest.mark.parametrize("L", [2, 3, 4, 5])
@pytest.mark.parametrize("q", grid_q)
def test_single_species_upsilon_entries(L, q):
    assert verify_upsilon_single_species(Lattice(1, L), QContext.exact(q)).max_violation == 0


@pytest.mark.parametrize("n", [1, 2])
def test_upsilon_at_q_one_factorizes(n):
    lat = Lattice(1, 3)
    ctx = QContext.exact(1)
    for a in range(1, n + 1):
        prod = SparseOperator.identity((n + 1) ** 3, ctx.one)
        for k in lat.sites:
            prod = prod @ embed(site_identity(n) + sigma_plus(a, n), k, lat)
        assert upsilon(a, 1, lat, n, ctx) == prod


@pytest.mark.parametrize("n,L", [(1, 2), (1, 3), (1, 4), (2, 2), (2, 3)])
@pytest.mark.parametrize("q", grid_q)
def test_symmetry_and_self_duality(n, L, q):
    ctx = QContext.exact(q)
    lat = Lattice(1, L)
    H = build_H(lat, RateParams(1, ctx, n))
    assert verify_symmetry(H, lat, n, ctx).max_violation == 0
    rep = verify_duality(H, lat, n, ctx)
    assert rep.max_violation == 0
    assert rep.details["closed-form"] == 0


def test_self_duality_two_species_four_sites():
    ctx = QContext.exact(2)
    lat = Lattice(1, 4)
    H = build_H(lat, RateParams(1, ctx, 2))
    assert verify_duality(H, lat, 2, ctx).max_violation == 0


def test_duality_at_q_one_counts_occupations():
    lat = Lattice(1, 3)
    ctx = QContext.exact(1)
    D = duality_matrix(lat, 2, ctx)
    confs = list(enumerate_configs(lat, 2))
    for i, zeta in enumerate(confs):
        for j, eta in enumerate(confs):
            expect = 1
            for z, e in zip(zeta.eta, eta.eta):
                if z and e < z:
                    expect = 0
            assert D[i, j] == expect


def test_duality_value_examples():
    ctx = QContext.exact(2)
    x = CoordConfig((1,), (1,))
    assert duality_value(x, Config.from_values([1, 1], 1), ctx) == 1
    assert duality_value(x, Config.from_values([0, 1], 1), ctx) == 0
    assert duality_value(x, Config.from_values([1, 0], 1), ctx) == 2
    with pytest.raises(ValueError):
        duality_value(CoordConfig((1,), (2,)), Config.from_values([1, 0], 1), ctx)


@pytest.mark.parametrize("cvec", [(1,), (-1,), (2,), (1, 0), (0, -1), (1, 1), (F(1, 2), 0)])
def test_duality_family(cvec):
    # fractional parameters produce half-integer powers, so declare the root
    ctx = QContext.from_square_root(F(3, 2))
    n = len(cvec)
    lat = Lattice(1, 3)
    H = build_H(lat, RateParams(1, ctx, n))
    assert verify_duality_family(H, lat, n, ctx, list(cvec)).max_violation == 0


@given(c=st.sampled_from([-1, 1, 2]), data=st.data())
def test_duality_family_ratio_depends_on_conserved_quantities(c, data):
    # D_c / D_0 at a fixed dual configuration is a function of the particle counts alone
    ctx = QContext.exact(F(3, 2))
    lat = Lattice(1, 4)
    k = data.draw(st.integers(1, 4))
    x = CoordConfig((k,), (1,))
    ratios = {}
    for eta in enumerate_configs(lat, 1):
        d0 = duality_value(x, eta, ctx)
        if d0:
            key = counts(eta).N
            r = duality_value(x, eta, ctx, [c]) / d0
            assert ratios.setdefault(key, r) == r


@pytest.mark.parametrize("cval", [-1, 1, 2])
@pytest.mark.parametrize("n", [1, 2])
def test_measure_transform(cval, n):
    assert verify_measure_transform(Lattice(1, 3), n, QContext.exact(F(3, 2)), cval).max_violation == 0


def test_perk_schultz_symmetrization():
    lat = Lattice(1, 3)
    ctx = QContext.from_square_root(F(3, 2))
    H = build_H(lat, RateParams(1, ctx, 2))
    assert verify_perk_schultz(H, lat, 2, ctx).max_violation == 0
    plain = QContext.exact(2)
    rep = verify_perk_schultz(build_H(lat, RateParams(1, plain, 2)), lat, 2, plain)
    assert rep.skipped and rep.status == "skipped"


@pytest.mark.parametrize("n,L", [(1, 3), (2, 3), (3, 2)])
@pytest.mark.parametrize("q", grid_q)
def test_q_continuity(n, L, q):
    lat = Lattice(1, L)
    p = RateParams(1, QContext.exact(q), n)
    assert verify_q_continuity(build_H(lat, p), lat, p).max_violation == 0


def test_perturbed_generator_breaks_duality():
    ctx = QContext.exact(2)
    lat = Lattice(1, 3)
    good = build_H(lat, RateParams(1, ctx, 1))
    # make one hop asymmetric by the wrong factor while keeping column sums zero
    bump = SparseOperator.from_triplets(good.dim, [(0, 1, F(-1, 3)), (1, 1, F(1, 3))])
    bad = good + bump
    assert all(s == 0 for s in bad.column_sums())
    assert not verify_duality(bad, lat, 1, ctx).passed
    assert not verify_symmetry(bad, lat, 1, ctx).passed


def test_global_cyclic_shift_has_order_n_plus_one():
    lat = Lattice(1, 3)
    g = global_cyclic(lat, 2)
    assert g.power(3) == SparseOperator.identity(27)
    assert not g == SparseOperator.identity(27)


def test_closed_form_matches_matrix_for_three_species():
    ctx = QContext.exact(F(3, 2))
    lat = Lattice(1, 3)
    assert duality_matrix(lat, 3, ctx) == duality_closed_form(lat, 3, ctx)
