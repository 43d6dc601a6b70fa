import math

import pytest
from hypothesis import given, strategies as st

from oracles import all_values, energy as energy_oracle, index_of
from priority_asep.generator import basis_index
from priority_asep.model import (
    Config,
    CoordConfig,
    Counts,
    Lattice,
    balance,
    balance_m,
    counts,
    cyclic_flip,
    energy,
    energy_min,
    energy_reduced,
    energy_vacancy,
    enumerate_configs,
    global_flip,
    local_permute,
    parse_config,
    partial_energy,
    sector_configs,
    to_coords,
    to_occupation,
)


@st.composite
def configs(draw, max_n=3, max_L=7):
    n = draw(st.integers(1, max_n))
    L = draw(st.integers(2, max_L))
    lo = draw(st.integers(-3, 3))
    vals = draw(st.lists(st.integers(0, n), min_size=L, max_size=L))
    return Config.from_values(vals, n, lo)


def test_lattice_basics():
    lat = Lattice(-1, 2)
    assert lat.size == 4
    assert list(lat.sites) == [-1, 0, 1, 2]
    assert list(lat.bonds) == [-1, 0, 1]
    assert 2 in lat and 3 not in lat
    assert Lattice.centered(400) == Lattice(-199, 200)
    with pytest.raises(ValueError):
        Lattice(3, 3)
    with pytest.raises(IndexError):
        lat.check_site(5)


def test_config_validation():
    with pytest.raises(ValueError):
        Config.from_values([0, 3], 2)
    with pytest.raises(ValueError):
        Config(Lattice(1, 3), bytes([0, 1]), 1)
    with pytest.raises(ValueError):
        Config.from_values([-1, 0], 1)


def test_parse_config_literal():
    c = parse_config("L=[1,3] eta=2,0,1")
    assert c.lattice == Lattice(1, 3)
    assert c.values() == (2, 0, 1)
    assert c.n == 2
    assert c[1] == 2 and c[3] == 1
    assert parse_config("L=[-1,0] eta=0,0").n == 1
    assert str(c) == "L=[1,3] eta=2,0,1"
    with pytest.raises(ValueError):
        parse_config("eta=1,2")


def test_counts_and_tail_sums():
    c = parse_config("L=[1,5] eta=2,0,1,2,0", n=2)
    N = counts(c)
    assert N == Counts((2, 1, 2))
    assert N.M == (5, 3, 2)


def test_balances():
    c = parse_config("L=[1,5] eta=1,0,1,1,0")
    assert balance(c, 3, 1) == 1 - 1
    assert balance(c, 1, 1) == 0 - 2
    assert balance_m(c, 3, 0) == 2 - 2


def test_frozen_energies():
    # frozen from the double-sum oracle
    assert energy(Config.from_values([0, 1], 1)) == -1
    assert energy(Config.from_values([1, 0], 1)) == 1
    assert energy(Config.from_values([2, 0, 1], 2)) == 1
    assert energy(Config.from_values([0, 1, 2], 2)) == -3
    assert energy_min((1, 1, 1)) == -3


@given(configs())
def test_energy_matches_oracle(c):
    assert energy(c) == energy_oracle(c.values())


@given(configs())
def test_energy_decomposes_into_pairs(c):
    n = c.n
    assert energy(c) == sum(partial_energy(c, a, b) for a in range(n + 1) for b in range(a))
    assert energy(c) == energy_reduced(c) + energy_vacancy(c)


@given(configs())
def test_energy_bounded_below_by_sorted_block(c):
    N = counts(c).N
    assert energy(c) >= energy_min(N)
    ordered = Config(c.lattice, bytes(sorted(c.eta)), c.n)
    assert energy(ordered) == energy_min(N)


@given(configs())
def test_coordinate_roundtrip(c):
    x = to_coords(c)
    assert to_occupation(x, c.lattice, c.n) == c
    assert x.N == sum(1 for v in c.eta if v)


def test_coord_config_validation():
    with pytest.raises(ValueError):
        CoordConfig((2, 1), (1, 1))
    with pytest.raises(ValueError):
        CoordConfig((1,), (1, 2))


@given(configs())
def test_flips(c):
    assert global_flip(c, c.n + 1) == c
    assert global_flip(global_flip(c), -1) == c
    k = c.lattice.l_minus
    once = cyclic_flip(c, k)
    assert once[k] == (c[k] + 1) % (c.n + 1)
    assert once.eta[1:] == c.eta[1:]


@given(configs())
def test_local_permute_is_involution(c):
    k = c.lattice.l_minus
    assert local_permute(local_permute(c, k), k) == c
    assert counts(local_permute(c, k)) == counts(c)
    with pytest.raises(IndexError):
        local_permute(c, c.lattice.l_plus)


@pytest.mark.parametrize("n,L", [(1, 3), (2, 3), (3, 2)])
def test_enumeration_follows_basis_index(n, L):
    lat = Lattice(1, L)
    confs = list(enumerate_configs(lat, n))
    assert len(confs) == (n + 1) ** L
    assert [c.values() for c in confs] == list(all_values(L, n))
    assert [basis_index(c) for c in confs] == [index_of(c.values(), n) for c in confs]
    assert [basis_index(c) for c in confs] == list(range(1, len(confs) + 1))


@pytest.mark.parametrize("N", [(2, 1, 1), (3, 0, 2), (1, 1, 1, 1)])
def test_sector_sizes_are_multinomial(N):
    lat = Lattice(1, sum(N))
    got = list(sector_configs(lat, N))
    expect = math.factorial(sum(N))
    for v in N:
        expect //= math.factorial(v)
    assert len(got) == expect == len({c.eta for c in got})
    assert all(counts(c).N == N for c in got)
