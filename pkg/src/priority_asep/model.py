"""Configurations of the multi-species priority exclusion process.

Sites carry absolute labels ``l_minus..l_plus``. A configuration stores one
species value in ``{0, ..., n}`` per site, species 0 being a vacancy.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple


def sgn(x) -> int:
    return (x > 0) - (x < 0)


@dataclass(frozen=True)
class Lattice:
    """Finite window of integer sites ``[l_minus, l_plus]``."""

    l_minus: int
    l_plus: int

    def __post_init__(self):
        if self.l_plus - self.l_minus + 1 < 2:
            raise ValueError("a lattice needs at least two sites")

    @classmethod
    def centered(cls, size: int) -> "Lattice":
        """Window of ``size`` sites with ``l_minus = -ceil(size/2) + 1``."""
        lo = -((size + 1) // 2) + 1
        return cls(lo, lo + size - 1)

    @property
    def size(self) -> int:
        return self.l_plus - self.l_minus + 1

    @property
    def sites(self) -> range:
        return range(self.l_minus, self.l_plus + 1)

    @property
    def bonds(self) -> range:
        """Left sites ``k`` of the bonds ``(k, k+1)``."""
        return range(self.l_minus, self.l_plus)

    def __contains__(self, k) -> bool:
        return self.l_minus <= k <= self.l_plus

    def check_site(self, k: int) -> int:
        if k not in self:
            raise IndexError(f"site {k} outside [{self.l_minus}, {self.l_plus}]")
        return k - self.l_minus

    def __str__(self) -> str:
        return f"[{self.l_minus},{self.l_plus}]"


@dataclass(frozen=True)
class Config:
    """Occupation-variable configuration, one byte per site."""

    lattice: Lattice
    eta: bytes
    n: int

    def __post_init__(self):
        eta = bytes(self.eta)
        if self.n < 1:
            raise ValueError("need at least one particle species")
        if len(eta) != self.lattice.size:
            raise ValueError(f"expected {self.lattice.size} sites, got {len(eta)}")
        if any(v > self.n for v in eta):
            raise ValueError(f"species value above n={self.n}")
        object.__setattr__(self, "eta", eta)

    @classmethod
    def from_values(cls, values: Sequence[int], n: int, l_minus: int = 1) -> "Config":
        values = list(values)
        if any(v < 0 for v in values):
            raise ValueError("negative species value")
        return cls(Lattice(l_minus, l_minus + len(values) - 1), bytes(values), n)

    def __getitem__(self, k: int) -> int:
        return self.eta[self.lattice.check_site(k)]

    def __iter__(self):
        return iter(self.eta)

    def __len__(self) -> int:
        return len(self.eta)

    def values(self) -> Tuple[int, ...]:
        return tuple(self.eta)

    def digits(self) -> str:
        """Species values as a digit string (``n <= 9``)."""
        return "".join(str(v) for v in self.eta)

    def replace(self, updates: dict) -> "Config":
        """Copy with ``{site: species}`` overrides."""
        eta = bytearray(self.eta)
        for k, v in updates.items():
            if not 0 <= v <= self.n:
                raise ValueError(f"species {v} out of range")
            eta[self.lattice.check_site(k)] = v
        return Config(self.lattice, bytes(eta), self.n)

    def __str__(self) -> str:
        return f"L={self.lattice} eta={','.join(str(v) for v in self.eta)}"


@dataclass(frozen=True)
class CoordConfig:
    """Particle positions in increasing order with their colours."""

    positions: Tuple[int, ...]
    colours: Tuple[int, ...]

    def __post_init__(self):
        pos = tuple(int(x) for x in self.positions)
        col = tuple(int(a) for a in self.colours)
        if len(pos) != len(col):
            raise ValueError("positions and colours differ in length")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("positions must be strictly increasing")
        if any(a < 0 for a in col):
            raise ValueError("negative colour")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "colours", col)

    @property
    def N(self) -> int:
        return len(self.positions)

    def __len__(self) -> int:
        return len(self.positions)

    def colour_count(self, alpha: int) -> int:
        return sum(1 for a in self.colours if a == alpha)


@dataclass(frozen=True)
class Counts:
    """Particle numbers per species and their tail sums."""

    N: Tuple[int, ...]

    @property
    def M(self) -> Tuple[int, ...]:
        out, acc = [], 0
        for v in reversed(self.N):
            acc += v
            out.append(acc)
        return tuple(reversed(out))

    @property
    def n(self) -> int:
        return len(self.N) - 1

    @property
    def total(self) -> int:
        return sum(self.N)


def counts(c: Config) -> Counts:
    tally = [0] * (c.n + 1)
    for v in c.eta:
        tally[v] += 1
    return Counts(tuple(tally))


def to_coords(c: Config) -> CoordConfig:
    pos, col = [], []
    for k, v in zip(c.lattice.sites, c.eta):
        if v:
            pos.append(k)
            col.append(v)
    return CoordConfig(tuple(pos), tuple(col))


def to_occupation(x: CoordConfig, lattice: Lattice, n: int) -> Config:
    eta = bytearray(lattice.size)
    for k, a in zip(x.positions, x.colours):
        if not 1 <= a <= n:
            raise ValueError(f"colour {a} outside 1..{n}")
        eta[lattice.check_site(k)] = a
    return Config(lattice, bytes(eta), n)


def indicator_n(c: Config, k: int, alpha: int) -> int:
    """1 if site ``k`` holds species ``alpha``."""
    return int(c[k] == alpha)


def indicator_m(c: Config, k: int, alpha: int) -> int:
    """1 if site ``k`` holds a species ``>= alpha``."""
    return int(c[k] >= alpha)


def balance(c: Config, k: int, alpha: int) -> int:
    """Species-``alpha`` particles left of ``k`` minus those right of ``k``."""
    i = c.lattice.check_site(k)
    return c.eta[:i].count(alpha) - c.eta[i + 1:].count(alpha)


def balance_m(c: Config, k: int, alpha: int) -> int:
    """Particle balance summed over species ``>= alpha``."""
    i = c.lattice.check_site(k)
    left = sum(1 for v in c.eta[:i] if v >= alpha)
    right = sum(1 for v in c.eta[i + 1:] if v >= alpha)
    return left - right


def energy(c: Config) -> int:
    """``-sum_k sum_{l<k} sgn(eta_k - eta_l)``."""
    e = 0
    eta = c.eta
    # tally of species seen so far, left to right
    seen = [0] * (c.n + 1)
    for v in eta:
        below = sum(seen[:v])
        above = sum(seen[v + 1:])
        e -= below - above
        seen[v] += 1
    return e


def energy_min(N: Sequence[int]) -> int:
    """Minimal energy over a sector: species sorted increasingly from left to right."""
    return -sum(N[a] * N[b] for a in range(len(N)) for b in range(a))


def local_permute(c: Config, k: int) -> Config:
    """Swap the species at ``k`` and ``k+1``."""
    i = c.lattice.check_site(k)
    if k == c.lattice.l_plus:
        raise IndexError("no right neighbour at the last site")
    eta = bytearray(c.eta)
    eta[i], eta[i + 1] = eta[i + 1], eta[i]
    return Config(c.lattice, bytes(eta), c.n)


def cyclic_flip(c: Config, k: int) -> Config:
    """Raise the species at ``k`` by one, modulo ``n + 1``."""
    i = c.lattice.check_site(k)
    eta = bytearray(c.eta)
    eta[i] = (eta[i] + 1) % (c.n + 1)
    return Config(c.lattice, bytes(eta), c.n)


def global_flip(c: Config, power: int = 1) -> Config:
    """Apply :func:`cyclic_flip` ``power`` times at every site."""
    m = c.n + 1
    return Config(c.lattice, bytes((v + power) % m for v in c.eta), c.n)


def enumerate_configs(lattice: Lattice, n: int) -> Iterator[Config]:
    """All configurations in basis order (left site is the fastest digit)."""
    for digits in itertools.product(range(n + 1), repeat=lattice.size):
        yield Config(lattice, bytes(reversed(digits)), n)


def sector_configs(lattice: Lattice, N: Sequence[int]) -> Iterator[Config]:
    """Configurations with exactly ``N[alpha]`` particles of each species."""
    n = len(N) - 1
    if sum(N) != lattice.size:
        raise ValueError("particle numbers must add up to the lattice size")
    base = []
    for a, cnt in enumerate(N):
        base.extend([a] * cnt)
    for perm in _distinct_permutations(base):
        yield Config(lattice, bytes(perm), n)


def _distinct_permutations(items):
    items = sorted(items)
    size = len(items)
    while True:
        yield tuple(items)
        i = size - 2
        while i >= 0 and items[i] >= items[i + 1]:
            i -= 1
        if i < 0:
            return
        j = size - 1
        while items[j] <= items[i]:
            j -= 1
        items[i], items[j] = items[j], items[i]
        items[i + 1:] = reversed(items[i + 1:])


_CONFIG_RE = re.compile(r"^\s*L\s*=\s*\[\s*(-?\d+)\s*,\s*(-?\d+)\s*\]\s+eta\s*=\s*([\d,\s]+?)\s*$")


def parse_config(text: str, n: int | None = None) -> Config:
    """Parse ``"L=[1,3] eta=2,0,1"``. ``n`` defaults to the largest species present (at least 1)."""
    m = _CONFIG_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse configuration literal {text!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    vals = [int(v) for v in m.group(3).replace(" ", "").split(",") if v]
    lattice = Lattice(lo, hi)
    if n is None:
        n = max(1, max(vals, default=0))
    return Config(lattice, bytes(vals), n)


def partial_energy(c: Config, alpha: int, beta: int) -> int:
    """Contribution of ordered species pairs ``(alpha, beta)``: ``-sum_k n^alpha_k N^beta_k``."""
    return -sum(balance(c, k, beta) for k, v in zip(c.lattice.sites, c.eta) if v == alpha)


def energy_vacancy(c: Config) -> int:
    """Vacancy part ``-sum_k N^0_k`` of the energy."""
    return -sum(balance(c, k, 0) for k in c.lattice.sites)


def energy_reduced(c: Config) -> int:
    """Energy with vacancy pairs removed (species pairs ``1 <= beta < alpha``)."""
    return sum(partial_energy(c, a, b) for a in range(2, c.n + 1) for b in range(1, a))


def energy_doubly_reduced(c: Config) -> int:
    """Energy restricted to species pairs ``2 <= beta < alpha``."""
    return sum(partial_energy(c, a, b) for a in range(3, c.n + 1) for b in range(2, a))
