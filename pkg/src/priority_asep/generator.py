"""Transition rates and the exact generator matrix.

The generator is stored with a positive diagonal (total exit rate) and
minus the transition rates off the diagonal, so every column sums to zero.
Basis vectors are numbered by ``1 + sum_k eta_k (n+1)**(k - l_minus)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Config, Lattice, enumerate_configs, sgn
from .qcalc import QContext, Scalar
from .sparse import SparseOperator

DEFAULT_DIM_CAP = 200_000
DIM_CAP_ENV = "PRIORITY_ASEP_DIM_CAP"


class DimensionCapError(RuntimeError):
    """State space larger than the configured dimension cap."""


def dimension_cap() -> int:
    raw = os.environ.get(DIM_CAP_ENV)
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{DIM_CAP_ENV} must be an integer, got {raw!r}") from None


def state_dimension(lattice: Lattice, n: int) -> int:
    return (n + 1) ** lattice.size


def check_dimension(lattice: Lattice, n: int) -> int:
    dim = state_dimension(lattice, n)
    cap = dimension_cap()
    if dim > cap:
        raise DimensionCapError(
            f"state space of dimension {dim} for n={n}, L={lattice.size} exceeds the cap {cap} "
            f"(set {DIM_CAP_ENV} to raise it)"
        )
    return dim


@dataclass(frozen=True)
class RateParams:
    """Hopping prefactor ``w`` and the deformation context."""

    w: Scalar
    ctx: QContext
    n: int

    def __post_init__(self):
        w = self.ctx.scalar(self.w)
        if w <= 0:
            raise ValueError("w must be positive")
        if self.ctx.q < 1:
            raise ValueError("q must be at least 1")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        object.__setattr__(self, "w", w)

    @property
    def q(self):
        return self.ctx.q


def pair_rate(a: int, b: int, p: RateParams) -> Scalar:
    """Rate for the left/right species pair ``(a, b)`` to swap."""
    if a == b:
        return p.ctx.zero
    return p.w * p.ctx.q ** sgn(a - b)


def hop_rate(c: Config, k: int, p: RateParams) -> Scalar:
    """Rate of the swap across bond ``(k, k+1)``."""
    if k == c.lattice.l_plus:
        raise IndexError("bond beyond the last site")
    return pair_rate(c[k], c[k + 1], p)


def basis_index(c: Config) -> int:
    """1-based basis number; the left site is the least significant digit."""
    base = c.n + 1
    idx = 0
    for v in reversed(c.eta):
        idx = idx * base + v
    return idx + 1


def basis_config(i: int, lattice: Lattice, n: int) -> Config:
    dim = (n + 1) ** lattice.size
    if not 1 <= i <= dim:
        raise IndexError(f"basis index {i} outside 1..{dim}")
    i -= 1
    base = n + 1
    vals = []
    for _ in range(lattice.size):
        i, r = divmod(i, base)
        vals.append(r)
    return Config(lattice, bytes(vals), n)


def index_digits(lattice: Lattice, n: int) -> np.ndarray:
    """Array ``(dim, L)`` of species values for every 0-based basis index."""
    L = lattice.size
    dim = (n + 1) ** L
    idx = np.arange(dim, dtype=np.int64)
    out = np.empty((dim, L), dtype=np.int64)
    for s in range(L):
        idx, out[:, s] = np.divmod(idx, n + 1)
    return out


def build_H(lattice: Lattice, p: RateParams) -> SparseOperator:
    """Exact generator in the basis order of :func:`basis_index`."""
    n = p.n
    dim = check_dimension(lattice, n)
    base = n + 1
    L = lattice.size
    rates = {(a, b): pair_rate(a, b, p) for a in range(base) for b in range(base)}
    stride = [base ** s for s in range(L)]
    cols = []
    for j, conf in enumerate(enumerate_configs(lattice, n)):
        eta = conf.eta
        col = {}
        total = 0
        for s in range(L - 1):
            a, b = eta[s], eta[s + 1]
            if a == b:
                continue
            r = rates[a, b]
            # swap digits s and s+1
            target = j + (b - a) * stride[s] + (a - b) * stride[s + 1]
            col[target] = -r
            total += r
        if total:
            col[j] = total
        cols.append(col)
    return SparseOperator(dim, cols)


def apply_generator(f: Sequence, c: Config, H: SparseOperator):
    """``(L f)(eta) = -sum_eta' f(eta') H[eta', eta]`` with ``f`` indexed from 0."""
    j = basis_index(c) - 1
    return -sum((f[i] * v for i, v in H.cols[j].items()), 0)


def generator_action(f: Sequence, H: SparseOperator) -> list:
    """:func:`apply_generator` at every configuration, as a row-vector product."""
    return [-x for x in H.rmatvec(f)]


def markov_generator(f, c: Config, p: RateParams):
    """Rate-sum form ``sum_k w_k (f(eta^{k,k+1}) - f(eta))`` for a callable ``f``."""
    from .model import local_permute

    base = f(c)
    out = 0
    for k in c.lattice.bonds:
        r = hop_rate(c, k, p)
        if r:
            out += r * (f(local_permute(c, k)) - base)
    return out


def current_m(c: Config, k: int, alpha: int, p: RateParams) -> Scalar:
    """Current of species ``>= alpha`` across bond ``(k, k+1)``; zero outside the bonds."""
    lat = c.lattice
    if k < lat.l_minus - 1 or k > lat.l_plus:
        raise IndexError(f"bond index {k} outside the window")
    if k == lat.l_minus - 1 or k == lat.l_plus:
        return p.ctx.zero
    a = int(c[k] >= alpha)
    b = int(c[k + 1] >= alpha)
    q = p.ctx.q
    return p.w * (q * a * (1 - b) - (1 - a) * b / q)


def current_n(c: Config, k: int, alpha: int, p: RateParams) -> Scalar:
    """Current of species ``alpha`` across bond ``(k, k+1)``; zero outside the bonds."""
    lat = c.lattice
    if k < lat.l_minus - 1 or k > lat.l_plus:
        raise IndexError(f"bond index {k} outside the window")
    if k == lat.l_minus - 1 or k == lat.l_plus:
        return p.ctx.zero
    left, right = c[k], c[k + 1]
    q = p.ctx.q
    out = p.ctx.zero
    if left == alpha and right < alpha:
        out += q
    if right == alpha and left < alpha:
        out -= 1 / q
    if left > alpha and right == alpha:
        out -= q
    if left == alpha and right > alpha:
        out += 1 / q
    return p.w * out


def verify_continuity(H: SparseOperator, lattice: Lattice, p: RateParams) -> "CheckReport":
    """``L n^alpha_k`` and ``L m^alpha_k`` against the divergences of their currents, at every state."""
    from .report import CheckReport

    n = p.n
    configs = list(enumerate_configs(lattice, n))
    worst = {"species": 0, "tail": 0}
    for alpha in range(1, n + 1):
        for k in lattice.sites:
            f_n = [int(c[k] == alpha) for c in configs]
            f_m = [int(c[k] >= alpha) for c in configs]
            act_n = generator_action(f_n, H)
            act_m = generator_action(f_m, H)
            for c, gn, gm in zip(configs, act_n, act_m):
                dn = current_n(c, k - 1, alpha, p) - current_n(c, k, alpha, p)
                dm = current_m(c, k - 1, alpha, p) - current_m(c, k, alpha, p)
                worst["species"] = max(worst["species"], abs(gn - dn))
                worst["tail"] = max(worst["tail"], abs(gm - dm))
    top = max(worst.values())
    return CheckReport("currents", top, 1e-9 if isinstance(top, float) else 0.0, dict(worst))


def dense_evolve(H: SparseOperator, p0: np.ndarray, t: float) -> np.ndarray:
    """Master-equation solution ``exp(-t H) p0`` for small dimensions."""
    from scipy.linalg import expm

    if H.dim > 4096:
        raise DimensionCapError("dense time evolution is limited to dimension 4096")
    return expm(-t * H.to_dense()) @ np.asarray(p0, dtype=float)
