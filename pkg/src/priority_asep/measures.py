"""Reversible, canonical, grand-canonical and blocking measures.

Chemical potentials only ever appear exponentiated, so exact computations
take positive rational fugacities ``z_alpha = exp(mu_alpha)`` directly.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

from .generator import check_dimension, basis_index
from .model import (
    Config,
    Counts,
    Lattice,
    counts,
    energy,
    energy_doubly_reduced,
    energy_reduced,
    energy_vacancy,
    enumerate_configs,
)
from .qcalc import QContext, Scalar, qfactorial, qpow
from .report import CheckReport
from .sparse import SparseOperator


@dataclass
class Measure:
    """Weights over all configurations of a window, indexed by basis order (0-based)."""

    lattice: Lattice
    n: int
    weights: List[Scalar]
    normalized: bool = False

    def __post_init__(self):
        if len(self.weights) != (self.n + 1) ** self.lattice.size:
            raise ValueError("weight vector has the wrong length")
        if any(w < 0 for w in self.weights):
            raise ValueError("negative weight")

    def __getitem__(self, c: Config) -> Scalar:
        return self.weights[basis_index(c) - 1]

    def total(self) -> Scalar:
        return sum(self.weights, 0 * self.weights[0])

    def normalize(self) -> "Measure":
        z = self.total()
        if z == 0:
            raise ZeroDivisionError("measure has zero mass")
        return Measure(self.lattice, self.n, [w / z for w in self.weights], True)

    def support(self) -> Iterator[Config]:
        for c, w in zip(enumerate_configs(self.lattice, self.n), self.weights):
            if w:
                yield c

    def expectation(self, f) -> Scalar:
        return sum((w * f(c) for c, w in zip(enumerate_configs(self.lattice, self.n), self.weights) if w), 0)


def reversible_weight(c: Config, ctx: QContext) -> Scalar:
    """``q**(-E(eta))``."""
    return qpow(-energy(c), ctx)


def vacancy_weight(c: Config, ctx: QContext) -> Scalar:
    return qpow(-energy_vacancy(c), ctx)


def reduced_weight(c: Config, ctx: QContext) -> Scalar:
    """Reversible weight with the vacancy interactions stripped off."""
    return qpow(-energy_reduced(c), ctx)


def doubly_reduced_weight(c: Config, ctx: QContext) -> Scalar:
    """Weight built from interactions among species ``>= 2`` only; 1 for ``n <= 2``."""
    return qpow(-energy_doubly_reduced(c), ctx)


def reversible_measure(lattice: Lattice, n: int, ctx: QContext) -> Measure:
    check_dimension(lattice, n)
    return Measure(lattice, n, [reversible_weight(c, ctx) for c in enumerate_configs(lattice, n)])


def _full_counts(lattice: Lattice, N) -> Counts:
    """Accept a :class:`Counts` or the species-``1..n`` numbers (vacancies implied)."""
    if isinstance(N, Counts):
        full = tuple(N.N)
    else:
        species = tuple(int(v) for v in N)
        full = (lattice.size - sum(species),) + species
    if any(v < 0 for v in full) or sum(full) != lattice.size:
        raise ValueError(f"particle numbers {full} do not fill a lattice of {lattice.size} sites")
    return Counts(full)


def canonical_partition(lattice: Lattice, N, ctx: QContext) -> Scalar:
    """``[L]_q! / prod_alpha [N^alpha]_q!``."""
    full = _full_counts(lattice, N)
    out = qfactorial(lattice.size, ctx)
    for v in full.N:
        out /= qfactorial(v, ctx)
    return out


def canonical_measure(lattice: Lattice, N, ctx: QContext) -> Measure:
    full = _full_counts(lattice, N)
    n = full.n
    check_dimension(lattice, n)
    cpart = canonical_partition(lattice, full, ctx)
    zero = ctx.zero
    weights = [
        reversible_weight(c, ctx) / cpart if counts(c) == full else zero
        for c in enumerate_configs(lattice, n)
    ]
    return Measure(lattice, n, weights, normalized=True)


def compositions(total: int, parts: int) -> Iterator[tuple]:
    """Nonnegative integer vectors of length ``parts`` with sum at most ``total``."""
    for combo in itertools.product(range(total + 1), repeat=parts):
        if sum(combo) <= total:
            yield combo


def fugacities(ctx: QContext, mu=None, z=None) -> list:
    """Resolve chemical potentials or fugacities into scalars of ``ctx``."""
    if (mu is None) == (z is None):
        raise ValueError("give exactly one of mu or z")
    if z is not None:
        vals = [ctx.scalar(v) for v in z]
    else:
        if ctx.is_exact and any(m != 0 for m in mu):
            raise ValueError("exact mode needs rational fugacities z instead of chemical potentials")
        vals = [ctx.scalar(math.exp(m)) if m != 0 else ctx.one for m in mu]
    if any(v <= 0 for v in vals):
        raise ValueError("fugacities must be positive")
    return vals


def grand_partition(lattice: Lattice, ctx: QContext, mu=None, z=None) -> Scalar:
    """Sum over particle numbers of ``prod_alpha z_alpha**N^alpha`` times the canonical partition function."""
    zs = fugacities(ctx, mu, z)
    total = ctx.zero
    for N in compositions(lattice.size, len(zs)):
        weight = ctx.one
        for za, na in zip(zs, N):
            weight *= za ** na
        total += weight * canonical_partition(lattice, N, ctx)
    return total


def grand_partition_product(lattice: Lattice, ctx: QContext, mu=None, z=None) -> Scalar:
    """Single-species closed form ``prod_k (1 + z q**(2k - L+ - L-))``."""
    zs = fugacities(ctx, mu, z)
    if len(zs) != 1:
        raise ValueError("the product form holds for one particle species only")
    out = ctx.one
    shift = lattice.l_plus + lattice.l_minus
    for k in lattice.sites:
        out *= 1 + zs[0] * qpow(2 * k - shift, ctx)
    return out


def grand_measure(lattice: Lattice, ctx: QContext, mu=None, z=None) -> Measure:
    zs = fugacities(ctx, mu, z)
    n = len(zs)
    check_dimension(lattice, n)
    zpart = grand_partition(lattice, ctx, z=zs)
    weights = []
    for c in enumerate_configs(lattice, n):
        N = counts(c).N
        w = reversible_weight(c, ctx)
        for a in range(1, n + 1):
            w *= zs[a - 1] ** N[a]
        weights.append(w / zpart)
    return Measure(lattice, n, weights, normalized=True)


def blocking_marginal(k: int, lam, ctx: QContext) -> Scalar:
    """Probability that site ``k`` holds the higher of the two species."""
    x = ctx.scalar(lam) * qpow(2 * k, ctx)
    return x / (1 + x)


def blocking_measure(lattice: Lattice, n: int, alpha: int, beta: int, lam, ctx: QContext) -> Measure:
    """Product measure on species ``alpha < beta`` with the higher one piling up to the right."""
    if not 0 <= alpha < beta <= n:
        raise ValueError("need 0 <= alpha < beta <= n")
    lam = ctx.scalar(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    check_dimension(lattice, n)
    rho = {k: blocking_marginal(k, lam, ctx) for k in lattice.sites}
    zero = ctx.zero
    weights = []
    for c in enumerate_configs(lattice, n):
        w = ctx.one
        for k, v in zip(lattice.sites, c.eta):
            if v == beta:
                w *= rho[k]
            elif v == alpha:
                w *= 1 - rho[k]
            else:
                w = zero
                break
        weights.append(w)
    return Measure(lattice, n, weights, normalized=True)


class ZeroWeightError(ValueError):
    """A configuration reachable from the support carries no weight."""


def check_detailed_balance(H: SparseOperator, m: Measure) -> CheckReport:
    """Largest ``|mu(j) w(j->i) - mu(i) w(i->j)|`` over all transitions."""
    wts = m.weights
    worst = 0
    pairs = 0
    for j, col in enumerate(H.cols):
        for i, h in col.items():
            if i == j:
                continue
            if (wts[j] == 0) != (wts[i] == 0):
                raise ZeroWeightError(f"basis state {i + 1} reachable from {j + 1} has zero weight")
            if wts[j] == 0:
                continue
            v = abs(wts[j] * h - wts[i] * H[j, i])
            pairs += 1
            if v > worst:
                worst = v
    tol = 0.0 if isinstance(worst, int) or not isinstance(worst, float) else 1e-12
    return CheckReport("detailed-balance", worst, tol, {"transitions": pairs})


def reversibility_residual(H: SparseOperator, m: Measure) -> SparseOperator:
    """``mu^-1 H mu - H^T`` restricted to the support of ``mu``."""
    wts = m.weights
    support = [w != 0 for w in wts]
    cols = []
    for j, col in enumerate(H.cols):
        out = {}
        if support[j]:
            for i, h in col.items():
                if not support[i]:
                    raise ZeroWeightError(f"basis state {i + 1} reachable from {j + 1} has zero weight")
                out[i] = h * wts[j] / wts[i]
        cols.append(out)
    sim = SparseOperator(H.dim, cols)
    ht = H.T
    ht = SparseOperator(H.dim, [({i: v for i, v in c.items() if support[i]} if support[j] else {})
                                for j, c in enumerate(ht.cols)])
    return sim - ht


def stationarity_residual(H: SparseOperator, m: Measure) -> list:
    """``H mu`` as a column vector; zero for an invariant measure."""
    return H.matvec(m.weights)


def verify_partition(lattice: Lattice, n: int, ctx: QContext, z=None) -> CheckReport:
    """Canonical and grand-canonical partition functions against brute-force sums.

    ``z`` defaults to the fugacities ``1/2, 1/3, ...``. For ``n = 1`` the
    product form is compared as well.
    """
    check_dimension(lattice, n)
    zs = fugacities(ctx, z=z if z is not None else [ctx.one / (a + 1) for a in range(1, n + 1)])
    by_sector = {}
    grand_brute = ctx.zero
    for c in enumerate_configs(lattice, n):
        N = counts(c).N
        w = reversible_weight(c, ctx)
        by_sector[N] = by_sector.get(N, ctx.zero) + w
        for a in range(1, n + 1):
            w *= zs[a - 1] ** N[a]
        grand_brute += w
    worst_c = max(abs(canonical_partition(lattice, Counts(N), ctx) - v) for N, v in by_sector.items())
    worst_g = abs(grand_partition(lattice, ctx, z=zs) - grand_brute)
    details = {"canonical": worst_c, "grand": worst_g, "sectors": len(by_sector)}
    if n == 1:
        details["product"] = abs(grand_partition_product(lattice, ctx, z=zs) - grand_brute)
    worst = max(v for k, v in details.items() if k != "sectors")
    tol = 1e-9 * abs(grand_brute) if isinstance(worst, float) else 0.0
    return CheckReport("partition", worst, tol, details)


def write_measure_csv(m: Measure, path, header: Optional[dict] = None) -> None:
    from .sparse import format_scalar

    with open(path, "w", newline="") as fh:
        for key, val in (header or {}).items():
            fh.write(f"# {key}={val}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "eta", "weight"])
        for i, (c, w) in enumerate(zip(enumerate_configs(m.lattice, m.n), m.weights), start=1):
            writer.writerow([i, c.digits(), format_scalar(w)])
