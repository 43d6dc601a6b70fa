"""Shock measures, the flip transformation and the shock exclusion process.

A shock measure is a product measure: ``K`` markers sit at fixed sites and
the segments between them are Bernoulli mixtures of species ``n`` and
vacancies with densities increasing from left to right. A marker of type
``alpha`` (``1..n``) occupies its site as a species ``alpha - 1`` particle.
In the shock exclusion process the same marker carries colour ``alpha - 1``.

Exact checks need an integer ``lam``; float contexts accept any real value.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import diagonal_of, duality_value, embed, global_cyclic, projector, reversible_diagonal
from .generator import RateParams, basis_index, build_H, check_dimension
from .measures import Measure, reduced_weight
from .model import (
    Config,
    CoordConfig,
    Lattice,
    balance,
    counts,
    enumerate_configs,
    sector_configs,
    to_coords,
    to_occupation,
)
from .qcalc import QContext, Scalar, qpow
from .report import CheckReport
from .sparse import SparseOperator


def _fugacity_power(exponent, ctx: QContext) -> Scalar:
    """``q**exponent`` where ``exponent`` may carry the real offset ``lam``."""
    if ctx.is_exact:
        e = Fraction(exponent)
        if e.denominator != 1 and not (e.denominator == 2 and ctx.has_sqrt):
            raise ValueError("exact shock computations need an integer lambda")
        return qpow(e, ctx)
    return float(ctx.q) ** float(exponent)


@dataclass(frozen=True)
class ShockConfig:
    """Marker positions and types plus the density offset ``lam``."""

    positions: Tuple[int, ...]
    types: Tuple[int, ...]
    n: int
    lam: object
    ctx: QContext
    w: object = 1

    def __post_init__(self):
        pos = tuple(int(x) for x in self.positions)
        typ = tuple(int(a) for a in self.types)
        if not pos:
            raise ValueError("need at least one shock marker")
        if len(pos) != len(typ):
            raise ValueError("positions and types differ in length")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("marker positions must be strictly increasing")
        if any(not 1 <= a <= self.n for a in typ):
            raise ValueError(f"marker types must lie in 1..{self.n}")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "types", typ)
        lam = Fraction(self.lam) if self.ctx.is_exact and not isinstance(self.lam, float) else self.lam
        if self.ctx.is_exact and isinstance(lam, float):
            raise TypeError("exact mode needs a rational lambda")
        object.__setattr__(self, "lam", lam if self.ctx.is_exact else float(lam))
        object.__setattr__(self, "w", self.ctx.scalar(self.w))

    @property
    def K(self) -> int:
        return len(self.positions)

    def dual(self) -> CoordConfig:
        """The marker configuration as a dual particle configuration (colours = types)."""
        return CoordConfig(self.positions, self.types)

    def moved(self, positions, types=None) -> "ShockConfig":
        return ShockConfig(tuple(positions), tuple(self.types if types is None else types),
                           self.n, self.lam, self.ctx, self.w)


def segment_fugacity(j: int, K: int, lam, ctx: QContext) -> Scalar:
    return _fugacity_power(2 * j - K + lam, ctx)


def shock_marginal(j: int, s: ShockConfig) -> Scalar:
    """Density of species ``n`` between markers ``j`` and ``j + 1`` (``0 <= j <= K``)."""
    if not 0 <= j <= s.K:
        raise IndexError(f"segment index {j} outside 0..{s.K}")
    x = segment_fugacity(j, s.K, s.lam, s.ctx)
    return x / (1 + x)


def marginals(s: ShockConfig) -> List[Scalar]:
    return [shock_marginal(j, s) for j in range(s.K + 1)]


def shock_measure(s: ShockConfig, lattice: Lattice) -> Measure:
    """Restriction of the shock product measure to ``lattice``."""
    for x in s.positions:
        lattice.check_site(x)
    n = s.n
    check_dimension(lattice, n)
    rho = marginals(s)
    ctx = s.ctx
    # per-site marginal as (deterministic species or None, segment)
    plan = []
    seg = 0
    markers = dict(zip(s.positions, s.types))
    for k in lattice.sites:
        if k in markers:
            plan.append((markers[k] - 1, None))
            seg += 1
        else:
            plan.append((None, rho[seg]))
    weights = []
    zero, one = ctx.zero, ctx.one
    for c in enumerate_configs(lattice, n):
        w = one
        for v, (fixed, r) in zip(c.eta, plan):
            if fixed is not None:
                if v != fixed:
                    w = zero
                    break
            elif v == n:
                w *= r
            elif v == 0:
                w *= 1 - r
            else:
                w = zero
                break
        weights.append(w)
    return Measure(lattice, n, weights, normalized=True)


# -- flip transformation and boundary term --------------------------------

def balance_sum_diagonal(alpha: int, lattice: Lattice, n: int, ctx: QContext, power: int = 1) -> SparseOperator:
    """Diagonal ``q**(power * sum_k N^alpha_k)``."""
    shift = lattice.l_plus + lattice.l_minus

    def f(c: Config):
        e = sum(shift - 2 * k for k, v in zip(lattice.sites, c.eta) if v == alpha)
        return qpow(power * e, ctx)

    return diagonal_of(f, lattice, n)


def transform_Un(lattice: Lattice, n: int, ctx: QContext) -> SparseOperator:
    """Reversible measure times the species-``n`` balance factor times the global cyclic lowering."""
    return reversible_diagonal(lattice, n, ctx) @ balance_sum_diagonal(n, lattice, n, ctx) @ global_cyclic(lattice, n)


def transform_Un_alt(lattice: Lattice, n: int, ctx: QContext) -> SparseOperator:
    """Equivalent form: global cyclic lowering after the reduced reversible measure."""
    return global_cyclic(lattice, n) @ diagonal_of(lambda c: reduced_weight(c, ctx), lattice, n)


def boundary_B(lattice: Lattice, n: int, gamma: int, ctx: QContext, w=1) -> SparseOperator:
    """``w (q - 1/q) (n^gamma at the right end - n^gamma at the left end)``."""
    w = ctx.scalar(w)
    pref = w * (ctx.q - 1 / ctx.q)
    right = embed(projector(gamma, n), lattice.l_plus, lattice)
    left = embed(projector(gamma, n), lattice.l_minus, lattice)
    return (right - left).scale(pref)


def verify_intertwining(H: SparseOperator, lattice: Lattice, n: int, ctx: QContext, w=1) -> CheckReport:
    """``H^T = U^-1 (H + B) U`` plus agreement of the two forms of ``U``."""
    U = transform_Un(lattice, n, ctx)
    B = boundary_B(lattice, n, n, ctx, w)
    res = (U.inverse_permutation() @ (H + B) @ U - H.T).max_abs()
    alt = (U - transform_Un_alt(lattice, n, ctx)).max_abs()
    worst = max(res, alt)
    return CheckReport("intertwining", worst, 1e-9 if isinstance(worst, float) else 0.0,
                       {"intertwining": res, "alternative-form": alt})


# -- shock exclusion process ------------------------------------------------

@dataclass
class ShockRates:
    """Hopping and colour-exchange rates of the shock exclusion process."""

    v: List[Scalar]
    w_plus: List[Scalar]
    w_minus: List[Scalar]
    w: Scalar
    q: Scalar

    def exchange_rate(self, left: int, right: int) -> Scalar:
        """Rate for adjacent shock colours ``(left, right)`` to swap."""
        if left == right:
            return 0 * self.w
        if left >= 1 and right >= 1:
            # the two marker particles swap like any discordant pair
            return self.w * self.q ** (1 if left > right else -1)
        if right == 0:
            return self.w * self.q
        return self.w / self.q


def shock_rates(s: ShockConfig) -> ShockRates:
    rho = marginals(s)
    q = s.ctx.q
    dq = q - 1 / q
    v, wp, wm = [], [], []
    for i in range(1, s.K + 1):
        gap = rho[i] - rho[i - 1]
        vi = dq * rho[i] * (1 - rho[i]) / gap
        vinv = dq * rho[i - 1] * (1 - rho[i - 1]) / gap
        v.append(vi)
        wp.append(s.w * vi)
        wm.append(s.w * vinv)
    return ShockRates(v, wp, wm, s.w, q)


def shock_predictions(s: ShockConfig) -> Dict[str, list]:
    """Mean velocities and diffusion coefficients of each marker as if isolated."""
    rho = marginals(s)
    q = s.ctx.q
    dq = q - 1 / q
    vel, diff = [], []
    for i in range(1, s.K + 1):
        a, b = rho[i - 1], rho[i]
        vel.append(s.w * dq * (1 - b - a))
        diff.append(s.w / 2 * dq * (b * (1 - b) + a * (1 - a)) / (b - a))
    return {"rho": rho, "v": vel, "D": diff}


def boundary_constant(s: ShockConfig) -> Scalar:
    rho = marginals(s)
    return s.w * (s.ctx.q - 1 / s.ctx.q) * (rho[-1] - rho[0])


def normalization_psi(x: CoordConfig, lattice: Lattice, K: int, lam, ctx: QContext) -> Scalar:
    """Product over segments of ``(1 + fugacity)**(segment length)``."""
    edges = (lattice.l_minus - 1,) + tuple(x.positions) + (lattice.l_plus + 1,)
    out = ctx.one
    for j in range(K + 1):
        out *= (1 + segment_fugacity(j, K, lam, ctx)) ** (edges[j + 1] - edges[j] - 1)
    return out


def normalization_phi(x: CoordConfig, lattice: Lattice, n: int, lam, ctx: QContext) -> Scalar:
    """Total mass ``<s| U (D*)^T |x>`` of the unnormalized shock measure.

    With the duality function of :func:`duality_value` this is exactly
    :func:`normalization_psi`; a doubly reduced weight of ``x`` does not
    appear (it would break the evolution identity once ``n >= 3``).
    """
    to_occupation(x, lattice, n)
    return normalization_psi(x, lattice, x.N, lam, ctx)


def starred_duality(x: CoordConfig, c: Config, lam, ctx: QContext) -> Scalar:
    """Duality function with the species ``>= 2`` sector projector and the vacancy fugacity."""
    for a in range(2, c.n + 1):
        if c.eta.count(a) != x.colour_count(a):
            return ctx.zero
    d = duality_value(x, c, ctx)
    if d == 0:
        return d
    return d * _fugacity_power(lam * c.eta.count(0), ctx)


@dataclass
class ShockGenerator:
    """``Phi H Phi^-1 - b`` on one colour sector of dual configurations."""

    lattice: Lattice
    n: int
    colour_counts: Tuple[int, ...]
    states: List[Config]
    index: Dict[bytes, int]
    G: SparseOperator
    b: Scalar
    phi: List[Scalar]

    def interior(self, i: int) -> bool:
        eta = self.states[i].eta
        return eta[0] == 0 and eta[-1] == 0

    def coords(self, i: int) -> CoordConfig:
        return to_coords(self.states[i])


def dual_sector(lattice: Lattice, n: int, colour_counts: Sequence[int]) -> List[Config]:
    """All dual configurations with ``colour_counts[alpha-1]`` particles of colour ``alpha``."""
    colour_counts = tuple(int(v) for v in colour_counts)
    if len(colour_counts) != n:
        raise ValueError("need one count per colour 1..n")
    K = sum(colour_counts)
    full = (lattice.size - K,) + colour_counts
    out = sorted(sector_configs(lattice, full), key=basis_index)
    return out


def build_G(lattice: Lattice, n: int, colour_counts: Sequence[int], lam, ctx: QContext, w=1) -> ShockGenerator:
    """Shock-process generator on a dual colour sector, with the constant ``b``."""
    states = dual_sector(lattice, n, colour_counts)
    K = sum(colour_counts)
    index = {c.eta: i for i, c in enumerate(states)}
    p = RateParams(w, ctx, n)
    phi = [normalization_phi(to_coords(c), lattice, n, lam, ctx) for c in states]
    types = tuple(a for a in range(1, n + 1) for _ in range(colour_counts[a - 1]))
    probe = ShockConfig(tuple(range(lattice.l_minus + 1, lattice.l_minus + 1 + K)), types, n, lam, ctx, w)
    b = boundary_constant(probe)
    cols = []
    for j, c in enumerate(states):
        col = {}
        eta = c.eta
        exit_rate = 0
        for s_ in range(lattice.size - 1):
            a, bb = eta[s_], eta[s_ + 1]
            if a == bb:
                continue
            r = p.w * ctx.q ** (1 if a > bb else -1)
            swapped = bytearray(eta)
            swapped[s_], swapped[s_ + 1] = bb, a
            i = index[bytes(swapped)]
            col[i] = -r * phi[i] / phi[j]
            exit_rate += r
        diag = exit_rate - b
        if diag != 0:
            col[j] = diag
        cols.append(col)
    return ShockGenerator(lattice, n, tuple(colour_counts), states, index, SparseOperator(len(states), cols), b, phi)


def expected_transition_rate(x: CoordConfig, y: CoordConfig, s: ShockConfig) -> Scalar:
    """Rate from ``x`` to ``y`` in the shock exclusion process (0 if not a single move).

    ``x`` and ``y`` carry dual colours; the shock process sees colour minus one.
    """
    rates = shock_rates(s)
    if x.positions == y.positions:
        diff = [i for i, (a, b) in enumerate(zip(x.colours, y.colours)) if a != b]
        if len(diff) == 2 and diff[1] == diff[0] + 1:
            i = diff[0]
            if x.positions[i + 1] == x.positions[i] + 1 and x.colours[i] == y.colours[i + 1] \
                    and x.colours[i + 1] == y.colours[i]:
                return rates.exchange_rate(x.colours[i] - 1, x.colours[i + 1] - 1)
        return 0 * rates.w
    if x.colours != y.colours:
        return 0 * rates.w
    moved = [i for i, (a, b) in enumerate(zip(x.positions, y.positions)) if a != b]
    if len(moved) != 1:
        return 0 * rates.w
    i = moved[0]
    step = y.positions[i] - x.positions[i]
    if step == 1:
        return rates.w_plus[i]
    if step == -1:
        return rates.w_minus[i]
    return 0 * rates.w


def verify_shock_rates(sg: ShockGenerator, lam, ctx: QContext, w=1) -> CheckReport:
    """Off-diagonals of ``-G`` against the hopping/exchange rates; interior column sums."""
    worst_rate = 0
    worst_sum = 0
    worst_sign = 0
    checked = 0
    for j, c in enumerate(sg.states):
        if not sg.interior(j):
            continue
        x = sg.coords(j)
        s = ShockConfig(x.positions, x.colours, sg.n, lam, ctx, w)
        col = sg.G.cols[j]
        for i, g in col.items():
            if i == j:
                continue
            y = sg.coords(i)
            worst_rate = max(worst_rate, abs(-g - expected_transition_rate(x, y, s)))
            worst_sign = max(worst_sign, max(g, 0))
            checked += 1
        worst_sum = max(worst_sum, abs(sum(col.values(), 0)))
    worst = max(worst_rate, worst_sum, worst_sign)
    return CheckReport("shock-rates", worst, 1e-9 if isinstance(worst, float) else 0.0,
                       {"rates": worst_rate, "column-sums": worst_sum, "positivity": worst_sign,
                        "transitions": checked})


def shock_measure_from_duality(x: CoordConfig, lattice: Lattice, n: int, lam, ctx: QContext,
                               U: Optional[SparseOperator] = None) -> list:
    """Unnormalized vector ``U (D*)^T |x>`` over all configurations."""
    if U is None:
        U = transform_Un(lattice, n, ctx)
    col = [starred_duality(x, c, lam, ctx) for c in enumerate_configs(lattice, n)]
    return U.matvec(col)


def verify_shock_evolution(lattice: Lattice, n: int, colour_counts: Sequence[int], lam, ctx: QContext,
                           w=1) -> CheckReport:
    """Exact finite-window evolution identity and the duality form of the shock measure.

    For every dual configuration ``x`` with all markers off the boundary sites:
    ``(H + B - b) mu_x = sum_y G[y, x] mu_y`` and ``mu_x = U (D*)^T |x> / Phi(x)``
    with ``Phi(x) = <s| U (D*)^T |x>``.
    """
    p = RateParams(w, ctx, n)
    H = build_H(lattice, p)
    B = boundary_B(lattice, n, n, ctx, w)
    sg = build_G(lattice, n, colour_counts, lam, ctx, w)
    U = transform_Un(lattice, n, ctx)
    HB = (H + B).add_scalar(-sg.b)
    measures: Dict[int, list] = {}

    def mu(i: int) -> list:
        if i not in measures:
            x = sg.coords(i)
            measures[i] = shock_measure(ShockConfig(x.positions, x.colours, n, lam, ctx, w), lattice).weights
        return measures[i]

    worst_evo = worst_dual = worst_phi = worst_b = 0
    skipped_boundary = 0
    interior = 0
    for j in range(len(sg.states)):
        if not sg.interior(j):
            skipped_boundary += 1
            continue
        interior += 1
        x = sg.coords(j)
        lhs = HB.matvec(mu(j))
        rhs = [0] * H.dim
        for i, g in sg.G.cols[j].items():
            m = mu(i)
            for t in range(H.dim):
                if m[t]:
                    rhs[t] += g * m[t]
        worst_evo = max(worst_evo, max(abs(a - b) for a, b in zip(lhs, rhs)))
        raw = shock_measure_from_duality(x, lattice, n, lam, ctx, U)
        phi = sum(raw, 0)
        worst_phi = max(worst_phi, abs(phi - sg.phi[j]))
        worst_dual = max(worst_dual, max(abs(a / phi - b) for a, b in zip(raw, mu(j))))
        expect_B = sum((bv * m for bv, m in zip(B.diagonal_values(), mu(j))), 0)
        worst_b = max(worst_b, abs(expect_B - sg.b))
    worst = max(worst_evo, worst_dual, worst_phi, worst_b)
    return CheckReport("shock-evolution", worst, 1e-9 if isinstance(worst, float) else 0.0,
                       {"evolution": worst_evo, "measure-duality": worst_dual, "normalization": worst_phi,
                        "boundary-constant": worst_b, "interior-states": interior,
                        "boundary-states-skipped": skipped_boundary},
                       message=f"{skipped_boundary} boundary-touching configurations excluded" if skipped_boundary else "")


# -- stationary gaps --------------------------------------------------------

@dataclass
class GapLaw:
    """Geometric law of the gap ``x_{i+1} - x_i - 1`` between consecutive markers."""

    p: Scalar

    def pmf(self, g: int) -> Scalar:
        if g < 0:
            return 0 * self.p
        return self.p * (1 - self.p) ** g

    def cdf(self, g: int) -> Scalar:
        if g < 0:
            return 0 * self.p
        return 1 - (1 - self.p) ** (g + 1)

    def mean(self) -> Scalar:
        return (1 - self.p) / self.p


def stationary_gap_law(s: ShockConfig, i: int) -> GapLaw:
    if not 1 <= i <= s.K - 1:
        raise IndexError(f"gap index {i} outside 1..{s.K - 1}")
    rho = marginals(s)
    K = s.K
    p = (rho[K] - rho[i]) * (rho[i] - rho[0]) / (rho[i] * (1 - rho[i]))
    return GapLaw(p)


def gap_parameter_from_fugacity(z, K: int, i: int, ctx: QContext) -> Scalar:
    """Same success parameter written through ``z = rho_0 / (1 - rho_0)``."""
    q = ctx.q
    z = ctx.scalar(z) if not isinstance(z, float) else z
    q2K, q2i = q ** (2 * K), q ** (2 * i)
    return z * (q2K - q2i) * (q2i - 1) / (q2i * (1 + z) * (1 + q2K * z))


def write_predictions_csv(s: ShockConfig, path, header: Optional[dict] = None) -> None:
    pred = shock_predictions(s)
    with open(path, "w", newline="") as fh:
        for key, val in (header or {}).items():
            fh.write(f"# {key}={val}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["i", "rho_i", "v_i", "D_i", "p_i"])
        for i in range(s.K + 1):
            v = float(pred["v"][i - 1]) if i >= 1 else ""
            d = float(pred["D"][i - 1]) if i >= 1 else ""
            p = float(stationary_gap_law(s, i).p) if 1 <= i <= s.K - 1 else ""
            wr.writerow([i, float(pred["rho"][i]), v, d, p])
