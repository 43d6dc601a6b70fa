"""Quantum-group representation matrices, symmetries and self-duality.

Global operators act on the ``(n+1)**L`` dimensional space spanned by the
configuration basis. They are assembled from single-site matrices placed at
a site (identity elsewhere) and from diagonal matrices built out of
configuration functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

from .generator import basis_index, build_H, check_dimension, RateParams
from .measures import reversible_weight
from .model import (
    Config,
    CoordConfig,
    Lattice,
    balance,
    balance_m,
    enumerate_configs,
    global_flip,
    to_coords,
)
from .qcalc import QContext, Scalar, qfactorial, qnum, qpow
from .report import CheckReport, skipped
from .sparse import SparseOperator, commutator


@dataclass(frozen=True)
class SiteOperator:
    """Matrix of dimension ``n + 1`` acting on one site, stored as ``{(row, col): value}``."""

    n: int
    entries: Tuple[Tuple[Tuple[int, int], object], ...]

    @classmethod
    def from_dict(cls, n: int, entries: Dict[Tuple[int, int], object]) -> "SiteOperator":
        for (r, c) in entries:
            if not (0 <= r <= n and 0 <= c <= n):
                raise ValueError(f"entry ({r}, {c}) outside species range 0..{n}")
        return cls(n, tuple(sorted((k, v) for k, v in entries.items() if v != 0)))

    def as_dict(self) -> Dict[Tuple[int, int], object]:
        return dict(self.entries)

    def __matmul__(self, other: "SiteOperator") -> "SiteOperator":
        a, b = self.as_dict(), other.as_dict()
        out: Dict[Tuple[int, int], object] = {}
        for (i, k), x in a.items():
            for (k2, j), y in b.items():
                if k == k2:
                    out[i, j] = out.get((i, j), 0) + x * y
        return SiteOperator.from_dict(self.n, out)

    def __add__(self, other: "SiteOperator") -> "SiteOperator":
        out = self.as_dict()
        for k, v in other.entries:
            out[k] = out.get(k, 0) + v
        return SiteOperator.from_dict(self.n, out)

    def scale(self, s) -> "SiteOperator":
        return SiteOperator.from_dict(self.n, {k: s * v for k, v in self.entries})

    def dense(self):
        mat = [[0] * (self.n + 1) for _ in range(self.n + 1)]
        for (i, j), v in self.entries:
            mat[i][j] = v
        return mat


ONE = Fraction(1)


def sigma_plus(alpha: int, n: int) -> SiteOperator:
    """``|alpha-1)(alpha|``: turns species ``alpha`` into ``alpha - 1``."""
    if not 1 <= alpha <= n:
        raise ValueError("alpha must lie in 1..n")
    return SiteOperator.from_dict(n, {(alpha - 1, alpha): ONE})


def sigma_minus(alpha: int, n: int) -> SiteOperator:
    """``|alpha)(alpha-1|``: turns species ``alpha - 1`` into ``alpha``."""
    if not 1 <= alpha <= n:
        raise ValueError("alpha must lie in 1..n")
    return SiteOperator.from_dict(n, {(alpha, alpha - 1): ONE})


def projector(alpha: int, n: int) -> SiteOperator:
    if not 0 <= alpha <= n:
        raise ValueError("alpha must lie in 0..n")
    return SiteOperator.from_dict(n, {(alpha, alpha): ONE})


def species_flip(alpha: int, beta: int, n: int) -> SiteOperator:
    """``|alpha)(beta|``."""
    return SiteOperator.from_dict(n, {(alpha, beta): ONE})


def cartan(alpha: int, n: int) -> SiteOperator:
    """``n^(alpha-1) - n^alpha``."""
    return SiteOperator.from_dict(n, {(alpha - 1, alpha - 1): ONE, (alpha, alpha): -ONE})


def cyclic_lower(n: int) -> SiteOperator:
    """Site operator lowering every species by one, vacancies becoming species ``n``."""
    ent = {(n, 0): ONE}
    for a in range(1, n + 1):
        ent[a - 1, a] = ONE
    return SiteOperator.from_dict(n, ent)


def site_identity(n: int) -> SiteOperator:
    return SiteOperator.from_dict(n, {(a, a): ONE for a in range(n + 1)})


# -- global operators ----------------------------------------------------

def embed(op: SiteOperator, k: int, lattice: Lattice) -> SparseOperator:
    """Place ``op`` at site ``k``; identity elsewhere, in the configuration basis order."""
    n = op.n
    dim = check_dimension(lattice, n)
    s = lattice.check_site(k)
    stride = (n + 1) ** s
    by_col: Dict[int, list] = {}
    for (r, c), v in op.entries:
        by_col.setdefault(c, []).append((r, v))
    cols = []
    for j in range(dim):
        d = (j // stride) % (n + 1)
        col = {}
        for r, v in by_col.get(d, ()):
            col[j + (r - d) * stride] = v
        cols.append(col)
    return SparseOperator(dim, cols)


def diagonal_of(fn: Callable[[Config], object], lattice: Lattice, n: int) -> SparseOperator:
    """Diagonal matrix with entries ``fn(eta)``."""
    check_dimension(lattice, n)
    return SparseOperator.diagonal([fn(c) for c in enumerate_configs(lattice, n)])


def rep_N(alpha: int, lattice: Lattice, n: int) -> SparseOperator:
    """Total number of species-``alpha`` particles as a diagonal operator."""
    if not 0 <= alpha <= n:
        raise ValueError("alpha must lie in 0..n")
    out = SparseOperator(check_dimension(lattice, n))
    for k in lattice.sites:
        out = out + embed(projector(alpha, n), k, lattice)
    return out


def _local_count(c: Config, alpha: int, lo: int, hi: int) -> int:
    """Number of species-``alpha`` sites in ``[lo, hi]`` (absolute labels)."""
    return sum(1 for k, v in zip(c.lattice.sites, c.eta) if lo <= k <= hi and v == alpha)


def rep_Y(alpha: int, sign: int, lattice: Lattice, n: int, ctx: QContext) -> SparseOperator:
    """Symmetry generators of the generator built with integer powers of ``q`` only."""
    if not 1 <= alpha <= n:
        raise ValueError("alpha must lie in 1..n")
    lo, hi = lattice.l_minus, lattice.l_plus
    if sign > 0:
        site, tag, left_sign = sigma_plus(alpha, n), alpha, -1
    else:
        site, tag, left_sign = sigma_minus(alpha, n), alpha - 1, 1
    out = SparseOperator(check_dimension(lattice, n))
    for k in lattice.sites:
        left = diagonal_of(lambda c: qpow(left_sign * _local_count(c, tag, lo, k - 1), ctx), lattice, n)
        right = diagonal_of(lambda c: qpow(-left_sign * _local_count(c, tag, k + 1, hi), ctx), lattice, n)
        out = out + left @ embed(site, k, lattice) @ right
    return out


def rep_X(alpha: int, sign: int, lattice: Lattice, n: int, ctx: QContext) -> SparseOperator:
    """Coproduct representation with half-integer powers; needs ``ctx.sqrt_q``."""
    if not 1 <= alpha <= n:
        raise ValueError("alpha must lie in 1..n")
    if ctx.q != 1 and not ctx.has_sqrt:
        raise ValueError("the X generators need q declared as a perfect square (sqrt_q)")
    lo, hi = lattice.l_minus, lattice.l_plus
    site = sigma_plus(alpha, n) if sign > 0 else sigma_minus(alpha, n)

    def h(c: Config, a: int, b: int) -> int:
        return _local_count(c, alpha - 1, a, b) - _local_count(c, alpha, a, b)

    def half(e2: int):
        return ctx.one if ctx.q == 1 else qpow(Fraction(e2, 2), ctx)

    out = SparseOperator(check_dimension(lattice, n))
    for k in lattice.sites:
        left = diagonal_of(lambda c: half(h(c, lo, k - 1)), lattice, n)
        right = diagonal_of(lambda c: half(-h(c, k + 1, hi)), lattice, n)
        out = out + left @ embed(site, k, lattice) @ right
    return out


def cartan_qnumber(alpha: int, lattice: Lattice, n: int, ctx: QContext) -> SparseOperator:
    """Diagonal ``[N^(alpha-1) - N^alpha]_q``, the commutator of the two X generators."""
    def f(c: Config):
        return qnum(c.eta.count(alpha - 1) - c.eta.count(alpha), ctx)
    return diagonal_of(f, lattice, n)


def upsilon(alpha: int, sign: int, lattice: Lattice, n: int, ctx: QContext) -> SparseOperator:
    """``sum_{l=0}^{L} Y**l / [l]_q!`` for the chosen Y generator."""
    Y = rep_Y(alpha, sign, lattice, n, ctx)
    dim = Y.dim
    out = SparseOperator.identity(dim, ctx.one)
    term = SparseOperator.identity(dim, ctx.one)
    for l in range(1, lattice.size + 1):
        term = term @ Y
        if term.is_zero():
            break
        out = out + term.scale(1 / qfactorial(l, ctx))
    return out


def reversible_diagonal(lattice: Lattice, n: int, ctx: QContext, power: int = 1) -> SparseOperator:
    return diagonal_of(lambda c: reversible_weight(c, ctx) ** power, lattice, n)


def duality_matrix(lattice: Lattice, n: int, ctx: QContext,
                   order: Optional[Sequence[Tuple[int, int]]] = None) -> SparseOperator:
    """Inverse reversible measure times an ordered product of Upsilon factors.

    ``order`` lists ``(alpha, sign)`` factors from left to right; the default
    ``(1, +1), ..., (n, +1)`` gives the closed-form duality function.
    """
    if order is None:
        order = [(a, 1) for a in range(1, n + 1)]
    out = reversible_diagonal(lattice, n, ctx, power=-1)
    for alpha, sign in order:
        out = out @ upsilon(alpha, sign, lattice, n, ctx)
    return out


def dual_factor(alpha: int, k: int, c: Config, cval, ctx: QContext) -> Scalar:
    """Single-particle duality factor for a dual particle of colour ``alpha`` at site ``k``."""
    if c[k] < alpha:
        return ctx.zero
    i = c.lattice.check_site(k)
    left = sum(1 for v in c.eta[:i] if v < alpha)
    right = sum(1 for v in c.eta[i + 1:] if v < alpha)
    cval = Fraction(cval) if ctx.is_exact else float(cval)
    return qpow(-(1 + cval) * left + (1 - cval) * right, ctx)


def duality_value(x: CoordConfig, c: Config, ctx: QContext, cvec=None) -> Scalar:
    """Closed-form duality function between a dual configuration ``x`` and ``c``.

    ``cvec`` maps a colour ``alpha`` to its parameter ``c_alpha`` (default 0).
    """
    out = ctx.one
    for k, a in zip(x.positions, x.colours):
        if not 1 <= a <= c.n:
            raise ValueError(f"colour {a} outside 1..{c.n}")
        ca = 0 if cvec is None else cvec[a - 1] if isinstance(cvec, (list, tuple)) else cvec.get(a, 0)
        f = dual_factor(a, k, c, ca, ctx)
        if f == 0:
            return ctx.zero
        out *= f
    return out


def duality_closed_form(lattice: Lattice, n: int, ctx: QContext, cvec=None) -> SparseOperator:
    """Matrix with entries ``duality_value(zeta, eta)`` (rows ``zeta``, columns ``eta``)."""
    dim = check_dimension(lattice, n)
    confs = list(enumerate_configs(lattice, n))
    coords = [to_coords(z) for z in confs]
    trip = []
    for j, eta in enumerate(confs):
        for i, x in enumerate(coords):
            v = duality_value(x, eta, ctx, cvec)
            if v:
                trip.append((i, j, v))
    return SparseOperator.from_triplets(dim, trip)


def q_observable(c: Config, k: int, alpha: int, ctx: QContext) -> Scalar:
    """``m^alpha_k q**(M^alpha_k)``."""
    if c[k] < alpha:
        return ctx.zero
    return qpow(balance_m(c, k, alpha), ctx)


def q_current(c: Config, k: int, alpha: int, p: RateParams) -> Scalar:
    """Linear current ``w (q Q_k - Q_{k+1} / q)`` across bond ``(k, k+1)``; zero outside the bonds."""
    lat = c.lattice
    if k == lat.l_minus - 1 or k == lat.l_plus:
        return p.ctx.zero
    if not lat.l_minus <= k < lat.l_plus:
        raise IndexError(f"bond index {k} outside the window")
    return p.w * (p.q * q_observable(c, k, alpha, p.ctx) - q_observable(c, k + 1, alpha, p.ctx) / p.q)


def global_cyclic(lattice: Lattice, n: int, power: int = 1) -> SparseOperator:
    """Product of the per-site lowering matrices, ``|eta> -> |eta - power>``."""
    dim = check_dimension(lattice, n)
    image = [basis_index(global_flip(c, -power)) - 1 for c in enumerate_configs(lattice, n)]
    return SparseOperator.permutation(image)


# -- verification -----------------------------------------------------------

def _exact_tolerance(x) -> float:
    return 1e-9 if isinstance(x, float) else 0.0


def verify_symmetry(H: SparseOperator, lattice: Lattice, n: int, ctx: QContext) -> CheckReport:
    """Commutators of the generator with all particle numbers and Y generators."""
    worst = 0
    details = {}
    for a in range(n + 1):
        v = commutator(H, rep_N(a, lattice, n)).max_abs()
        details[f"N{a}"] = v
        worst = max(worst, v)
    for a in range(1, n + 1):
        for s, tag in ((1, "+"), (-1, "-")):
            v = commutator(H, rep_Y(a, s, lattice, n, ctx)).max_abs()
            details[f"Y{a}{tag}"] = v
            worst = max(worst, v)
    return CheckReport("symmetry", worst, _exact_tolerance(worst), details)


def verify_duality(H: SparseOperator, lattice: Lattice, n: int, ctx: QContext,
                   order=None, closed_form: bool = True) -> CheckReport:
    """``D H - H^T D`` and, for the default order, agreement with the closed form."""
    D = duality_matrix(lattice, n, ctx, order)
    res = (D @ H - H.T @ D).max_abs()
    details = {"DH-HtD": res}
    worst = res
    if closed_form and order is None:
        cf = (D - duality_closed_form(lattice, n, ctx)).max_abs()
        details["closed-form"] = cf
        worst = max(worst, cf)
    return CheckReport("duality", worst, _exact_tolerance(worst), details)


def verify_duality_family(H: SparseOperator, lattice: Lattice, n: int, ctx: QContext, cvec) -> CheckReport:
    """``D_c H - H^T D_c`` for the closed-form duality with colour parameters ``cvec``."""
    D = duality_closed_form(lattice, n, ctx, cvec)
    res = (D @ H - H.T @ D).max_abs()
    return CheckReport("duality-c", res, _exact_tolerance(res), {"c": tuple(cvec)})


def verify_q_continuity(H: SparseOperator, lattice: Lattice, p: RateParams) -> CheckReport:
    """``L Q^alpha_k = J^alpha_{k-1} - J^alpha_k`` at every configuration."""
    from .generator import generator_action

    configs = list(enumerate_configs(lattice, p.n))
    worst = 0
    for alpha in range(1, p.n + 1):
        for k in lattice.sites:
            act = generator_action([q_observable(c, k, alpha, p.ctx) for c in configs], H)
            for c, g in zip(configs, act):
                worst = max(worst, abs(g - (q_current(c, k - 1, alpha, p) - q_current(c, k, alpha, p))))
    return CheckReport("q-currents", worst, _exact_tolerance(worst))


def verify_upsilon_single_species(lattice: Lattice, ctx: QContext) -> CheckReport:
    """Single-species Upsilon entries against ``prod_k Q_k(eta)**n_k(zeta)``."""
    ups = upsilon(1, 1, lattice, 1, ctx)
    confs = list(enumerate_configs(lattice, 1))
    worst = 0
    for j, eta in enumerate(confs):
        for i, zeta in enumerate(confs):
            expect = ctx.one
            for k, v in zip(lattice.sites, zeta.eta):
                if v:
                    expect *= q_observable(eta, k, 1, ctx)
            worst = max(worst, abs(ups[i, j] - expect))
    return CheckReport("upsilon-single-species", worst, _exact_tolerance(worst))


def verify_measure_transform(lattice: Lattice, n: int, ctx: QContext, cval: int) -> CheckReport:
    """Conjugating a site raising/lowering matrix by powers of the reversible measure."""
    worst = 0
    pi_c = reversible_diagonal(lattice, n, ctx, power=cval)
    pi_mc = reversible_diagonal(lattice, n, ctx, power=-cval)
    for a in range(1, n + 1):
        for k in lattice.sites:
            for sign, site in ((1, sigma_plus(a, n)), (-1, sigma_minus(a, n))):
                s = embed(site, k, lattice)
                lhs = pi_mc @ s @ pi_c
                diag = diagonal_of(lambda c: qpow(sign * cval * (balance(c, k, a) + balance(c, k, a - 1)), ctx),
                                   lattice, n)
                worst = max(worst, (lhs - diag @ s).max_abs())
    return CheckReport("measure-transform", worst, _exact_tolerance(worst))


def verify_perk_schultz(H: SparseOperator, lattice: Lattice, n: int, ctx: QContext) -> CheckReport:
    """Symmetry of the ground-state transformed generator; skipped without ``sqrt_q``."""
    if ctx.q != 1 and not ctx.has_sqrt:
        return skipped("perk-schultz", "q not declared as a perfect square; half-integer powers unavailable")
    from .model import energy

    def half_pi(c, sgn):
        e = -sgn * energy(c)
        return ctx.one if ctx.q == 1 else qpow(Fraction(e, 2), ctx)

    left = diagonal_of(lambda c: half_pi(c, -1), lattice, n)
    right = diagonal_of(lambda c: half_pi(c, 1), lattice, n)
    hps = left @ H @ right
    worst = (hps - hps.T).max_abs()
    return CheckReport("perk-schultz", worst, _exact_tolerance(worst))


def verify_x_commutator(lattice: Lattice, n: int, ctx: QContext) -> CheckReport:
    """``[X+, X-]`` equals the q-number of the Cartan element; skipped without ``sqrt_q``."""
    if ctx.q != 1 and not ctx.has_sqrt:
        return skipped("x-commutator", "q not declared as a perfect square; half-integer powers unavailable")
    worst = 0
    for a in range(1, n + 1):
        xp = rep_X(a, 1, lattice, n, ctx)
        xm = rep_X(a, -1, lattice, n, ctx)
        worst = max(worst, (commutator(xp, xm) - cartan_qnumber(a, lattice, n, ctx)).max_abs())
    return CheckReport("x-commutator", worst, _exact_tolerance(worst))
