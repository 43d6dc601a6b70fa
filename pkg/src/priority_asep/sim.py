"""Continuous-time kinetic Monte Carlo for the priority process and the shock process.

Each replica owns a Philox stream keyed by ``(seed, replica)``, so results do
not depend on how replicas are scheduled across workers.

The priority-process engine keeps discordant bonds in two index sets, one
per rate value (forward swaps at ``w q``, backward swaps at ``w / q``).
The total rate is recomputed from the two set sizes at every event, so it
never drifts.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import Config, Lattice
from .qcalc import QContext
from .shocks import ShockConfig, marginals, shock_predictions, shock_rates, stationary_gap_law

_BATCH = 4096


class ReplicaAborted(RuntimeError):
    """A tracked marker came within the safety margin of the window edge."""


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replica)])))


class _Draws:
    """Batched uniforms and unit exponentials from one generator."""

    __slots__ = ("rng", "_u", "_e", "_iu", "_ie")

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._u: list = []
        self._e: list = []
        self._iu = 0
        self._ie = 0

    def uniform(self) -> float:
        if self._iu == len(self._u):
            self._u = self.rng.random(_BATCH).tolist()
            self._iu = 0
        x = self._u[self._iu]
        self._iu += 1
        return x

    def exponential(self) -> float:
        if self._ie == len(self._e):
            self._e = self.rng.standard_exponential(_BATCH).tolist()
            self._ie = 0
        x = self._e[self._ie]
        self._ie += 1
        return x


@dataclass
class SimParams:
    """Run parameters shared by both simulators.

    ``window`` is required for the priority process. For the shock process
    it is optional: when given, replicas whose markers come within
    ``margin`` sites of its edges are aborted.
    """

    n: int
    window: Optional[Lattice]
    w: float = 1.0
    q: float = 2.0
    t_max: float = 1.0
    replicas: int = 1
    seed: int = 0
    thinning: float = 1.0
    margin: int = 0
    max_events: Optional[int] = None
    threads: int = 1

    def __post_init__(self):
        self.w = float(self.w)
        self.q = float(self.q)
        self.t_max = float(self.t_max)
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.replicas < 1:
            raise ValueError("need at least one replica")
        if self.thinning <= 0:
            raise ValueError("thinning interval must be positive")
        if self.w <= 0 or self.q < 1:
            raise ValueError("need w > 0 and q >= 1")
        if self.t_max / self.thinning > 10 ** 7:
            raise ValueError("more than 10^7 sampling times; raise the thinning interval")

    def sample_times(self) -> np.ndarray:
        count = int(math.floor(self.t_max / self.thinning + 1e-9))
        return np.arange(count + 1) * self.thinning


@dataclass
class Trajectory:
    """Thinned record of one replica."""

    replica: int
    times: np.ndarray
    markers: np.ndarray
    colours: Optional[np.ndarray] = None
    snapshots: Optional[List[bytes]] = None
    final: Optional[bytes] = None
    events: int = 0
    t_end: float = 0.0
    histogram: Optional[Dict[bytes, float]] = None
    flux: Optional[np.ndarray] = None
    flux_time: float = 0.0
    current_integral: Optional[np.ndarray] = None
    first_event_time: Optional[float] = None
    aborted: bool = False


@dataclass
class Estimate:
    value: float
    se: float
    count: int

    def z(self, predicted: float) -> float:
        if self.se == 0:
            return 0.0 if self.value == predicted else math.inf
        return (self.value - predicted) / self.se


# -- priority process ---------------------------------------------------------

def _marker_sites(eta, l_minus: int, n: int) -> List[int]:
    """Sites of species ``1..n-1``; these are the trackable shock markers."""
    return [l_minus + i for i, v in enumerate(eta) if 0 < v < n]


def kmc_asep(params: SimParams, initial, replica: int = 0, *, keep_snapshots: bool = False,
             histogram: bool = False, flux_from: Optional[float] = None,
             track_markers: bool = True) -> Trajectory:
    """Simulate one replica of the priority process on ``params.window``.

    ``initial`` is a :class:`Config` or a callable ``rng -> Config``
    (for instance a shock-measure sampler).
    """
    lat = params.window
    if lat is None:
        raise ValueError("the priority process needs a finite window")
    rng = replica_rng(params.seed, replica)
    draws = _Draws(rng)
    conf = initial(rng) if callable(initial) else initial
    if conf.lattice != lat:
        raise ValueError("initial configuration lives on a different window")
    n = params.n
    if conf.n != n:
        raise ValueError("initial configuration has a different species count")
    eta = bytearray(conf.eta)
    L = len(eta)
    rf = params.w * params.q
    rb = params.w / params.q
    # membership: 0 none, 1 forward (left species higher), 2 backward
    kind = [0] * (L - 1)
    fwd: List[int] = []
    bwd: List[int] = []
    where = [-1] * (L - 1)

    def classify(s: int) -> int:
        a, b = eta[s], eta[s + 1]
        return 0 if a == b else (1 if a > b else 2)

    def remove(s: int):
        k = kind[s]
        if k == 0:
            return
        lst = fwd if k == 1 else bwd
        i = where[s]
        last = lst.pop()
        if last != s:
            lst[i] = last
            where[last] = i
        where[s] = -1
        kind[s] = 0

    def add(s: int, k: int):
        if k == 0:
            return
        lst = fwd if k == 1 else bwd
        where[s] = len(lst)
        lst.append(s)
        kind[s] = k

    for s in range(L - 1):
        add(s, classify(s))

    times = params.sample_times()
    n_samples = len(times)
    margin = params.margin
    lm = lat.l_minus
    marker_rows: List[List[int]] = []
    snaps: List[bytes] = []
    hist: Optional[Dict[bytes, float]] = {} if histogram else None
    flux = np.zeros((n + 1, L - 1), dtype=np.int64) if flux_from is not None else None
    # time integral of the instantaneous expected current, flushed lazily per bond
    integral = np.zeros((n + 1, L - 1)) if flux_from is not None else None
    since = [0.0] * (L - 1)

    def flush(r: int, now: float):
        start = max(since[r], flux_from)
        if now > start:
            a, b = eta[r], eta[r + 1]
            if a > b:
                integral[b + 1:a + 1, r] += rf * (now - start)
            elif a < b:
                integral[a + 1:b + 1, r] -= rb * (now - start)
        since[r] = now
    t = 0.0
    next_idx = 0
    events = 0
    first_event = None
    aborted = False
    max_events = params.max_events
    t_max = params.t_max

    def record():
        if track_markers:
            m = _marker_sites(eta, lm, n)
            if margin and m and (m[0] - lat.l_minus < margin or lat.l_plus - m[-1] < margin):
                return False
            marker_rows.append(m)
        if keep_snapshots:
            snaps.append(bytes(eta))
        return True

    while True:
        if max_events is not None and events >= max_events:
            break
        total = rf * len(fwd) + rb * len(bwd)
        t_next = t + draws.exponential() / total if total > 0 else math.inf
        hold_end = min(t_next, t_max)
        # the current configuration is held on [t, t_next)
        while next_idx < n_samples and times[next_idx] <= hold_end:
            if not record():
                aborted = True
                break
            next_idx += 1
        if aborted:
            break
        if hist is not None and hold_end > t:
            key = bytes(eta)
            hist[key] = hist.get(key, 0.0) + (hold_end - t)
        if t_next > t_max:
            t = t_max
            break
        # fire an event
        t = t_next
        if first_event is None:
            first_event = t
        u = draws.uniform() * total
        f_total = rf * len(fwd)
        if u < f_total:
            s = fwd[min(int(u / rf), len(fwd) - 1)]
        else:
            s = bwd[min(int((u - f_total) / rb), len(bwd) - 1)]
        a, b = eta[s], eta[s + 1]
        if integral is not None:
            for r in (s - 1, s, s + 1):
                if 0 <= r < L - 1:
                    flush(r, t)
        eta[s], eta[s + 1] = b, a
        if flux is not None and t >= flux_from:
            sign = 1 if a > b else -1
            lo, hi = (b, a) if a > b else (a, b)
            for alpha in range(lo + 1, hi + 1):
                flux[alpha, s] += sign
        for r in (s - 1, s, s + 1):
            if 0 <= r < L - 1:
                k = classify(r)
                if k != kind[r]:
                    remove(r)
                    add(r, k)
        events += 1

    if integral is not None:
        for r in range(L - 1):
            flush(r, t)
    width = max((len(r) for r in marker_rows), default=0)
    markers = np.full((len(marker_rows), width), -10 ** 9, dtype=np.int64)
    for i, r in enumerate(marker_rows):
        markers[i, :len(r)] = r
    return Trajectory(
        replica=replica,
        times=times[:len(marker_rows) if track_markers else next_idx],
        markers=markers,
        snapshots=snaps if keep_snapshots else None,
        final=bytes(eta),
        events=events,
        t_end=t,
        histogram=hist,
        flux=flux,
        current_integral=integral,
        flux_time=max(0.0, t - flux_from) if flux_from is not None else 0.0,
        first_event_time=first_event,
        aborted=aborted,
    )


def total_rate(conf: Config, w: float, q: float) -> float:
    """Sum of all swap rates out of ``conf``."""
    eta = conf.eta
    fwd = sum(1 for a, b in zip(eta, eta[1:]) if a > b)
    bwd = sum(1 for a, b in zip(eta, eta[1:]) if a < b)
    return w * q * fwd + w / q * bwd


def frozen_waiting_times(params: SimParams, conf: Config, count: int) -> np.ndarray:
    """First-event times of ``count`` independent replicas started from ``conf``."""
    horizon = 1e12
    p = SimParams(**{**params.__dict__, "t_max": horizon, "thinning": horizon, "max_events": 1,
                     "window": conf.lattice, "n": conf.n, "margin": 0})
    out = []
    for r in range(count):
        tr = kmc_asep(p, conf, r, track_markers=False)
        out.append(math.inf if tr.first_event_time is None else tr.first_event_time)
    return np.array(out)


def shock_measure_sampler(s: ShockConfig, lattice: Lattice) -> Callable[[np.random.Generator], Config]:
    """Exact sampler of the shock product measure restricted to ``lattice``."""
    rho = [float(r) for r in marginals(s)]
    n = s.n
    markers = dict(zip(s.positions, s.types))
    for x in s.positions:
        lattice.check_site(x)
    fixed = np.zeros(lattice.size, dtype=np.int64)
    dens = np.zeros(lattice.size)
    is_marker = np.zeros(lattice.size, dtype=bool)
    seg = 0
    for i, k in enumerate(lattice.sites):
        if k in markers:
            fixed[i] = markers[k] - 1
            is_marker[i] = True
            seg += 1
        else:
            dens[i] = rho[seg]

    def sample(rng: np.random.Generator) -> Config:
        u = rng.random(lattice.size)
        eta = np.where(u < dens, n, 0)
        eta[is_marker] = fixed[is_marker]
        return Config(lattice, bytes(eta.astype(np.uint8)), n)

    return sample


# -- shock process ---------------------------------------------------------------

def kmc_shock(params: SimParams, initial: ShockConfig, replica: int = 0) -> Trajectory:
    """Simulate the shock exclusion process from the marker configuration ``initial``."""
    rng = replica_rng(params.seed, replica)
    draws = _Draws(rng)
    fctx = QContext.floating(params.q)
    s = ShockConfig(initial.positions, initial.types, initial.n, float(initial.lam), fctx, params.w)
    rates = shock_rates(s)
    wp = [float(v) for v in rates.w_plus]
    wm = [float(v) for v in rates.w_minus]
    w, q = params.w, params.q
    x = list(s.positions)
    col = [a - 1 for a in s.types]
    K = len(x)
    times = params.sample_times()
    n_samples = len(times)
    pos_rows: List[List[int]] = []
    col_rows: List[List[int]] = []
    lat = params.window
    margin = params.margin
    t = 0.0
    next_idx = 0
    events = 0
    aborted = False

    def exchange(a: int, b: int) -> float:
        if a == b:
            return 0.0
        if a >= 1 and b >= 1:
            return w * q if a > b else w / q
        return w * q if b == 0 else w / q

    while True:
        # enumerate moves
        moves = []
        total = 0.0
        for i in range(K):
            if i == K - 1 or x[i + 1] != x[i] + 1:
                total += wp[i]
                moves.append((total, 0, i))
            if i == 0 or x[i - 1] != x[i] - 1:
                total += wm[i]
                moves.append((total, 1, i))
            if i < K - 1 and x[i + 1] == x[i] + 1:
                r = exchange(col[i], col[i + 1])
                if r > 0:
                    total += r
                    moves.append((total, 2, i))
        t_next = t + draws.exponential() / total
        while next_idx < n_samples and times[next_idx] <= min(t_next, params.t_max):
            if lat is not None and (x[0] - lat.l_minus < margin or lat.l_plus - x[-1] < margin):
                aborted = True
                break
            pos_rows.append(list(x))
            col_rows.append(list(col))
            next_idx += 1
        if aborted or t_next > params.t_max:
            t = min(t_next, params.t_max)
            break
        if params.max_events is not None and events >= params.max_events:
            break
        t = t_next
        u = draws.uniform() * total
        for cum, kind, i in moves:
            if u < cum:
                break
        if kind == 0:
            x[i] += 1
        elif kind == 1:
            x[i] -= 1
        else:
            col[i], col[i + 1] = col[i + 1], col[i]
        events += 1

    return Trajectory(
        replica=replica,
        times=times[:len(pos_rows)],
        markers=np.array(pos_rows, dtype=np.int64).reshape(len(pos_rows), K),
        colours=np.array(col_rows, dtype=np.int64).reshape(len(col_rows), K),
        final=None,
        events=events,
        t_end=t,
        aborted=aborted,
    )


def _run_one(job):
    kind, params, initial, replica, kwargs = job
    if kind == "shock":
        return kmc_shock(params, initial, replica)
    return kmc_asep(params, initial, replica, **kwargs)


def run_replicas(kind: str, params: SimParams, initial, **kwargs) -> List[Trajectory]:
    """All replicas, ordered by replica index; ``params.threads`` caps the worker count."""
    jobs = [(kind, params, initial, r, kwargs) for r in range(params.replicas)]
    if params.threads <= 1 or params.replicas == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=params.threads) as pool:
        return list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * params.threads))))


def completed(trajs: Sequence[Trajectory]) -> Tuple[List[Trajectory], float]:
    """Replicas that finished, and the discarded fraction."""
    good = [t for t in trajs if not t.aborted]
    return good, (1 - len(good) / len(trajs)) if trajs else 0.0


# -- estimators -----------------------------------------------------------------

def estimate_velocity_diffusion(trajs: Sequence[Trajectory], marker: int = 0, lag: Optional[float] = None,
                                min_replicas: int = 30) -> Dict[str, Estimate]:
    """Drift and diffusion coefficient of one marker.

    ``v`` is the mean end-to-end displacement over time. ``D`` pools the
    increments over windows of length ``lag`` (default: one thinning step)
    as ``mean((dx - v lag)**2) / (2 lag)``; ``D_endpoint`` uses the
    across-replica variance of the end displacement instead. Standard
    errors come from the scatter of per-replica values.
    """
    trajs = [t for t in trajs if not t.aborted]
    if len(trajs) < min_replicas:
        raise ValueError(f"need at least {min_replicas} replicas, got {len(trajs)}")
    times = trajs[0].times
    T = float(times[-1])
    disp = np.array([t.markers[-1, marker] - t.markers[0, marker] for t in trajs], dtype=float)
    R = len(disp)
    v = disp.mean() / T
    v_se = disp.std(ddof=1) / math.sqrt(R) / T
    step = float(times[1] - times[0]) if len(times) > 1 else T
    stride = 1 if lag is None else max(1, int(round(lag / step)))
    tau = stride * step
    per_rep = []
    for t in trajs:
        x = t.markers[:, marker].astype(float)
        inc = x[stride::stride] - x[:-stride:stride] if len(x) > stride else np.array([x[-1] - x[0]])
        per_rep.append(np.mean((inc - v * tau) ** 2) / (2 * tau))
    per_rep = np.array(per_rep)
    D = per_rep.mean()
    D_se = per_rep.std(ddof=1) / math.sqrt(R)
    end_var = np.var(disp, ddof=1)
    D_end = end_var / (2 * T)
    D_end_se = D_end * math.sqrt(2.0 / (R - 1))
    return {
        "v": Estimate(float(v), float(v_se), R),
        "D": Estimate(float(D), float(D_se), R),
        "D_endpoint": Estimate(float(D_end), float(D_end_se), R),
    }


@dataclass
class GapFit:
    """Empirical gap histogram and its comparison with a geometric law."""

    counts: np.ndarray
    samples: int
    p_hat: float
    p_se: float
    p_predicted: float
    ks_fitted: float
    ks_predicted: float
    ks_critical: float
    chi2: float
    chi2_dof: int

    def expected_counts(self, p: Optional[float] = None) -> np.ndarray:
        p = self.p_predicted if p is None else p
        g = np.arange(len(self.counts))
        return self.samples * p * (1 - p) ** g

    @property
    def ks_ok(self) -> bool:
        return self.ks_fitted < self.ks_critical and self.ks_predicted < self.ks_critical


def ks_critical_1pct(samples: int) -> float:
    """Asymptotic one-sample KS critical value at the 1% level (conservative for discrete laws)."""
    return 1.628 / math.sqrt(samples)


def _ks_geometric(counts: np.ndarray, p: float) -> float:
    total = counts.sum()
    emp = np.cumsum(counts) / total
    g = np.arange(len(counts))
    model = 1 - (1 - p) ** (g + 1)
    return float(np.max(np.abs(emp - model)))


def gap_samples(trajs: Sequence[Trajectory], i: int = 1, burn_in: float = 0.5) -> np.ndarray:
    """Gaps ``x_{i+1} - x_i - 1`` at thinned times after the burn-in fraction."""
    out = []
    for t in trajs:
        if t.aborted:
            continue
        keep = t.times >= burn_in * t.times[-1] if burn_in > 0 else np.ones(len(t.times), bool)
        if burn_in > 0:
            keep &= t.times > 0
        out.append(t.markers[keep, i] - t.markers[keep, i - 1] - 1)
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def estimate_gap_law(trajs: Sequence[Trajectory], i: int, p_predicted: float, burn_in: float = 0.5,
                     min_samples: int = 100) -> GapFit:
    g = gap_samples(trajs, i, burn_in)
    if len(g) < min_samples:
        raise ValueError(f"only {len(g)} post-burn-in samples, need {min_samples}")
    counts = np.bincount(g)
    mean = g.mean()
    p_hat = 1.0 / (1.0 + mean)
    # delta method on the sample mean
    p_se = p_hat ** 2 * g.std(ddof=1) / math.sqrt(len(g))
    ks_fit = _ks_geometric(counts, p_hat)
    ks_pred = _ks_geometric(counts, float(p_predicted))
    # chi-square on bins with expectation >= 5, tail lumped
    expected = len(g) * float(p_predicted) * (1 - float(p_predicted)) ** np.arange(len(counts))
    chi2, dof = 0.0, 0
    acc_obs = acc_exp = 0.0
    for o, e in zip(counts, expected):
        if e >= 5:
            chi2 += (o - e) ** 2 / e
            dof += 1
        else:
            acc_obs += o
            acc_exp += e
    tail_exp = len(g) * (1 - float(p_predicted)) ** len(counts) + acc_exp
    if tail_exp > 0:
        chi2 += (acc_obs - tail_exp) ** 2 / tail_exp
        dof += 1
    return GapFit(counts, len(g), p_hat, p_se, float(p_predicted), ks_fit, ks_pred, ks_critical_1pct(len(g)),
                  chi2, max(dof - 1, 1))


def gap_correlation(trajs: Sequence[Trajectory], burn_in: float = 0.5) -> float:
    """Pearson correlation between the first two gaps (needs three or more markers)."""
    a = gap_samples(trajs, 1, burn_in)
    b = gap_samples(trajs, 2, burn_in)
    return float(np.corrcoef(a, b)[0, 1])


def stationary_histogram(traj: Trajectory) -> Dict[bytes, float]:
    """Time-weighted empirical distribution of the configurations visited."""
    if traj.histogram is None:
        raise ValueError("trajectory was run without a histogram")
    total = sum(traj.histogram.values())
    return {k: v / total for k, v in traj.histogram.items()}


def total_variation(p: Dict[bytes, float], q: Dict[bytes, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def measure_currents(trajs: Sequence[Trajectory], alpha: int, kind: str = "transfer") -> List[Estimate]:
    """Time-averaged current of species ``>= alpha`` across each bond.

    ``kind="transfer"`` counts net particle transfers. ``kind="expected"``
    averages the instantaneous expected current
    ``w (q m_k (1 - m_{k+1}) - (1 - m_k) m_{k+1} / q)`` along the path,
    which has the same mean and smaller variance.
    """
    rows = []
    for t in trajs:
        if t.flux is None or t.flux_time <= 0:
            raise ValueError("trajectory was run without current recording")
        data = t.flux if kind == "transfer" else t.current_integral
        if kind not in ("transfer", "expected"):
            raise ValueError(f"unknown current estimator {kind!r}")
        rows.append(data[alpha] / t.flux_time)
    rows = np.array(rows, dtype=float)
    R = len(rows)
    se = rows.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(rows.shape[1])
    mean = rows.mean(axis=0)
    return [Estimate(float(m), float(s), R) for m, s in zip(mean, se)]


def exact_stationary_current(lattice: Lattice, N: Sequence[int], alpha: int, k: int, p) -> object:
    """Canonical expectation of the species-``>= alpha`` current across bond ``(k, k+1)``."""
    from .generator import current_m
    from .measures import canonical_measure

    m = canonical_measure(lattice, N, p.ctx)
    return m.expectation(lambda c: current_m(c, k, alpha, p))


# -- shock theorem cross-check --------------------------------------------------

def _segment_density_at(site: int, y: Sequence[int], rho: Sequence[float]) -> float:
    """Species-``n`` density of the shock measure with markers ``y`` at ``site``."""
    seg = 0
    for yj in y:
        if site == yj:
            return 0.0
        if site > yj:
            seg += 1
    return rho[seg]


@dataclass
class ProfileComparison:
    offsets: np.ndarray
    density_a: np.ndarray
    density_b: np.ndarray
    se: np.ndarray
    z: np.ndarray
    label: str

    @property
    def max_abs_z(self) -> float:
        finite = self.z[np.isfinite(self.z)]
        return float(np.max(np.abs(finite))) if finite.size else 0.0

    @property
    def max_abs_diff(self) -> float:
        return float(np.max(np.abs(self.density_a - self.density_b)))

    def passed(self, nsigma: float = 3.0) -> bool:
        zero_se = self.se == 0
        exact_ok = np.all(self.density_a[zero_se] == self.density_b[zero_se])
        return bool(exact_ok and np.all(np.abs(self.z[~zero_se]) <= nsigma))


@dataclass
class TheoremReport:
    relative: Optional[ProfileComparison]
    absolute: ProfileComparison
    discarded_a: float
    discarded_b: float
    marker_shift_a: Estimate
    marker_shift_b: Estimate

    @property
    def gating(self) -> ProfileComparison:
        return self.relative if self.relative is not None else self.absolute

    def passed(self, nsigma: float = 3.0) -> bool:
        return self.gating.passed(nsigma) and self.discarded_a < 0.01 and self.discarded_b < 0.01


def _compare(offsets, a_rows, b_rows, label):
    a = np.asarray(a_rows, dtype=float)
    b = np.asarray(b_rows, dtype=float)
    da = a.mean(axis=0)
    db = b.mean(axis=0)
    # binomial error for the indicator side, evaluated at the reference density
    se_a = np.sqrt(np.clip(db * (1 - db), 0, None) / a.shape[0])
    se_b = b.std(axis=0, ddof=1) / math.sqrt(b.shape[0]) if b.shape[0] > 1 else np.zeros_like(db)
    se = np.sqrt(se_a ** 2 + se_b ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, (da - db) / se, np.where(da == db, 0.0, np.inf))
    return ProfileComparison(np.asarray(offsets), da, db, se, z, label)


def shock_theorem_check(params: SimParams, initial: ShockConfig, t: Optional[float] = None,
                        offsets: Sequence[int] = tuple(range(-50, 51)), marker: int = 0) -> TheoremReport:
    """Evolve the priority process from the shock measure and compare with the shock-process mixture.

    Side A samples the initial configuration from the shock measure and runs
    the priority process up to ``t``. Side B runs the shock exclusion process
    from the marker configuration and averages the exact shock-measure
    densities at its final marker positions. Densities of species ``n`` are
    compared relative to the tracked marker when markers are trackable
    (types ``>= 2``) and always on absolute sites relative to the initial
    marker position.
    """
    if t is not None:
        params = SimParams(**{**params.__dict__, "t_max": float(t), "thinning": float(t)})
    lat = params.window
    n = params.n
    offsets = np.asarray(offsets)
    fctx = QContext.floating(params.q)
    s_float = ShockConfig(initial.positions, initial.types, n, float(initial.lam), fctx, params.w)
    rho = [float(r) for r in marginals(s_float)]
    origin = initial.positions[marker]
    trackable = all(a >= 2 for a in initial.types)

    sampler = shock_measure_sampler(s_float, lat)
    a_trajs = run_replicas("asep", params, sampler, keep_snapshots=False, track_markers=True)
    a_good, disc_a = completed(a_trajs)
    b_trajs = run_replicas("shock", params, initial)
    b_good, disc_b = completed(b_trajs)

    rel_a, abs_a, shift_a = [], [], []
    for tr in a_good:
        eta = tr.final
        m = _marker_sites(eta, lat.l_minus, n)
        abs_a.append([1.0 if (origin + d) in lat and eta[origin + d - lat.l_minus] == n else 0.0 for d in offsets])
        if trackable:
            X = m[marker]
            rel_a.append([1.0 if (X + d) in lat and eta[X + d - lat.l_minus] == n else 0.0 for d in offsets])
            shift_a.append(X - origin)
    rel_b, abs_b, shift_b = [], [], []
    for tr in b_good:
        y = tr.markers[-1].tolist()
        abs_b.append([_segment_density_at(origin + d, y, rho) for d in offsets])
        Y = y[marker]
        rel_b.append([_segment_density_at(Y + d, y, rho) for d in offsets])
        shift_b.append(Y - origin)

    relative = _compare(offsets, rel_a, rel_b, "relative") if trackable else None
    absolute = _compare(offsets, abs_a, abs_b, "absolute")

    def est(vals):
        vals = np.asarray(vals, dtype=float)
        if vals.size == 0:
            return Estimate(float("nan"), float("nan"), 0)
        return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0,
                        len(vals))

    return TheoremReport(relative, absolute, disc_a, disc_b, est(shift_a), est(shift_b))


def recommended_window(v: float, D: float, t: float) -> int:
    """Window length ``20 (|v| t + 6 sqrt(2 D t))`` for replacing the infinite line."""
    return int(math.ceil(20 * (abs(v) * t + 6 * math.sqrt(2 * D * t))))


# -- CSV output -------------------------------------------------------------------

def _header(fh, header: Optional[dict]):
    for key, val in (header or {}).items():
        fh.write(f"# {key}={val}\n")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_trajectory_csv(trajs: Sequence[Trajectory], path, header: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as fh:
        _header(fh, header)
        width = max((t.markers.shape[1] for t in trajs if t.markers.size), default=0)
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["replica", "time"] + [f"x{i + 1}" for i in range(width)])
        for t in trajs:
            for time, row in zip(t.times, t.markers):
                wr.writerow([t.replica, _fmt(float(time))] + [int(v) for v in row])


def write_gaps_csv(fit: GapFit, path, header: Optional[dict] = None) -> None:
    exp = fit.expected_counts()
    with open(path, "w", newline="") as fh:
        _header(fh, header)
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["gap", "count", "expected"])
        for g, (c, e) in enumerate(zip(fit.counts, exp)):
            wr.writerow([g, int(c), _fmt(float(e))])


def write_profile_csv(cmp: ProfileComparison, path, header: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as fh:
        _header(fh, header)
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["offset", "density", "se", "reference", "z"])
        for d, a, s, b, z in zip(cmp.offsets, cmp.density_a, cmp.se, cmp.density_b, cmp.z):
            wr.writerow([int(d), _fmt(float(a)), _fmt(float(s)), _fmt(float(b)), _fmt(float(z))])


def write_summary_csv(rows: Sequence[Tuple[str, float, float, object, object]], path,
                      header: Optional[dict] = None) -> None:
    """Rows of ``(quantity, estimate, se, predicted, z)``; use ``""`` for missing entries."""
    with open(path, "w", newline="") as fh:
        _header(fh, header)
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["quantity", "estimate", "se", "predicted", "z"])
        for row in rows:
            wr.writerow([row[0]] + [_fmt(v) for v in row[1:]])
