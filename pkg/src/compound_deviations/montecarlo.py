"""Simulation and empirical verification for compound sums.

Replication is block-structured for reproducibility: reps are split into
fixed blocks of BLOCK_SIZE, and block b draws its count stream from the seed
sequence (seed, b, 0) and its summand stream from (x_seed, b, 1). The
partition is independent of the worker count, so merged results are
bit-identical whether blocks run serially or in a process pool, and the
count draws never change when the summand seed does (the two streams realize
the independence of the count from the summands).

Contents: plain simulation, exact enumeration on small finite instances,
exponentially tilted importance sampling (with the tilt chosen on the rate
minimizer over the event boundary), decay-rate scans against the rate
engine, the moderate-deviation scaling sweep, and empirical moment/CLT
checks against the analytic limits.

Model objects cross process boundaries by pickling, so custom intensity or
profile callables must be module-level functions or classes, not lambdas.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln
from scipy.stats import normaltest

from .dualpair import ExtendedReal, as_vector
from .errors import (
    EnumerationTooLargeError,
    InconclusiveOptimizationError,
    UnsupportedModelError,
    ValidationError,
    ZeroRateEventError,
)
from .summands import FiniteSupportSummands, GridFunctionSummands
from .variational import (
    analytic_limit_moments,
    count_rate,
    finite_n_moment_identities,
    legendre_transform,
)

# Replication block size; the unit of RNG stream derivation.
BLOCK_SIZE = 8192
# Stream roles inside a block's seed sequence.
COUNT_ROLE = 0
SUMMAND_ROLE = 1
# Role for auxiliary estimates that must not touch the replication streams.
AUX_ROLE = 2
# Importance weights beyond e^700 are an error, never a silent clip.
LOG_WEIGHT_CAP = 700.0
# Enumeration guard: total composition terms.
ENUMERATION_TERM_LIMIT = 10_000_000
# Default replication counts per estimator method.
DEFAULT_REPS = {"plain": 100_000, "tilted": 10_000}


def _check_seed(seed, name="seed"):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValidationError(f"{name} must be a nonnegative integer, got {seed!r}")
    return int(seed)


def _resolve_workers(workers):
    if workers is None:
        raw = os.environ.get("COMPDEV_WORKERS", "").strip()
        workers = int(raw) if raw else 1
    if isinstance(workers, bool) or not isinstance(workers, (int, np.integer)):
        raise ValidationError(f"workers must be an integer, got {workers!r}")
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    return int(workers)


def _block_sizes(reps):
    if not isinstance(reps, (int, np.integer)) or reps < 1:
        raise ValidationError(f"reps must be a positive integer, got {reps!r}")
    reps = int(reps)
    full, rest = divmod(reps, BLOCK_SIZE)
    sizes = [BLOCK_SIZE] * full
    if rest:
        sizes.append(rest)
    return sizes


def _block_rngs(seed, x_seed, block):
    rng_n = np.random.default_rng(np.random.SeedSequence([seed, block, COUNT_ROLE]))
    rng_x = np.random.default_rng(np.random.SeedSequence([x_seed, block, SUMMAND_ROLE]))
    return rng_n, rng_x


def _plain_block(args):
    mx, mn, n, seed, x_seed, block, reps = args
    rng_n, rng_x = _block_rngs(seed, x_seed, block)
    counts = mn.sample_batch(n, rng_n, reps)
    sums = mx.sample_sum_batch(rng_x, counts)
    return counts, sums


def _tilted_block(args):
    mx_tilted, mn, n, s, seed, x_seed, block, reps = args
    # The sampler closure is rebuilt inside the worker; only models cross
    # the process boundary.
    sampler = mn.tilted_count_sampler(n, s)
    rng_n, rng_x = _block_rngs(seed, x_seed, block)
    counts = sampler(rng_n, reps)
    sums = mx_tilted.sample_sum_batch(rng_x, counts)
    return counts, sums


def _map_blocks(block_fn, arg_list, workers):
    if workers == 1 or len(arg_list) <= 1:
        return [block_fn(args) for args in arg_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(block_fn, arg_list))


@dataclass(frozen=True)
class CompoundSamples:
    """A batch of compound-sum realizations at a fixed n.

    ``sums`` holds the unscaled summand totals, one row per replication;
    ``counts`` the realized summand counts. Scaled views divide by n.
    """

    n: int
    sums: np.ndarray
    counts: np.ndarray

    @property
    def reps(self):
        return self.counts.size

    @property
    def sum_scaled(self):
        return self.sums / float(self.n)

    @property
    def count_scaled(self):
        return self.counts / float(self.n)


@dataclass(frozen=True)
class HalfSpaceEvent:
    """Half-space target event on the scaled pair.

    mode "sum": {<direction, sum/n> >= level}; mode "count": {count/n >=
    level}. Directions are for the sum mode only and must be nonzero.
    """

    mode: str
    level: float
    direction: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("sum", "count"):
            raise ValidationError(f"mode must be 'sum' or 'count', got {self.mode!r}")
        if not (isinstance(self.level, (int, float)) and math.isfinite(self.level)):
            raise ValidationError(f"level must be a finite real, got {self.level!r}")
        if self.mode == "sum":
            if self.direction is None:
                raise ValidationError("sum events need a direction")
            vec = as_vector(self.direction, name="direction")
            if float(np.max(np.abs(vec))) == 0.0:
                raise ValidationError("direction must be nonzero")
            object.__setattr__(self, "direction", vec)
        elif self.direction is not None:
            raise ValidationError("count events take no direction")

    def indicator(self, samples):
        if self.mode == "count":
            return samples.count_scaled >= self.level
        return samples.sum_scaled @ self.direction >= self.level

    def contains(self, sum_scaled, count_scaled):
        if self.mode == "count":
            return count_scaled >= self.level
        return float(np.dot(sum_scaled, self.direction)) >= self.level


def simulate_compound(mx, mn, n, reps, seed, x_seed=None, workers=None):
    """Draw reps compound-sum realizations, deterministically per seed.

    The count stream is keyed by ``seed`` and the summand stream by
    ``x_seed`` (defaulting to the same value); changing ``x_seed`` alone
    never alters the count draws. Results are identical for every worker
    count.
    """
    seed = _check_seed(seed)
    x_seed = seed if x_seed is None else _check_seed(x_seed, "x_seed")
    workers = _resolve_workers(workers)
    sizes = _block_sizes(reps)
    args = [
        (mx, mn, n, seed, x_seed, block, block_reps)
        for block, block_reps in enumerate(sizes)
    ]
    pieces = _map_blocks(_plain_block, args, workers)
    counts = np.concatenate([c for c, _ in pieces])
    sums = np.vstack([s for _, s in pieces])
    return CompoundSamples(n=int(n), sums=sums, counts=counts)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_exact(mx, mn, n, event):
    """Exact event probability by enumerating counts and summand splits.

    Needs finite-support summands and a counting model with bounded support
    and an exact distribution. The term count sum over k of
    C(k+m-1, m-1) is guarded at ENUMERATION_TERM_LIMIT; larger instances get
    an error telling the caller to fall back to Monte Carlo.
    """
    base = mx.base if isinstance(mx, GridFunctionSummands) else mx
    if not isinstance(base, FiniteSupportSummands):
        raise UnsupportedModelError(
            "exact enumeration requires finite-support summands"
        )
    pmf = mn.exact_pmf(n)
    m = base.atom_count
    term_count = sum(math.comb(k + m - 1, m - 1) for k in range(pmf.size))
    if term_count > ENUMERATION_TERM_LIMIT:
        raise EnumerationTooLargeError(
            f"enumeration needs {term_count} composition terms, above the "
            f"{ENUMERATION_TERM_LIMIT} guard; use Monte Carlo estimation instead",
            term_count=term_count,
            limit=ENUMERATION_TERM_LIMIT,
        )
    atoms = base.atoms
    log_probs = np.log(base.probs)
    total = 0.0
    for k, count_prob in enumerate(pmf):
        if count_prob <= 0.0:
            continue
        count_scaled = k / float(n)
        log_kfac = gammaln(k + 1.0)
        for split in _compositions(k, m):
            j = np.array(split, dtype=float)
            log_multinomial = log_kfac - float(gammaln(j + 1.0).sum()) + float(
                j @ log_probs
            )
            point = (j @ atoms) / float(n)
            if event.contains(point, count_scaled):
                total += float(count_prob) * math.exp(log_multinomial)
    return min(total, 1.0)


@dataclass(frozen=True)
class TiltParameters:
    """Exponential change of measure targeting an event boundary point.

    theta tilts the summand law, eta the count; s = eta + summand cgf at
    theta is the count-tilt argument. (boundary_x, boundary_y) is the rate
    minimizer over the event closure and rate its rate value.
    """

    theta: np.ndarray
    eta: float
    s: float
    rate: float
    boundary_x: np.ndarray
    boundary_y: float


def _projected_cgf(mx, direction):
    def f(t):
        return mx.cgf(float(t[0]) * direction)

    def grad(t):
        return np.array([float(direction @ mx.cgf_grad(float(t[0]) * direction))])

    return f, grad


def _boundary_rate_curve(mx, mn, event, settings):
    """R(y): rate of the cheapest point on the boundary with count slot y."""
    f, grad = _projected_cgf(mx, event.direction)
    level = float(event.level)

    def curve(y):
        if y <= 0.0:
            return math.inf
        try:
            conj = legendre_transform(f, grad, [level / y], settings=settings).value
            tail = count_rate(mn, y, settings=settings).value
        except InconclusiveOptimizationError:
            return math.inf
        return float(ExtendedReal(y) * conj + tail)

    return curve


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(fn, lo, hi, iterations=200, tol=1e-10):
    left = hi - _GOLDEN * (hi - lo)
    right = lo + _GOLDEN * (hi - lo)
    f_left, f_right = fn(left), fn(right)
    for _ in range(iterations):
        if hi - lo <= tol * (1.0 + abs(lo)):
            break
        if f_left <= f_right:
            # Ties collapse toward the smaller argument.
            hi, right, f_right = right, left, f_left
            left = hi - _GOLDEN * (hi - lo)
            f_left = fn(left)
        else:
            lo, left, f_left = left, right, f_right
            right = lo + _GOLDEN * (hi - lo)
            f_right = fn(right)
    return 0.5 * (lo + hi)


def tilt_parameters(mx, mn, event, settings=None):
    """Tilt targeting the rate minimizer over the closure of a half-space event.

    Count events reduce to the count-marginal conjugate at the level; sum
    events minimize, over the count slot y, the explicit boundary rate
    y * (projected summand conjugate at level/y) + count rate at y, by a
    coarse geometric scan plus golden-section refinement (ties toward
    smaller y). Events whose closure contains the limit point have zero rate
    and are rejected: plain Monte Carlo suffices there.
    """
    d = mn.derivs_at_zero()
    if event.mode == "count":
        if event.level <= d.mean_rate:
            raise ZeroRateEventError(
                f"count level {event.level} does not exceed the limiting mean "
                f"rate {d.mean_rate}; the event has zero rate and plain Monte "
                "Carlo suffices"
            )
        result = count_rate(mn, float(event.level), settings=settings)
        if result.unbounded or result.argmax is None:
            raise ValidationError(
                f"count level {event.level} is outside the reachable range; "
                "the event has probability zero at every n"
            )
        eta = float(result.argmax[0])
        theta = np.zeros(mx.dim)
        return TiltParameters(
            theta=theta,
            eta=eta,
            s=eta,
            rate=float(result.value),
            boundary_x=float(event.level) * mx.mean(),
            boundary_y=float(event.level),
        )

    drift = d.mean_rate * float(event.direction @ mx.mean())
    if event.level <= drift:
        raise ZeroRateEventError(
            f"sum level {event.level} does not exceed the limiting drift "
            f"{drift}; the event has zero rate and plain Monte Carlo suffices"
        )
    curve = _boundary_rate_curve(mx, mn, event, settings)
    grid = d.mean_rate * np.geomspace(0.02, 50.0, 61)
    values = np.array([curve(y) for y in grid])
    if not np.any(np.isfinite(values)):
        raise ValidationError(
            "the boundary rate is infinite along the whole scan grid; the "
            "event is unreachable for this model pair"
        )
    best = int(np.argmin(values))
    lo = grid[best - 1] if best > 0 else 0.5 * grid[0]
    hi = grid[best + 1] if best + 1 < grid.size else 2.0 * grid[-1]
    y_star = _golden_min(curve, lo, hi)

    f, grad = _projected_cgf(mx, event.direction)
    summand_part = legendre_transform(
        f, grad, [float(event.level) / y_star], settings=settings
    )
    count_part = count_rate(mn, y_star, settings=settings)
    if summand_part.argmax is None or count_part.argmax is None:
        raise ValidationError(
            "the boundary minimizer sits where a conjugate is unbounded; "
            "no finite tilt exists"
        )
    t_star = float(summand_part.argmax[0])
    theta = t_star * event.direction
    alpha = float(count_part.argmax[0])
    eta = alpha - mx.cgf(theta)
    rate = float(
        ExtendedReal(y_star) * summand_part.value + count_part.value
    )
    return TiltParameters(
        theta=theta,
        eta=eta,
        s=alpha,
        rate=rate,
        boundary_x=y_star * mx.cgf_grad(theta),
        boundary_y=y_star,
    )


@dataclass(frozen=True)
class EventProbability:
    value: float
    std_error: float
    method: str
    reps: int
    degenerate: bool
    tilt: TiltParameters | None = None


def estimate_event_prob(
    mx, mn, n, event, reps=None, method="plain", seed=None, x_seed=None,
    workers=None, settings=None, tilt=None,
):
    """Unbiased event-probability estimate, plain or exponentially tilted.

    The tilted estimator draws from the conjugate count family at
    s = eta + summand cgf(theta) and from the tilted summand law, then
    unwinds with the exact finite-n weight
    exp(n K_n(s) - <theta, sums> - eta counts); counting kinds without an
    exact finite-n cumulant (renewal) are rejected for tilting. Weights
    beyond exp(700) raise instead of clipping.
    """
    if method not in DEFAULT_REPS:
        raise ValidationError(f"method must be 'plain' or 'tilted', got {method!r}")
    reps = DEFAULT_REPS[method] if reps is None else int(reps)
    seed = _check_seed(seed)
    x_seed = seed if x_seed is None else _check_seed(x_seed, "x_seed")
    workers = _resolve_workers(workers)

    if method == "plain":
        samples = simulate_compound(
            mx, mn, n, reps, seed, x_seed=x_seed, workers=workers
        )
        hits = event.indicator(samples).astype(float)
        value = float(hits.mean())
        spread = float(hits.std(ddof=1)) if reps > 1 else 0.0
        return EventProbability(
            value=value,
            std_error=spread / math.sqrt(reps),
            method="plain",
            reps=reps,
            degenerate=value == 0.0 or value == 1.0,
        )

    try:
        finite_cgf_at = mn.finite_cgf
    except AttributeError:  # pragma: no cover - all kinds define the method
        raise UnsupportedModelError("counting model lacks finite_cgf")
    if tilt is None:
        tilt = tilt_parameters(mx, mn, event, settings=settings)
    log_norm = float(n) * float(finite_cgf_at(n, tilt.s))
    mx_tilted = mx.tilted(tilt.theta)
    sampler_check = mn.tilted_count_sampler(n, tilt.s)  # fail fast if unsupported
    del sampler_check
    sizes = _block_sizes(reps)
    args = [
        (mx_tilted, mn, n, tilt.s, seed, x_seed, block, block_reps)
        for block, block_reps in enumerate(sizes)
    ]
    pieces = _map_blocks(_tilted_block, args, workers)
    counts = np.concatenate([c for c, _ in pieces])
    sums = np.vstack([s for _, s in pieces])
    samples = CompoundSamples(n=int(n), sums=sums, counts=counts)
    log_weights = log_norm - sums @ tilt.theta - tilt.eta * counts
    if float(np.max(log_weights)) > LOG_WEIGHT_CAP:
        raise ValidationError(
            "an importance weight exceeds exp(700); the tilt is too aggressive "
            "for this event, refusing to clip silently"
        )
    weighted = event.indicator(samples).astype(float) * np.exp(log_weights)
    value = float(weighted.mean())
    spread = float(weighted.std(ddof=1)) if reps > 1 else 0.0
    return EventProbability(
        value=value,
        std_error=spread / math.sqrt(reps),
        method="tilted",
        reps=reps,
        degenerate=not np.any(weighted > 0.0),
        tilt=tilt,
    )


def event_rate_infimum(mx, mn, event, settings=None):
    """Infimum of the explicit rate over the event closure; 0 when the event
    contains the limit point."""
    try:
        return tilt_parameters(mx, mn, event, settings=settings).rate
    except ZeroRateEventError:
        return 0.0


@dataclass(frozen=True)
class DecayEstimate:
    """Per-n decay table with the weighted-slope extrapolation."""

    ns: list
    p_hat: list
    std_err: list
    neg_log_over_n: list
    fitted_rate: float
    rate_infimum: float
    method: str


def decay_rate_scan(
    mx, mn, event, ns, reps=None, seed=None, method="tilted", workers=None,
    settings=None,
):
    """Estimate P(event) along an n-grid and extrapolate the decay slope.

    The slope comes from a weighted least-squares fit of log p-hat against n
    (weights one over the squared delta-method log errors); the intercept
    absorbs subexponential prefactors. The comparison value is the rate
    engine's infimum over the event.
    """
    seed = _check_seed(seed)
    ns = [int(v) for v in ns]
    if len(ns) < 2 or sorted(set(ns)) != ns:
        raise ValidationError("ns must be at least two strictly increasing integers")
    tilt = None
    if method == "tilted":
        try:
            tilt = tilt_parameters(mx, mn, event, settings=settings)
        except ZeroRateEventError:
            tilt = None
    rows = []
    for index, n in enumerate(ns):
        run_seed = int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
        if method == "tilted" and tilt is not None:
            estimate = estimate_event_prob(
                mx, mn, n, event, reps=reps, method="tilted", seed=run_seed,
                workers=workers, settings=settings, tilt=tilt,
            )
        else:
            estimate = estimate_event_prob(
                mx, mn, n, event, reps=reps, method="plain", seed=run_seed,
                workers=workers,
            )
        rows.append((n, estimate.value, estimate.std_error))

    usable = [(n, p, se) for n, p, se in rows if p > 0.0]
    if len(usable) < 2:
        raise ValidationError(
            "fewer than two positive probability estimates; cannot fit a slope"
        )
    xs = np.array([n for n, _, _ in usable], dtype=float)
    ys = np.array([math.log(p) for _, p, _ in usable])
    log_se = np.array([max(se / p, 1e-12) for _, p, se in usable])
    slope, _ = np.polyfit(xs, ys, 1, w=1.0 / log_se)
    return DecayEstimate(
        ns=[n for n, _, _ in rows],
        p_hat=[p for _, p, _ in rows],
        std_err=[se for _, _, se in rows],
        neg_log_over_n=[
            (-math.log(p) / n if p > 0.0 else math.inf) for n, p, _ in rows
        ],
        fitted_rate=float(-slope),
        rate_infimum=event_rate_infimum(mx, mn, event, settings=settings),
        method=method,
    )


class ScalingFamily:
    """Moderate-deviation scaling a_n, as a power n^(-gamma) or a table.

    The admissible regime wants a_n -> 0 and n a_n -> infinity; the power
    form enforces gamma in (0, 1) at construction, while tables may
    deliberately violate the regime (that is how the boundary cases are
    demonstrated), so the trend flags are reported by the sweep rather than
    enforced here.
    """

    def __init__(self, gamma=None, table=None):
        if (gamma is None) == (table is None):
            raise ValidationError("give exactly one of gamma or table")
        if gamma is not None:
            if not (isinstance(gamma, (int, float)) and 0.0 < gamma < 1.0):
                raise ValidationError(
                    f"gamma must lie strictly in (0, 1), got {gamma!r}"
                )
            self._gamma = float(gamma)
            self._table = None
        else:
            self._gamma = None
            self._table = {}
            for n, a in table:
                n = int(n)
                a = float(a)
                if n < 1 or not (math.isfinite(a) and a > 0.0):
                    raise ValidationError(
                        "table entries must pair integers n >= 1 with positive a_n"
                    )
                self._table[n] = a

    @classmethod
    def power(cls, gamma):
        return cls(gamma=gamma)

    @classmethod
    def from_table(cls, pairs):
        return cls(table=list(pairs))

    @property
    def gamma(self):
        return self._gamma

    def a(self, n):
        if self._gamma is not None:
            return float(n) ** (-self._gamma)
        try:
            return self._table[int(n)]
        except KeyError:
            raise ValidationError(f"scaling table has no entry for n={n}")

    def endpoint_flags(self, ns):
        first, last = int(ns[0]), int(ns[-1])
        a_first, a_last = self.a(first), self.a(last)
        return a_last < a_first, last * a_last > first * a_first


@dataclass(frozen=True)
class MdSweepRow:
    n: int
    eta: float
    value: float
    target: float


@dataclass(frozen=True)
class MdSweepResult:
    rows: list
    a_decreases: bool
    na_increases: bool
    gap_monotone: dict = field(default_factory=dict)


def md_scaling_sweep(
    mn, scaling, etas, ns, reps=None, seed=None, mode="auto",
):
    """Scaled log-MGF of the centered count along an n-grid.

    For each n and eta the sweep evaluates a_n log E exp(eta (N_n - E N_n) /
    sqrt(n a_n)), exactly through the finite-n cumulant when the kind has
    one (mode "exact"), else empirically from sampled counts (mode
    "empirical", seed required). The target column is d2 eta^2 / 2; per-eta
    monotonicity of |value - target| over the n-grid is reported, along with
    the endpoint behavior of the scaling family.
    """
    ns = [int(v) for v in ns]
    if len(ns) < 1 or sorted(set(ns)) != ns:
        raise ValidationError("ns must be strictly increasing integers")
    etas = [float(e) for e in etas]
    if mode not in ("auto", "exact", "empirical"):
        raise ValidationError(f"mode must be auto, exact, or empirical, got {mode!r}")
    if mode == "auto":
        mode = "exact" if mn.supports_finite_cgf else "empirical"
    if mode == "exact" and not mn.supports_finite_cgf:
        raise UnsupportedModelError(
            "this counting kind has no exact finite-n cumulant; use the "
            "empirical mode"
        )
    if mode == "empirical":
        seed = _check_seed(seed)
        reps = 100_000 if reps is None else int(reps)

    d2 = mn.derivs_at_zero().variance_rate
    rows = []
    for index, n in enumerate(ns):
        a_n = scaling.a(n)
        scale = math.sqrt(n * a_n)
        if mode == "exact":
            mean_count = mn.mean(n)
            for eta in etas:
                t = eta / scale
                value = a_n * (n * mn.finite_cgf(n, t) - t * mean_count)
                rows.append(
                    MdSweepRow(n=n, eta=eta, value=value, target=0.5 * d2 * eta * eta)
                )
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence([seed, index, COUNT_ROLE])
            )
            draws = mn.sample_batch(n, rng, reps).astype(float)
            try:
                mean_count = mn.mean(n)
            except UnsupportedModelError:
                mean_count = float(draws.mean())
            for eta in etas:
                t = eta / scale
                shifted = t * (draws - mean_count)
                peak = float(np.max(shifted))
                log_mgf = peak + math.log(
                    float(np.mean(np.exp(shifted - peak)))
                )
                rows.append(
                    MdSweepRow(
                        n=n, eta=eta, value=a_n * log_mgf,
                        target=0.5 * d2 * eta * eta,
                    )
                )

    gap_monotone = {}
    for eta in etas:
        gaps = [abs(r.value - r.target) for r in rows if r.eta == eta]
        gap_monotone[eta] = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    a_dec, na_inc = scaling.endpoint_flags(ns)
    return MdSweepResult(
        rows=rows, a_decreases=a_dec, na_increases=na_inc,
        gap_monotone=gap_monotone,
    )


def _covariance_with_error(a, b):
    """Sample covariance and the plug-in standard error of the estimate."""
    reps = a.size
    da = a - a.mean()
    db = b - b.mean()
    cov = float(da @ db) / (reps - 1)
    second = float(np.mean((da * db) ** 2))
    variance = max(second - cov * cov, 0.0) / reps
    return cov, math.sqrt(variance)


@dataclass(frozen=True)
class CheckRow:
    name: str
    empirical: float
    std_error: float
    reference: float
    limit: float
    within_band: bool


@dataclass(frozen=True)
class MomentCheckResult:
    n: int
    reps: int
    rows: list
    reference_kind: str

    @property
    def all_within(self):
        return all(r.within_band for r in self.rows)


def moment_limits_check(
    mx, mn, n, reps, u, v, seed, workers=None, band_se=4.0,
):
    """Empirical n-scaled moments of the pair against the exact finite-n
    identities (or the analytic limits when no exact count moments exist),
    each with a plug-in standard error and a 4-standard-error band."""
    uu = as_vector(u, dim=mx.dim, name="u")
    vv = as_vector(v, dim=mx.dim, name="v")
    samples = simulate_compound(mx, mn, int(n), reps, seed, workers=workers)
    limit = analytic_limit_moments(mx, mn, uu, vv)
    try:
        reference = finite_n_moment_identities(mx, mn, int(n), uu, vv)
        reference_kind = "finite-n"
    except UnsupportedModelError:
        reference = limit
        reference_kind = "limit"

    su = samples.sums @ uu
    sv = samples.sums @ vv
    counts = samples.counts.astype(float)
    scale = float(n)
    reps = samples.reps

    mean_s = float(sv.mean()) / scale
    mean_s_se = float(sv.std(ddof=1)) / (scale * math.sqrt(reps))
    mean_n = float(counts.mean()) / scale
    mean_n_se = float(counts.std(ddof=1)) / (scale * math.sqrt(reps))
    cov_ss, cov_ss_se = _covariance_with_error(su, sv)
    cov_ns, cov_ns_se = _covariance_with_error(counts, sv)
    var_n, var_n_se = _covariance_with_error(counts, counts)

    entries = [
        ("mean_S_dir", mean_s, mean_s_se, reference.mean_S_dir, limit.mean_S_dir),
        ("mean_N", mean_n, mean_n_se, reference.mean_N, limit.mean_N),
        ("cov_SS", cov_ss / scale, cov_ss_se / scale, reference.cov_SS, limit.cov_SS),
        ("cov_NS", cov_ns / scale, cov_ns_se / scale, reference.cov_NS, limit.cov_NS),
        ("var_N", var_n / scale, var_n_se / scale, reference.var_N, limit.var_N),
    ]
    rows = [
        CheckRow(
            name=name,
            empirical=emp,
            std_error=se,
            reference=ref,
            limit=lim,
            within_band=abs(emp - ref) <= band_se * se if se > 0.0 else emp == ref,
        )
        for name, emp, se, ref, lim in entries
    ]
    return MomentCheckResult(
        n=int(n), reps=reps, rows=rows, reference_kind=reference_kind
    )


@dataclass(frozen=True)
class CltCheckResult:
    n: int
    reps: int
    rows: list
    normality_pvalues: dict
    count_mean_source: str

    @property
    def all_within(self):
        return all(r.within_band for r in self.rows)


def clt_regime_check(mx, mn, n, reps, v, seed, workers=None, band_se=4.0):
    """Empirical covariance structure of the CLT-scaled pair.

    First coordinate: <v, sums - counts * summand mean> / sqrt(n); second:
    (counts - E[N_n]) / sqrt(n). Their variances are checked against
    d1 <v, Sigma v> and d2, the cross-covariance against 0 (the components
    decouple), and the mean-shifted first coordinate
    <v, sums - E[N_n] * summand mean> / sqrt(n) against the transformed
    covariance that gains the d2 <v, mu>^2 and d2 <v, mu> terms. Normality
    p-values are reported informationally (finite-n skew fails strict
    normality long before the covariances drift)."""
    vv = as_vector(v, dim=mx.dim, name="v")
    n = int(n)
    samples = simulate_compound(mx, mn, n, reps, seed, workers=workers)
    d = mn.derivs_at_zero()
    mu = mx.mean()
    cov = mx.cov()
    v_mu = float(vv @ mu)
    v_cov_v = cov.quadratic_form(vv)
    try:
        count_mean = mn.mean(n)
        count_mean_source = "exact"
    except UnsupportedModelError:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0, AUX_ROLE]))
        count_mean, _ = mn.mean_mc(n, rng, reps=min(int(reps), 100_000))
        count_mean_source = "monte-carlo"

    root_n = math.sqrt(n)
    counts = samples.counts.astype(float)
    z_sum = (samples.sums @ vv - counts * v_mu) / root_n
    z_count = (counts - count_mean) / root_n
    z_shifted = z_sum + z_count * v_mu

    var_sum, var_sum_se = _covariance_with_error(z_sum, z_sum)
    var_count, var_count_se = _covariance_with_error(z_count, z_count)
    cross, cross_se = _covariance_with_error(z_sum, z_count)
    var_shift, var_shift_se = _covariance_with_error(z_shifted, z_shifted)
    cross_shift, cross_shift_se = _covariance_with_error(z_shifted, z_count)

    entries = [
        ("var_sum_coord", var_sum, var_sum_se, d.mean_rate * v_cov_v),
        ("var_count_coord", var_count, var_count_se, d.variance_rate),
        ("cross_cov", cross, cross_se, 0.0),
        (
            "var_sum_coord_shifted",
            var_shift,
            var_shift_se,
            d.mean_rate * v_cov_v + d.variance_rate * v_mu * v_mu,
        ),
        ("cross_cov_shifted", cross_shift, cross_shift_se, d.variance_rate * v_mu),
    ]
    rows = [
        CheckRow(
            name=name,
            empirical=emp,
            std_error=se,
            reference=target,
            limit=target,
            within_band=abs(emp - target) <= band_se * se if se > 0.0
            else emp == target,
        )
        for name, emp, se, target in entries
    ]
    pvalues = {}
    for name, series in (("sum_coord", z_sum), ("count_coord", z_count)):
        if float(series.std(ddof=1)) <= 1e-12:
            pvalues[name] = None
        else:
            pvalues[name] = float(normaltest(series).pvalue)
    return CltCheckResult(
        n=n,
        reps=samples.reps,
        rows=rows,
        normality_pvalues=pvalues,
        count_mean_source=count_mean_source,
    )
