"""Counting-process models: the random number of summands N_n.

Each model knows its limiting scaled cumulant generating function

    limit_cgf(eta) = lim (1/n) log E exp(eta N_n),

its derivative, the pair of derivatives at zero (the limiting mean and
variance rates of N_n / n), the exact finite-n scaled cumulant where a
closed form exists, exact finite-n mean and variance, samplers, and the
conjugate-family sampler used by tilted importance sampling.

Kinds
-----
* IidSumCounting: N_n is a sum of n iid nonnegative-integer steps with
  finite support. The finite-n scaled cumulant equals the limit for every n.
  (A Poisson-distributed step would make N_n Poisson(n c), which is exactly
  PoissonCounting, so only finite-support steps are implemented here.)
* PoissonCounting: N_n ~ Poisson(m(n)) with m(n) = rate * n or an integral
  of a nonnegative intensity; the limit cumulant is rate * (e^eta - 1).
* FractionalPoissonCounting: heavy-tailed renewal-type count whose mass at n
  is x^k / (Gamma(nu k + 1) E(nu, 1; x)) with x = rate * n^nu; the limit
  cumulant is rate^(1/nu) (e^(eta/nu) - 1). Finite-n quantities go through
  the Mittag-Leffler function in log space.
* BernoulliSumCounting: N_n is a sum of independent Bernoulli(q_j) trials,
  q_j = p((j-1)/n) for a profile p on [0, 1] (or a constant p); the limit
  cumulant integrates log(1 + p(x)(e^eta - 1)) over the unit interval.
* RenewalCounting: N_n counts renewals of iid positive inter-arrival times
  with cumulant kappa by time n; the limit cumulant is -kappa^{-1}(-eta).
  No closed finite-n cumulant exists, so only plain sampling is offered.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp

from .dualpair import NEG_INF, ExtendedReal
from .errors import NoRootError, UnsupportedModelError, ValidationError
from .mittag_leffler import log_mittag_leffler, log_mittag_leffler_ratio

# The scaled cumulant must vanish at zero within this.
CGF_AT_ZERO_TOL = 1e-12
# Construction-time probe grid for finiteness and monotonicity of limit_cgf.
PROBE_ETAS = np.linspace(-10.0, 5.0, 31)
# Quadrature tolerances for intensity integrals and Bernoulli profiles.
QUAD_TOL = 1e-10
# Mass tables are truncated once the missing tail is below this.
MASS_TAIL_TOL = 1e-12
# Hard cap on cached mass-table length.
MASS_TABLE_CAP = 5_000_000
# Root tolerance for inverting an inter-arrival cumulant.
INVERT_XTOL = 1e-13


def _check_n(n):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"n must be an integer >= 1, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class CountingDerivatives:
    """First two derivatives of the limit cumulant at zero, plus its left limit.

    mean_rate is the limit of E[N_n]/n, variance_rate the limit of
    Var[N_n]/n, and cgf_at_minus_inf the limit of the scaled cumulant as
    eta -> -infinity (always <= 0; -infinity when N_n = 0 has vanishing
    probability on the n-scale).
    """

    mean_rate: float
    variance_rate: float
    cgf_at_minus_inf: ExtendedReal

    def __post_init__(self):
        if not (self.mean_rate >= 0.0):
            raise ValidationError(f"mean_rate must be >= 0, got {self.mean_rate}")
        if not (self.variance_rate >= 0.0):
            raise ValidationError(
                f"variance_rate must be >= 0, got {self.variance_rate}"
            )
        if self.cgf_at_minus_inf > 0.0:
            raise ValidationError(
                f"cgf_at_minus_inf must be <= 0, got {self.cgf_at_minus_inf}"
            )


class CountingModel:
    """Common interface of counting-process models."""

    def limit_cgf(self, eta):
        raise NotImplementedError

    def limit_cgf_deriv(self, eta):
        raise NotImplementedError

    def derivs_at_zero(self):
        raise NotImplementedError

    def finite_cgf(self, n, eta):
        """(1/n) log E exp(eta N_n); raises when no closed form exists."""
        raise UnsupportedModelError(
            f"{type(self).__name__} has no closed-form finite-n cumulant"
        )

    def mean(self, n):
        """Exact E[N_n]; raises when no closed form exists."""
        raise UnsupportedModelError(f"{type(self).__name__} has no exact mean")

    def var(self, n):
        """Exact Var[N_n]; raises when no closed form exists."""
        raise UnsupportedModelError(f"{type(self).__name__} has no exact variance")

    def sample_batch(self, n, rng, reps):
        raise NotImplementedError

    def sample(self, n, rng):
        return int(self.sample_batch(n, rng, 1)[0])

    def mean_mc(self, n, rng, reps=100_000):
        """Monte Carlo estimate of E[N_n], returned as (value, standard error)."""
        draws = self.sample_batch(n, rng, int(reps))
        value = float(draws.mean())
        se = float(draws.std(ddof=1) / math.sqrt(reps))
        return value, se

    def tilted_count_sampler(self, n, s):
        """Sampler (rng, reps) -> counts for the law with mass ~ P(N_n = k) e^{s k}."""
        raise UnsupportedModelError(
            f"{type(self).__name__} does not support exponential tilting"
        )

    @property
    def supports_finite_cgf(self):
        try:
            self.finite_cgf(1, 0.0)
            return True
        except UnsupportedModelError:
            return False

    def exact_pmf(self, n):
        """Exact distribution of N_n as an array over 0..bound; bounded kinds only."""
        raise UnsupportedModelError(
            f"{type(self).__name__} has unbounded support; exact enumeration "
            "is unavailable"
        )

    def count_bound(self, n):
        """Largest possible value of N_n, or None when unbounded."""
        return None

    def _probe_validate(self, etas=None):
        grid = PROBE_ETAS if etas is None else np.asarray(etas)
        values = [self.limit_cgf(float(e)) for e in grid]
        if not all(math.isfinite(v) for v in values):
            raise ValidationError(
                f"{type(self).__name__}: limit cumulant is not finite on the probe grid"
            )
        diffs = np.diff(values)
        if np.any(diffs < -1e-9):
            raise ValidationError(
                f"{type(self).__name__}: limit cumulant is not non-decreasing"
            )
        at_zero = self.limit_cgf(0.0)
        if abs(at_zero) > CGF_AT_ZERO_TOL:
            raise ValidationError(
                f"{type(self).__name__}: limit cumulant at zero is {at_zero!r}, "
                f"must vanish within {CGF_AT_ZERO_TOL:.0e}"
            )


class IidSumCounting(CountingModel):
    """N_n = Z_1 + ... + Z_n with iid finite-support nonnegative-integer steps."""

    def __init__(self, values, probs):
        vals = np.array(values)
        if vals.ndim != 1 or vals.size == 0:
            raise ValidationError("step values must form a nonempty 1-d array")
        if not np.all(vals == np.floor(vals)) or np.any(vals < 0):
            raise ValidationError("step values must be nonnegative integers")
        vals = vals.astype(np.int64)
        if np.unique(vals).size != vals.size:
            raise ValidationError("step values must be distinct")
        p = np.array(probs, dtype=float)
        if p.shape != vals.shape:
            raise ValidationError("probs must match the step values in shape")
        if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
            raise ValidationError("step probabilities must be strictly positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValidationError(
                f"step probabilities sum to {p.sum()!r}, not 1 within 1e-12"
            )
        order = np.argsort(vals)
        self._values = vals[order]
        self._probs = p[order]
        self._log_probs = np.log(self._probs)
        self._values.flags.writeable = False
        self._probs.flags.writeable = False
        self._probe_validate()

    @property
    def step_values(self):
        return self._values

    @property
    def step_probs(self):
        return self._probs

    def limit_cgf(self, eta):
        return float(logsumexp(eta * self._values + self._log_probs))

    def limit_cgf_deriv(self, eta):
        scores = eta * self._values + self._log_probs
        w = np.exp(scores - logsumexp(scores))
        return float(w @ self._values)

    def derivs_at_zero(self):
        mean = float(self._probs @ self._values)
        second = float(self._probs @ (self._values.astype(float) ** 2))
        if self._values[0] == 0:
            tail = ExtendedReal(float(self._log_probs[0]))
        else:
            tail = NEG_INF
        return CountingDerivatives(mean, max(second - mean * mean, 0.0), tail)

    def finite_cgf(self, n, eta):
        _check_n(n)
        # Scaled cumulant of an n-fold iid sum equals the step cumulant exactly.
        return self.limit_cgf(eta)

    def mean(self, n):
        return _check_n(n) * float(self._probs @ self._values)

    def var(self, n):
        d = self.derivs_at_zero()
        return _check_n(n) * d.variance_rate

    def sample_batch(self, n, rng, reps):
        n = _check_n(n)
        counts = rng.multinomial(n, self._probs, size=int(reps))
        return counts @ self._values

    def tilted_count_sampler(self, n, s):
        n = _check_n(n)
        logw = self._log_probs + s * self._values
        w = np.exp(logw - logsumexp(logw))
        tilted = IidSumCounting(self._values, w / w.sum())
        return lambda rng, reps: tilted.sample_batch(n, rng, reps)

    def count_bound(self, n):
        return _check_n(n) * int(self._values[-1])

    def exact_pmf(self, n):
        n = _check_n(n)
        bound = self.count_bound(n)
        if bound + 1 > 2_000_000:
            raise UnsupportedModelError(
                f"exact step-sum distribution over {bound + 1} states is too large"
            )
        base = np.zeros(int(self._values[-1]) + 1)
        base[self._values] = self._probs
        pmf = np.array([1.0])
        for _ in range(n):
            pmf = np.convolve(pmf, base)
        return pmf


class PoissonCounting(CountingModel):
    """Poisson count with optional deterministic intensity.

    ``rate`` is the limiting mass per unit time and fully determines the
    asymptotics. An optional intensity function refines finite-n behavior:
    N_n ~ Poisson(integral of the intensity over [0, n]), with the integral
    computed once per n by adaptive quadrature and cached. The rate remains
    authoritative for the limit quantities, so a sensible intensity has
    running averages approaching it.
    """

    def __init__(self, rate, intensity=None):
        if not (isinstance(rate, (int, float)) and math.isfinite(rate)) or rate <= 0:
            raise ValidationError(f"rate must be a positive finite real, got {rate!r}")
        self._rate = float(rate)
        self._intensity = intensity
        self._mass_cache = {}
        if intensity is not None:
            if not callable(intensity):
                raise ValidationError("intensity must be callable")
            probe = [intensity(float(s)) for s in np.linspace(0.0, 4.0, 9)]
            if not all(math.isfinite(v) and v >= 0.0 for v in probe):
                raise ValidationError("intensity must be nonnegative and finite")
        self._probe_validate()

    @property
    def rate(self):
        return self._rate

    def limit_cgf(self, eta):
        return self._rate * math.expm1(eta)

    def limit_cgf_deriv(self, eta):
        return self._rate * math.exp(eta)

    def derivs_at_zero(self):
        return CountingDerivatives(self._rate, self._rate, ExtendedReal(-self._rate))

    def total_mass(self, n):
        """E[N_n]: rate * n, or the cached intensity integral over [0, n]."""
        n = _check_n(n)
        if self._intensity is None:
            return self._rate * n
        if n not in self._mass_cache:
            value, _ = quad(
                self._intensity, 0.0, float(n),
                epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=500,
            )
            self._mass_cache[n] = float(value)
        return self._mass_cache[n]

    def finite_cgf(self, n, eta):
        return self.total_mass(n) / _check_n(n) * math.expm1(eta)

    def mean(self, n):
        return self.total_mass(n)

    def var(self, n):
        return self.total_mass(n)

    def sample_batch(self, n, rng, reps):
        return rng.poisson(self.total_mass(n), size=int(reps)).astype(np.int64)

    def tilted_count_sampler(self, n, s):
        mass = self.total_mass(n) * math.exp(s)
        return lambda rng, reps: rng.poisson(mass, size=int(reps)).astype(np.int64)


class FractionalPoissonCounting(CountingModel):
    """Fractional Poisson count of order nu in (0, 1].

    Limit cumulant rate^(1/nu) (exp(eta/nu) - 1). Finite-n quantities need
    the Mittag-Leffler function; they are available for nu >= 0.3 (the
    special-function domain) and raise its validation error below that.
    At nu = 1 the model coincides with the homogeneous Poisson count.
    """

    def __init__(self, nu, rate):
        if not (isinstance(nu, (int, float)) and 0.0 < nu <= 1.0):
            raise ValidationError(f"nu must lie in (0, 1], got {nu!r}")
        if not (isinstance(rate, (int, float)) and math.isfinite(rate)) or rate <= 0:
            raise ValidationError(f"rate must be a positive finite real, got {rate!r}")
        self._nu = float(nu)
        self._rate = float(rate)
        self._scale = self._rate ** (1.0 / self._nu)
        self._tables = {}
        self._probe_validate()

    @property
    def nu(self):
        return self._nu

    @property
    def rate(self):
        return self._rate

    def limit_cgf(self, eta):
        return self._scale * math.expm1(eta / self._nu)

    def limit_cgf_deriv(self, eta):
        return self._scale * math.exp(eta / self._nu) / self._nu

    def derivs_at_zero(self):
        return CountingDerivatives(
            self._scale / self._nu,
            self._scale / (self._nu * self._nu),
            ExtendedReal(-self._scale),
        )

    def _argument(self, n):
        return self._rate * float(n) ** self._nu

    def finite_cgf(self, n, eta):
        n = _check_n(n)
        x = self._argument(n)
        return log_mittag_leffler_ratio(self._nu, math.exp(eta) * x, x) / n

    def mean(self, n):
        n = _check_n(n)
        x = self._argument(n)
        log_ratio = log_mittag_leffler(self._nu, self._nu, x) - log_mittag_leffler(
            self._nu, 1.0, x
        )
        return x / self._nu * math.exp(log_ratio)

    def mass_table(self, n):
        """Exact pmf of N_n, truncated once the missing tail is below MASS_TAIL_TOL."""
        n = _check_n(n)
        if n not in self._tables:
            x = self._argument(n)
            log_norm = log_mittag_leffler(self._nu, 1.0, x)
            logx = math.log(x)
            probs = []
            total = 0.0
            k = 0
            while total < 1.0 - MASS_TAIL_TOL:
                if k > MASS_TABLE_CAP:
                    raise ValidationError(
                        f"fractional Poisson mass table at n={n} exceeds "
                        f"{MASS_TABLE_CAP} states"
                    )
                p = math.exp(k * logx - gammaln(self._nu * k + 1.0) - log_norm)
                probs.append(p)
                total += p
                k += 1
            pmf = np.array(probs)
            self._tables[n] = (pmf, np.cumsum(pmf))
        return self._tables[n]

    def var(self, n):
        pmf, _ = self.mass_table(n)
        k = np.arange(pmf.size, dtype=float)
        m = float(k @ pmf)
        return float((k - m) ** 2 @ pmf)

    def sample_batch(self, n, rng, reps):
        _, cdf = self.mass_table(n)
        u = rng.random(int(reps))
        return np.searchsorted(cdf, u).astype(np.int64)

    def tilted_count_sampler(self, n, s):
        pmf, _ = self.mass_table(n)
        k = np.arange(pmf.size, dtype=float)
        logits = np.log(np.clip(pmf, 1e-300, None)) + s * k
        tilted = np.exp(logits - logsumexp(logits))
        cdf = np.cumsum(tilted / tilted.sum())

        def sampler(rng, reps):
            return np.searchsorted(cdf, rng.random(int(reps))).astype(np.int64)

        return sampler


class _TiltedProfile:
    """Success profile of a tilted Bernoulli sum; picklable unlike a lambda."""

    def __init__(self, base, s):
        self.base = base
        self.s = s

    def __call__(self, x):
        q = self.base(x)
        es = math.exp(self.s)
        return q * es / (1.0 + q * (es - 1.0))


class _ExpDecayProfile:
    """Success profile exp(-lam * c * x) of the run-length preset."""

    def __init__(self, lam, c):
        self.lam = lam
        self.c = c

    def __call__(self, x):
        return math.exp(-self.lam * self.c * x)


class BernoulliSumCounting(CountingModel):
    """Sum of independent Bernoulli trials at the sites (j-1)/n, j = 1..n.

    Either a constant success probability p in (0, 1), or a profile callable
    p(x) mapping [0, 1] into [0, 1]. The limit cumulant integrates
    log(1 + p(x)(e^eta - 1)) over the unit interval; for constant p that is
    just log(1 + p(e^eta - 1)).

    ``runs(lam, c)``: preset with p(x) = exp(-lam c x), the profile arising
    when counting runs of rare events in a Bernoulli scheme.
    """

    def __init__(self, p=None, profile=None):
        if (p is None) == (profile is None):
            raise ValidationError("give exactly one of p (constant) or profile")
        if p is not None:
            if not (isinstance(p, (int, float)) and 0.0 < p < 1.0):
                raise ValidationError(f"constant p must lie in (0, 1), got {p!r}")
            self._p = float(p)
            self._profile = None
        else:
            if not callable(profile):
                raise ValidationError("profile must be callable")
            probe = [profile(float(x)) for x in np.linspace(0.0, 1.0, 21)]
            if not all(math.isfinite(v) and 0.0 <= v <= 1.0 for v in probe):
                raise ValidationError("profile values must lie in [0, 1]")
            self._p = None
            self._profile = profile
        self._probe_validate()

    @classmethod
    def runs(cls, lam, c):
        if lam <= 0 or c <= 0:
            raise ValidationError("runs preset needs lam > 0 and c > 0")
        return cls(profile=_ExpDecayProfile(float(lam), float(c)))

    @property
    def constant_p(self):
        return self._p

    @property
    def profile(self):
        return self._profile

    def _integrate(self, f):
        value, _ = quad(f, 0.0, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=500)
        return float(value)

    def limit_cgf(self, eta):
        em1 = math.expm1(eta)
        if self._p is not None:
            return math.log1p(self._p * em1)
        return self._integrate(lambda x: math.log1p(self._profile(x) * em1))

    def limit_cgf_deriv(self, eta):
        e = math.exp(eta)
        if self._p is not None:
            return self._p * e / (1.0 + self._p * (e - 1.0))
        return self._integrate(
            lambda x: self._profile(x) * e / (1.0 + self._profile(x) * (e - 1.0))
        )

    def derivs_at_zero(self):
        if self._p is not None:
            mean = self._p
            varr = self._p * (1.0 - self._p)
            tail = ExtendedReal(math.log1p(-self._p))
        else:
            mean = self._integrate(self._profile)
            varr = self._integrate(lambda x: self._profile(x) * (1.0 - self._profile(x)))
            tail = self._tail_limit()
        return CountingDerivatives(mean, varr, tail)

    def _tail_limit(self):
        # Integral of log(1 - p(x)); an endpoint touching p = 1 leaves an
        # integrable log singularity, a plateau at 1 makes the limit -inf.
        def f(x):
            q = self._profile(x)
            return math.log1p(-q) if q < 1.0 else -math.inf

        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                value, _ = quad(f, 0.0, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=500)
        except Exception:
            return NEG_INF
        return ExtendedReal(value) if math.isfinite(value) else NEG_INF

    def success_probs(self, n):
        n = _check_n(n)
        if self._p is not None:
            return np.full(n, self._p)
        sites = np.arange(n, dtype=float) / n
        return np.array([self._profile(x) for x in sites])

    def finite_cgf(self, n, eta):
        q = self.success_probs(n)
        return float(np.log1p(q * math.expm1(eta)).sum()) / int(n)

    def mean(self, n):
        return float(self.success_probs(n).sum())

    def var(self, n):
        q = self.success_probs(n)
        return float((q * (1.0 - q)).sum())

    def sample_batch(self, n, rng, reps):
        n = _check_n(n)
        reps = int(reps)
        if self._p is not None:
            return rng.binomial(n, self._p, size=reps).astype(np.int64)
        q = self.success_probs(n)
        out = np.zeros(reps, dtype=np.int64)
        chunk = max(1, int(2e7 / max(reps, 1)))
        for start in range(0, n, chunk):
            block = q[start:start + chunk]
            out += (rng.random((reps, block.size)) < block).sum(axis=1)
        return out

    def tilted_count_sampler(self, n, s):
        n = _check_n(n)
        if self._p is not None:
            es = math.exp(s)
            p_t = self._p * es / (1.0 + self._p * (es - 1.0))
            return lambda rng, reps: rng.binomial(n, p_t, size=int(reps)).astype(np.int64)
        tilted = BernoulliSumCounting(profile=_TiltedProfile(self._profile, s))
        return lambda rng, reps: tilted.sample_batch(n, rng, reps)

    def count_bound(self, n):
        return _check_n(n)

    def exact_pmf(self, n):
        n = _check_n(n)
        if n > 5000:
            raise UnsupportedModelError(
                f"exact Bernoulli-sum distribution at n={n} is too large"
            )
        q = self.success_probs(n)
        pmf = np.array([1.0])
        for qj in q:
            nxt = np.zeros(pmf.size + 1)
            nxt[:-1] += pmf * (1.0 - qj)
            nxt[1:] += pmf * qj
            pmf = nxt
        return pmf


def invert_interarrival_cgf(kappa, u, domain_sup=math.inf, domain_inf=-math.inf):
    """Solve kappa(r) = u for the unique root of an increasing convex cumulant.

    kappa must be continuous and strictly increasing with kappa(0) = 0 and
    kappa -> -infinity on the left. The bracket starts at [-1, b] with b
    either 1 or halfway to a finite right domain end, grows geometrically
    until it straddles u, then hands off to a bracketing root finder with
    xtol INVERT_XTOL.
    """
    if not math.isfinite(u):
        raise ValidationError(f"target value must be finite, got {u!r}")
    if u == 0.0:
        return 0.0
    lo = -1.0 if domain_inf == -math.inf else max(-1.0, 0.5 * domain_inf)
    hi = 1.0 if domain_sup == math.inf else 0.5 * domain_sup
    for _ in range(200):
        if kappa(hi) >= u:
            break
        if domain_sup == math.inf:
            hi = hi * 2.0 if hi > 0 else 1.0
        else:
            hi = domain_sup - 0.5 * (domain_sup - hi)
    else:
        raise NoRootError(
            f"no bracket: kappa stays below {u!r} up to its right domain end"
        )
    for _ in range(200):
        if kappa(lo) <= u:
            break
        if domain_inf == -math.inf:
            lo = lo * 2.0 if lo < 0 else -1.0
        else:
            lo = domain_inf + 0.5 * (lo - domain_inf)
    else:
        raise NoRootError(
            f"no bracket: kappa stays above {u!r} down to its left domain end"
        )
    return float(
        brentq(lambda r: kappa(r) - u, lo, hi, xtol=INVERT_XTOL, rtol=1e-15, maxiter=200)
    )


class InterarrivalLaw:
    """Inter-arrival time description: cumulant, derivatives, optional sampler."""

    domain_sup = math.inf
    domain_inf = -math.inf

    def kappa(self, r):
        raise NotImplementedError

    def kappa_prime(self, r):
        raise NotImplementedError

    def kappa_second(self, r):
        raise NotImplementedError

    def inverse(self, u):
        """kappa^{-1}(u); generic numeric fallback."""
        return invert_interarrival_cgf(
            self.kappa, u, domain_sup=self.domain_sup, domain_inf=self.domain_inf
        )

    def sample(self, rng, shape):
        raise UnsupportedModelError(
            f"{type(self).__name__} carries no sampler"
        )

    def mean(self):
        return self.kappa_prime(0.0)


class ExponentialInterarrival(InterarrivalLaw):
    """Exponential(rate) inter-arrivals: kappa(r) = log(rate / (rate - r))."""

    def __init__(self, rate):
        if not (isinstance(rate, (int, float)) and math.isfinite(rate)) or rate <= 0:
            raise ValidationError(f"rate must be a positive finite real, got {rate!r}")
        self.rate = float(rate)
        self.domain_sup = self.rate

    def kappa(self, r):
        if r >= self.rate:
            raise ValidationError(
                f"kappa is finite only below rate={self.rate}, got r={r}"
            )
        return -math.log1p(-r / self.rate)

    def kappa_prime(self, r):
        return 1.0 / (self.rate - r)

    def kappa_second(self, r):
        return 1.0 / (self.rate - r) ** 2

    def inverse(self, u):
        # Algebraic inverse: r = rate (1 - e^{-u}).
        return self.rate * -math.expm1(-u)

    def sample(self, rng, shape):
        return rng.exponential(1.0 / self.rate, size=shape)


class GammaInterarrival(InterarrivalLaw):
    """Gamma(shape, rate) inter-arrivals: kappa(r) = -shape log(1 - r/rate)."""

    def __init__(self, shape, rate):
        if shape <= 0 or rate <= 0 or not math.isfinite(shape) or not math.isfinite(rate):
            raise ValidationError("shape and rate must be positive finite reals")
        self.shape = float(shape)
        self.rate = float(rate)
        self.domain_sup = self.rate

    def kappa(self, r):
        if r >= self.rate:
            raise ValidationError(
                f"kappa is finite only below rate={self.rate}, got r={r}"
            )
        return -self.shape * math.log1p(-r / self.rate)

    def kappa_prime(self, r):
        return self.shape / (self.rate - r)

    def kappa_second(self, r):
        return self.shape / (self.rate - r) ** 2

    def sample(self, rng, shape):
        return rng.gamma(self.shape, 1.0 / self.rate, size=shape)


class TabulatedInterarrival(InterarrivalLaw):
    """Inter-arrival cumulant given by a monotone table, PCHIP-interpolated.

    The table must be strictly increasing and bracket r = 0 with
    kappa(0) = 0. Only quantities inside the tabulated range are computable;
    in particular the left tail limit is probed at the fallback argument
    rather than taken analytically, and no sampler exists.
    """

    def __init__(self, r_values, kappa_values):
        r = np.array(r_values, dtype=float)
        k = np.array(kappa_values, dtype=float)
        if r.ndim != 1 or r.size < 4 or r.shape != k.shape:
            raise ValidationError(
                "need matching 1-d tables with at least 4 points"
            )
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(k))):
            raise ValidationError("tables must be finite")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(k) <= 0):
            raise ValidationError(
                "tabulated cumulant must be strictly increasing"
            )
        if not (r[0] < 0.0 < r[-1]):
            raise ValidationError("table must bracket r = 0")
        self._interp = PchipInterpolator(r, k)
        if abs(float(self._interp(0.0))) > 1e-10:
            raise ValidationError(
                "tabulated cumulant must vanish at r = 0"
            )
        self.domain_inf = float(r[0])
        self.domain_sup = float(r[-1])
        self._d1 = self._interp.derivative(1)
        self._d2 = self._interp.derivative(2)

    def kappa(self, r):
        if r < self.domain_inf or r > self.domain_sup:
            raise ValidationError(
                f"r={r} outside the tabulated range "
                f"[{self.domain_inf}, {self.domain_sup}]"
            )
        return float(self._interp(r))

    def kappa_prime(self, r):
        return float(self._d1(r))

    def kappa_second(self, r):
        return float(self._d2(r))


class RenewalCounting(CountingModel):
    """Renewal count: N_n renewals of iid positive inter-arrivals by time n.

    The limit cumulant is -kappa^{-1}(-eta) where kappa is the inter-arrival
    cumulant; it exists because kappa is increasing with kappa(-inf) = -inf.
    There is no closed finite-n cumulant, so tilted estimation and the exact
    moment identities are unavailable; sampling walks partial sums of
    inter-arrival draws.
    """

    # Fallback probe argument for the left tail of the limit cumulant.
    TAIL_PROBE_ETA = -40.0

    def __init__(self, law):
        if not isinstance(law, InterarrivalLaw):
            raise ValidationError("law must be an InterarrivalLaw")
        self._law = law
        probe = PROBE_ETAS
        if isinstance(law, TabulatedInterarrival):
            lo = -float(law.kappa(law.domain_sup)) + 1e-9
            hi = -float(law.kappa(law.domain_inf)) - 1e-9
            lo, hi = max(lo, -10.0), min(hi, 5.0)
            if lo >= hi:
                raise ValidationError(
                    "tabulated inter-arrival cumulant covers too narrow a range "
                    "to validate the limit cumulant"
                )
            probe = np.linspace(lo, hi, 31)
        self._probe_validate(etas=probe)

    @property
    def law(self):
        return self._law

    def limit_cgf(self, eta):
        return -self._law.inverse(-eta)

    def limit_cgf_deriv(self, eta):
        r = -self.limit_cgf(eta)
        return 1.0 / self._law.kappa_prime(r)

    def derivs_at_zero(self):
        kp = self._law.kappa_prime(0.0)
        ks = self._law.kappa_second(0.0)
        if isinstance(self._law, TabulatedInterarrival):
            tail = ExtendedReal(self.limit_cgf(self.TAIL_PROBE_ETA))
        elif math.isfinite(self._law.domain_sup):
            tail = ExtendedReal(-self._law.domain_sup)
        else:
            tail = NEG_INF
        return CountingDerivatives(1.0 / kp, ks / kp ** 3, tail)

    def sample_batch(self, n, rng, reps):
        n = _check_n(n)
        reps = int(reps)
        d = self.derivs_at_zero()
        chunk = int(n * d.mean_rate + 10.0 * math.sqrt(max(n * d.variance_rate, 1.0)) + 20)
        # Cap the draw matrix at ~1e7 entries per pass.
        group = max(1, int(1e7) // max(chunk, 1))
        counts = np.zeros(reps, dtype=np.int64)
        for start in range(0, reps, group):
            stop = min(start + group, reps)
            counts[start:stop] = self._sample_group(n, rng, stop - start, chunk)
        return counts

    def _sample_group(self, n, rng, reps, chunk):
        counts = np.zeros(reps, dtype=np.int64)
        totals = np.zeros(reps)
        alive = np.arange(reps)
        while alive.size:
            draws = self._law.sample(rng, (alive.size, chunk))
            cum = totals[alive, None] + np.cumsum(draws, axis=1)
            counts[alive] += (cum <= n).sum(axis=1)
            totals[alive] = cum[:, -1]
            alive = alive[cum[:, -1] <= n]
            chunk = max(chunk // 4, 16)
        return counts
