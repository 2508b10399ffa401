"""Symmetric unimodal test-bed densities for simulation and theory checks."""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .errors import DomainError

__all__ = ["Testbed", "TestbedInfo", "TESTBED_IDS", "get", "pdf", "centered_pdf", "info", "sample"]

TESTBED_IDS = (
    "student_t_1",
    "student_t_2",
    "student_t_3",
    "student_t_4",
    "student_t_5",
    "logistic",
    "outlier",
    "normal",
    "laplace",
)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_OUTLIER_WEIGHT = 0.1
_OUTLIER_SCALE = 100.0


def _phi(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def _t_const(nu):
    return math.exp(math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2)) / math.sqrt(nu * math.pi)


@dataclass(frozen=True)
class TestbedInfo:
    sigma2: float
    density_at_center: float
    regular_variation_index: float | None

    @property
    def median_variance(self):
        """Asymptotic ``n * Var(sample median)``, i.e. ``[2 f(theta)]^-2``."""
        return (2.0 * self.density_at_center) ** -2


@dataclass(frozen=True)
class Testbed:
    """One of the registered densities, centered at ``theta``."""

    __test__ = False  # not a pytest class

    id: str
    theta: float = 0.0

    def __post_init__(self):
        if self.id not in TESTBED_IDS:
            raise DomainError(
                f"unknown test-bed {self.id!r}; valid ids: {', '.join(TESTBED_IDS)}"
            )

    @property
    def nu(self):
        return int(self.id.rsplit("_", 1)[1]) if self.id.startswith("student_t_") else None

    # -- centered density and friends (argument is x - theta) ----------------
    def _f0(self, x):
        x = np.asarray(x, dtype=float)
        if self.id == "normal":
            return _phi(x)
        if self.id == "logistic":
            # (e^{x/2} + e^{-x/2})^{-2} == e^{-|x|} / (1 + e^{-|x|})^2, overflow-free
            e = np.exp(-np.abs(x))
            return e / (1.0 + e) ** 2
        if self.id == "laplace":
            return 0.5 * np.exp(-np.abs(x))
        if self.id == "outlier":
            s = _OUTLIER_SCALE
            return (1 - _OUTLIER_WEIGHT) * _phi(x) + _OUTLIER_WEIGHT * _phi(x / s) / s
        nu = self.nu
        return _t_const(nu) * (1.0 + x * x / nu) ** (-(nu + 1) / 2)

    def _cdf0(self, x):
        x = np.asarray(x, dtype=float)
        if self.id == "normal":
            return special.ndtr(x)
        if self.id == "logistic":
            return special.expit(x)
        if self.id == "laplace":
            return np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(x, 0.0)))
        if self.id == "outlier":
            return (1 - _OUTLIER_WEIGHT) * special.ndtr(x) + _OUTLIER_WEIGHT * special.ndtr(x / _OUTLIER_SCALE)
        return special.stdtr(self.nu, x)

    def location_score(self, x):
        """``-f0'(x) / f0(x)``, the score of the location family."""
        x = np.asarray(x, dtype=float)
        if self.id == "normal":
            return x
        if self.id == "logistic":
            return np.tanh(0.5 * x)
        if self.id == "laplace":
            return np.sign(x)
        if self.id == "outlier":
            s = _OUTLIER_SCALE
            # posterior weight of the narrow component, via log-odds so the tails don't give 0/0
            log_odds = (
                math.log((1 - _OUTLIER_WEIGHT) * s / _OUTLIER_WEIGHT)
                - 0.5 * x * x * (1.0 - 1.0 / s ** 2)
            )
            narrow = special.expit(log_odds)
            return x * (narrow + (1.0 - narrow) / s ** 2)
        nu = self.nu
        return (nu + 1) * x / (nu + x * x)

    @cached_property
    def fisher_information(self):
        if self.id in ("normal", "laplace"):
            return 1.0
        if self.id == "logistic":
            return 1.0 / 3.0
        if self.id == "outlier":
            val = 0.0
            for a, b in ((0.0, 5.0), (5.0, 50.0), (50.0, 1000.0)):
                val += integrate.quad(
                    lambda x: self.location_score(x) ** 2 * self._f0(x), a, b, limit=200
                )[0]
            return 2.0 * val
        nu = self.nu
        return (nu + 1) / (nu + 3)

    # -- public API ------------------------------------------------------------
    def pdf(self, x):
        return self._f0(np.asarray(x, dtype=float) - self.theta)

    def cdf(self, x):
        return self._cdf0(np.asarray(x, dtype=float) - self.theta)

    def centered_pdf(self):
        """``x -> pdf(theta + x)``; even in ``x`` bit for bit."""
        return _CenteredDensity(self)

    @cached_property
    def info(self):
        nu = self.nu
        if nu is not None:
            sigma2 = math.inf if nu <= 2 else nu / (nu - 2)
            rv = -(nu + 1.0)
        else:
            sigma2 = {
                "normal": 1.0,
                "logistic": math.pi ** 2 / 3.0,
                "laplace": 2.0,
                "outlier": (1 - _OUTLIER_WEIGHT) + _OUTLIER_WEIGHT * _OUTLIER_SCALE ** 2,
            }[self.id]
            rv = None
        return TestbedInfo(sigma2, float(self._f0(0.0)), rv)

    def sample(self, n, seed):
        """Draw ``n`` i.i.d. variates.

        ``seed`` is an integer or a ``numpy.random.Generator``; the same
        integer always yields the same stream.
        """
        if n < 1:
            raise DomainError("n must be at least 1")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        nu = self.nu
        if self.id == "normal":
            x = rng.standard_normal(n)
        elif self.id == "logistic":
            u = rng.random(n)
            x = np.log(u) - np.log1p(-u)
        elif self.id == "laplace":
            x = rng.standard_exponential(n) * np.where(rng.random(n) < 0.5, -1.0, 1.0)
        elif self.id == "outlier":
            contaminated = rng.random(n) < _OUTLIER_WEIGHT
            x = rng.standard_normal(n) * np.where(contaminated, _OUTLIER_SCALE, 1.0)
        else:
            z = rng.standard_normal(n)
            x = z / np.sqrt(rng.chisquare(nu, n) / nu)
        return self.theta + x


class _CenteredDensity:
    """Callable ``x -> f(theta + x)`` evaluated through ``|x|`` so evenness is exact."""

    def __init__(self, testbed):
        self.testbed = testbed

    def __call__(self, x):
        return self.testbed._f0(np.abs(np.asarray(x, dtype=float)))

    def __repr__(self):
        return f"centered_pdf({self.testbed.id})"


def get(tb):
    return tb if isinstance(tb, Testbed) else Testbed(tb)


def pdf(tb, x):
    return get(tb).pdf(x)


def centered_pdf(tb):
    return get(tb).centered_pdf()


def info(tb):
    return get(tb).info


def sample(tb, n, seed):
    return get(tb).sample(n, seed)
