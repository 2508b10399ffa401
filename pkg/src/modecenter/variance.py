"""Asymptotic variance of the kernel mode estimator as a function of bandwidth.

For a kernel ``K`` and a symmetric density with centered version ``f0``,

    V(h) = int K_h'(x)^2 f0(x) dx / (int K_h''(x) f0(x) dx)^2,

which in centered coordinates ``x = h u`` on the unit interval reads
``V = h * 2 A / (2 B + jumps)^2`` with ``A = int_0^1 K'(u)^2 f0(h u) du`` and
``B = int_0^1 K''(u) f0(h u) du``.  ``n * Var(estimate) -> V(h)``.

For registered test-beds a second, cancellation-free route is available:
``V = 1 / I + excess`` where ``I`` is the Fisher information of the location
family and ``excess >= 0`` is computed directly.  Near the Fisher bound (the
normal test-bed at large ``h``) ``V - 1/I`` falls below double-precision
resolution of ``V`` itself, and only the excess can be compared across ``h``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from . import testbeds as _testbeds
from ._quadrature import DEFAULT_ORDER, integrate_tail, unit_rule
from .errors import DegenerateDensityError, DomainError, NumericError

__all__ = [
    "VarianceCurve",
    "asymptotic_variance_bump",
    "asymptotic_variance_general",
    "variance_excess",
    "variance_curve",
    "tail_gap_integral",
]

_DEGENERATE = 1e-30


def _check_h(h):
    if not (np.isfinite(h) and h > 0):
        raise DomainError(f"bandwidth must be positive and finite, got {h!r}")


def _density_callable(f0):
    """Return ``(callable, testbed or None)`` for a density spec."""
    if isinstance(f0, (str, _testbeds.Testbed)):
        tb = _testbeds.get(f0)
        return tb.centered_pdf(), tb
    tb = getattr(f0, "testbed", None)
    return f0, tb if isinstance(tb, _testbeds.Testbed) else None


def _ratio(h, num, den):
    if not (den < 0 and abs(den) >= _DEGENERATE):
        raise DegenerateDensityError(
            f"variance denominator is {den:.3g} at h={h:g}; "
            "the density has no usable mass in [0, h]"
        )
    return h * num / den ** 2


def asymptotic_variance_bump(f0, beta, h, quad_nodes=DEFAULT_ORDER):
    """Asymptotic variance for the bump kernel with shape ``beta``.

    Parameters
    ----------
    f0 : callable or str
        Centered density (only evaluated at ``x >= 0``) or a test-bed id.
    beta, h : float
        Kernel shape and bandwidth.
    quad_nodes : int
        Gauss-Legendre order per panel of the graded composite rule.

    Returns
    -------
    float
        ``h^2 E1 / E2^2`` with ``E1 = 2h int_0^1 psi^2 f0(hu) du`` and
        ``E2 = 2h int_0^1 psi' f0(hu) du``.

    Raises
    ------
    DegenerateDensityError
        If ``E2`` is not negative or is smaller than 1e-30 in magnitude.
    """
    kernels._check_beta(beta)
    _check_h(h)
    f, _ = _density_callable(f0)
    u, w = unit_rule(quad_nodes)
    fu = np.asarray(f(h * u), dtype=float)
    e1 = 2.0 * h * float(w @ (np.asarray(kernels.psi(beta, u)) ** 2 * fu))
    e2 = 2.0 * h * float(w @ (np.asarray(kernels.psi_prime(beta, u)) * fu))
    return _ratio(h, h * e1, e2)


def asymptotic_variance_general(f0, profile, h, quad_nodes=DEFAULT_ORDER):
    """Asymptotic variance for any normalized :class:`~modecenter.kernels.KernelProfile`.

    Jumps in ``K'`` (Epanechnikov) contribute point masses to ``K''``.
    """
    _check_h(h)
    f, _ = _density_callable(f0)
    if profile.shape.name == "gaussian":
        raise DomainError("the Gaussian kernel has unbounded support; use a compact kernel")
    u, w = unit_rule(quad_nodes)
    fu = np.asarray(f(h * u), dtype=float)
    num = 2.0 * float(w @ (np.asarray(profile.deriv(u)) ** 2 * fu))
    den = 2.0 * float(w @ (np.asarray(profile.second_deriv(u)) * fu))
    for loc, size in profile.deriv_jumps:
        den += 2.0 * size * float(f(h * loc))
    return _ratio(h, num, den)


def variance_excess(testbed, beta, h, quad_nodes=DEFAULT_ORDER):
    """``V(h) - 1/I`` for a registered test-bed and the bump kernel.

    Uses ``p(x) = x (1 - r(x/h))`` with ``r(u) = 1 - exp(-u^b / (1 - u^b))``,
    which is proportional to the estimating function.  With ``l`` the
    location score, ``m = E[x r l]`` and ``k = (1 - m) / I``::

        V = 1/I + E[(p - k l)^2] / (1 - m)^2

    Each term is small where ``V`` is near ``1/I``, so there is no
    cancellation.
    """
    kernels._check_beta(beta)
    _check_h(h)
    tb = _testbeds.get(testbed)
    info = tb.fisher_information
    u, w = unit_rule(quad_nodes)
    x = h * u
    f = tb._f0(x)
    ell = tb.location_score(x)
    lg = beta * np.log(u)
    ratio = np.exp(lg) / -np.expm1(lg)  # u^b / (1 - u^b)
    r = -np.expm1(-ratio)

    def xlf(t):
        return t * tb.location_score(t) * tb._f0(t)

    def llf(t):
        return tb.location_score(t) ** 2 * tb._f0(t)

    m = 2.0 * h * float(w @ (x * r * ell * f)) + 2.0 * integrate_tail(xlf, h, quad_nodes)
    if m < 0.5:
        q = 1.0 - m
        d = (x - ell / info) - x * r + ell * (m / info)
    else:
        # small h: 1 - m = E[p l] is itself small, so integrate it directly
        q = 2.0 * h * float(w @ (x * np.exp(-ratio) * ell * f))
        d = x * np.exp(-ratio) - ell * (q / info)
    if not q > _DEGENERATE:
        raise DegenerateDensityError(f"variance denominator vanished at h={h:g}")
    k = q / info
    inner = 2.0 * h * float(w @ (d * d * f))
    outer = 2.0 * k * k * integrate_tail(llf, h, quad_nodes)
    return (inner + outer) / q ** 2


@dataclass(frozen=True, eq=False)
class VarianceCurve:
    """``V`` on a bandwidth grid with reference levels.

    Missing points (where the variance could not be computed) are NaN in
    ``values``.  For registered test-beds with the bump kernel ``excess``
    holds ``V - 1/I`` and the argmin is taken on it; otherwise ``excess``
    is None.
    """

    kernel: kernels.KernelShape
    h_grid: np.ndarray
    values: np.ndarray
    sigma2_ref: float
    median_ref: float
    argmin_h: float
    min_value: float
    excess: np.ndarray | None = None

    @property
    def argmin_index(self):
        return int(np.flatnonzero(self.h_grid == self.argmin_h)[0])

    def rows(self):
        """``(h, V or None)`` pairs."""
        return [(float(h), None if np.isnan(v) else float(v)) for h, v in zip(self.h_grid, self.values)]


def _reference_levels(f, tb):
    if tb is not None:
        i = tb.info
        return i.sigma2, i.median_variance
    f_at_0 = float(f(0.0))
    # int_0^inf x^2 f(x) dx via x = t / (1 - t)
    t, w = unit_rule(DEFAULT_ORDER)
    x = t / (1.0 - t)
    sigma2 = 2.0 * float(w @ (x * x * np.asarray(f(x)) / (1.0 - t) ** 2))
    median_ref = (2.0 * f_at_0) ** -2 if f_at_0 > 0 else math.inf
    return sigma2, median_ref


def variance_curve(f0, shape, h_min, h_max, n_points=200, log_spacing=True, quad_nodes=DEFAULT_ORDER):
    """Evaluate ``V`` on a grid of bandwidths.

    Parameters
    ----------
    f0 : callable, str or Testbed
        Centered density or test-bed.
    shape : KernelShape or float
        Kernel; a float is taken as the bump shape ``beta``.
    h_min, h_max : float
        Grid ends, ``0 < h_min < h_max``.
    n_points : int
    log_spacing : bool
        Geometric rather than arithmetic spacing.
    """
    if not (0 < h_min < h_max and np.isfinite(h_max)):
        raise DomainError("need 0 < h_min < h_max < inf")
    if n_points < 2:
        raise DomainError("n_points must be at least 2")
    if not isinstance(shape, kernels.KernelShape):
        shape = kernels.KernelShape.bump(float(shape))
    f, tb = _density_callable(f0)
    grid = np.geomspace(h_min, h_max, n_points) if log_spacing else np.linspace(h_min, h_max, n_points)

    use_excess = tb is not None and shape.name == "bump"
    profile = None if shape.name == "bump" else kernels.normalize(shape, quad_nodes)
    values = np.full(n_points, np.nan)
    excess = np.full(n_points, np.nan) if use_excess else None
    for i, h in enumerate(grid):
        try:
            if use_excess:
                excess[i] = variance_excess(tb, shape.beta, h, quad_nodes)
                values[i] = 1.0 / tb.fisher_information + excess[i]
            elif profile is None:
                values[i] = asymptotic_variance_bump(f, shape.beta, h, quad_nodes)
            else:
                values[i] = asymptotic_variance_general(f, profile, h, quad_nodes)
        except NumericError:
            continue

    key = excess if use_excess else values
    if np.all(np.isnan(key)):
        raise DegenerateDensityError("variance could not be computed at any grid point")
    j = int(np.nanargmin(key))
    sigma2, median_ref = _reference_levels(f, tb)
    return VarianceCurve(shape, grid, values, sigma2, median_ref, float(grid[j]), float(values[j]), excess)


def tail_gap_integral(beta, alpha, quad_nodes=DEFAULT_ORDER):
    """``int_0^1 x^(alpha+2) [exp(-2 x^b / (1 - x^b)) - 1] dx + 1 / (alpha + 3)``.

    Requires ``alpha < -3`` and ``|alpha + 1| < beta``.

    Raises
    ------
    DomainError
        If the conditions on ``alpha`` and ``beta`` fail.
    NumericError
        If the quadrature does not settle under refinement.
    """
    kernels._check_beta(beta)
    if not alpha < -3:
        raise DomainError(f"alpha must be below -3, got {alpha!r}")
    if not abs(alpha + 1) < beta:
        raise DomainError(f"need |alpha + 1| < beta, got alpha={alpha!r}, beta={beta!r}")

    def integral(order):
        x, w = unit_rule(order)
        lg = beta * np.log(x)
        ratio = np.exp(lg) / -np.expm1(lg)
        # x^(alpha+2) * expm1(...) computed in log space to keep tiny x finite
        val = -np.exp((alpha + 2) * np.log(x) + np.log(-np.expm1(-2.0 * ratio)))
        return float(w @ val)

    coarse, fine = integral(quad_nodes), integral(2 * quad_nodes)
    if not abs(coarse - fine) <= 1e-8 * max(abs(fine), 1e-300):
        raise NumericError(
            f"tail-gap integral did not converge for beta={beta}, alpha={alpha}"
        )
    return fine + 1.0 / (alpha + 3)
