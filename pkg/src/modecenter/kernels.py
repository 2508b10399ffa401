"""Kernels for mode estimation: the bump family and four classic shapes.

The bump family is defined through its derivative,

    K_beta'(x) = -c_beta * x * b_beta(x),   b_beta(x) = exp(-1 / (1 - |x|**beta)),

on (-1, 1).  It has no closed-form antiderivative, so the density itself is
obtained by quadrature; iterative reweighting only ever needs ``b_beta``.

All functions accept scalars or arrays and return arrays of matching shape
(0-d arrays for scalar input are unwrapped to ``float``).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _quadrature
from .errors import DomainError, NumericError

__all__ = [
    "KernelShape",
    "KernelProfile",
    "EPANECHNIKOV",
    "TRIWEIGHT",
    "RAISED_COSINE",
    "GAUSSIAN",
    "bump",
    "psi",
    "psi_prime",
    "score",
    "inflection_point",
    "normalize",
    "second_deriv",
    "weight",
    "softmax",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_TABLE_CELLS = 2048
_CELL_ORDER = 10


def _as_out(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def _check_beta(beta):
    if not (np.isfinite(beta) and beta > 0):
        raise DomainError(f"beta must be a positive finite number, got {beta!r}")


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    return x


def _gap(a, beta):
    """1 - a**beta for a in [0, 1), computed without cancellation near 1."""
    with np.errstate(divide="ignore"):
        return -np.expm1(beta * np.log(a))


def bump(beta, x):
    """Bump function ``exp(-1 / (1 - |x|**beta))`` on (-1, 1), zero elsewhere."""
    _check_beta(beta)
    x = _check_x(x)
    a = np.abs(x)
    inside = a < 1.0
    out = np.zeros_like(a)
    out[inside] = np.exp(-1.0 / _gap(a[inside], beta))
    return _as_out(out, x)


def psi(beta, x):
    """Unnormalized negative score ``-x * b_beta(x)`` (odd, compact support)."""
    x = _check_x(x)
    return _as_out(-x * bump(beta, x), x)


def psi_prime(beta, x):
    """Derivative of :func:`psi`: ``[beta |x|^beta / (1 - |x|^beta)^2 - 1] b_beta(x)``."""
    _check_beta(beta)
    x = _check_x(x)
    a = np.abs(x)
    inside = a < 1.0
    out = np.zeros_like(a)
    ai = a[inside]
    g = _gap(ai, beta)
    b = np.exp(-1.0 / g)
    with np.errstate(divide="ignore", under="ignore"):
        # beta a^beta / g^2 * exp(-1/g), in log space so g -> 0 gives 0, not inf * 0
        log_term = math.log(beta) + beta * np.log(ai) - 2.0 * np.log(g) - 1.0 / g
        term = np.where(ai > 0, np.exp(log_term), 0.0)
    out[inside] = term - b
    return _as_out(out, x)


def score(beta, x):
    """Log-weight ``-1 / (1 - |x|**beta)`` on (-1, 1); ``-inf`` outside.

    ``exp(score)`` equals :func:`bump`, so a softmax of scores reproduces the
    normalized bump weights.
    """
    _check_beta(beta)
    x = _check_x(x)
    a = np.abs(x)
    inside = a < 1.0
    out = np.full_like(a, -np.inf)
    out[inside] = -1.0 / _gap(a[inside], beta)
    return _as_out(out, x)


def softmax(z):
    """Softmax with the convention ``exp(-inf) = 0``.

    Returns ``None`` when every entry is ``-inf`` (no mass to normalize).
    """
    z = np.asarray(z, dtype=float)
    top = np.max(z)
    if not np.isfinite(top):
        return None
    e = np.exp(z - top)
    return e / e.sum()


def inflection_point(beta):
    """Positive inflection point of ``K_beta``, in (0, 1)."""
    _check_beta(beta)
    s = 1.0 + 0.5 * beta
    # s - sqrt(s^2 - 1) == 1 / (s + sqrt(s^2 - 1)); the latter avoids cancellation
    y = 1.0 / (s + math.sqrt(s * s - 1.0))
    return y ** (1.0 / beta)


@dataclass(frozen=True)
class KernelShape:
    """Which kernel: ``bump`` (with ``beta``) or one of the classic shapes."""

    name: str
    beta: float | None = None

    _NAMES = ("bump", "epanechnikov", "triweight", "raised_cosine", "gaussian")

    def __post_init__(self):
        if self.name not in self._NAMES:
            raise DomainError(f"unknown kernel {self.name!r}; expected one of {self._NAMES}")
        if self.name == "bump":
            if self.beta is None:
                raise DomainError("bump kernel requires beta")
            _check_beta(self.beta)
            object.__setattr__(self, "beta", float(self.beta))
        elif self.beta is not None:
            raise DomainError(f"{self.name} kernel takes no beta")

    @classmethod
    def bump(cls, beta):
        return cls("bump", beta)

    @property
    def support_radius(self):
        return math.inf if self.name == "gaussian" else 1.0

    def __str__(self):
        return f"bump(beta={self.beta:g})" if self.name == "bump" else self.name


EPANECHNIKOV = KernelShape("epanechnikov")
TRIWEIGHT = KernelShape("triweight")
RAISED_COSINE = KernelShape("raised_cosine")
GAUSSIAN = KernelShape("gaussian")


@dataclass(frozen=True, eq=False)
class KernelProfile:
    """A normalized kernel density with derivatives and IRW weight function.

    Build instances with :func:`normalize`.

    Attributes
    ----------
    shape : KernelShape
    norm_const : float
        Multiplier making the kernel integrate to one.  For the bump family
        ``K'(x) = -norm_const * x * b_beta(x)``.
    support_radius : float
    deriv_jumps : tuple of (float, float)
        Locations ``x > 0`` where ``K'`` jumps, with the jump size.  The
        mirrored jump at ``-x`` has the same size.  Only the Epanechnikov
        kernel has any.
    """

    shape: KernelShape
    norm_const: float
    support_radius: float
    deriv_jumps: tuple = ()
    _table: np.ndarray | None = field(default=None, repr=False)

    # -- density -----------------------------------------------------------
    def eval(self, x):
        x = _check_x(x)
        u = np.abs(x)
        name = self.shape.name
        inside = u < self.support_radius
        out = np.zeros_like(u)
        ui = u[inside]
        if name == "bump":
            out[inside] = self.norm_const * _bump_tail_integral(self.shape.beta, ui, self._table)
        elif name == "epanechnikov":
            out[inside] = 0.75 * (1.0 - ui ** 2)
        elif name == "triweight":
            out[inside] = (35.0 / 32.0) * (1.0 - ui ** 2) ** 3
        elif name == "raised_cosine":
            out[inside] = 0.5 * (1.0 + np.cos(np.pi * ui))
        else:
            out = np.exp(-0.5 * u ** 2) / _SQRT_2PI
        return _as_out(out, x)

    def deriv(self, x):
        x = _check_x(x)
        name = self.shape.name
        inside = np.abs(x) < self.support_radius
        out = np.zeros_like(x)
        xi = x[inside]
        if name == "bump":
            out = self.norm_const * np.asarray(psi(self.shape.beta, x))
        elif name == "epanechnikov":
            out[inside] = -1.5 * xi
        elif name == "triweight":
            out[inside] = -(105.0 / 16.0) * xi * (1.0 - xi ** 2) ** 2
        elif name == "raised_cosine":
            out[inside] = -0.5 * np.pi * np.sin(np.pi * xi)
        else:
            out = -x * np.exp(-0.5 * x ** 2) / _SQRT_2PI
        return _as_out(out, x)

    def second_deriv(self, x):
        """Second derivative (absolutely continuous part for Epanechnikov)."""
        x = _check_x(x)
        name = self.shape.name
        inside = np.abs(x) < self.support_radius
        out = np.zeros_like(x)
        xi = x[inside]
        if name == "bump":
            out = self.norm_const * np.asarray(psi_prime(self.shape.beta, x))
        elif name == "epanechnikov":
            out[inside] = -1.5
        elif name == "triweight":
            x2 = xi ** 2
            out[inside] = -(105.0 / 16.0) * (1.0 - x2) * (1.0 - 5.0 * x2)
        elif name == "raised_cosine":
            out[inside] = -0.5 * np.pi ** 2 * np.cos(np.pi * xi)
        else:
            out = (x ** 2 - 1.0) * np.exp(-0.5 * x ** 2) / _SQRT_2PI
        return _as_out(out, x)

    def unit_weight(self, x):
        """Weight ``-K'(x) / x`` at bandwidth 1, with ``-K''(0)`` at the origin."""
        x = _check_x(x)
        u = np.abs(x)
        name = self.shape.name
        inside = u < self.support_radius
        out = np.zeros_like(u)
        ui = u[inside]
        if name == "bump":
            out = self.norm_const * np.asarray(bump(self.shape.beta, u))
        elif name == "epanechnikov":
            out[inside] = 1.5
        elif name == "triweight":
            out[inside] = (105.0 / 16.0) * (1.0 - ui ** 2) ** 2
        elif name == "raised_cosine":
            # sin(pi u) / u == pi * sinc(u)
            out[inside] = 0.5 * np.pi ** 2 * np.sinc(ui)
        else:
            out = np.exp(-0.5 * u ** 2) / _SQRT_2PI
        return _as_out(out, x)

    def weight(self, h, x):
        if not (np.isfinite(h) and h > 0):
            raise DomainError(f"bandwidth must be positive, got {h!r}")
        x = _check_x(x)
        return _as_out(np.asarray(self.unit_weight(x / h)) / h ** 3, x)


def second_deriv(profile, x):
    return profile.second_deriv(x)


def weight(profile, h, x):
    """IRW weight ``W_h(x) = -K_h'(x) / x`` (``-K_h''(0)`` at zero)."""
    return profile.weight(h, x)


# -- bump-family normalization ------------------------------------------------

def _bump_second_moment(beta, order):
    return _quadrature.integrate_unit(lambda t: t * t * bump(beta, t), order)


def _bump_table(beta):
    """Q(x_j) = int_{x_j}^1 t b(t) dt on a uniform grid of 2049 nodes."""
    t, w = np.polynomial.legendre.leggauss(_CELL_ORDER)
    edges = np.linspace(0.0, 1.0, _TABLE_CELLS + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = edges[:-1, None] + half[:, None] * (t + 1.0)
    cell = (half[:, None] * w * nodes * bump(beta, nodes)).sum(axis=1)
    q = np.zeros(_TABLE_CELLS + 1)
    q[:-1] = np.cumsum(cell[::-1])[::-1]
    q.setflags(write=False)
    return q


def _bump_tail_integral(beta, u, table):
    """int_u^1 t b(t) dt for u in [0, 1), from the table plus a short GL correction."""
    j = np.rint(u * _TABLE_CELLS).astype(int)
    xj = j / _TABLE_CELLS
    t, w = np.polynomial.legendre.leggauss(_CELL_ORDER)
    half = 0.5 * (u - xj)
    nodes = xj[:, None] + half[:, None] * (t + 1.0)
    corr = (half[:, None] * w * nodes * bump(beta, nodes)).sum(axis=1)
    return table[j] - corr


def normalize(shape, quad_nodes=_quadrature.DEFAULT_ORDER):
    """Build the normalized :class:`KernelProfile` for ``shape``.

    For the bump family the constant is ``c = 1 / (2 * int_0^1 t^2 b(t) dt)``
    (integrating ``K`` by parts), computed with the graded composite
    Gauss-Legendre rule of order ``quad_nodes`` per panel and checked against
    a rerun at twice the order.

    Raises
    ------
    NumericError
        If the two quadrature runs disagree by more than 1e-10 relative.
    """
    if quad_nodes < 4:
        raise DomainError("quad_nodes must be at least 4")
    if shape.name != "bump":
        jumps = ((1.0, 1.5),) if shape.name == "epanechnikov" else ()
        const = {
            "epanechnikov": 0.75,
            "triweight": 35.0 / 32.0,
            "raised_cosine": 0.5,
            "gaussian": 1.0 / _SQRT_2PI,
        }[shape.name]
        return KernelProfile(shape, const, shape.support_radius, jumps)

    m1 = _bump_second_moment(shape.beta, quad_nodes)
    m2 = _bump_second_moment(shape.beta, 2 * quad_nodes)
    residual = abs(m1 - m2) / abs(m2)
    if not residual <= 1e-10:
        raise NumericError(
            f"normalizing constant for {shape} did not converge (residual {residual:.3g})"
        )
    return KernelProfile(shape, 0.5 / m2, 1.0, (), _bump_table(shape.beta))
