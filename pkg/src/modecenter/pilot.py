"""Plug-in estimate of the centered density from a sample.

The pilot is a Gaussian KDE symmetrized about the sample median,

    f*(x) = [f_g(x) + f_g(2 M - x)] / 2,

stored as ``f~0(t) = f*(M + t)`` for ``t >= 0`` on a grid and linearly
interpolated.  The grid is uniform in ``asinh(t / g)``: spacing is a small
fraction of ``g`` near the center and grows geometrically in the tails, so
heavy-tailed samples (where ``h_max`` can exceed ``g`` by many orders of
magnitude) keep full resolution where the mass is.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = ["PilotConfig", "PilotDensity", "silverman_bandwidth", "symmetrized_kde", "build_pilot", "default_h_max"]

log = logging.getLogger(__name__)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_CUTOFF = 9.0  # Gaussian kernel treated as zero beyond 9 bandwidths
_BLOCK = 128
DEFAULT_GRID_SIZE = 4096
MADN_CONSTANT = 0.6745


def _as_data(data, min_n=1):
    x = np.asarray(data, dtype=float).ravel()
    if x.size < min_n:
        raise ConfigurationError(f"need at least {min_n} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("data contain non-finite values")
    return x


def silverman_bandwidth(data):
    """Rule-of-thumb bandwidth ``0.9 * min(sd, IQR / 1.34) * n**(-1/5)``.

    Falls back to ``sd`` when the IQR is zero but the sample still has spread.

    Raises
    ------
    ConfigurationError
        With fewer than three points or zero spread.
    """
    x = _as_data(data, min_n=3)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if not spread > 0:
        raise ConfigurationError(
            "data have zero spread; pass an explicit pilot bandwidth instead"
        )
    return 0.9 * spread * x.size ** -0.2


def _kde_sorted(points, y_sorted, g, norm):
    """Gaussian KDE of sorted ``y_sorted`` at ascending ``points``, truncated at 9 g."""
    out = np.empty_like(points)
    for start in range(0, points.size, _BLOCK):
        p = points[start:start + _BLOCK]
        lo = np.searchsorted(y_sorted, p[0] - _CUTOFF * g, side="left")
        hi = np.searchsorted(y_sorted, p[-1] + _CUTOFF * g, side="right")
        if hi <= lo:
            out[start:start + _BLOCK] = 0.0
            continue
        z = (p[:, None] - y_sorted[None, lo:hi]) / g
        out[start:start + _BLOCK] = np.exp(-0.5 * z * z).sum(axis=1)
    return out * norm


def symmetrized_kde(data, g, x, median_hat=None):
    """Average of the Gaussian KDE at ``x`` and at its mirror ``2 M - x``."""
    if not g > 0:
        raise DomainError(f"pilot bandwidth must be positive, got {g!r}")
    d = _as_data(data)
    m = float(np.median(d)) if median_hat is None else float(median_hat)
    x = np.asarray(x, dtype=float)
    # f_g(x) + f_g(2m - x) == KDE of the augmented sample {d, 2m - d} at x (twice)
    t = np.abs(x - m)[..., None]
    z1 = (m + t - d) / g
    z2 = (m - t - d) / g
    s = np.exp(-0.5 * z1 * z1).sum(axis=-1) + np.exp(-0.5 * z2 * z2).sum(axis=-1)
    out = s * (_INV_SQRT_2PI / (2.0 * d.size * g))
    return float(out) if out.ndim == 0 else out


def _madn(x):
    return float(np.median(np.abs(x - np.median(x)))) / MADN_CONSTANT


def default_h_max(data, g, median_hat=None):
    """``3 * (max|x - M| + 3 g)``, capped at ``1e6 * MADN`` when MADN > 0."""
    x = _as_data(data)
    m = float(np.median(x)) if median_hat is None else median_hat
    h_max = 3.0 * (float(np.max(np.abs(x - m))) + 3.0 * g)
    s = _madn(x)
    if s > 0:
        h_max = min(h_max, 1e6 * s)
    return h_max


@dataclass(frozen=True)
class PilotConfig:
    """Overrides for :func:`build_pilot`; ``None`` selects the default rule."""

    grid_size: int = DEFAULT_GRID_SIZE
    bandwidth: float | None = None
    h_max: float | None = None


@dataclass(frozen=True, eq=False)
class PilotDensity:
    """Binned, symmetrized estimate of the centered density.

    Calling the object evaluates ``f~0(|x|)`` by linear interpolation and
    returns 0 beyond ``h_max``.
    """

    median_hat: float
    g: float
    h_max: float
    grid: np.ndarray
    values: np.ndarray

    @property
    def grid_size(self):
        return self.grid.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        t = np.abs(x)
        n = self.grid.size
        du = math.asinh(self.h_max / self.g) / (n - 1)
        pos = np.arcsinh(t / self.g) / du
        j = np.clip(pos.astype(np.int64), 0, n - 2)
        x0 = self.grid[j]
        x1 = self.grid[j + 1]
        frac = np.clip((t - x0) / (x1 - x0), 0.0, 1.0)
        out = self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
        out = np.where(t <= self.h_max, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def __repr__(self):
        return (
            f"PilotDensity(median_hat={self.median_hat:g}, g={self.g:g}, "
            f"h_max={self.h_max:g}, grid_size={self.grid.size})"
        )


def build_pilot(data, grid_size=DEFAULT_GRID_SIZE, g=None, h_max=None):
    """Build the :class:`PilotDensity` for a sample.

    Parameters
    ----------
    data : array_like
        At least three observations.
    grid_size : int
        Number of grid nodes on ``[0, h_max]``.
    g : float, optional
        Pilot bandwidth; Silverman's rule when omitted.
    h_max : float, optional
        Grid extent; :func:`default_h_max` when omitted.
    """
    x = _as_data(data, min_n=3)
    if grid_size < 2:
        raise DomainError("grid_size must be at least 2")
    m = float(np.median(x))
    g = silverman_bandwidth(x) if g is None else float(g)
    if not g > 0:
        raise DomainError(f"pilot bandwidth must be positive, got {g!r}")
    h_max = default_h_max(x, g, m) if h_max is None else float(h_max)
    if not h_max > 0:
        raise DomainError(f"h_max must be positive, got {h_max!r}")

    u = np.linspace(0.0, math.asinh(h_max / g), grid_size)
    grid = g * np.sinh(u)
    grid[-1] = h_max
    y = np.sort(np.concatenate([x, 2.0 * m - x]))
    values = _kde_sorted(m + grid, y, g, _INV_SQRT_2PI / (y.size * g))
    grid.setflags(write=False)
    values.setflags(write=False)

    if x.size >= 1000:
        tail = values[int(0.9 * grid_size):]
        if np.any(np.diff(tail) > 1e-12 * values.max()):
            log.warning("pilot density is not monotone in its tail (n=%d, g=%.3g)", x.size, g)
    return PilotDensity(m, g, h_max, grid, values)
