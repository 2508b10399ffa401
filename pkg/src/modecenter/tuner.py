"""Joint choice of kernel shape and bandwidth by minimizing the plug-in variance."""

import math
from dataclasses import dataclass, field

import numpy as np

from ._quadrature import DEFAULT_ORDER
from .errors import ConfigurationError, DegenerateDensityError, NumericError
from .pilot import MADN_CONSTANT
from .variance import asymptotic_variance_bump

__all__ = ["madn", "nelder_mead", "optimize_params", "TunedParams", "TunerConfig", "NelderMeadResult"]


def madn(data):
    """Median absolute deviation about the median, divided by 0.6745.

    Raises
    ------
    ConfigurationError
        With fewer than two points or a zero MAD.
    """
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise ConfigurationError("MADN needs at least two observations")
    mad = float(np.median(np.abs(x - np.median(x))))
    if not mad > 0:
        raise ConfigurationError("median absolute deviation is zero")
    return mad / MADN_CONSTANT


@dataclass
class NelderMeadResult:
    point: np.ndarray
    value: float
    evaluations: int
    iterations: int
    converged: bool
    best_history: list = field(default_factory=list)


def nelder_mead(objective, start, tol=1e-6, max_evals=400, step=0.7, xtol=1e-10):
    """Minimize ``objective`` with the downhill simplex method.

    Reflection, expansion, contraction and shrink coefficients are
    (1, 2, 0.5, 0.5).  Non-finite objective values count as ``+inf``.

    Parameters
    ----------
    objective : callable
        Maps a 1-d array to a float.
    start : array_like
        Starting vertex; the other vertices add ``step`` to one coordinate
        each.  ``step`` may be a scalar or one value per coordinate.
    tol : float
        Stop when the spread of vertex values is at most ``tol * |best|``.
        The criterion is relative so that rescaling the objective does not
        change the path.
    max_evals : int
    xtol : float
        Also stop once every vertex lies within ``xtol * step`` of the best
        one, coordinate by coordinate.

    Raises
    ------
    NumericError
        If the objective is not finite at ``start``.
    """
    x0 = np.asarray(start, dtype=float).ravel()
    dim = x0.size
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        v = float(objective(x))
        return v if math.isfinite(v) else math.inf

    f0 = f(x0)
    if not math.isfinite(f0):
        raise NumericError(f"objective is not finite at the starting point {x0.tolist()}")
    steps = np.broadcast_to(np.asarray(step, dtype=float), (dim,))
    sim = np.vstack([x0] + [x0 + s * e for s, e in zip(steps, np.eye(dim))])
    fv = np.array([f0] + [f(v) for v in sim[1:]])
    history = []
    iterations = 0
    converged = False
    while True:
        order = np.argsort(fv, kind="stable")
        sim, fv = sim[order], fv[order]
        history.append(float(fv[0]))
        spread = fv[-1] - fv[0]
        if spread <= tol * abs(fv[0]) or np.max(np.abs(sim[1:] - sim[0]) / np.abs(steps)) < xtol:
            converged = True
            break
        if evals >= max_evals:
            break
        iterations += 1
        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr < fv[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            sim[-1], fv[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if fr < fv[-2]:
            sim[-1], fv[-1] = xr, fr
            continue
        if fr < fv[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                sim[-1], fv[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            if fc < fv[-1]:
                sim[-1], fv[-1] = xc, fc
                continue
        sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
        fv[1:] = [f(v) for v in sim[1:]]
    return NelderMeadResult(sim[0].copy(), float(fv[0]), evals, iterations, converged, history)


_SIMPLICES = ("relative", "raw", "log")


@dataclass(frozen=True)
class TunerConfig:
    """Settings for :func:`optimize_params`.

    ``beta0`` and ``h0`` override the starting guesses (``h0`` defaults to
    the MADN of the data).  ``multistart`` also starts from beta = 1/4 and 8.

    ``simplex`` selects the search coordinates and the initial simplex:

    * ``"relative"`` (default): ``(beta, h)`` with edges ``0.5 * beta0`` and
      ``0.1 * h0``.  Rescaling the data rescales the whole search path.
    * ``"raw"``: ``(beta, h)`` with edge ``0.1 * max(beta0, h0)`` on both axes.
    * ``"log"``: ``(log beta, log h)`` with edge 0.7.

    ``step`` overrides the edge (scalar or per axis).  The objective is
    typically multimodal, so the choice decides which local minimum is found.
    """

    beta0: float = 1.0
    h0: float | None = None
    tol: float = 1e-6
    max_evals: int = 400
    multistart: bool = False
    simplex: str = "relative"
    step: float | None = None
    beta_bounds: tuple = (1e-3, 1e3)
    quad_nodes: int = DEFAULT_ORDER

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ConfigurationError("beta0 must be positive")
        if self.h0 is not None and not self.h0 > 0:
            raise ConfigurationError("h0 must be positive")
        if not self.tol > 0 or self.max_evals < 1:
            raise ConfigurationError("tol must be positive and max_evals at least 1")
        if self.simplex not in _SIMPLICES:
            raise ConfigurationError(f"simplex must be one of {_SIMPLICES}, got {self.simplex!r}")


@dataclass(frozen=True)
class TunedParams:
    beta: float
    h: float
    achieved_variance: float
    evaluations: int
    converged: bool
    start_beta: float
    start_h: float
    start_variance: float

    def as_dict(self):
        return {
            "beta": self.beta,
            "h": self.h,
            "achieved_variance": self.achieved_variance,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "start_beta": self.start_beta,
            "start_h": self.start_h,
        }


def optimize_params(pilot, data=None, config=None):
    """Tune ``(beta, h)`` for the bump kernel against a pilot density.

    Parameters
    ----------
    pilot : callable
        Centered density, typically a :class:`~modecenter.pilot.PilotDensity`.
        Its ``h_max`` attribute, if any, caps the bandwidth.
    data : array_like, optional
        Sample used for the default starting bandwidth (MADN).  Not needed
        when ``config.h0`` is given.
    config : TunerConfig, optional

    Returns
    -------
    TunedParams
    """
    cfg = config or TunerConfig()
    if cfg.h0 is not None:
        h0 = float(cfg.h0)
    elif data is not None:
        h0 = madn(data)
    else:
        raise ConfigurationError("need data or config.h0 to choose a starting bandwidth")
    h_max = float(getattr(pilot, "h_max", math.inf))
    lo, hi = cfg.beta_bounds

    log_space = cfg.simplex == "log"
    encode = (lambda b, h: (math.log(b), math.log(h))) if log_space else (lambda b, h: (b, h))
    decode = (lambda z: (math.exp(z[0]), math.exp(z[1]))) if log_space else (lambda z: (z[0], z[1]))

    def objective(z):
        beta, h = decode(z)
        if not (lo <= beta <= hi) or not 0 < h <= h_max:
            return math.inf
        try:
            return asymptotic_variance_bump(pilot, beta, h, cfg.quad_nodes)
        except NumericError:
            return math.inf

    start_h = h0
    start_val = objective(encode(cfg.beta0, start_h))
    for factor in (2.0, 4.0, 8.0):
        if math.isfinite(start_val):
            break
        start_h = h0 * factor
        start_val = objective(encode(cfg.beta0, start_h))
    if not math.isfinite(start_val):
        raise DegenerateDensityError(
            f"plug-in variance is not finite near the starting bandwidth {h0:g}"
        )

    betas = [cfg.beta0]
    if cfg.multistart:
        betas += [b for b in (0.25, 1.0, 8.0) if b != cfg.beta0]
    best, evals, converged = None, 0, True
    for b in betas:
        z0 = encode(b, start_h)
        if b != cfg.beta0 and not math.isfinite(objective(z0)):
            continue
        if cfg.step is not None:
            step = cfg.step
        elif log_space:
            step = 0.7
        elif cfg.simplex == "raw":
            step = 0.1 * max(b, start_h)
        else:
            step = np.array([0.5 * b, 0.1 * start_h])
        res = nelder_mead(objective, z0, cfg.tol, cfg.max_evals, step)
        evals += res.evaluations
        if best is None or res.value < best.value:
            best, converged = res, res.converged
    beta, h = decode(best.point)
    return TunedParams(float(beta), float(h), best.value, evals, converged, cfg.beta0, start_h, start_val)
