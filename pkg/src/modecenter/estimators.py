"""Location estimators: mean, median, L-estimators and redescending M-estimators.

All redescending estimators share one engine, :func:`irw`, the fixed-point
iteration ``m <- sum_i w_i x_i`` with weights proportional to a weight
function of ``x_i - m``.  For the bump kernel the weights are computed as a
softmax of log-weights (:func:`irw_softmax`), which is exact even when every
raw weight underflows.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigurationError, DomainError
from .pilot import PilotConfig, build_pilot
from .tuner import TunerConfig, madn, optimize_params

__all__ = [
    "IrwConfig",
    "IrwTrace",
    "TrimConfig",
    "sample_mean",
    "sample_median",
    "trimmed_mean",
    "winsorized_mean",
    "irw",
    "irw_softmax",
    "densest_point",
    "kme_fixed",
    "kme_tuned",
    "tukey_biweight",
    "andrews_sine",
    "bootstrap_alpha",
    "ALPHA_GRID",
    "EstimatorSpec",
    "parse_estimator",
    "apply_estimator",
]

TUKEY_SCALE = 6.0
ANDREWS_SCALE = 2.1 * math.pi
ALPHA_GRID = tuple(round(0.02 * i, 2) for i in range(25))


def _as_data(data, min_n=1):
    x = np.asarray(data, dtype=float).ravel()
    if x.size < min_n:
        raise ConfigurationError(
            "empty data" if min_n == 1 else f"need at least {min_n} observations, got {x.size}"
        )
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("data contain non-finite values")
    return x


# -- simple estimators ---------------------------------------------------------

def sample_mean(data):
    return float(np.mean(_as_data(data)))


def sample_median(data):
    return float(np.median(_as_data(data)))


@dataclass(frozen=True)
class TrimConfig:
    alpha: float = 0.0
    flavor: str = "trimmed"

    def __post_init__(self):
        if not 0.0 <= self.alpha < 0.5:
            raise ConfigurationError(f"alpha must lie in [0, 0.5), got {self.alpha!r}")
        if self.flavor not in ("trimmed", "winsorized"):
            raise ConfigurationError(f"flavor must be 'trimmed' or 'winsorized', got {self.flavor!r}")


def _trim_count(alpha, n):
    # alpha * n can land a hair below an integer (e.g. 2/66 * 66); nudge before flooring
    k = int(math.floor(alpha * n + 1e-9))
    return min(k, (n - 1) // 2)


def trimmed_mean(data, cfg):
    """Mean after removing the ``floor(alpha n)`` smallest and largest points."""
    x = np.sort(_as_data(data))
    k = _trim_count(cfg.alpha, x.size)
    return float(np.mean(x[k:x.size - k]))


def winsorized_mean(data, cfg):
    """Mean after clamping to the ``(k+1)``-th and ``(n-k)``-th order statistics."""
    x = np.sort(_as_data(data))
    n = x.size
    k = _trim_count(cfg.alpha, n)
    if k == 0:
        return float(np.mean(x))
    return float((x[k:n - k].sum() + k * (x[k] + x[n - k - 1])) / n)


def _l_estimate(data, cfg):
    return trimmed_mean(data, cfg) if cfg.flavor == "trimmed" else winsorized_mean(data, cfg)


# -- iterative reweighting -----------------------------------------------------

@dataclass(frozen=True)
class IrwConfig:
    """Stopping rule ``|m_{k+1} - m_k| <= epsilon * h`` and start policy."""

    epsilon: float = 1e-8
    max_iter: int = 500
    init: str = "median"
    keep_history: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if self.init not in ("median", "densest_point"):
            raise ConfigurationError(f"init must be 'median' or 'densest_point', got {self.init!r}")


@dataclass
class IrwTrace:
    """Record of one IRW run.

    ``weights_history[k]`` holds the normalized weights used to move from
    ``iterates[k]`` to ``iterates[k + 1]`` (only with ``keep_history``).
    """

    iterates: list
    weights_final: np.ndarray
    iterations: int
    converged: bool
    isolated: bool = False
    weights_history: list = field(default_factory=list)

    @property
    def deltas(self):
        return [abs(b - a) for a, b in zip(self.iterates, self.iterates[1:])]

    def as_dict(self):
        return {
            "iterates": [float(v) for v in self.iterates],
            "weights_final": [float(v) for v in self.weights_final],
            "iterations": self.iterations,
            "converged": self.converged,
            "isolated": self.isolated,
        }


def densest_point(data, kernel_fn, h):
    """Data point maximizing ``sum_j kernel_fn((x_i - x_j) / h)``; O(n^2)."""
    x = _as_data(data)
    dens = np.array([np.sum(kernel_fn((xi - x) / h)) for xi in x])
    return float(x[int(np.argmax(dens))])


def _run(x, normalized_weights, h, cfg, start):
    m = float(start)
    iterates = [m]
    history = []
    w = np.zeros_like(x)
    for _ in range(cfg.max_iter):
        w_new = normalized_weights(x - m)
        if w_new is None:
            return IrwTrace(iterates, w, len(iterates) - 1, True, True, history)
        w = w_new
        if cfg.keep_history:
            history.append(w.copy())
        m_new = float(w @ x)
        iterates.append(m_new)
        done = abs(m_new - m) <= cfg.epsilon * h
        m = m_new
        if done:
            return IrwTrace(iterates, w, len(iterates) - 1, True, False, history)
    return IrwTrace(iterates, w, len(iterates) - 1, False, False, history)


def _check_h(h):
    if not (np.isfinite(h) and h > 0):
        raise DomainError(f"bandwidth must be positive, got {h!r}")


def _start(x, cfg, kernel_fn, h, start):
    if start is not None:
        return float(start)
    if cfg.init == "densest_point":
        return densest_point(x, kernel_fn, h)
    return float(np.median(x))


def irw(data, weight_fn, h, cfg=None, start=None, kernel_fn=None):
    """Iteratively reweighted mean (mean shift).

    Parameters
    ----------
    data : array_like
    weight_fn : callable
        Nonnegative weight as a function of ``x_i - m`` (need not be normalized).
    h : float
        Bandwidth; enters only the stopping rule and the densest-point start.
    cfg : IrwConfig, optional
    start : float, optional
        Overrides the start policy.
    kernel_fn : callable, optional
        Kernel of unit bandwidth for the densest-point start; defaults to the
        weight function evaluated at ``h * u``.

    Returns
    -------
    estimate : float
    trace : IrwTrace
        If no point has positive weight at some iterate, that iterate is
        returned unchanged with ``trace.isolated`` set.
    """
    cfg = cfg or IrwConfig()
    _check_h(h)
    x = _as_data(data)

    def normalized(d):
        w = np.asarray(weight_fn(d), dtype=float)
        total = w.sum()
        return None if not total > 0 else w / total

    kfn = kernel_fn or (lambda u: weight_fn(h * u))
    trace = _run(x, normalized, h, cfg, _start(x, cfg, kfn, h, start))
    return trace.iterates[-1], trace


def irw_softmax(data, beta, h, cfg=None, start=None):
    """IRW with bump weights, computed as a softmax of ``score(beta, (x - m) / h)``."""
    cfg = cfg or IrwConfig()
    _check_h(h)
    x = _as_data(data)
    kernels._check_beta(beta)

    def normalized(d):
        return kernels.softmax(kernels.score(beta, d / h))

    kfn = None
    if cfg.init == "densest_point" and start is None:
        kfn = kernels.normalize(kernels.KernelShape.bump(beta)).eval
    trace = _run(x, normalized, h, cfg, _start(x, cfg, kfn, h, start))
    return trace.iterates[-1], trace


def kme_fixed(data, beta, h, cfg=None, start=None):
    """Kernel mode estimate with the bump kernel at fixed ``(beta, h)``."""
    return irw_softmax(data, beta, h, cfg, start)


def kme_tuned(data, pilot_cfg=None, tuner_cfg=None, irw_cfg=None):
    """Full pipeline: pilot density, tuned ``(beta, h)``, then IRW.

    Returns
    -------
    estimate : float
    params : TunedParams
    trace : IrwTrace
    """
    x = _as_data(data, min_n=3)
    pc = pilot_cfg or PilotConfig()
    pilot = build_pilot(x, grid_size=pc.grid_size, g=pc.bandwidth, h_max=pc.h_max)
    params = optimize_params(pilot, x, tuner_cfg or TunerConfig())
    est, trace = irw_softmax(x, params.beta, params.h, irw_cfg)
    return est, params, trace


def _redescending(x, profile, scale, cfg):
    x = _as_data(x, min_n=2)
    if np.all(x == x[0]):
        return float(x[0])
    h = scale * madn(x)
    est, _ = irw(x, lambda d: profile.unit_weight(d / h), h, cfg, kernel_fn=profile.eval)
    return est


def tukey_biweight(data, cfg=None):
    """Biweight M-estimate: triweight-kernel IRW with ``h = 6 MADN``."""
    return _redescending(data, kernels.normalize(kernels.TRIWEIGHT), TUKEY_SCALE, cfg)


def andrews_sine(data, cfg=None):
    """Sine M-estimate: raised-cosine-kernel IRW with ``h = 2.1 pi MADN``."""
    return _redescending(data, kernels.normalize(kernels.RAISED_COSINE), ANDREWS_SCALE, cfg)


# -- adaptive trimming ------------------------------------------------------------

def bootstrap_alpha(data, flavor="trimmed", alpha_grid=ALPHA_GRID, B=200, seed=0):
    """Choose the trimming level minimizing a bootstrap variance estimate.

    Resamples of size ``n`` are drawn from the sample augmented with its
    reflection about the median, ``(x, 2 M - x)``.  The same ``B`` resamples
    serve every candidate level, so differences between levels are not
    swamped by resampling noise.

    Returns
    -------
    TrimConfig
    """
    x = _as_data(data, min_n=2)
    if B < 50:
        raise ConfigurationError("B must be at least 50")
    grid = [float(a) for a in alpha_grid]
    if not grid:
        raise ConfigurationError("alpha_grid is empty")
    for a in grid:
        TrimConfig(a, flavor)
    if len(grid) == 1:
        return TrimConfig(grid[0], flavor)
    n = x.size
    m = float(np.median(x))
    aug = np.concatenate([x, 2.0 * m - x])
    rng = np.random.default_rng(seed)
    res = np.sort(aug[rng.integers(0, 2 * n, size=(B, n))], axis=1)
    csum = np.concatenate([np.zeros((B, 1)), np.cumsum(res, axis=1)], axis=1)
    best_alpha, best_var = None, math.inf
    for a in grid:
        k = _trim_count(a, n)
        inner = csum[:, n - k] - csum[:, k]
        if flavor == "trimmed":
            est = inner / (n - 2 * k)
        else:
            est = (inner + k * (res[:, k] + res[:, n - k - 1])) / n
        v = float(np.var(est, ddof=1))
        if v < best_var:
            best_alpha, best_var = a, v
    return TrimConfig(best_alpha, flavor)


# -- named estimators for the CLI and the simulation harness -------------------

@dataclass(frozen=True)
class EstimatorSpec:
    """A named estimator: ``kme``, ``mean``, ``median``, ``tukey``, ``andrews``,
    ``trimmed`` or ``winsorized`` (the last two with a fixed ``alpha`` or
    ``adaptive``)."""

    name: str
    alpha: float | None = None
    adaptive: bool = False

    @property
    def label(self):
        if self.name in ("trimmed", "winsorized"):
            return f"{self.name}-adaptive" if self.adaptive else f"{self.name}-{self.alpha:g}"
        return self.name


_NAMES = ("kme", "mean", "median", "trimmed", "winsorized", "tukey", "andrews")


def parse_estimator(text):
    """Parse ``name``, ``name-ALPHA`` or ``name-adaptive``."""
    name, _, arg = text.strip().partition("-")
    if name not in _NAMES:
        raise ConfigurationError(f"unknown estimator {text!r}; valid: {', '.join(_NAMES)}")
    if name not in ("trimmed", "winsorized"):
        if arg:
            raise ConfigurationError(f"estimator {name!r} takes no argument")
        return EstimatorSpec(name)
    if arg in ("", "adaptive"):
        return EstimatorSpec(name, adaptive=True)
    try:
        alpha = float(arg)
    except ValueError:
        raise ConfigurationError(f"bad trimming level in {text!r}") from None
    TrimConfig(alpha, name)
    return EstimatorSpec(name, alpha=alpha)


def apply_estimator(spec, data, seed=0, B=200, tuner_cfg=None, irw_cfg=None, pilot_cfg=None):
    """Run a named estimator.

    Returns
    -------
    estimate : float
    extras : dict
        ``beta``/``h``/``iterations``/``converged`` for the KME, ``alpha``
        for the L-estimators.
    """
    if isinstance(spec, str):
        spec = parse_estimator(spec)
    if spec.name == "kme":
        est, params, trace = kme_tuned(data, pilot_cfg, tuner_cfg, irw_cfg)
        return est, {"beta": params.beta, "h": params.h,
                     "iterations": trace.iterations, "converged": trace.converged}
    if spec.name == "mean":
        return sample_mean(data), {}
    if spec.name == "median":
        return sample_median(data), {}
    if spec.name == "tukey":
        return tukey_biweight(data, irw_cfg), {}
    if spec.name == "andrews":
        return andrews_sine(data, irw_cfg), {}
    if spec.adaptive:
        cfg = bootstrap_alpha(data, spec.name, B=B, seed=seed)
    else:
        cfg = TrimConfig(spec.alpha, spec.name)
    return _l_estimate(data, cfg), {"alpha": cfg.alpha}
