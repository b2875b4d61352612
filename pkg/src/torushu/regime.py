"""Finite-size scaling fits for the hyperuniformity regimes.

The definitions are asymptotic, so a verdict at finite N is a declared
surrogate: a log-log least-squares slope compared against a threshold, and
only when the fit explains the data (``r^2 >= min_r2``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import PreconditionError
from .lattice import ball_volume

REGIMES = ("large", "small", "threshold")
DEFAULT_DELTA = 0.05
DEFAULT_MIN_R2 = 0.9


@dataclass
class RegimeReport:
    regime: str
    fitted_exponent: float
    fitted_constant: float
    r_squared: float
    verdict: str
    inputs: list
    threshold: float
    log_corrected_exponent: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def loglog_fit(x, y):
    """Least squares ``log y = c + s log x``; returns ``(s, exp(c), r^2)``."""
    lx = np.log(np.asarray(x, dtype=np.float64))
    ly = np.log(np.asarray(y, dtype=np.float64))
    if lx.size < 2 or np.ptp(lx) == 0:
        return math.nan, math.nan, 0.0
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    ss_res = float(resid @ resid)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    if ss_tot <= 1e-24 * max(1.0, float(ly @ ly)):
        r2 = 1.0 if ss_res <= 1e-20 * max(1.0, float(ly @ ly)) else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return float(slope), float(math.exp(intercept)), r2


def verdict(slope: float, r2: float, threshold: float, min_r2: float = DEFAULT_MIN_R2) -> str:
    if not math.isfinite(slope) or r2 < min_r2:
        return "inconclusive"
    return "consistent" if slope <= threshold else "inconsistent"


def _rows(data):
    rows = [tuple(float(v) for v in row) for row in data]
    if len(rows) < 4:
        raise PreconditionError("a regime fit needs at least 4 data rows")
    for i, (n, r, v) in enumerate(rows):
        if not v > 0:
            raise PreconditionError(f"row {i}: variance must be positive, got {v!r}")
        if not (n > 0 and r > 0):
            raise PreconditionError(f"row {i}: N and R (or t) must be positive")
    return rows


def fit_regime(data, regime: str, dim: int | None = None, delta: float = DEFAULT_DELTA,
               min_r2: float = DEFAULT_MIN_R2) -> RegimeReport:
    """Fit rows ``(N, R_or_t, variance)`` for one regime.

    * large: slope of log V against log N (R fixed); consistent if ``<= 1 - delta``.
    * small: slope of log V against log(N Vol(B(R_N))); consistent if ``<= 1 - delta``.
    * threshold: slope of log V against log t (N fixed); consistent if
      ``<= (d - 1) + delta``.  The slope of ``V / ln t`` is reported as the
      log-corrected exponent (rows with ``t > 1``).
    """
    if regime not in REGIMES:
        raise PreconditionError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    rows = _rows(data)
    N = np.array([r[0] for r in rows])
    x = np.array([r[1] for r in rows])
    v = np.array([r[2] for r in rows])
    corrected = None
    if regime == "large":
        slope, const, r2 = loglog_fit(N, v)
        threshold = 1.0 - delta
    elif regime == "small":
        if dim is None:
            raise PreconditionError("the small-ball regime needs the dimension")
        slope, const, r2 = loglog_fit(N * ball_volume(dim, x), v)
        threshold = 1.0 - delta
    else:
        if dim is None:
            raise PreconditionError("the threshold regime needs the dimension")
        slope, const, r2 = loglog_fit(x, v)
        threshold = (dim - 1) + delta
        big = x > 1.0
        if big.sum() >= 2:
            corrected = loglog_fit(x[big], v[big] / np.log(x[big]))[0]
    return RegimeReport(regime, slope, const, r2, verdict(slope, r2, threshold, min_r2),
                        [list(r) for r in rows], threshold, corrected, {"delta": delta, "min_r2": min_r2})
