"""Deterministic asymptotic formulas for the fBm-fed queue.

Nothing here simulates. Functions that need a Pickands or Berman-type
constant take a :class:`~fbmqueue.estimate.MonteCarloEstimate` and verify
that it was produced for matching parameters.
"""

import enum
import math
import warnings
from dataclasses import dataclass

from scipy.special import erfc

from ._validation import check_finite, check_hurst, check_nonnegative, check_positive
from .errors import SpecMismatchError
from .estimate import MonteCarloEstimate, require_params

_SQRT2 = math.sqrt(2.0)


def normal_cdf(z):
    """Standard normal distribution function, via erfc for tail accuracy."""
    return 0.5 * float(erfc(-z / _SQRT2))


def normal_tail(z):
    """Psi(z) = 1 - Phi(z)."""
    return 0.5 * float(erfc(z / _SQRT2))


@dataclass(frozen=True)
class DerivedConstants:
    A: float
    B_const: float
    t_star: float
    delta_u: float
    v_u: float

    def as_dict(self):
        return {
            "A": self.A,
            "B": self.B_const,
            "t_star": self.t_star,
            "delta_u": self.delta_u,
            "v_u": self.v_u,
        }


def derived_constants(H, c, u):
    """Constants A, B, t*, Delta(u) and v(u) = u Delta(u) for given (H, c, u)."""
    H = check_hurst(H)
    c = check_positive(c, "c")
    u = check_positive(u, "u")
    t_star = H / (c * (1.0 - H))
    A = t_star**-H / (1.0 - H)
    B = t_star ** (-H - 2.0) * H
    delta = 2.0 ** (1.0 / (2.0 * H)) * t_star * A ** (-1.0 / H) * u ** (-(1.0 - H) / H)
    return DerivedConstants(A, B, t_star, delta, u * delta)


@dataclass(frozen=True)
class SojournWindows:
    """Scaled window limits and sojourn thresholds.

    The conditioning window is ``[0, T1]`` with threshold ``x``; the target
    window is ``[T2, T3]`` with threshold ``y``. ``T1`` and ``T2`` may be in
    either order.
    """

    T1: float
    T2: float
    T3: float
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        check_positive(self.T1, "T1")
        check_nonnegative(self.T2, "T2")
        check_finite(self.T3, "T3")
        check_nonnegative(self.x, "x")
        check_nonnegative(self.y, "y")
        if self.T3 <= self.T2:
            raise ValueError(f"need T3 > T2, got T2={self.T2}, T3={self.T3}")
        if self.x >= self.T1:
            raise ValueError(f"need x < T1, got x={self.x}, T1={self.T1}")
        if self.y >= self.T3 - self.T2:
            raise ValueError(f"need y < T3 - T2, got y={self.y}")

    def scaled(self, factor):
        f = check_positive(factor, "factor")
        return SojournWindows(self.T1 * f, self.T2 * f, self.T3 * f, self.x * f, self.y * f)


class RegimeKind(enum.Enum):
    SMALL_BM = "small_bm"
    LARGE_BM = "large_bm"
    SMALL_FBM = "small_fbm"
    LARGE_FBM = "large_fbm"


@dataclass(frozen=True)
class FluctuationRegime:
    """How the target level omega(u) departs from u.

    ``value`` is ``w`` for SMALL_BM, ``lambda`` for SMALL_FBM and ``a`` for
    the two LARGE kinds.
    """

    kind: RegimeKind
    value: float

    def __post_init__(self):
        object.__setattr__(self, "kind", RegimeKind(self.kind))
        check_finite(self.value, "regime value")
        if self.kind in (RegimeKind.LARGE_BM, RegimeKind.LARGE_FBM):
            if self.value <= -1:
                raise ValueError(f"a must exceed -1, got {self.value}")
            if self.value == 0:
                raise ValueError("a = 0 is not a large-fluctuation regime")

    @property
    def is_brownian(self):
        return self.kind in (RegimeKind.SMALL_BM, RegimeKind.LARGE_BM)

    def tau(self, H, c):
        """Shift coefficient lambda / (A^2 (1 - H)) of the small fBm regime."""
        if self.kind is not RegimeKind.SMALL_FBM:
            raise ValueError("tau is defined for SMALL_FBM only")
        A = derived_constants(H, c, 1.0).A
        return self.value / (A * A * (1.0 - H))

    def a_tilde(self, H):
        """(1 + a)^((1 - 2H)/H) of the large fBm regime."""
        if self.kind is not RegimeKind.LARGE_FBM:
            raise ValueError("a_tilde is defined for LARGE_FBM only")
        return (1.0 + self.value) ** ((1.0 - 2.0 * H) / H)

    def omega(self, u, H, c):
        if self.kind is RegimeKind.SMALL_BM:
            return u + self.value
        if self.kind is RegimeKind.SMALL_FBM:
            return u + self.tau(H, c) * u ** (2.0 * H - 1.0)
        return (1.0 + self.value) * u


def _pickands_value(pickands, H):
    if isinstance(pickands, MonteCarloEstimate):
        require_params(pickands, "pickands", H=H)
        return pickands.value
    return check_positive(pickands, "pickands")


def _prefactor(H, c, u):
    k = derived_constants(H, c, u)
    return (
        math.sqrt(2.0 * math.pi)
        / math.sqrt(k.A * k.B_const)
        / (u ** (1.0 - H) * k.delta_u)
        * normal_tail(k.A * u ** (1.0 - H))
    )


def marginal_sojourn_asymptotic(H, c, u, windows, barB_x, pickands):
    """Approximation of P(sojourn over [0, T1(u)] above u exceeds x v(u)).

    Parameters
    ----------
    barB_x : MonteCarloEstimate
        Single Berman-type constant for ``(H, windows.T1, windows.x)``.
    pickands : float or MonteCarloEstimate
        Pickands constant H_{2H}; pass ``1.0`` for H = 1/2, where it is exact.
    """
    require_params(barB_x, "bar_single", H=H, T1=windows.T1, x=windows.x)
    return _pickands_value(pickands, H) * barB_x.value * _prefactor(H, c, u)


def joint_sojourn_asymptotic(H, c, u, windows, lam, barB_xy, pickands):
    """Approximation of the joint sojourn probability with target level u + tau u^(2H-1)."""
    require_params(
        barB_xy, "bar_joint", H=H, T1=windows.T1, lam=lam, T2=windows.T2,
        T3=windows.T3, x=windows.x, y=windows.y,
    )
    return _pickands_value(pickands, H) * barB_xy.value * _prefactor(H, c, u)


def thm1_limit(barB_xy, barB_x):
    """Limit of the conditional sojourn probability in the small-fluctuation regime."""
    if barB_xy.kind != "bar_joint" or barB_x.kind != "bar_single":
        raise SpecMismatchError("need a joint and a single Berman-type estimate")
    for key in ("H", "T1", "x"):
        if not math.isclose(barB_xy.params[key], barB_x.params[key], rel_tol=1e-12):
            raise SpecMismatchError(f"estimates disagree on {key}")
    if barB_x.value == 0:
        raise ZeroDivisionError("denominator constant is 0 (x >= T1)")
    return barB_xy.value / barB_x.value


def thm1_limit_error(barB_xy, barB_x):
    """Delta-method standard error of :func:`thm1_limit` for independent estimates."""
    r = thm1_limit(barB_xy, barB_x)
    return abs(r) * math.hypot(barB_xy.relative_error() if barB_xy.value else 0.0,
                               barB_x.relative_error())


@dataclass(frozen=True)
class Envelope:
    decay: float
    lower: float
    upper: float
    log_rate: float
    lower_se: float = 0.0
    upper_se: float = 0.0

    @property
    def consistent(self):
        """lower <= upper up to three combined standard errors."""
        return self.lower - self.upper <= 3.0 * math.hypot(self.lower_se, self.upper_se)


def large_fluctuation_log_rate(H, c, a):
    """-A^2 ((1 + a)^(2 - 2H) - 1) / 2."""
    A = derived_constants(H, c, 1.0).A
    return -0.5 * A * A * ((1.0 + a) ** (2.0 - 2.0 * H) - 1.0)


def thm3_constant_specs(H, a, windows):
    """Parameters of the three constants the large-fluctuation envelope needs.

    Returns a dict with ``barB_x`` (single, unscaled), ``barB_ay_upper``
    (single on an a-tilde scaled window of length T3 - T2) and
    ``barB_joint_lower`` (joint on a-tilde scaled windows with lambda = 0).
    """
    at = (1.0 + a) ** ((1.0 - 2.0 * H) / H)
    w = windows
    return {
        "a_tilde": at,
        "barB_x": {"H": H, "T1": w.T1, "x": w.x},
        "barB_ay_upper": {"H": H, "T1": at * (w.T3 - w.T2), "x": at * w.y},
        "barB_joint_lower": {
            "H": H, "T1": at * w.T1, "lam": 0.0, "T2": at * w.T2, "T3": at * w.T3,
            "x": at * w.x, "y": at * w.y,
        },
    }


def thm3_envelope(H, c, u, a, windows, estimates=None):
    """Decay factor and constant bounds of the large-fluctuation regime.

    For ``a`` in (-1, 0) the conditional probability tends to 1 and the
    envelope collapses to ``decay = lower = upper = 1``. For ``a > 0`` the
    bounds are ``a~^(1-H) B(a~ y; a~(T3-T2)) / B(x; T1)`` (upper) and
    ``a~^(1-H) B(a~x, a~y; a~T1, 0, a~T2, a~T3) / B(x; T1)`` (lower).
    """
    H = check_hurst(H)
    a = check_finite(a, "a")
    if a <= -1 or a == 0:
        raise ValueError(f"a must lie in (-1, 0) or (0, inf), got {a}")
    if a < 0:
        return Envelope(1.0, 1.0, 1.0, 0.0)
    if estimates is None:
        raise ValueError("a > 0 needs the three constant estimates")
    specs = thm3_constant_specs(H, a, windows)
    bx = estimates["barB_x"]
    up = estimates["barB_ay_upper"]
    lo = estimates["barB_joint_lower"]
    require_params(bx, "bar_single", **specs["barB_x"])
    require_params(up, "bar_single", **specs["barB_ay_upper"])
    require_params(lo, "bar_joint", **specs["barB_joint_lower"])
    if bx.value == 0:
        raise ZeroDivisionError("denominator constant is 0")
    log_rate = large_fluctuation_log_rate(H, c, a)
    decay = math.exp(log_rate * u ** (2.0 - 2.0 * H))
    factor = specs["a_tilde"] ** (1.0 - H) / bx.value
    upper = factor * up.value
    lower = factor * lo.value
    rel_x = bx.relative_error()
    upper_se = abs(upper) * math.hypot(up.relative_error() if up.value else 0.0, rel_x)
    lower_se = abs(lower) * math.hypot(lo.relative_error() if lo.value else 0.0, rel_x)
    env = Envelope(decay, lower, upper, log_rate, lower_se, upper_se)
    if not env.consistent:
        warnings.warn(
            f"lower bound {lower:.4g} exceeds upper bound {upper:.4g} beyond MC error",
            RuntimeWarning,
            stacklevel=2,
        )
    return env
