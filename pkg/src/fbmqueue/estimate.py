"""Monte Carlo estimate record shared by the estimators and the harness."""

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Point estimate with its standard error and provenance.

    ``params`` holds the exact parameters the estimate was produced for; the
    asymptotic formulas compare it structurally before combining estimates.
    """

    value: float
    std_error: float
    reps: int
    seed: int
    step: float
    kind: str = ""
    params: dict = field(default_factory=dict)
    notes: tuple = ()

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")

    @classmethod
    def from_samples(cls, samples, *, seed, step, kind, params, notes=(), scale=1.0):
        """Sample mean and standard error of ``scale * samples``."""
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        mean = float(samples.mean()) * scale
        if n > 1:
            se = float(samples.std(ddof=1)) / math.sqrt(n) * abs(scale)
        else:
            se = 0.0
        return cls(mean, se, n, seed, step, kind, dict(params), tuple(notes))

    def relative_error(self):
        return self.std_error / abs(self.value) if self.value else math.inf

    def to_record(self):
        return {
            "constant_kind": self.kind,
            "params": _jsonable(self.params),
            "value": self.value,
            "std_error": self.std_error,
            "reps": self.reps,
            "step": self.step,
            "seed": self.seed,
            "notes": list(self.notes),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_record(), **kwargs)


def batch_means_se(samples, n_batches=20):
    """Standard error from the spread of ``n_batches`` consecutive batch means."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size // n_batches * n_batches
    if n < 2 * n_batches:
        return math.nan
    means = samples[:n].reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1)) / math.sqrt(n_batches)


def _jsonable(params):
    out = {}
    for key, val in params.items():
        if isinstance(val, float) and math.isinf(val):
            out[key] = "inf" if val > 0 else "-inf"
        else:
            out[key] = val
    return out


def require_params(estimate, kind, **expected):
    """Raise :class:`SpecMismatchError` unless ``estimate`` was made for ``expected``."""
    from .errors import SpecMismatchError

    if estimate.kind != kind:
        raise SpecMismatchError(f"expected a {kind} estimate, got {estimate.kind!r}")
    for key, val in expected.items():
        got = estimate.params.get(key)
        same = got is not None and (
            got == val or math.isclose(got, val, rel_tol=1e-12, abs_tol=1e-12)
        )
        if not same:
            raise SpecMismatchError(f"estimate has {key}={got}, formula needs {key}={val}")
