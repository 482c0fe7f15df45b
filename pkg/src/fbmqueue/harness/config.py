"""Experiment configuration: a single JSON document with a closed key set.

Example::

    {
      "experiment": "conditional",
      "model": {"hurst": 0.5, "drain": 1.0},
      "regime": {"kind": "small_bm", "value": 0.3},
      "windows": {"T1": 0.0, "T2": 1.0, "x": 0.2},
      "u_list": [2, 3, 4],
      "mc": {"reps": 100000, "step": 0.001953125, "seed": 7},
      "outputs": {"csv_path": "prop1.csv", "json_path": "prop1.json"}
    }

For the Brownian regimes (``small_bm``, ``large_bm``) the windows are the
absolute times ``T1 < T2`` and duration ``x``. For the fBm regimes they are
the scaled limits ``T1, T2, T3, x, y``, multiplied by v(u) at each level.
Unknown keys anywhere are errors.
"""

import json
import math
import numbers
from dataclasses import dataclass, field

from ..asymptotics import FluctuationRegime, RegimeKind, SojournWindows
from ..errors import ConfigError
from ..workload import QueueParams

EXPERIMENTS = ("conditional", "piterbarg", "strong_piterbarg")

_TOP_KEYS = {"name", "experiment", "model", "regime", "windows", "u_list", "mc", "outputs", "piterbarg"}
_MODEL_KEYS = {"hurst", "drain"}
_REGIME_KEYS = {"kind", "value"}
_WINDOW_KEYS = {"T1", "T2", "T3", "x", "y"}
_MC_KEYS = {
    "reps", "step", "horizon", "seed", "workers", "min_accepted",
    "constant_reps", "constant_step",
}
_OUTPUT_KEYS = {"csv_path", "json_path"}
_PITERBARG_KEYS = {"window_scale", "window_exponent"}


@dataclass(frozen=True)
class MCSettings:
    reps: int
    seed: int
    step: float | None = None
    horizon: float | None = None
    workers: int = 1
    min_accepted: int = 100
    constant_reps: int | None = None
    constant_step: float | None = None


@dataclass(frozen=True)
class BmWindows:
    """Absolute observation window ``[T1, T2]`` and sojourn duration ``x``."""

    T1: float
    T2: float
    x: float


@dataclass(frozen=True)
class PiterbargSettings:
    """Window ``T(u) = window_scale * u ** window_exponent``."""

    window_scale: float = 1.0
    window_exponent: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    model: QueueParams
    u_list: tuple
    mc: MCSettings
    experiment: str = "conditional"
    regime: FluctuationRegime | None = None
    windows: SojournWindows | BmWindows | None = None
    piterbarg: PiterbargSettings | None = None
    csv_path: str | None = None
    json_path: str | None = None
    name: str = ""
    raw: dict = field(default_factory=dict, compare=False)

    def with_overrides(self, reps=None, seed=None, step=None, workers=None, out=None):
        """Copy with CLI-level overrides applied (``None`` keeps the current value)."""
        raw = json.loads(json.dumps(self.raw))
        mc = raw.setdefault("mc", {})
        for key, val in (("reps", reps), ("seed", seed), ("step", step), ("workers", workers)):
            if val is not None:
                mc[key] = val
        if out is not None:
            stem = self.name or "experiment"
            raw["outputs"] = {"csv_path": f"{out}/{stem}.csv", "json_path": f"{out}/{stem}.json"}
        return parse_config(raw)


def _line_of(text, key):
    if not text:
        return None
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


class _Reader:
    def __init__(self, text):
        self.text = text

    def fail(self, msg, fieldname):
        leaf = fieldname.rsplit(".", 1)[-1] if fieldname else None
        raise ConfigError(msg, field=fieldname, line=_line_of(self.text, leaf) if leaf else None)

    def section(self, data, key, allowed, required=True):
        if key not in data:
            if required:
                self.fail("missing section", key)
            return None
        sec = data[key]
        if not isinstance(sec, dict):
            self.fail("must be an object", key)
        unknown = set(sec) - allowed
        if unknown:
            bad = sorted(unknown)[0]
            self.fail(f"unknown key (allowed: {', '.join(sorted(allowed))})", f"{key}.{bad}")
        return sec

    def number(self, sec, key, prefix, required=True, default=None, positive=False, nonneg=False):
        name = f"{prefix}.{key}"
        if key not in sec or sec[key] is None:
            if required:
                self.fail("missing value", name)
            return default
        val = sec[key]
        if isinstance(val, bool) or not isinstance(val, numbers.Real) or not math.isfinite(val):
            self.fail(f"must be a finite number, got {val!r}", name)
        if positive and val <= 0:
            self.fail(f"must be > 0, got {val}", name)
        if nonneg and val < 0:
            self.fail(f"must be >= 0, got {val}", name)
        return float(val)

    def integer(self, sec, key, prefix, required=True, default=None, minimum=None):
        name = f"{prefix}.{key}"
        if key not in sec or sec[key] is None:
            if required:
                self.fail("missing value", name)
            return default
        val = sec[key]
        if isinstance(val, bool) or not isinstance(val, numbers.Integral):
            self.fail(f"must be an integer, got {val!r}", name)
        if minimum is not None and val < minimum:
            self.fail(f"must be >= {minimum}, got {val}", name)
        return int(val)


def parse_config(data, text=None):
    """Validate a decoded config document and build an :class:`ExperimentConfig`."""
    r = _Reader(text)
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        r.fail("unknown top-level key", sorted(unknown)[0])

    experiment = data.get("experiment", "conditional")
    if experiment not in EXPERIMENTS:
        r.fail(f"must be one of {', '.join(EXPERIMENTS)}", "experiment")
    name = data.get("name", "")
    if not isinstance(name, str):
        r.fail("must be a string", "name")

    m = r.section(data, "model", _MODEL_KEYS)
    hurst = r.number(m, "hurst", "model")
    drain = r.number(m, "drain", "model", positive=True)
    if not 0 < hurst < 1:
        r.fail("must lie in (0, 1)", "model.hurst")
    model = QueueParams(hurst, drain)

    u_list = data.get("u_list")
    if not isinstance(u_list, list) or not u_list:
        r.fail("must be a nonempty list of levels", "u_list")
    for u in u_list:
        if isinstance(u, bool) or not isinstance(u, numbers.Real) or not math.isfinite(u) or u <= 0:
            r.fail(f"levels must be positive numbers, got {u!r}", "u_list")
    if any(b <= a for a, b in zip(u_list, u_list[1:])):
        r.fail("levels must be strictly ascending", "u_list")

    mcs = r.section(data, "mc", _MC_KEYS)
    mc = MCSettings(
        reps=r.integer(mcs, "reps", "mc", minimum=1),
        seed=r.integer(mcs, "seed", "mc", minimum=0),
        step=r.number(mcs, "step", "mc", required=False, positive=True),
        horizon=r.number(mcs, "horizon", "mc", required=False, positive=True),
        workers=r.integer(mcs, "workers", "mc", required=False, default=1, minimum=1),
        min_accepted=r.integer(mcs, "min_accepted", "mc", required=False, default=100, minimum=1),
        constant_reps=r.integer(mcs, "constant_reps", "mc", required=False, minimum=1),
        constant_step=r.number(mcs, "constant_step", "mc", required=False, positive=True),
    )
    if mc.seed >= 2**64:
        r.fail("must be below 2**64", "mc.seed")

    outs = r.section(data, "outputs", _OUTPUT_KEYS, required=False) or {}
    for key in _OUTPUT_KEYS:
        if key in outs and not isinstance(outs[key], str):
            r.fail("must be a path string", f"outputs.{key}")

    regime = windows = piterbarg = None
    if experiment == "conditional":
        rs = r.section(data, "regime", _REGIME_KEYS)
        kind = rs.get("kind")
        try:
            kind = RegimeKind(kind)
        except ValueError:
            r.fail(f"must be one of {', '.join(k.value for k in RegimeKind)}", "regime.kind")
        value = r.number(rs, "value", "regime")
        try:
            regime = FluctuationRegime(kind, value)
        except ValueError as exc:
            r.fail(str(exc), "regime.value")
        ws = r.section(data, "windows", _WINDOW_KEYS)
        if regime.is_brownian:
            if hurst != 0.5:
                r.fail("Brownian regimes need hurst = 0.5", "model.hurst")
            for extra in ("T3", "y"):
                if extra in ws:
                    r.fail("not used by Brownian regimes", f"windows.{extra}")
            T1 = r.number(ws, "T1", "windows", nonneg=True)
            T2 = r.number(ws, "T2", "windows", positive=True)
            x = r.number(ws, "x", "windows", required=False, default=0.0, nonneg=True)
            if T2 <= T1:
                r.fail("must exceed T1", "windows.T2")
            windows = BmWindows(T1, T2, x)
        else:
            vals = {k: r.number(ws, k, "windows", required=k in ("T1", "T2", "T3"),
                                default=0.0, nonneg=True) for k in _WINDOW_KEYS}
            try:
                windows = SojournWindows(**vals)
            except ValueError as exc:
                r.fail(str(exc), "windows")
    else:
        for key in ("regime", "windows"):
            if key in data:
                r.fail(f"not used by the {experiment} experiment", key)
        ps = r.section(data, "piterbarg", _PITERBARG_KEYS, required=False) or {}
        piterbarg = PiterbargSettings(
            r.number(ps, "window_scale", "piterbarg", required=False, default=1.0, positive=True),
            r.number(ps, "window_exponent", "piterbarg", required=False, default=0.0),
        )

    return ExperimentConfig(
        model=model,
        u_list=tuple(float(u) for u in u_list),
        mc=mc,
        experiment=experiment,
        regime=regime,
        windows=windows,
        piterbarg=piterbarg,
        csv_path=outs.get("csv_path"),
        json_path=outs.get("json_path"),
        name=name,
        raw=json.loads(json.dumps(data)),
    )


def load_config(path):
    """Read and validate a JSON config file; errors carry line and field."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno) from exc
    return parse_config(data, text)
