"""Named experiment configurations.

Levels are chosen so the conditioning probability stays at or above about
1e-3, which keeps plain rejection sampling feasible; the asymptotic claims
are then read as trends across the listed levels.
"""

import copy

from .config import parse_config

_BM_WINDOWS = {"T1": 0.0, "T2": 1.0, "x": 0.2}
_FBM_WINDOWS = {"T1": 1.0, "T2": 0.5, "T3": 1.5, "x": 0.2, "y": 0.3}

PRESETS = {
    "prop1-bm": {
        "model": {"hurst": 0.5, "drain": 1.0},
        "regime": {"kind": "small_bm", "value": 0.3},
        "windows": _BM_WINDOWS,
        "u_list": [2.0, 3.0, 4.0],
        "mc": {"reps": 100000, "step": 2**-8, "seed": 2024},
    },
    "prop2-bm-neg": {
        "model": {"hurst": 0.5, "drain": 1.0},
        "regime": {"kind": "large_bm", "value": -0.5},
        "windows": _BM_WINDOWS,
        "u_list": [1.0, 2.0, 3.0, 4.0],
        "mc": {"reps": 50000, "step": 2**-8, "seed": 2024},
    },
    "prop2-bm-pos": {
        "model": {"hurst": 0.5, "drain": 1.0},
        "regime": {"kind": "large_bm", "value": 1.0},
        "windows": _BM_WINDOWS,
        "u_list": [1.0, 2.0, 3.0],
        "mc": {"reps": 200000, "step": 2**-8, "seed": 2024},
    },
    "thm1-bm": {
        "model": {"hurst": 0.5, "drain": 1.0},
        "regime": {"kind": "small_fbm", "value": 1.0},
        "windows": _FBM_WINDOWS,
        "u_list": [2.0, 2.5, 3.0],
        "mc": {"reps": 200000, "step": 2**-7, "horizon": 12.0, "seed": 2024,
               "constant_reps": 100000},
    },
    "thm1-fbm": {
        "model": {"hurst": 0.7, "drain": 1.0},
        "regime": {"kind": "small_fbm", "value": 0.0},
        "windows": _FBM_WINDOWS,
        "u_list": [1.5, 2.0, 2.5],
        "mc": {"reps": 50000, "step": 2**-6, "seed": 2024, "constant_reps": 50000},
    },
    "thm3-neg": {
        "model": {"hurst": 0.5, "drain": 1.0},
        "regime": {"kind": "large_fbm", "value": -0.5},
        "windows": _FBM_WINDOWS,
        "u_list": [2.0, 3.0],
        "mc": {"reps": 100000, "step": 2**-7, "horizon": 12.0, "seed": 2024},
    },
    "thm3-pos": {
        "model": {"hurst": 0.5, "drain": 1.0},
        "regime": {"kind": "large_fbm", "value": 0.5},
        "windows": _FBM_WINDOWS,
        "u_list": [1.5, 2.0, 2.5],
        "mc": {"reps": 200000, "step": 2**-7, "horizon": 12.0, "seed": 2024,
               "constant_reps": 100000},
    },
    "piterbarg-check": {
        "experiment": "piterbarg",
        "model": {"hurst": 0.7, "drain": 1.0},
        "u_list": [2.0, 3.0, 4.0],
        "mc": {"reps": 20000, "step": 2**-6, "seed": 2024},
        "piterbarg": {"window_scale": 0.5, "window_exponent": 0.25},
    },
    "strong-piterbarg-check": {
        "experiment": "strong_piterbarg",
        "model": {"hurst": 0.7, "drain": 1.0},
        "u_list": [2.0, 3.0, 4.0],
        "mc": {"reps": 20000, "step": 2**-6, "seed": 2024},
        "piterbarg": {"window_scale": 0.5, "window_exponent": 0.25},
    },
}


def preset_names():
    return sorted(PRESETS)


def preset_document(name):
    """Deep copy of the raw config document of preset ``name``, with its name set."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
    doc = copy.deepcopy(PRESETS[name])
    doc["name"] = name
    return doc


def load_preset(name):
    return parse_config(preset_document(name))
