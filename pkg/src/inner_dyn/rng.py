"""Counter-based random numbers.

Every draw is a pure function of ``(seed, trial, step)`` through the
SplitMix64 finaliser, so results do not depend on how trials are split
across threads or blocks. The compiled kernel implements the same mixing.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SEED_SALT = np.uint64(0x632BE59BD9B4E019)
_TRIAL_MUL = np.uint64(0xD1B54A32D192ED03)
INIT_STREAM = np.uint64(0x8CB92BA72F3D8DD7)
_S30, _S27, _S31, _S11 = (np.uint64(k) for k in (30, 27, 31, 11))
_UNIT = 2.0**-53


def mix64(z):
    """SplitMix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _as_u64(x):
    return np.asarray(x, dtype=np.int64).astype(np.uint64) if np.ndim(x) else np.array([int(x) % 2**64], dtype=np.uint64)


def trial_keys(seed: int, trials) -> np.ndarray:
    """Per-trial stream keys for trial indices ``trials``."""
    base = mix64(np.array([int(seed) % 2**64], dtype=np.uint64) + _SEED_SALT)
    idx = np.asarray(trials, dtype=np.int64).astype(np.uint64)
    return mix64(base ^ (idx * _TRIAL_MUL + GOLDEN))


def to_unit(bits) -> np.ndarray:
    """Map uint64 bits to doubles in ``[0, 1)``."""
    return (np.asarray(bits, dtype=np.uint64) >> _S11).astype(np.float64) * _UNIT


def step_uniform(keys: np.ndarray, step: int) -> np.ndarray:
    """Uniform draw number ``step`` (0-based) of each stream."""
    incr = np.uint64(((step + 1) * int(GOLDEN)) % 2**64)
    return to_unit(mix64(keys + incr))


def init_uniform(keys: np.ndarray) -> np.ndarray:
    """Uniform draw reserved for initial conditions."""
    return to_unit(mix64(keys ^ INIT_STREAM))


def uniforms(seed: int, n: int, start: int = 0) -> np.ndarray:
    """``n`` initial-condition uniforms for trials ``start .. start+n-1``."""
    return init_uniform(trial_keys(seed, np.arange(start, start + n)))
