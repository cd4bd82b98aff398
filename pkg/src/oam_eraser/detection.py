"""Projective detection and photon-counting statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import DomainError
from .mode_core import ModeState

PROB_SLACK = 1e-9

# Detector ids used in count streams and CSV output.
DETECTOR_IDS = {"P3": 3, "P4": 4}
_WHICH_PATH_MODE = {"P3": -1, "P4": 1}


@dataclass(frozen=True)
class ProjectorSpec:
    """Fiber-coupled projection onto ``target_mode`` with misalignment crosstalk.

    The detector projects onto ``(|target> + eps |other>) / sqrt(1 + eps^2)``.
    When ``other_mode`` is omitted it is ``|0>`` for an OAM target, and for a
    ``|0>`` target it is the which-path mode carried by that port
    (``|-1>`` at P3, ``|+1>`` at P4).
    """

    target_mode: int = 0
    crosstalk_epsilon: float = 0.0
    port: str = "P3"
    other_mode: int | None = None

    def __post_init__(self):
        if not 0 <= self.crosstalk_epsilon < 1:
            raise DomainError(f"crosstalk epsilon must lie in [0, 1), got {self.crosstalk_epsilon}")
        if self.port not in DETECTOR_IDS:
            raise DomainError(f"port must be one of {sorted(DETECTOR_IDS)}, got {self.port!r}")
        if self.other_mode is not None and self.other_mode == self.target_mode:
            raise DomainError("crosstalk mode must differ from the target mode")

    @property
    def crosstalk_mode(self) -> int:
        if self.other_mode is not None:
            return self.other_mode
        return 0 if self.target_mode != 0 else _WHICH_PATH_MODE[self.port]

    def vector(self, L: int) -> np.ndarray:
        v = np.zeros(2 * L + 1, dtype=complex)
        for l, a in ((self.target_mode, 1.0), (self.crosstalk_mode, self.crosstalk_epsilon)):
            if abs(l) > L:
                raise DomainError(f"projector mode {l} outside truncation L={L}")
            v[l + L] += a
        return v / math.sqrt(1 + self.crosstalk_epsilon ** 2)


def projection_probability(state: ModeState, proj: ProjectorSpec) -> float:
    """``|<v|state>|^2``; bounded by the branch weight ``||state||^2``."""
    return float(abs(np.vdot(proj.vector(state.L), state.amplitudes)) ** 2)


@dataclass(frozen=True)
class CountingConfig:
    """Photon-counting parameters.

    ``bin_duration`` is one counting bin in seconds; each phase point
    accumulates ``n_bins_per_phase`` bins. ``dark_rate`` (counts/s) and
    ``efficiency`` default to an ideal detector.
    """

    photon_rate: float = 1e4
    bin_duration: float = 0.1
    n_bins_per_phase: int = 10
    rng_seed: int = 20240608
    coincidence_window: float = 1.59e-6
    dark_rate: float = 0.0
    efficiency: float = 1.0

    def __post_init__(self):
        if self.photon_rate <= 0:
            raise DomainError("photon_rate must be > 0")
        if self.bin_duration <= 0:
            raise DomainError("bin_duration must be > 0")
        if self.n_bins_per_phase < 1:
            raise DomainError("n_bins_per_phase must be >= 1")
        if self.coincidence_window <= 0:
            raise DomainError("coincidence_window must be > 0")
        if self.dark_rate < 0:
            raise DomainError("dark_rate must be >= 0")
        if not 0 < self.efficiency <= 1:
            raise DomainError("efficiency must lie in (0, 1]")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise DomainError("rng_seed must be an unsigned 64-bit integer")

    @property
    def mean_arrivals_per_bin(self) -> float:
        return self.photon_rate * self.bin_duration

    def expected_counts(self, prob: float) -> float:
        """Mean count per phase point (all bins summed)."""
        per_bin = self.mean_arrivals_per_bin * prob * self.efficiency + self.dark_rate * self.bin_duration
        return per_bin * self.n_bins_per_phase


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (phase point, detector, ...) stream.

    Derived from the root seed and a counter key, so results do not depend
    on the order in which streams are evaluated.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _check_prob(prob: float) -> float:
    if not -PROB_SLACK <= prob <= 1 + PROB_SLACK:
        raise DomainError(f"detection probability {prob} outside [0, 1]")
    return min(max(prob, 0.0), 1.0)


def simulate_counts(prob: float, cfg: CountingConfig, stream=(0,), n_bins: int | None = None) -> np.ndarray:
    """Counts per bin: Poisson arrivals thinned by ``prob`` and the efficiency.

    Dark counts, if enabled, are an independent additive Poisson stream.
    """
    p = _check_prob(prob)
    n_bins = cfg.n_bins_per_phase if n_bins is None else n_bins
    rng = stream_rng(cfg.rng_seed, *stream)
    arrivals = rng.poisson(cfg.mean_arrivals_per_bin, size=n_bins)
    counts = rng.binomial(arrivals, p * cfg.efficiency)
    if cfg.dark_rate > 0:
        counts = counts + rng.poisson(cfg.dark_rate * cfg.bin_duration, size=n_bins)
    return counts.astype(np.int64)


def coincidence_rate(rate: float, window: float) -> float:
    """Probability of two or more Poisson arrivals in one counting window."""
    if rate <= 0 or window <= 0:
        raise DomainError("rate and window must be positive")
    mu = rate * window
    # regularized lower incomplete gamma P(2, mu) == P(N >= 2); stable for small mu
    return float(special.gammainc(2, mu))


def window_for_coincidence(rate: float, p_coinc: float) -> float:
    """Counting window at which :func:`coincidence_rate` equals ``p_coinc``."""
    if not 0 < p_coinc < 1:
        raise DomainError("coincidence probability must lie in (0, 1)")
    mu = optimize.brentq(lambda m: special.gammainc(2, m) - p_coinc, 1e-12, 1e3, xtol=1e-15, rtol=1e-14)
    return mu / rate


def photon_spacing(rate: float) -> float:
    """Mean free-space distance between successive photons, in metres."""
    if rate <= 0:
        raise DomainError("rate must be positive")
    return SPEED_OF_LIGHT / rate
