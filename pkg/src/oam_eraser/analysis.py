"""Phase sweeps, cosine fitting and visibility calibration."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import elements as el
from .detection import (DETECTOR_IDS, CountingConfig, ProjectorSpec, projection_probability,
                        simulate_counts)
from .errors import CalibrationError, DomainError, FitError
from .field_oracle import GridParams, balanced_offset
from .interferometer import MziConfig, apply_eraser, propagate
from .mode_core import DEFAULT_L

WHICH_PATH_L0 = "which_path_l0"
WHICH_PATH_L1 = "which_path_l1"
ERASED_IDEAL = "erased_ideal"
ERASED_CALIBRATED = "erased_calibrated"
SCENARIOS = (WHICH_PATH_L0, WHICH_PATH_L1, ERASED_IDEAL, ERASED_CALIBRATED)

REPORTED_VISIBILITY = 0.8435
REPORTED_VISIBILITY_ERR = 0.017
IDEAL_ERASER_OFFSET = 0.5


@dataclass(frozen=True)
class CosineFit:
    """``N = A cos(phi + phi0) + C0`` with least-squares standard errors."""

    A: float
    phi0: float
    C0: float
    residual: float
    se_A: float = 0.0
    se_C0: float = 0.0
    n: int = 0

    @property
    def visibility(self) -> float:
        return visibility(self)

    @property
    def visibility_se(self) -> float:
        if self.C0 <= 0:
            return math.inf
        v = abs(self.A) / self.C0
        rel = math.hypot(self.se_A / abs(self.A), self.se_C0 / self.C0) if self.A else self.se_A / self.C0
        return v * rel if self.A else rel

    def __call__(self, phi):
        return self.A * np.cos(np.asarray(phi) + self.phi0) + self.C0


def fit_cosine(phases, counts) -> CosineFit:
    """Linear least squares on ``a cos(phi) + b sin(phi) + C0``.

    Returns ``A = hypot(a, b)`` and ``phi0 = atan2(-b, a)``; closed form, no
    starting values.
    """
    phi = np.asarray(phases, dtype=float)
    y = np.asarray(counts, dtype=float)
    if phi.shape != y.shape or phi.ndim != 1:
        raise FitError("phases and counts must be 1-D arrays of equal length")
    if len(np.unique(phi)) < 5:
        raise FitError("need at least 5 distinct phases")
    if np.ptp(phi) <= math.pi:
        raise FitError("phases must span more than pi")
    X = np.column_stack([np.cos(phi), np.sin(phi), np.ones_like(phi)])
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < 3:
        raise FitError("rank-deficient cosine design")
    a, b, c0 = coef
    resid = y - X @ coef
    n = len(y)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    s2 = float(resid @ resid) / (n - 3) if n > 3 else 0.0
    cov = s2 * np.linalg.inv(X.T @ X)
    amp = math.hypot(a, b)
    if amp > 0:
        var_amp = (a * a * cov[0, 0] + b * b * cov[1, 1] + 2 * a * b * cov[0, 1]) / amp ** 2
    else:
        var_amp = cov[0, 0]
    return CosineFit(float(amp), float(math.atan2(-b, a)), float(c0), rms,
                     float(math.sqrt(max(var_amp, 0.0))), float(math.sqrt(cov[2, 2])), n)


def visibility(fit: CosineFit) -> float:
    if fit.C0 <= 0:
        raise DomainError(f"visibility undefined for offset C0={fit.C0}")
    return abs(fit.A) / fit.C0


def visibility_extrema(fit: CosineFit) -> float:
    """``(I_max - I_min)/(I_max + I_min)`` of the fitted curve, with ``I_min`` floored at 0."""
    if fit.C0 <= 0:
        raise DomainError(f"visibility undefined for offset C0={fit.C0}")
    i_max = fit.C0 + abs(fit.A)
    i_min = max(fit.C0 - abs(fit.A), 0.0)
    return (i_max - i_min) / (i_max + i_min)


def empirical_visibility(counts) -> float:
    """Raw min/max contrast; biased upward by noise."""
    y = np.asarray(counts, dtype=float)
    hi, lo = y.max(), y.min()
    return float((hi - lo) / (hi + lo)) if hi + lo > 0 else 0.0


def triangle_scan(n_points: int, phase_span: float, frequency: float = 0.2):
    """Sample times, normalized triangle drive, and the unfolded phase.

    One drive period covers the up and down ramp; the phase is reported
    unfolded, so it increases linearly over the whole period.
    """
    frac = np.arange(n_points) / n_points
    times = frac / frequency
    drive = 1.0 - np.abs(2.0 * frac - 1.0)
    return times, drive, phase_span * frac


@dataclass(frozen=True)
class SweepConfig:
    scenario: str = ERASED_IDEAL
    n_phase_points: int = 200
    phase_span: float = 4 * math.pi
    scan_frequency: float = 0.2
    counting: CountingConfig = field(default_factory=CountingConfig)
    crosstalk_epsilon: float = 0.0
    eraser_offset: float | None = None
    arm_a2_spp_order: int = 1
    L: int = DEFAULT_L
    oracle_grid: GridParams = field(default_factory=GridParams)
    projectors: tuple[ProjectorSpec, ProjectorSpec] | None = None
    analytic: bool = False

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise DomainError(f"unknown scenario {self.scenario!r}; valid: {', '.join(SCENARIOS)}")
        if self.n_phase_points < 20:
            raise DomainError("n_phase_points must be >= 20")
        if self.phase_span <= 0:
            raise DomainError("phase_span must be > 0")
        if self.eraser_offset is not None and self.eraser_offset < 0:
            raise DomainError("eraser_offset must be >= 0")


def scenario_setup(cfg: SweepConfig):
    """MZI configuration (phase unset) and the (C3, C4) projectors for a scenario."""
    eps = cfg.crosstalk_epsilon
    mzi = MziConfig(arm_a2_spp_order=cfg.arm_a2_spp_order, L=cfg.L, oracle_grid=cfg.oracle_grid)
    m = abs(cfg.arm_a2_spp_order) or 1
    if cfg.scenario == WHICH_PATH_L1:
        targets = (-m, m)
    else:
        targets = (0, 0)
    if cfg.scenario in (ERASED_IDEAL, ERASED_CALIBRATED):
        ideal = cfg.scenario == ERASED_IDEAL
        if cfg.eraser_offset is not None:
            d3 = d4 = cfg.eraser_offset
        elif ideal:
            d3 = d4 = IDEAL_ERASER_OFFSET
        else:
            d3 = balanced_offset(m, cfg.L, cfg.oracle_grid)
            d4 = balanced_offset(-m, cfg.L, cfg.oracle_grid)
        mzi = replace(mzi, use_ideal_eraser=ideal,
                      eraser_p3=el.ShiftedSppSpec(m, d3, el.RAISING),
                      eraser_p4=el.ShiftedSppSpec(m, d4, el.LOWERING))
    projectors = cfg.projectors or (ProjectorSpec(targets[0], eps, "P3"),
                                    ProjectorSpec(targets[1], eps, "P4"))
    return mzi, projectors


def output_states(cfg: SweepConfig, phases):
    """Post-eraser output branches for every phase in ``phases``."""
    mzi, _ = scenario_setup(cfg)
    outs = []
    for phi in phases:
        out = propagate(mzi.with_phase(phi))
        if mzi.eraser_p3 is not None or mzi.eraser_p4 is not None:
            out = apply_eraser(out, mzi)
        outs.append(out)
    return outs


def _probabilities(outs, projectors):
    p3 = np.array([projection_probability(o.psi_p3, projectors[0]) for o in outs])
    p4 = np.array([projection_probability(o.psi_p4, projectors[1]) for o in outs])
    return p3, p4


@dataclass
class SweepResult:
    scenario: str
    seed: int
    analytic: bool
    phases: np.ndarray
    drive: np.ndarray
    prob_c3: np.ndarray
    prob_c4: np.ndarray
    expected_c3: np.ndarray
    expected_c4: np.ndarray
    bins_c3: np.ndarray | None
    bins_c4: np.ndarray | None
    fit_c3: CosineFit
    fit_c4: CosineFit
    visibility_fitted: float
    visibility_empirical: float
    visibility_raw: float
    flatness_metric: float
    crosstalk_epsilon: float = 0.0
    eraser_offsets: tuple[float, float] | None = None

    @property
    def counts_c3(self) -> np.ndarray:
        return self.expected_c3 if self.bins_c3 is None else self.bins_c3.sum(axis=1)

    @property
    def counts_c4(self) -> np.ndarray:
        return self.expected_c4 if self.bins_c4 is None else self.bins_c4.sum(axis=1)

    @property
    def phase_difference(self) -> float:
        """Fringe phase offset between C3 and C4, wrapped to ``[0, 2 pi)``."""
        return float((self.fit_c4.phi0 - self.fit_c3.phi0) % (2 * math.pi))

    def fringe_significant(self, n_sigma: float = 3.0) -> bool:
        return any(f.A > n_sigma * f.se_A for f in (self.fit_c3, self.fit_c4))


def _flatness(y) -> float:
    y = np.asarray(y, dtype=float)
    mean = y.mean()
    return float(np.ptp(y) / mean) if mean > 0 else 0.0


def run_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Scan the arm phase, project at C3/C4 and (unless analytic) sample counts."""
    _, drive, phases = triangle_scan(cfg.n_phase_points, cfg.phase_span, cfg.scan_frequency)
    mzi, projectors = scenario_setup(cfg)
    outs = output_states(cfg, phases)
    p3, p4 = _probabilities(outs, projectors)
    cc = cfg.counting
    exp3 = np.array([cc.expected_counts(p) for p in p3])
    exp4 = np.array([cc.expected_counts(p) for p in p4])

    bins3 = bins4 = None
    if not cfg.analytic:
        sc = SCENARIOS.index(cfg.scenario)

        def draw(k):
            return (simulate_counts(p3[k], cc, stream=(sc, k, DETECTOR_IDS["P3"])),
                    simulate_counts(p4[k], cc, stream=(sc, k, DETECTOR_IDS["P4"])))

        idx = range(len(phases))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                drawn = list(pool.map(draw, idx))
        else:
            drawn = [draw(k) for k in idx]
        bins3 = np.array([d[0] for d in drawn])
        bins4 = np.array([d[1] for d in drawn])

    y3 = exp3 if bins3 is None else bins3.sum(axis=1)
    y4 = exp4 if bins4 is None else bins4.sum(axis=1)
    fit3, fit4 = fit_cosine(phases, y3), fit_cosine(phases, y4)
    erasers = None
    if mzi.eraser_p3 is not None:
        erasers = (mzi.eraser_p3.offset, mzi.eraser_p4.offset)
    return SweepResult(
        scenario=cfg.scenario,
        seed=cc.rng_seed,
        analytic=cfg.analytic,
        phases=phases,
        drive=drive,
        prob_c3=p3,
        prob_c4=p4,
        expected_c3=exp3,
        expected_c4=exp4,
        bins_c3=bins3,
        bins_c4=bins4,
        fit_c3=fit3,
        fit_c4=fit4,
        visibility_fitted=0.5 * (visibility(fit3) + visibility(fit4)),
        visibility_empirical=0.5 * (visibility_extrema(fit3) + visibility_extrema(fit4)),
        visibility_raw=0.5 * (empirical_visibility(y3) + empirical_visibility(y4)),
        flatness_metric=max(_flatness(y3), _flatness(y4)),
        crosstalk_epsilon=cfg.crosstalk_epsilon,
        eraser_offsets=erasers,
    )


def _noiseless_visibility(outs, phases, cfg: SweepConfig, eps: float) -> float:
    projectors = (ProjectorSpec(0, eps, "P3"), ProjectorSpec(0, eps, "P4"))
    p3, p4 = _probabilities(outs, projectors)
    return 0.5 * (visibility(fit_cosine(phases, p3)) + visibility(fit_cosine(phases, p4)))


def visibility_curve(cfg: SweepConfig, epsilons) -> np.ndarray:
    """Noiseless fitted visibility of ``cfg``'s scenario for each crosstalk value."""
    _, _, phases = triangle_scan(cfg.n_phase_points, cfg.phase_span, cfg.scan_frequency)
    outs = output_states(cfg, phases)
    return np.array([_noiseless_visibility(outs, phases, cfg, e) for e in epsilons])


@dataclass(frozen=True)
class VisibilityCalibration:
    epsilon: float
    visibility: float
    target: float
    tol: float
    bracket: tuple[float, float]
    iterations: int


def calibrate_to_visibility(target_V: float, tol: float, base: SweepConfig | None = None,
                            eps_range=(0.0, 0.9), xtol: float = 1e-10,
                            max_iter: int = 200) -> VisibilityCalibration:
    """Bisect the crosstalk ``eps`` until the erased-calibrated visibility hits ``target_V``.

    Visibility decreases monotonically with ``eps``. Bisection runs to
    ``xtol`` in ``eps``; ``tol`` is the acceptance band on the visibility.
    """
    if not 0 < target_V <= 1:
        raise DomainError(f"target visibility must lie in (0, 1], got {target_V}")
    base = base or SweepConfig()
    cfg = replace(base, scenario=ERASED_CALIBRATED, analytic=True, projectors=None)
    _, _, phases = triangle_scan(cfg.n_phase_points, cfg.phase_span, cfg.scan_frequency)
    outs = output_states(cfg, phases)

    def v_of(eps):
        return _noiseless_visibility(outs, phases, cfg, eps)

    lo, hi = eps_range
    v_lo, v_hi = v_of(lo), v_of(hi)
    if abs(target_V - v_lo) <= tol:
        # ideal alignment already meets the target: no crosstalk needed
        return VisibilityCalibration(lo, v_lo, target_V, tol, (lo, hi), 0)
    if target_V > v_lo:
        raise CalibrationError(
            f"target V={target_V} above the ideal-alignment visibility {v_lo:.6f} (eps={lo})",
            bracket=((lo, v_lo), (hi, v_hi)))
    if target_V < v_hi:
        raise CalibrationError(
            f"target V={target_V} unreachable: visibility spans [{v_hi:.6f}, {v_lo:.6f}] "
            f"for eps in [{lo}, {hi}]", bracket=((lo, v_lo), (hi, v_hi)))
    it = 0
    while hi - lo > xtol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if v_of(mid) > target_V:
            lo = mid
        else:
            hi = mid
        it += 1
    eps = 0.5 * (lo + hi)
    v = v_of(eps)
    if abs(v - target_V) > tol:
        raise CalibrationError(f"bisection ended at eps={eps:.6g} with V={v:.6f}, outside tol {tol}",
                               bracket=((lo, v_of(lo)), (hi, v_of(hi))))
    return VisibilityCalibration(eps, v, target_V, tol, (lo, hi), it)
