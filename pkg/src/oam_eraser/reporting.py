"""CSV and text writers for calibration and sweep outputs."""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

from .analysis import SweepResult
from .detection import DETECTOR_IDS
from .field_oracle import CalibrationReport


def fmt(x) -> str:
    """Shortest round-tripping float text; keeps outputs byte-identical across runs."""
    return repr(float(x))


def atomic_write(path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def calibration_csv(report: CalibrationReport) -> str:
    L = report.L
    ls = range(-L, L + 1)
    header = ["offset"]
    header += [f"absM_out{lo}_in{li}" for lo in ls for li in ls]
    header += [f"radial_leakage_in{li}" for li in ls]
    header += [f"window_leakage_in{li}" for li in ls]
    rows = []
    for pt in report.points:
        row = [fmt(pt.offset)]
        row += [fmt(abs(pt.element(lo, li))) for lo in ls for li in ls]
        row += [fmt(v) for v in pt.radial_leakage]
        row += [fmt(v) for v in pt.window_leakage]
        rows.append(row)
    return _csv(header, rows)


def calibration_summary_json(report: CalibrationReport) -> str:
    summary = report.summary()
    summary["n_offsets"] = len(report.points)
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def sweep_stem(result: SweepResult) -> str:
    mode = "analytic" if result.analytic else f"seed{result.seed}"
    return f"sweep_{result.scenario}_{mode}"


def counts_csv(result: SweepResult) -> str:
    """One row per (phase point, detector, counting bin)."""
    if result.bins_c3 is None:
        raise ValueError("analytic sweeps carry no sampled counts")
    rows = []
    for k, phi in enumerate(result.phases):
        for det, bins in (("P3", result.bins_c3), ("P4", result.bins_c4)):
            for b, n in enumerate(bins[k]):
                rows.append([fmt(phi), str(DETECTOR_IDS[det]), str(b), str(int(n)), str(result.seed)])
    return _csv(["phase_rad", "detector_id", "bin_index", "count", "seed"], rows)


def sweep_data_csv(result: SweepResult) -> str:
    header = ["phase_rad", "drive", "prob_c3", "prob_c4", "expected_c3", "expected_c4",
              "counts_c3", "counts_c4"]
    rows = []
    for k in range(len(result.phases)):
        rows.append([fmt(result.phases[k]), fmt(result.drive[k]),
                     fmt(result.prob_c3[k]), fmt(result.prob_c4[k]),
                     fmt(result.expected_c3[k]), fmt(result.expected_c4[k]),
                     fmt(result.counts_c3[k]), fmt(result.counts_c4[k])])
    return _csv(header, rows)


def sweep_summary(result: SweepResult, analytic_ref: SweepResult | None = None) -> str:
    lines = [
        f"scenario: {result.scenario}",
        f"mode: {'analytic' if result.analytic else 'monte_carlo'}",
        f"seed: {result.seed}",
        f"n_phase_points: {len(result.phases)}",
        f"crosstalk_epsilon: {result.crosstalk_epsilon:.6g}",
    ]
    if result.eraser_offsets is not None:
        lines.append(f"eraser_offsets_w0: P3={result.eraser_offsets[0]:.6f} P4={result.eraser_offsets[1]:.6f}")
    for name, fit in (("c3", result.fit_c3), ("c4", result.fit_c4)):
        lines.append(
            f"fit_{name}: A={fit.A:.6f} phi0={fit.phi0:.6f} C0={fit.C0:.6f} "
            f"residual={fit.residual:.3e} se_A={fit.se_A:.6f} V={fit.visibility:.6f}"
        )
    lines += [
        f"visibility_fitted: {result.visibility_fitted:.6f}",
        f"visibility_empirical: {result.visibility_empirical:.6f}",
        f"visibility_raw_data: {result.visibility_raw:.6f}",
        f"fringe_phase_difference_rad: {result.phase_difference:.6f}",
        f"flatness_metric: {result.flatness_metric:.6f}",
    ]
    if analytic_ref is not None:
        lines.append(f"visibility_analytic: {analytic_ref.visibility_fitted:.3f}")
        if not result.analytic:
            se = max(result.fit_c3.visibility_se, result.fit_c4.visibility_se)
            lines.append(f"visibility_sampled: {result.visibility_fitted:.3f} +/- {se:.3f}")
    if result.fringe_significant():
        lines.append("fringe: significant (|A| > 3 se_A)")
    else:
        lines.append("fringe: no significant fringe")
    return "\n".join(lines) + "\n"


def write_sweep(result: SweepResult, out_dir, analytic_ref: SweepResult | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    stem = sweep_stem(result)
    paths = [atomic_write(out_dir / f"{stem}_data.csv", sweep_data_csv(result)),
             atomic_write(out_dir / f"{stem}_summary.txt", sweep_summary(result, analytic_ref))]
    if result.bins_c3 is not None:
        paths.append(atomic_write(out_dir / f"{stem}_counts.csv", counts_csv(result)))
    return paths


def write_calibration(report: CalibrationReport, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    tag = f"order{report.order:+d}"
    return [atomic_write(out_dir / f"calibration_{tag}.csv", calibration_csv(report)),
            atomic_write(out_dir / f"calibration_{tag}_summary.json", calibration_summary_json(report))]

