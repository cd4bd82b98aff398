"""Mach-Zehnder interferometer with an SPP in the lower arm.

Port 0 of each beam splitter is the transmitted path of the input photon.
After BS1, port 0 is arm A1 and port 1 is arm A2. After BS2 the port holding
``{|0>, |-1>}`` is labelled P3 (port 1) and the one holding ``{|0>, |+1>}``
is P4 (port 0).

Arm A1: mirror.  Arm A2: SPP, mirror, phase ``phi``.  Every reflection is
applied as its own operator so the OAM sign flips emerge from the sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import elements as el
from .errors import DomainError, TruncationError
from .field_oracle import GridParams, balanced_offset
from .mode_core import DEFAULT_L, ModeState, TwoPortState, basis_state, norm

P3_PORT = 1
P4_PORT = 0
TRUNCATION_TOL = 1e-9


def default_eraser_p3() -> el.ShiftedSppSpec:
    return el.ShiftedSppSpec(1, 0.5, el.RAISING)


def default_eraser_p4() -> el.ShiftedSppSpec:
    return el.ShiftedSppSpec(1, 0.5, el.LOWERING)


@dataclass(frozen=True)
class MziConfig:
    arm_a2_spp_order: int = 1
    phase_phi: float = 0.0
    eraser_p3: el.ShiftedSppSpec | None = None
    eraser_p4: el.ShiftedSppSpec | None = None
    use_ideal_eraser: bool = True
    L: int = DEFAULT_L
    oracle_grid: GridParams = field(default_factory=GridParams)

    def __post_init__(self):
        if self.L < abs(self.arm_a2_spp_order) + 1:
            raise DomainError(
                f"L={self.L} too small for an order-{self.arm_a2_spp_order} SPP (need L >= |order| + 1)"
            )

    def with_phase(self, phi: float) -> MziConfig:
        return replace(self, phase_phi=float(phi))


@dataclass(frozen=True)
class OutputStates:
    """Unnormalized amplitude branches at the two output ports."""

    psi_p3: ModeState
    psi_p4: ModeState

    @property
    def joint_norm(self) -> float:
        return norm(self.psi_p3) ** 2 + norm(self.psi_p4) ** 2

    @property
    def truncation_loss(self) -> float:
        return self.psi_p3.truncation_loss + self.psi_p4.truncation_loss


def arm_ops(cfg: MziConfig) -> list[el.ElementOp]:
    """Element sequence between the beam splitters, lifted to two ports."""
    L = cfg.L
    ops = [el.on_port(el.mirror(L), 0)]
    if cfg.arm_a2_spp_order:
        ops.append(el.on_port(el.spp_centered(cfg.arm_a2_spp_order, L), 1))
    ops.append(el.on_port(el.mirror(L), 1))
    ops.append(el.phase_shifter(cfg.phase_phi, L, port=1))
    return ops


def mzi_operator(cfg: MziConfig) -> el.ElementOp:
    bs = el.beam_splitter(cfg.L)
    return el.compose([bs, *arm_ops(cfg), bs])


def propagate(cfg: MziConfig, input_state: ModeState | None = None) -> OutputStates:
    """Send a photon in ``input_state`` (default ``|0>``) into port 0 of BS1."""
    L = cfg.L
    psi = basis_state(0, L) if input_state is None else input_state
    if psi.L != L:
        raise DomainError(f"input L={psi.L} does not match config L={L}")
    if abs(norm(psi) - 1.0) > 1e-12:
        raise DomainError("input state must be normalized")
    state = TwoPortState(psi, ModeState(np.zeros(2 * L + 1), L), ("in", "vac"))
    out = mzi_operator(cfg).apply(state)
    if out.truncation_loss > TRUNCATION_TOL:
        raise TruncationError(
            f"probability {out.truncation_loss:.3g} left the OAM window inside the MZI; increase L"
        )
    return OutputStates(psi_p3=out.port_b, psi_p4=out.port_a)


def eraser_op(spec: el.ShiftedSppSpec, cfg: MziConfig) -> el.ElementOp:
    if cfg.use_ideal_eraser:
        return el.spp_shifted_ideal(spec, cfg.L, grid=cfg.oracle_grid)
    return el.spp_shifted_calibrated(spec, cfg.L, grid=cfg.oracle_grid)


def apply_eraser(out: OutputStates, cfg: MziConfig) -> OutputStates:
    """Pass the output branches through the shifted SPPs configured at P3/P4."""
    if cfg.eraser_p3 is None and cfg.eraser_p4 is None:
        raise DomainError("no eraser configured at P3 or P4")
    p3, p4 = out.psi_p3, out.psi_p4
    if cfg.eraser_p3 is not None:
        p3 = eraser_op(cfg.eraser_p3, cfg).apply(p3)
    if cfg.eraser_p4 is not None:
        p4 = eraser_op(cfg.eraser_p4, cfg).apply(p4)
    return OutputStates(p3, p4)


def balanced_eraser_pair(L: int = DEFAULT_L, grid: GridParams | None = None, order: int = 1):
    """Eraser specs at the oracle's balanced offset for both output ports."""
    d3 = balanced_offset(order, L, grid)
    d4 = balanced_offset(-order, L, grid)
    return (el.ShiftedSppSpec(order, d3, el.RAISING),
            el.ShiftedSppSpec(order, d4, el.LOWERING))
