"""Optical elements as matrices on the (port x OAM mode) space.

Conventions
-----------
* Two-port operators act on the port-major vector ``[port_a modes, port_b modes]``.
* A mirror maps ``|l> -> e^{i pi} |-l>``.
* A 50/50 beam splitter transmits with ``1/sqrt(2)`` (``l`` unchanged) and
  reflects with ``i/sqrt(2)`` (``l -> -l``).
* A centered SPP of order ``m`` maps ``|l> -> |l+m>``; the azimuthal phase
  factor lives only in :mod:`oam_eraser.field_oracle`.

Amplitude pushed outside ``[-L, L]`` is not dropped silently: every
operator carries a ``spill`` matrix whose rows collect it, so that
``[matrix; spill]`` is an isometry whenever the element is lossless.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .mode_core import ModeState, TwoPortState

RAISING = "raising"
LOWERING = "lowering"
UNITARY_ATOL = 1e-10


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ElementOp:
    """A linear optical element.

    ``spill`` has shape ``(k, dim)`` and maps an input vector to the
    amplitudes that leave the truncation window.
    """

    matrix: np.ndarray
    name: str
    L: int
    ports: int = 1
    unitary_flag: bool = True
    spill: np.ndarray | None = None

    def __post_init__(self):
        dim = self.ports * (2 * self.L + 1)
        m = _readonly(self.matrix)
        if m.shape != (dim, dim):
            raise DomainError(
                f"{self.name}: matrix shape {m.shape} inconsistent with {self.ports} port(s) at L={self.L}"
            )
        object.__setattr__(self, "matrix", m)
        spill = np.zeros((0, dim), dtype=complex) if self.spill is None else self.spill
        spill = _readonly(spill)
        if spill.ndim != 2 or spill.shape[1] != dim:
            raise DomainError(f"{self.name}: spill matrix must have {dim} columns")
        object.__setattr__(self, "spill", spill)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def leakage(self) -> float:
        """Completeness deficit ``||M^dagger M - I||_2``.

        Zero for unitary elements. For the idealized shifted SPP it measures
        how far the operator is from conserving probability.
        """
        m = self.matrix
        return float(np.linalg.norm(m.conj().T @ m - np.eye(self.dim), 2))

    def is_unitary(self, atol: float = UNITARY_ATOL) -> bool:
        m = self.matrix
        return bool(np.allclose(m.conj().T @ m, np.eye(self.dim), rtol=0.0, atol=atol))

    def dagger(self) -> ElementOp:
        return ElementOp(self.matrix.conj().T, f"{self.name}^dagger", self.L, self.ports,
                         self.unitary_flag)

    def apply_vector(self, vec) -> tuple[np.ndarray, float]:
        """Return ``(M v, probability spilled out of the window)``."""
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (self.dim,):
            raise DomainError(f"{self.name}: expected vector of length {self.dim}, got {vec.shape}")
        lost = float(np.sum(np.abs(self.spill @ vec) ** 2))
        return self.matrix @ vec, lost

    def apply(self, state):
        """Apply to a :class:`ModeState` (1 port) or :class:`TwoPortState` (2 ports)."""
        if isinstance(state, ModeState):
            if self.ports != 1:
                raise DomainError(f"{self.name} acts on two ports; got a single ModeState")
            if state.L != self.L:
                raise DomainError(f"truncation mismatch: op L={self.L}, state L={state.L}")
            out, lost = self.apply_vector(state.amplitudes)
            return ModeState(out, self.L, state.truncation_loss + lost)
        if isinstance(state, TwoPortState):
            if self.ports != 2:
                raise DomainError(f"{self.name} is a single-port element; lift it with on_port()")
            if state.L != self.L:
                raise DomainError(f"truncation mismatch: op L={self.L}, state L={state.L}")
            out, lost = self.apply_vector(state.vector)
            return TwoPortState.from_vector(out, self.L, state.labels,
                                            state.truncation_loss + lost)
        raise TypeError(f"cannot apply {self.name} to {type(state).__name__}")

    def __matmul__(self, other: ElementOp) -> ElementOp:
        # self after other
        return compose([other, self])


def identity(L: int, ports: int = 1) -> ElementOp:
    return ElementOp(np.eye(ports * (2 * L + 1)), "I", L, ports)


def compose(ops: Sequence[ElementOp]) -> ElementOp:
    """Chain elements in application order (``ops[0]`` acts first)."""
    if not ops:
        raise DomainError("compose needs at least one element")
    first = ops[0]
    m = np.array(first.matrix)
    spill = np.array(first.spill)
    for op in ops[1:]:
        if op.dim != first.dim or op.L != first.L:
            raise DomainError(
                f"dimension mismatch composing {first.name} (dim {first.dim}) with {op.name} (dim {op.dim})"
            )
        spill = np.vstack([spill, op.spill @ m])
        m = op.matrix @ m
    name = " * ".join(op.name for op in reversed(ops))
    return ElementOp(m, name, first.L, first.ports,
                     all(op.unitary_flag for op in ops), spill)


def on_port(op: ElementOp, port: int) -> ElementOp:
    """Lift a single-port element onto port 0 or 1 of a two-port space."""
    if op.ports != 1:
        raise DomainError(f"{op.name} is already a two-port element")
    if port not in (0, 1):
        raise DomainError(f"port must be 0 or 1, got {port}")
    d = op.dim
    m = np.eye(2 * d, dtype=complex)
    sl = slice(port * d, (port + 1) * d)
    m[sl, sl] = op.matrix
    spill = np.zeros((op.spill.shape[0], 2 * d), dtype=complex)
    spill[:, sl] = op.spill
    return ElementOp(m, f"{op.name}@{port}", op.L, 2, op.unitary_flag, spill)


def spp_centered(order: int, L: int) -> ElementOp:
    """Centered spiral phase plate: ``|l> -> |l + order>``.

    Inputs that would land outside ``[-L, L]`` are routed to the spill rows,
    so applying this to ``|L>`` with ``order=+1`` returns the zero state with
    ``truncation_loss == 1``.
    """
    if order == 0:
        raise DomainError("SPP order must be nonzero")
    d = 2 * L + 1
    m = np.zeros((d, d), dtype=complex)
    spill_rows = []
    for i in range(d):
        l_out = i - L + order
        if abs(l_out) <= L:
            m[l_out + L, i] = 1.0
        else:
            row = np.zeros(d, dtype=complex)
            row[i] = 1.0
            spill_rows.append(row)
    spill = np.array(spill_rows).reshape(len(spill_rows), d)
    return ElementOp(m, f"SPP({order:+d})", L, 1, False, spill)


def mirror(L: int) -> ElementOp:
    """Reflection: ``|l> -> -|-l>``."""
    d = 2 * L + 1
    m = np.zeros((d, d), dtype=complex)
    for i in range(d):
        m[d - 1 - i, i] = -1.0
    return ElementOp(m, "M", L)


def _inversion(L: int) -> np.ndarray:
    return np.fliplr(np.eye(2 * L + 1))


def beam_splitter(L: int) -> ElementOp:
    d = 2 * L + 1
    t = np.eye(d) / np.sqrt(2)
    r = 1j * _inversion(L) / np.sqrt(2)
    m = np.block([[t, r], [r, t]])
    return ElementOp(m, "BS", L, 2)


def phase_shifter(phi: float, L: int, port: int = 1) -> ElementOp:
    """Multiply the ModeState in ``port`` by ``e^{i phi}``."""
    d = 2 * L + 1
    diag = np.ones(2 * d, dtype=complex)
    diag[port * d:(port + 1) * d] = np.exp(1j * phi)
    return ElementOp(np.diag(diag), f"Phase({phi:.6g})@{port}", L, 2)


@dataclass(frozen=True)
class ShiftedSppSpec:
    """A spiral phase plate displaced from the beam axis.

    ``offset`` is in units of the beam waist. ``direction`` selects the
    raising (``S^dagger``, adds OAM) or lowering (``S``) sense.
    """

    order: int = 1
    offset: float = 0.5
    direction: str = RAISING

    def __post_init__(self):
        if self.order == 0:
            raise DomainError("SPP order must be nonzero")
        if self.offset < 0:
            raise DomainError(f"SPP offset must be >= 0, got {self.offset}")
        if self.direction not in (RAISING, LOWERING):
            raise DomainError(f"direction must be {RAISING!r} or {LOWERING!r}, got {self.direction!r}")

    @property
    def signed_order(self) -> int:
        return self.order if self.direction == RAISING else -self.order


def spp_shifted_calibrated(spec: ShiftedSppSpec, L: int, grid=None) -> ElementOp:
    """Shifted SPP whose matrix comes from the field oracle's LG decomposition."""
    from .field_oracle import shifted_spp_matrix

    m = shifted_spp_matrix(spec.signed_order, spec.offset, L, grid)
    return ElementOp(m, f"SPPshift({spec.signed_order:+d}, d={spec.offset:g})", L, 1, False)


def spp_shifted_ideal(spec: ShiftedSppSpec, L: int, calibrated=None, grid=None) -> ElementOp:
    """Idealized shifted SPP producing equal-weight, in-phase superpositions.

    With ``m = spec.signed_order`` the inputs ``|0>`` and ``|-m>`` map to
    ``(|l> + |l+m>)/sqrt(2)``. For ``m = +1`` this gives
    ``|0> -> (|0>+|1>)/sqrt(2)`` and ``|-1> -> (|-1>+|0>)/sqrt(2)``.
    Every other column is taken from the oracle-calibrated matrix at the same
    offset (or from ``calibrated`` when supplied).

    The result is not unitary; see :attr:`ElementOp.leakage`.
    """
    m_order = spec.signed_order
    if abs(m_order) > L:
        raise DomainError(f"SPP order {m_order} exceeds truncation L={L}")
    if calibrated is None:
        from .field_oracle import shifted_spp_matrix

        calibrated = shifted_spp_matrix(m_order, spec.offset, L, grid)
    m = np.array(calibrated, dtype=complex)
    if m.shape != (2 * L + 1, 2 * L + 1):
        raise DomainError(f"calibrated matrix has shape {m.shape}, expected {(2 * L + 1,) * 2}")
    for l_in in (0, -m_order):
        col = np.zeros(2 * L + 1, dtype=complex)
        col[l_in + L] = 1 / np.sqrt(2)
        col[l_in + m_order + L] = 1 / np.sqrt(2)
        m[:, l_in + L] = col
    name = "S_{1/2}" if m_order > 0 else "S_{-1/2}"
    return ElementOp(m, name, L, 1, False)


def dumps_op(op: ElementOp) -> str:
    """Plain-text row-major dump with ``re,im`` pairs."""
    lines = [f"# ElementOp name={op.name} ports={op.ports} L={op.L} unitary={op.unitary_flag}"]
    for row in op.matrix:
        lines.append(" ".join(f"{float(c.real)!r},{float(c.imag)!r}" for c in row))
    return "\n".join(lines) + "\n"


def loads_matrix(text: str) -> np.ndarray:
    rows = []
    for ln in text.splitlines():
        if not ln.strip() or ln.startswith("#"):
            continue
        rows.append([complex(float(re), float(im))
                     for re, im in (tok.split(",") for tok in ln.split())])
    return np.array(rows, dtype=complex)
