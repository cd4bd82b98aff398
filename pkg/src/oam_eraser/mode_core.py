"""OAM basis-state algebra.

A :class:`ModeState` holds complex amplitudes over the truncated azimuthal
basis ``l = -L, ..., +L``. Array index ``i`` corresponds to ``l = i - L``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DEFAULT_L = 3
ATOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModeState:
    """Transverse phase-structure state of a single photon.

    Parameters
    ----------
    amplitudes : array_like of complex, length ``2L+1``
        Amplitudes ordered from ``l=-L`` to ``l=+L``.
    L : int
        Truncation order.
    truncation_loss : float
        Probability that left the window while producing this state.
    """

    amplitudes: np.ndarray
    L: int = DEFAULT_L
    truncation_loss: float = 0.0

    def __post_init__(self):
        if self.L < 1:
            raise DomainError(f"truncation L must be >= 1, got {self.L}")
        amps = _frozen(self.amplitudes)
        if amps.shape != (2 * self.L + 1,):
            raise DomainError(
                f"expected {2 * self.L + 1} amplitudes for L={self.L}, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2 * self.L + 1

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)

    def amplitude(self, l: int) -> complex:
        if abs(l) > self.L:
            raise DomainError(f"mode outside truncation: l={l}, L={self.L}")
        return complex(self.amplitudes[l + self.L])

    def population(self, l: int) -> float:
        return abs(self.amplitude(l)) ** 2

    @property
    def is_normalized(self) -> bool:
        return abs(norm(self) ** 2 - 1.0) <= ATOL

    def __add__(self, other: ModeState) -> ModeState:
        _check_same_L(self, other)
        return ModeState(self.amplitudes + other.amplitudes, self.L,
                         self.truncation_loss + other.truncation_loss)

    def __mul__(self, scalar) -> ModeState:
        return ModeState(self.amplitudes * complex(scalar), self.L, self.truncation_loss)

    __rmul__ = __mul__

    def allclose(self, other: ModeState, atol: float = ATOL) -> bool:
        _check_same_L(self, other)
        return bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0.0, atol=atol))

    def __repr__(self):
        terms = [f"{c:.4g}|{l}>" for l, c in zip(self.modes, self.amplitudes) if abs(c) > ATOL]
        return f"ModeState({' + '.join(terms) or '0'}, L={self.L})"


@dataclass(frozen=True)
class TwoPortState:
    """A photon delocalized over two spatial ports."""

    port_a: ModeState
    port_b: ModeState
    labels: tuple[str, str] = ("A1", "A2")

    def __post_init__(self):
        _check_same_L(self.port_a, self.port_b)

    @property
    def L(self) -> int:
        return self.port_a.L

    @property
    def vector(self) -> np.ndarray:
        """Amplitudes on the port-major ``port x mode`` space."""
        return np.concatenate([self.port_a.amplitudes, self.port_b.amplitudes])

    @classmethod
    def from_vector(cls, vec, L: int, labels=("A1", "A2"), truncation_loss: float = 0.0):
        vec = np.asarray(vec, dtype=complex)
        d = 2 * L + 1
        if vec.shape != (2 * d,):
            raise DomainError(f"expected vector of length {2 * d}, got {vec.shape}")
        return cls(ModeState(vec[:d], L, truncation_loss), ModeState(vec[d:], L), tuple(labels))

    @property
    def truncation_loss(self) -> float:
        return self.port_a.truncation_loss + self.port_b.truncation_loss

    def joint_norm(self) -> float:
        return norm(self.port_a) ** 2 + norm(self.port_b) ** 2

    def port(self, label: str) -> ModeState:
        if label == self.labels[0]:
            return self.port_a
        if label == self.labels[1]:
            return self.port_b
        raise KeyError(f"no port {label!r}; ports are {self.labels}")


def _check_same_L(a: ModeState, b: ModeState):
    if a.L != b.L:
        raise DomainError(f"truncation mismatch: L={a.L} vs L={b.L}")


def basis_state(l: int, L: int = DEFAULT_L) -> ModeState:
    """Return the unit vector ``|l>`` in the window ``[-L, L]``."""
    if abs(l) > L:
        raise DomainError(f"mode outside truncation: l={l}, L={L}")
    amps = np.zeros(2 * L + 1, dtype=complex)
    amps[l + L] = 1.0
    return ModeState(amps, L)


def superposition(coeffs: dict[int, complex], L: int = DEFAULT_L) -> ModeState:
    """Build ``sum_l coeffs[l] |l>`` (not normalized)."""
    amps = np.zeros(2 * L + 1, dtype=complex)
    for l, c in coeffs.items():
        if abs(l) > L:
            raise DomainError(f"mode outside truncation: l={l}, L={L}")
        amps[l + L] += c
    return ModeState(amps, L)


def zero_state(L: int = DEFAULT_L) -> ModeState:
    return ModeState(np.zeros(2 * L + 1, dtype=complex), L)


def inner_product(a: ModeState, b: ModeState) -> complex:
    """``<a|b>``, antilinear in ``a``."""
    _check_same_L(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def norm(s: ModeState) -> float:
    return float(np.linalg.norm(s.amplitudes))


def normalize(s: ModeState) -> ModeState:
    n = norm(s)
    if n == 0.0:
        raise DomainError("null state cannot be normalized")
    return ModeState(s.amplitudes / n, s.L, s.truncation_loss)


def dumps_state(s: ModeState) -> str:
    """Serialize as ``l re,im`` lines; floats use ``repr`` so the text round-trips."""
    lines = [f"# ModeState L={s.L}"]
    for l, c in zip(s.modes, s.amplitudes):
        lines.append(f"{l} {float(c.real)!r},{float(c.imag)!r}")
    return "\n".join(lines) + "\n"


def loads_state(text: str) -> ModeState:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    L = (len(rows) - 1) // 2
    amps = np.zeros(2 * L + 1, dtype=complex)
    for l_str, pair in rows:
        re, im = pair.split(",")
        amps[int(l_str) + L] = complex(float(re), float(im))
    return ModeState(amps, L)
