from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oam_eraser import elements as el
from oam_eraser.errors import DomainError
from oam_eraser.mode_core import TwoPortState, basis_state, superposition, zero_state

GOLDEN = Path(__file__).parent / "golden"
SQ2 = np.sqrt(2)
L_VALUES = [1, 2, 3, 5]


def two_port(a=None, b=None, L=3):
    return TwoPortState(a if a is not None else zero_state(L), b if b is not None else zero_state(L))


class TestSppCentered:
    def test_raises_ground_mode(self):
        assert el.spp_centered(+1, 3).apply(basis_state(0)).allclose(basis_state(1))

    def test_lowering_inverts(self):
        assert el.spp_centered(-1, 3).apply(basis_state(1)).allclose(basis_state(0))

    def test_boundary_truncates(self):
        out = el.spp_centered(+1, 3).apply(basis_state(3))
        assert out.allclose(zero_state(3))
        assert out.truncation_loss == pytest.approx(1.0, abs=1e-15)

    def test_order_zero_rejected(self):
        with pytest.raises(DomainError):
            el.spp_centered(0, 3)

    @pytest.mark.parametrize("L", L_VALUES)
    def test_mutual_inverse_on_interior(self, L):
        prod = el.compose([el.spp_centered(1, L), el.spp_centered(-1, L)]).matrix
        interior = [l + L for l in range(-L + 1, L)]
        sub = prod[np.ix_(interior, interior)]
        assert np.allclose(sub, np.eye(len(interior)), atol=1e-15)
        prod2 = el.compose([el.spp_centered(-1, L), el.spp_centered(1, L)]).matrix
        assert np.allclose(prod2[np.ix_(interior, interior)], np.eye(len(interior)), atol=1e-15)

    def test_spill_keeps_isometry(self):
        op = el.spp_centered(2, 3)
        aug = np.vstack([op.matrix, op.spill])
        assert np.allclose(aug.conj().T @ aug, np.eye(7))


class TestMirror:
    def test_flips_oam_with_pi_phase(self):
        assert el.mirror(3).apply(basis_state(1)).allclose(-1 * basis_state(-1))

    def test_ground_mode_fixed_point(self):
        assert el.mirror(3).apply(basis_state(0)).allclose(-1 * basis_state(0))

    def test_involution(self):
        m = el.mirror(3)
        assert m.apply(m.apply(basis_state(1))).allclose(basis_state(1))
        assert np.allclose(el.compose([m, m]).matrix, np.eye(7))


class TestBeamSplitter:
    def test_ground_mode_split(self):
        out = el.beam_splitter(3).apply(two_port(basis_state(0)))
        assert out.port_a.allclose(basis_state(0) * (1 / SQ2))
        assert out.port_b.allclose(basis_state(0) * (1j / SQ2))

    def test_reflection_inverts_oam(self):
        out = el.beam_splitter(3).apply(two_port(basis_state(1)))
        assert out.port_a.allclose(basis_state(1) * (1 / SQ2))
        assert out.port_b.allclose(basis_state(-1) * (1j / SQ2))

    def test_cascade_matches_scalar_brute_force(self):
        # l=0 sees only the 2x2 scalar splitter [[1, i], [i, 1]]/sqrt(2)
        b = np.array([[1, 1j], [1j, 1]]) / SQ2
        expect = b @ b @ np.array([1, 0])
        bs = el.beam_splitter(3)
        out = el.compose([bs, bs]).apply(two_port(basis_state(0)))
        got = np.array([out.port_a.amplitude(0), out.port_b.amplitude(0)])
        assert np.allclose(got, expect, atol=1e-15)
        assert np.allclose(np.abs(got) ** 2, [0, 1], atol=1e-15)

    def test_cascade_with_oam(self):
        bs = el.beam_splitter(3)
        out = el.compose([bs, bs]).apply(two_port(basis_state(1)))
        assert out.port_a.allclose(zero_state(3))
        assert out.port_b.allclose(basis_state(-1) * 1j)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
    def test_conserves_probability(self, L, seed):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=2 * (2 * L + 1)) + 1j * rng.normal(size=2 * (2 * L + 1))
        v /= np.linalg.norm(v)
        out = el.beam_splitter(L).apply(TwoPortState.from_vector(v, L))
        assert abs(out.joint_norm() - 1) < 1e-12


class TestPhaseShifter:
    def test_zero_is_identity(self):
        assert np.allclose(el.phase_shifter(0.0, 3).matrix, np.eye(14))

    def test_pi_negates_designated_arm(self):
        out = el.phase_shifter(np.pi, 3).apply(two_port(basis_state(0), basis_state(0)))
        assert out.port_b.allclose(-1 * basis_state(0))
        assert out.port_a.allclose(basis_state(0))

    def test_group_property(self):
        half = el.phase_shifter(np.pi / 2, 3)
        assert np.allclose(el.compose([half, half]).matrix, el.phase_shifter(np.pi, 3).matrix,
                           atol=1e-15)


class TestCompose:
    def test_mirror_pair_is_identity(self):
        m = el.mirror(2)
        assert np.allclose(el.compose([m, m]).matrix, el.identity(2).matrix)

    def test_identity_is_neutral(self):
        x = el.beam_splitter(2)
        assert np.array_equal(el.compose([el.identity(2, 2), x]).matrix, x.matrix)

    def test_application_order(self):
        a, b = el.spp_centered(1, 3), el.mirror(3)
        out = el.compose([a, b]).apply(basis_state(0))
        assert out.allclose(-1 * basis_state(-1))

    def test_unitary_flag_conjunction(self):
        assert el.compose([el.mirror(3), el.mirror(3)]).unitary_flag
        assert not el.compose([el.mirror(3), el.spp_centered(1, 3)]).unitary_flag

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError, match="dimension mismatch"):
            el.compose([el.mirror(3), el.beam_splitter(3)])

    def test_spill_accumulates_through_chain(self):
        chain = el.compose([el.spp_centered(1, 3), el.spp_centered(1, 3)])
        out = chain.apply(basis_state(2))
        assert out.truncation_loss == pytest.approx(1.0)


@pytest.mark.parametrize("L", L_VALUES)
def test_unitary_flagged_elements_are_unitary(L):
    ops = [el.mirror(L), el.beam_splitter(L), el.phase_shifter(0.37, L),
           el.phase_shifter(-2.1, L, port=0), el.identity(L), el.identity(L, 2),
           el.on_port(el.mirror(L), 1)]
    for op in ops:
        assert op.unitary_flag
        m = op.matrix
        assert np.max(np.abs(m.conj().T @ m - np.eye(op.dim))) < 1e-10, op.name


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(L_VALUES), st.floats(-10, 10))
def test_phase_shifter_unitary_for_any_phase(L, phi):
    assert el.phase_shifter(phi, L).is_unitary()


class TestShiftedIdeal:
    # explicit fill matrix keeps these tests independent of the field oracle
    FILL = np.full((7, 7), 0.01 + 0.02j)

    @pytest.fixture
    def raising(self):
        return el.spp_shifted_ideal(el.ShiftedSppSpec(1, 0.5, el.RAISING), 3, calibrated=self.FILL)

    @pytest.fixture
    def lowering(self):
        return el.spp_shifted_ideal(el.ShiftedSppSpec(1, 0.5, el.LOWERING), 3, calibrated=self.FILL)

    @pytest.mark.parametrize("which, l_in, expect", [
        ("raising", 0, {0: 1, 1: 1}),     # S_{1/2}|0>
        ("lowering", 0, {-1: 1, 0: 1}),   # S_{-1/2}|0>
        ("raising", -1, {-1: 1, 0: 1}),   # S_{1/2}|-1>
        ("lowering", 1, {0: 1, 1: 1}),    # S_{-1/2}|1>
    ])
    def test_defining_cases(self, request, which, l_in, expect):
        op = request.getfixturevalue(which)
        out = op.apply(basis_state(l_in))
        target = superposition({l: c / SQ2 for l, c in expect.items()})
        assert np.max(np.abs(out.amplitudes - target.amplitudes)) < 1e-12

    def test_other_columns_from_fill(self, raising):
        assert np.array_equal(raising.matrix[:, 1 + 3], self.FILL[:, 1 + 3])
        assert np.array_equal(raising.matrix[:, -2 + 3], self.FILL[:, -2 + 3])

    def test_not_unitary_and_leaky(self, raising):
        assert not raising.unitary_flag
        # |0> and |-1> map to outputs overlapping by 1/2
        sub = raising.matrix[np.ix_([2, 3, 4], [2, 3])]
        gram = sub.conj().T @ sub
        assert gram[0, 1] == pytest.approx(0.5, abs=1e-12)
        assert raising.leakage >= 0.5 - 1e-12

    def test_fill_from_oracle(self, coarse_grid):
        op = el.spp_shifted_ideal(el.ShiftedSppSpec(1, 0.5, el.RAISING), 3, grid=coarse_grid)
        from oam_eraser.field_oracle import shifted_spp_matrix

        ref = shifted_spp_matrix(1, 0.5, 3, coarse_grid)
        assert np.allclose(op.matrix[:, 4], ref[:, 4])

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            el.ShiftedSppSpec(order=0)
        with pytest.raises(DomainError):
            el.ShiftedSppSpec(offset=-0.1)
        with pytest.raises(DomainError):
            el.ShiftedSppSpec(direction="sideways")


class TestSerialization:
    @pytest.mark.parametrize("name, op", [
        ("mirror_L1.txt", el.mirror(1)),
        ("spp_plus1_L1.txt", el.spp_centered(1, 1)),
        ("bs_L1.txt", el.beam_splitter(1)),
    ])
    def test_golden(self, name, op):
        assert el.dumps_op(op) == (GOLDEN / name).read_text()

    def test_roundtrip_exact(self):
        op = el.compose([el.beam_splitter(2), el.phase_shifter(0.123, 2), el.beam_splitter(2)])
        assert np.array_equal(el.loads_matrix(el.dumps_op(op)), op.matrix)
