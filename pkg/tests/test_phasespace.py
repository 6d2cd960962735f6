import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from models import Axis, Grid1D, GridKind, PhaseSpaceGrid, RegSpec, SampledField, UnitMode
from models.errors import ConfigError, ConventionError, KernelOverflowError
from services.closed_forms import (
    gaussian_husimi,
    gaussian_kr_characteristic,
    gaussian_kr_conjugate,
    gaussian_wigner,
    gaussian_wigner_characteristic,
)
from services.fitting import fit_gaussian_width
from services.phasespace import (
    characteristic_from_kr,
    damped_characteristic,
    damping_kernel,
    direct_wigner,
    kr_conjugate,
    kr_conjugate_at,
    kr_from_conjugate,
    kr_from_wigner,
    marginals,
    p_from_characteristic,
    q_from_characteristic,
    sharpened_characteristic,
    wigner_characteristic,
    wigner_from_characteristic,
    wigner_from_kr,
)
from services.wavefield import apply_obstruction, make_gaussian, to_momentum

GRID_128 = Grid1D(128, 16.0, UnitMode.DIMENSIONLESS)
WIRE_HALF_WIDTH = 0.5 / 0.85


def central_band(psg):
    """|x| < extent/4 and |p| < p_max/2, where the chirp path is defined"""
    n = psg.x_axis.n
    band = slice(n // 4, 3 * n // 4)
    return band, band


@pytest.fixture(scope="module")
def gaussian_krc(gaussian_256):
    return kr_conjugate(gaussian_256)


@pytest.fixture(scope="module")
def gaussian_char(gaussian_krc):
    return characteristic_from_kr(gaussian_krc)


class TestKirkwoodRihaczek:
    def test_marginals_reproduce_intensities(self, gaussian_512):
        krc = kr_conjugate(gaussian_512)
        margs = marginals(krc)
        np.testing.assert_allclose(margs.position, np.abs(gaussian_512.amplitudes) ** 2, atol=1e-8)
        spectrum = to_momentum(gaussian_512).amplitudes
        np.testing.assert_allclose(margs.momentum, np.abs(spectrum) ** 2, atol=1e-8)
        assert margs.residual_imag < 1e-10 * krc.peak

    def test_integrates_to_one(self, gaussian_krc):
        total = np.sum(gaussian_krc.values) * gaussian_krc.dx * gaussian_krc.dp
        assert abs(total - 1.0) < 1e-10

    @given(
        st.floats(min_value=0.7, max_value=1.4),
        st.floats(min_value=-1.0, max_value=1.0),
        st.one_of(st.just(math.inf), st.floats(min_value=5.0, max_value=50.0)),
    )
    def test_matches_closed_form(self, waist, center, radius):
        field = make_gaussian(GRID_128, waist, radius, center)
        krc = kr_conjugate(field)
        expected = gaussian_kr_conjugate(krc.x, krc.p, waist, radius, center, 1.0)
        np.testing.assert_allclose(krc.values, expected, atol=1e-8)

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_conjugation_is_an_involution(self, seed):
        rng = np.random.default_rng(seed)
        values = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        krc = PhaseSpaceGrid(Axis(0.5, 8, 4), Axis(0.5, 8, 4), values, GridKind.KR_CONJ)
        kr = kr_from_conjugate(krc)
        assert kr.kind is GridKind.KR
        back = kr_from_conjugate(kr)
        assert back.kind is GridKind.KR_CONJ
        np.testing.assert_array_equal(back.values, krc.values)

    def test_pointwise_evaluation_agrees_on_grid_nodes(self, gaussian_256, gaussian_krc):
        rows = slice(100, 156, 7)
        cols = slice(110, 146, 5)
        values = kr_conjugate_at(gaussian_256, gaussian_krc.x[rows], gaussian_krc.p[cols])
        np.testing.assert_allclose(values, gaussian_krc.values[rows, cols], atol=1e-12)

    def test_vanishes_wherever_the_wire_blocks(self, mm_wire):
        krc = kr_conjugate(mm_wire)
        blocked = np.abs(krc.x) <= 0.5
        assert blocked.any()
        assert np.max(np.abs(krc.values[blocked])) < 1e-12 * krc.peak

    def test_wire_position_marginal_is_dark_behind_the_wire(self, mm_wire):
        margs = marginals(kr_conjugate(mm_wire))
        blocked = np.abs(mm_wire.grid.x) <= 0.5
        assert np.max(np.abs(margs.position[blocked])) < 1e-3 * np.max(margs.position)

    def test_characteristic_grids_have_no_marginals(self, gaussian_char):
        with pytest.raises(ConfigError):
            marginals(gaussian_char)


class TestCharacteristic:
    def test_value_at_origin_is_the_norm(self, gaussian_char):
        n = gaussian_char.x_axis.n
        assert abs(gaussian_char.values[n // 2, n // 2] - 1.0) < 1e-10

    def test_matches_closed_forms(self, gaussian_char):
        x, p = gaussian_char.x, gaussian_char.p
        np.testing.assert_allclose(gaussian_char.values, gaussian_kr_characteristic(x, p, 1.0), atol=1e-8)
        m_w = wigner_characteristic(gaussian_char)
        assert m_w.kind is GridKind.CHAR_W
        np.testing.assert_allclose(m_w.values, gaussian_wigner_characteristic(x, p, 1.0), atol=1e-8)

    def test_curved_wigner_characteristic(self):
        radius = 12.0
        field = make_gaussian(GRID_128, 1.0, radius)
        m_w = wigner_characteristic(characteristic_from_kr(kr_conjugate(field)))
        expected = gaussian_wigner_characteristic(m_w.x, m_w.p, 1.0, radius, 1.0)
        np.testing.assert_allclose(m_w.values, expected, atol=1e-8)

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_point_reflection_symmetry(self, seed):
        # M(-x', -p') = e^(-i x' p') conj(M(x', p')); index 0 has no mirror on the grid
        rng = np.random.default_rng(seed)
        grid = Grid1D(64, 8.0, UnitMode.DIMENSIONLESS)
        field = SampledField.normalized(grid, rng.normal(size=64) + 1j * rng.normal(size=64), wavenumber=1.0)
        char = characteristic_from_kr(kr_conjugate(field))
        interior = char.values[1:, 1:]
        mirrored = char.values[1:, 1:][::-1, ::-1]
        phase = np.exp(-1j * np.outer(char.x[1:], char.p[1:]))
        np.testing.assert_allclose(mirrored, phase * np.conj(interior), atol=1e-10)

    def test_damping_kernel_is_one_at_origin(self):
        kernel = damping_kernel(np.array([0.0, 2.0]), np.array([0.0, 2.0]), 1.0)
        assert kernel[0, 0] == 1.0
        assert kernel[1, 1] == pytest.approx(math.exp(-2.0))

    def test_only_dft_grids_are_accepted(self):
        odd = PhaseSpaceGrid(Axis(0.1, 8, 4), Axis(0.1, 8, 4), np.zeros((8, 8)), GridKind.KR_CONJ)
        with pytest.raises(ConfigError, match="DFT grid"):
            characteristic_from_kr(odd)

    def test_kind_is_checked(self, gaussian_char):
        with pytest.raises(ConfigError):
            characteristic_from_kr(gaussian_char)


class TestWigner:
    def test_all_paths_match_closed_form(self, gaussian_256, gaussian_krc, gaussian_char):
        expected = gaussian_wigner(gaussian_krc.x, gaussian_krc.p, 1.0)
        chirp = wigner_from_kr(gaussian_krc)
        via_char = wigner_from_characteristic(gaussian_char)
        direct = direct_wigner(gaussian_256)
        for grid in (chirp, via_char, direct):
            assert grid.kind is GridKind.WIGNER
            assert np.max(np.abs(grid.values - expected)) < 1e-6
        assert np.max(np.abs(chirp.values - direct.values)) < 1e-6
        assert np.max(np.abs(direct.values - expected)) < 1e-8

    def test_chirp_path_is_zero_outside_the_central_band(self, gaussian_krc):
        values = wigner_from_kr(gaussian_krc).values
        rows, cols = central_band(gaussian_krc)
        outer = np.ones(values.shape, dtype=bool)
        outer[rows, cols] = False
        assert np.all(values[outer] == 0.0)

    def test_curved_beam(self):
        radius = 10.0
        field = make_gaussian(GRID_128, 1.0, radius)
        wigner = wigner_from_kr(kr_conjugate(field))
        expected = gaussian_wigner(wigner.x, wigner.p, 1.0, radius, 0.0, 1.0)
        assert np.max(np.abs(wigner.values - expected)) < 1e-6

    @given(
        st.floats(min_value=0.8, max_value=1.2),
        st.floats(min_value=-0.5, max_value=0.5),
        st.one_of(st.just(math.inf), st.floats(min_value=8.0, max_value=50.0)),
    )
    def test_chirp_and_direct_paths_agree(self, waist, center, radius):
        field = make_gaussian(GRID_128, waist, radius, center)
        chirp = wigner_from_kr(kr_conjugate(field))
        direct = direct_wigner(field)
        rows, cols = central_band(chirp)
        assert np.max(np.abs(chirp.values[rows, cols] - direct.values[rows, cols])) < 1e-6

    @pytest.mark.parametrize("n_points", [128, 256])
    def test_chirp_and_direct_paths_agree_on_the_wire(self, n_points):
        grid = Grid1D(n_points, 16.0, UnitMode.DIMENSIONLESS)
        field = apply_obstruction(make_gaussian(grid, 1.0), WIRE_HALF_WIDTH)
        chirp = wigner_from_kr(kr_conjugate(field))
        direct = direct_wigner(field)
        assert np.max(np.abs(chirp.values - direct.values)) < 1e-6

    def test_chirp_and_direct_paths_agree_in_millimeters(self, mm_wire):
        chirp = wigner_from_kr(kr_conjugate(mm_wire))
        assert np.max(np.abs(chirp.values - direct_wigner(mm_wire).values)) < 1e-6

    def test_direct_is_symmetric_for_real_even_fields(self, wire_256):
        n = wire_256.grid.n_points
        inner = direct_wigner(wire_256).values[1:, n // 4 + 1:3 * n // 4]
        np.testing.assert_allclose(inner[::-1, :], inner, atol=1e-10)
        np.testing.assert_allclose(inner[:, ::-1], inner, atol=1e-10)

    def test_direct_integrates_to_one(self, wire_256):
        wigner = direct_wigner(wire_256)
        assert np.sum(wigner.values) * wigner.dx * wigner.dp == pytest.approx(1.0, abs=1e-8)

    def test_direct_blocks_do_not_change_the_result(self, gaussian_256):
        whole = direct_wigner(gaussian_256, block=256)
        blocked = direct_wigner(gaussian_256, block=37)
        np.testing.assert_allclose(blocked.values, whole.values, atol=1e-15)

    def test_kr_recovered_from_wigner_near_the_center(self, gaussian_krc):
        recovered = kr_from_wigner(wigner_from_kr(gaussian_krc))
        assert recovered.kind is GridKind.KR_CONJ
        inner_x = np.abs(gaussian_krc.x) < 2.0
        inner_p = np.abs(gaussian_krc.p) < 12.0
        difference = (recovered.values - gaussian_krc.values)[np.ix_(inner_x, inner_p)]
        assert np.max(np.abs(difference)) < 1e-6

    def test_wire_wigner_goes_negative_between_the_lobes(self, mm_wire):
        wigner = direct_wigner(mm_wire)
        slice_at_zero = wigner.values[wigner.x_axis.n // 2]
        assert np.min(slice_at_zero) < -0.1 * np.max(wigner.values)

    def test_imaginary_result_is_a_convention_error(self, gaussian_krc):
        rotated = gaussian_krc.derive(1j * gaussian_krc.values, GridKind.KR_CONJ)
        with pytest.raises(ConventionError, match="imaginary"):
            wigner_from_kr(rotated)


def relative_l2(candidate, reference):
    return np.linalg.norm(candidate - reference) / np.linalg.norm(reference)


class TestMarginalEquivalence:
    def test_two_lobe_field(self, unit_grid_256):
        x = unit_grid_256.x
        lobes = np.exp(-((x - 1.5) ** 2) / 2 + 2j * x) + np.exp(-((x + 1.5) ** 2) / 2 - 2j * x)
        field = SampledField.normalized(unit_grid_256, lobes, wavenumber=1.0)
        from_kr = marginals(kr_conjugate(field))
        from_wigner = marginals(direct_wigner(field))
        assert relative_l2(from_wigner.position, from_kr.position) < 1e-6
        assert relative_l2(from_wigner.momentum, from_kr.momentum) < 1e-6

    @pytest.mark.parametrize("fixture", ["wire_256", "mm_wire"])
    def test_wire_position_marginals_match(self, request, fixture):
        field = request.getfixturevalue(fixture)
        from_kr = marginals(kr_conjugate(field))
        assert relative_l2(marginals(direct_wigner(field)).position, from_kr.position) < 1e-6

    @pytest.mark.parametrize("fixture", ["wire_256", "mm_wire"])
    def test_wire_momentum_marginal_is_the_folded_spectrum(self, request, fixture):
        field = request.getfixturevalue(fixture)
        n = field.grid.n_points
        spectrum = marginals(kr_conjugate(field)).momentum
        folded = np.zeros(n)
        band = slice(n // 4, 3 * n // 4)
        folded[band] = (spectrum + np.roll(spectrum, n // 2))[band]
        momentum = marginals(direct_wigner(field)).momentum
        np.testing.assert_allclose(momentum, folded, atol=1e-12 * np.max(spectrum))


class TestHusimi:
    def test_wire_field_stays_nonnegative(self, wire_256):
        q = q_from_characteristic(characteristic_from_kr(kr_conjugate(wire_256)), 1.0)
        assert np.min(q.values) >= -1e-12 * np.max(q.values)
        assert np.sum(q.values) * q.dx * q.dp == pytest.approx(1.0, abs=1e-6)

    def test_matches_closed_form_and_peak(self, gaussian_char):
        q = q_from_characteristic(gaussian_char, 1.0)
        assert q.kind is GridKind.Q
        n = q.x_axis.n
        assert q.values[n // 2, n // 2] == pytest.approx(1.0 / (2.0 * math.pi), abs=1e-8)
        np.testing.assert_allclose(q.values, gaussian_husimi(q.x, q.p, 1.0, 1.0), atol=1e-8)
        assert np.min(q.values) >= -1e-8 * np.max(q.values)

    def test_width_is_sqrt_two_times_the_waist(self, gaussian_char):
        q = q_from_characteristic(gaussian_char, 1.0)
        fit = fit_gaussian_width(q.values[:, q.p_axis.n // 2], q.x_axis)
        assert fit.width == pytest.approx(math.sqrt(2.0), rel=0.01)

    @pytest.mark.parametrize("sigma_ref", [0.7, 1.4])
    def test_other_kernel_scales(self, gaussian_char, sigma_ref):
        q = q_from_characteristic(gaussian_char, sigma_ref)
        np.testing.assert_allclose(q.values, gaussian_husimi(q.x, q.p, 1.0, sigma_ref), atol=1e-8)

    def test_curved_beam(self):
        radius = 12.0
        field = make_gaussian(GRID_128, 1.0, radius)
        q = q_from_characteristic(characteristic_from_kr(kr_conjugate(field)), 1.0)
        np.testing.assert_allclose(q.values, gaussian_husimi(q.x, q.p, 1.0, 1.0, radius, 1.0), atol=1e-8)

    def test_imaginary_result_is_a_convention_error(self, gaussian_char):
        rotated = gaussian_char.derive(1j * gaussian_char.values, GridKind.CHAR_KR)
        with pytest.raises(ConventionError):
            q_from_characteristic(rotated, 1.0)


class TestGlauberSudarshan:
    def test_hierarchy_of_characteristic_functions(self, gaussian_char):
        sharpened, mask, _ = sharpened_characteristic(gaussian_char, 1.0)
        damp = damping_kernel(gaussian_char.x, gaussian_char.p, 1.0)
        np.testing.assert_allclose(
            damp ** 2 * sharpened, damped_characteristic(gaussian_char, 1.0) * mask, rtol=1e-10, atol=1e-15
        )

    def test_regularized_p_is_narrower_than_wigner(self, gaussian_char):
        p_grid, report = p_from_characteristic(gaussian_char, 1.0)
        wigner = wigner_from_characteristic(gaussian_char)
        column = p_grid.p_axis.n // 2
        p_width = fit_gaussian_width(p_grid.values[:, column], p_grid.x_axis).width
        w_width = fit_gaussian_width(wigner.values[:, column], wigner.x_axis).width
        assert p_width < w_width
        assert not report.ill_conditioned
        assert p_grid.meta["regularized"] == "true"
        assert p_grid.meta["ill_conditioned"] == "false"

    def test_regularized_p_integrates_to_one(self, gaussian_char):
        p_grid, _ = p_from_characteristic(gaussian_char, 1.0)
        assert np.sum(p_grid.values) * p_grid.dx * p_grid.dp == pytest.approx(1.0, rel=0.02)

    def test_wire_field_is_flagged_ill_conditioned(self, wire_256):
        char = characteristic_from_kr(kr_conjugate(wire_256))
        p_grid, report = p_from_characteristic(char, 1.0)
        assert report.ill_conditioned
        assert report.removed_fraction > 0.5
        assert p_grid.meta["ill_conditioned"] == "true"

    def test_kernel_overflow_names_the_radius(self, gaussian_char):
        with pytest.raises(KernelOverflowError) as info:
            p_from_characteristic(gaussian_char, 0.12, RegSpec(eps_floor=1e-305))
        assert info.value.radius > 2.0 * math.sqrt(math.log(1e300))
        assert info.value.threshold == 1e300

    def test_without_taper_the_mask_is_binary(self, gaussian_char):
        _, mask, report = sharpened_characteristic(gaussian_char, 1.0, RegSpec(taper=0))
        assert set(np.unique(mask)) <= {0.0, 1.0}
        assert report.kept_points == int(np.count_nonzero(mask))

    def test_reg_spec_validation(self):
        with pytest.raises(ConfigError):
            RegSpec(eps_floor=0.0)
        with pytest.raises(ConfigError):
            RegSpec(taper=-1)
