import numpy as np
import pytest

import darkfringe as df
from darkfringe.boundary_logic import InvalidBoundaryMaps
from darkfringe.forward_model import ComplexField, GridSpec
from darkfringe.path_search import plan_paths, plan_with_retry
from darkfringe.reconstruct import (accumulate_phase, compose,
                                    compose_and_score, estimate_amplitude,
                                    retrieve_phase)

from conftest import SimSetup, truth_edge_ratios


def empty_invalid(s1, s2):
    return InvalidBoundaryMaps(np.zeros((s1, s2 - 1), bool),
                               np.zeros((s1 - 1, s2), bool))


def test_accumulate_origin_keeps_origin_phase():
    plan = plan_paths(empty_invalid(2, 2), (0, 0))
    ratios = truth_edge_ratios(ComplexField(np.ones((2, 2), complex)))
    phase = accumulate_phase(plan, ratios, origin_phase=0.7)
    assert phase[0, 0] == pytest.approx(0.7)


def test_accumulate_single_right_step():
    obj = ComplexField(np.array([[1.0 + 0j, 1j]]))
    plan = plan_paths(empty_invalid(1, 2), (0, 0))
    phase = accumulate_phase(plan, truth_edge_ratios(obj), origin_phase=0.0)
    assert phase[0, 1] == np.pi / 2


def test_accumulate_rejects_unknown_edge():
    plan = plan_paths(empty_invalid(1, 2), (0, 0))
    ratios = df.EdgeRatios(horizontal=np.full((1, 1), complex(np.nan, np.nan)),
                           vertical=np.zeros((0, 2), complex))
    with pytest.raises(ValueError):
        accumulate_phase(plan, ratios)


def test_cycle_consistency_path_independence():
    # valid ratios derive from a single-valued field: the product around every
    # unit square is 1 and any two origins agree up to one constant
    rng = np.random.default_rng(3)
    obj = ComplexField(np.power(1j, rng.integers(0, 4, (6, 6))))
    ratios = truth_edge_ratios(obj)
    h, v = ratios.horizontal, ratios.vertical
    loops = h[:-1, :] * v[:, 1:] * np.conj(h[1:, :]) * np.conj(v[:, :-1])
    assert np.allclose(loops, 1.0)
    inv = empty_invalid(6, 6)
    base = accumulate_phase(plan_paths(inv, (0, 0)), ratios)
    for origin in ((5, 5), (2, 3)):
        other = accumulate_phase(plan_paths(inv, origin), ratios)
        diff = np.mod(other - base, 2 * np.pi)
        assert np.allclose(diff, diff[0, 0])


def test_retrieve_phase_multi_origin_noiseless_exact():
    rng = np.random.default_rng(5)
    obj = ComplexField(np.power(1j, rng.integers(0, 4, (8, 8))))
    ratios = truth_edge_ratios(obj)
    phase, provenance = retrieve_phase(empty_invalid(8, 8), ratios,
                                       [(0, 0), (7, 7), (3, 4)])
    assert (provenance >= 0).all()
    metrics = compose_and_score(phase, np.ones((8, 8)), obj)
    assert metrics.phase_rmse == 0.0
    assert metrics.unknown_frac == 0.0


def test_unknown_units_only_where_unreachable():
    inv = empty_invalid(4, 4)
    inv.matrix_a[0, 2] = True
    inv.matrix_a[1, 2] = True
    inv.matrix_a[2, 2] = True
    inv.matrix_a[3, 2] = True   # wall between columns 2 and 3
    obj = ComplexField(np.ones((4, 4), complex))
    ratios = truth_edge_ratios(obj)
    ratios.horizontal[:, 2] = complex(np.nan, np.nan)
    phase, provenance = retrieve_phase(inv, ratios, [(0, 0)])
    # the full wall disconnects column 3 from (0, 0); nothing else is lost
    plan = plan_with_retry(inv, [(0, 0)])
    unreachable = ~plan.reachable_mask()
    assert np.array_equal(np.isnan(phase), unreachable)


def _amplitude_setup(values, radius=4.0):
    setup = SimSetup(s1=values.shape[0], s2=values.shape[1], radius=radius)
    obj = ComplexField(values)
    images = setup.measure(obj, seed=2)
    return setup, images


def test_amplitude_uniform_object():
    setup, images = _amplitude_setup(np.ones((6, 6), complex))
    amp = estimate_amplitude(images, setup.grid)
    assert np.allclose(amp, 1.0, atol=0.02)


def test_amplitude_half_amplitude_unit():
    values = np.ones((6, 6), complex)
    values[3, 3] = 0.5
    setup, images = _amplitude_setup(values)
    amp = estimate_amplitude(images, setup.grid)
    assert amp[3, 3] == pytest.approx(0.5, abs=0.025)
    assert np.allclose(np.delete(amp.ravel(), 3 * 6 + 3), 1.0, atol=0.02)


def test_amplitude_invariant_across_patterns():
    values = np.ones((4, 4), complex) * np.exp(0.3j)
    values[1, 2] = 0.7 * np.exp(1.1j)
    setup, images = _amplitude_setup(values)
    single = [estimate_amplitude([img], setup.grid) for img in images]
    for a in single[1:]:
        assert np.allclose(a, single[0], atol=0.02)


def test_amplitude_requires_consistent_shapes():
    setup, images = _amplitude_setup(np.ones((4, 4), complex))
    with pytest.raises(ValueError):
        estimate_amplitude(images, GridSpec(5, 4, 32, setup.grid.crop_rows))


def test_score_exact_match_is_zero():
    rng = np.random.default_rng(1)
    truth = ComplexField(np.exp(1j * rng.uniform(0, 2 * np.pi, (5, 5))))
    phase = np.mod(np.angle(truth.values), 2 * np.pi)
    m = compose_and_score(phase, np.abs(truth.values), truth)
    assert m.phase_rmse == 0.0
    assert m.complex_l2 < 1e-12
    assert m.unknown_frac == 0.0


def test_score_blind_to_global_phase():
    rng = np.random.default_rng(2)
    truth_vals = np.exp(1j * rng.uniform(0, 2 * np.pi, (5, 5)))
    phase = np.mod(np.angle(truth_vals), 2 * np.pi)
    rotated = ComplexField(truth_vals * np.exp(1j * np.pi / 3))
    m = compose_and_score(phase, np.ones((5, 5)), rotated)
    assert m.phase_rmse < 1e-12
    assert m.complex_l2 < 1e-12


def test_score_single_unit_off_by_quarter_turn():
    truth = ComplexField(np.ones((16, 16), complex))
    phase = np.zeros((16, 16))
    phase[4, 7] = np.pi / 2
    m = compose_and_score(phase, np.ones((16, 16)), truth)
    assert m.phase_rmse == pytest.approx((np.pi / 2) / 16, rel=5e-3)


def test_score_counts_unknown_units():
    truth = ComplexField(np.ones((4, 4), complex))
    phase = np.zeros((4, 4))
    phase[0, 0] = np.nan
    m = compose_and_score(phase, np.ones((4, 4)), truth)
    assert m.unknown_frac == pytest.approx(1 / 16)
    assert m.phase_rmse == 0.0


def test_compose_zeroes_unknowns():
    phase = np.array([[0.0, np.nan]])
    amp = np.array([[1.0, 0.5]])
    rec = compose(phase, amp)
    assert rec.complex_image.values[0, 1] == 0.0
    assert rec.provenance[0, 1] == -1
