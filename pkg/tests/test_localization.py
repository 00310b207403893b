import math

import numpy as np
import pytest

from uoan_sim.acoustic import AcousticParams
from uoan_sim.errors import DegenerateGeometryError, DomainError
from uoan_sim.geometry import Box, Deployment, face_set, link_geometry
from uoan_sim.localization import (
    acoustic_level_db,
    invert_range,
    measure_rss,
    multilaterate,
    network_localize,
    optical_level_db,
)
from uoan_sim.optical import OpticalParams, WaterType


WATER = WaterType.preset("clear_ocean")
ACO = AcousticParams()


def test_noise_free_multilateration_recovers_truth():
    refs = np.array(
        [[0.0, 0.0, 0.0], [40.0, 0.0, 0.0], [0.0, 40.0, 0.0], [0.0, 0.0, 40.0], [25.0, 30.0, 10.0]]
    )
    rng = np.random.default_rng(9)
    for _ in range(50):
        truth = rng.uniform(-20, 60, size=3)
        d = np.linalg.norm(refs - truth, axis=1)
        est = multilaterate(refs, d)
        assert np.linalg.norm(est - truth) < 1e-6


def test_coplanar_references_rejected():
    refs = np.array([[0.0, 0, 0], [1.0, 0, 0], [0, 1.0, 0], [1.0, 1.0, 0]])
    d = np.ones(4)
    with pytest.raises(DegenerateGeometryError):
        multilaterate(refs, d)
    with pytest.raises(DomainError):
        multilaterate(refs[:3], d[:3])


def test_rss_round_trip_optical():
    gain = 1e-4
    for d in (5.0, 25.0, 60.0):
        rss = measure_rss(d, "optical", gain=gain, water=WATER, noise_sigma_db=0.0)
        assert abs(invert_range(rss, "optical", gain=gain, water=WATER) - d) < 1e-4


def test_rss_round_trip_acoustic():
    for d in (10.0, 200.0, 1000.0):
        rss = measure_rss(d, "acoustic", aco_params=ACO, noise_sigma_db=0.0)
        assert abs(invert_range(rss, "acoustic", aco_params=ACO) - d) < 1e-4


def test_level_models_monotone_decreasing():
    d = np.array([1.0, 5.0, 20.0, 100.0, 500.0])
    lv_o = optical_level_db(d, 1e-4, WATER)
    lv_a = acoustic_level_db(d, ACO)
    assert np.all(np.diff(lv_o) < 0)
    assert np.all(np.diff(lv_a) < 0)


def test_measure_rss_rejects_invalid_links():
    with pytest.raises(DomainError):
        measure_rss(10.0, "optical", gain=0.0, water=WATER)
    with pytest.raises(DomainError):
        measure_rss(0.5, "acoustic", aco_params=ACO)
    with pytest.raises(DomainError):
        measure_rss(10.0, "radio", aco_params=ACO)


def test_invert_range_clamps_implausibly_strong_levels():
    # louder than the model allows at the minimum range: clamp and flag
    loud = acoustic_level_db(1.0, ACO) + 20.0
    d, clamped = invert_range(loud, "acoustic", aco_params=ACO, with_flag=True)
    assert clamped and d == 1.0


def deployment(edge=60.0, nodes=25, anchors=8, seed=4):
    box = Box.cube(edge)
    rng = np.random.default_rng(seed)
    return Deployment(
        node_positions=box.lo + rng.random((nodes, 3)) * (box.hi - box.lo),
        anchor_positions=box.lo + rng.random((anchors, 3)) * (box.hi - box.lo),
        sink_position=box.top_center(),
        volume=box,
    )


def localize(dep, mode, rng, **kw):
    args = dict(
        opt_params=OpticalParams(),
        water=WATER,
        aco_params=ACO,
        noise_sigma_db_optical=1.0,
        noise_sigma_db_acoustic=1.0,
        weighting="inverse_variance",
    )
    args.update(kw)
    return network_localize(dep, mode, face_set(8), rng, **args)


def test_noise_free_network_localization_is_nearly_exact():
    dep = deployment()
    res = localize(
        dep,
        "acoustic",
        np.random.default_rng(0),
        noise_sigma_db_optical=0.0,
        noise_sigma_db_acoustic=0.0,
    )
    assert res.localized_fraction == 1.0
    assert res.rmse < 1e-4
    assert res.rmse_inclusive == pytest.approx(res.rmse)


def test_network_localize_is_deterministic_given_seed():
    dep = deployment()
    r1 = localize(dep, "hybrid", np.random.default_rng(77))
    r2 = localize(dep, "hybrid", np.random.default_rng(77))
    assert r1.localized_fraction == r2.localized_fraction
    assert r1.rmse == r2.rmse
    for j in r1.estimates:
        assert np.array_equal(r1.estimates[j], r2.estimates[j])


def test_hybrid_pools_both_technologies():
    # matched generators: hybrid sees a superset of each single-tech
    # measurement set and must localize at least as many nodes
    for trial in range(5):
        dep = deployment(seed=trial)
        fracs = {
            mode: localize(dep, mode, np.random.default_rng(trial)).localized_fraction
            for mode in ("acoustic", "optical", "hybrid")
        }
        assert fracs["hybrid"] >= max(fracs["acoustic"], fracs["optical"])


def test_optical_mode_needs_anchor_coverage():
    # harbor water kills optical links: nothing can be localized optically
    dep = deployment()
    res = localize(dep, "optical", np.random.default_rng(1), water=WaterType.preset("harbor"))
    assert res.localized_fraction == 0.0
    assert math.isnan(res.rmse)
    assert res.rmse_inclusive > 0.0


def test_network_localize_validates_inputs():
    dep = deployment()
    with pytest.raises(DomainError):
        localize(dep, "radio", np.random.default_rng(0))
    with pytest.raises(DomainError):
        localize(dep, "hybrid", np.random.default_rng(0), weighting="magic")
    with pytest.raises(DomainError):
        network_localize(dep, "optical", face_set(8), np.random.default_rng(0))
    short = deployment(anchors=3)
    with pytest.raises(DomainError):
        localize(short, "acoustic", np.random.default_rng(0))
