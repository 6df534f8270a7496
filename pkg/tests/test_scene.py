"""Scene loading, validation, distances, LoS and link geometry."""

import json
import math

import numpy as np
import pytest

from beamroute.scene import (
    DEFAULT_LOS_THRESHOLD,
    LinkGeometry,
    Scene,
    SceneError,
    direction_from_angles,
    load_scene,
)
from scenefab import full_los, make_scene

BETA_5GHZ = 2.2797266319525994e-05


def doc_text(nodes, params=None, los_override=None):
    doc = {"nodes": nodes, "params": params or {}}
    if los_override is not None:
        doc["los_override"] = los_override
    return json.dumps(doc)


def small_doc(**params):
    nodes = [
        {"id": 0, "kind": "BS", "pos": [0.0, 0.0, 0.0]},
        {"id": 1, "kind": "IRS", "pos": [5.0, 0.0, 0.0]},
        {"id": 2, "kind": "IRS", "pos": [10.0, 0.0, 0.0]},
        {"id": 3, "kind": "IRS", "pos": [5.0, 6.0, 0.0]},
        {"id": 4, "kind": "IRS", "pos": [10.0, 6.0, 0.0]},
        {"id": 5, "kind": "User", "pos": [15.0, 0.0, 0.0]},
        {"id": 6, "kind": "User", "pos": [15.0, 6.0, 0.0]},
    ]
    return doc_text(nodes, params)


class TestLoadScene:
    def test_round_trip_counts(self):
        scene = load_scene(small_doc())
        assert scene.num_irs == 4
        assert scene.num_users == 2
        assert scene.num_nodes == 7
        assert scene.kind(0) == "BS"
        assert scene.user_vertex(1) == 5
        assert scene.user_vertex(2) == 6

    def test_default_params(self):
        scene = load_scene(small_doc())
        assert scene.bs_antennas == 20
        assert scene.elements == 400
        assert scene.wavelength == 0.06
        assert scene.ref_path_gain == pytest.approx(BETA_5GHZ, rel=1e-12)
        assert scene.los_threshold == DEFAULT_LOS_THRESHOLD
        assert scene.min_far_field == 3.0

    def test_beta_follows_wavelength(self):
        scene = load_scene(small_doc(**{"lambda": 0.12}))
        assert scene.ref_path_gain == pytest.approx((0.12 / (4 * math.pi)) ** 2, rel=1e-12)

    def test_explicit_params(self):
        scene = load_scene(small_doc(N=8, M1=4, M2=8, los_threshold=20.0))
        assert scene.bs_antennas == 8
        assert scene.elements == 32
        assert scene.los_threshold == 20.0

    def test_malformed_json(self):
        with pytest.raises(SceneError, match="malformed"):
            load_scene("{nope")

    def test_duplicate_ids(self):
        nodes = [
            {"id": 0, "kind": "BS", "pos": [0, 0, 0]},
            {"id": 0, "kind": "IRS", "pos": [5, 0, 0]},
        ]
        with pytest.raises(SceneError, match="duplicate"):
            load_scene(doc_text(nodes))

    def test_bad_kind_order(self):
        nodes = [
            {"id": 0, "kind": "BS", "pos": [0, 0, 0]},
            {"id": 1, "kind": "User", "pos": [5, 0, 0]},
            {"id": 2, "kind": "IRS", "pos": [10, 0, 0]},
        ]
        with pytest.raises(SceneError, match="ordered"):
            load_scene(doc_text(nodes))

    def test_unknown_kind(self):
        nodes = [{"id": 0, "kind": "Tower", "pos": [0, 0, 0]}]
        with pytest.raises(SceneError, match="kind"):
            load_scene(doc_text(nodes))

    def test_far_field_violation(self):
        nodes = [
            {"id": 0, "kind": "BS", "pos": [0, 0, 0]},
            {"id": 1, "kind": "IRS", "pos": [2.0, 0, 0]},
        ]
        with pytest.raises(SceneError, match="far-field violation"):
            load_scene(doc_text(nodes))

    def test_invalid_path_gain(self):
        with pytest.raises(SceneError, match="invalid path gain"):
            load_scene(small_doc(beta=1.5))
        with pytest.raises(SceneError, match="invalid path gain"):
            load_scene(small_doc(beta=0.0))

    def test_nonpositive_params(self):
        with pytest.raises(SceneError):
            load_scene(small_doc(dA=0.0))
        with pytest.raises(SceneError):
            load_scene(small_doc(N=0))
        with pytest.raises(SceneError):
            load_scene(small_doc(M1=-2))

    def test_unknown_param_rejected(self):
        with pytest.raises(SceneError, match="unknown param"):
            load_scene(small_doc(los_thresh=5.0))

    def test_missing_position_component(self):
        nodes = [{"id": 0, "kind": "BS", "pos": [0, 0]}]
        with pytest.raises(SceneError, match="3-vector"):
            load_scene(doc_text(nodes))


class TestDistance:
    def test_three_four_five(self):
        scene = make_scene([[0, 0, 0], [3, 4, 0]], 1, 0)
        assert scene.distance(0, 1) == 5.0

    def test_frozen_13(self):
        scene = make_scene([[1, 1, 1], [4, 5, 13]], 1, 0)
        assert scene.distance(0, 1) == 13.0

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        pos = rng.uniform(0, 30, size=(6, 3))
        while True:
            d = np.linalg.norm(pos[:, None] - pos[None, :], axis=2)
            np.fill_diagonal(d, 99.0)
            if d.min() >= 3.0:
                break
            pos = rng.uniform(0, 30, size=(6, 3))
        scene = make_scene(pos, 4, 1)
        for i in range(6):
            for j in range(6):
                if i != j:
                    assert scene.distance(i, j) == scene.distance(j, i)

    def test_same_node_error(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0]], 1, 0)
        with pytest.raises(SceneError):
            scene.distance(1, 1)


class TestLos:
    def test_threshold_rule(self):
        scene = make_scene([[0, 0, 0], [6.4, 0, 0], [0, 6.5, 0]], 2, 0)
        assert scene.los_indicator(0, 1) is True  # boundary counts as LoS
        assert scene.los_indicator(0, 2) is False

    def test_symmetric_and_irreflexive(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0], [5, 5, 0], [0, 5, 0]], 3, 0)
        for i in range(4):
            assert scene.los_indicator(i, i) is False
            for j in range(4):
                assert scene.los_indicator(i, j) == scene.los_indicator(j, i)

    def test_override_wins(self):
        override = np.zeros((3, 3), dtype=int)
        override[0, 1] = override[1, 0] = 1
        scene = make_scene(
            [[0, 0, 0], [100, 0, 0], [0, 4, 0]], 2, 0, los_override=override
        )
        assert scene.los_indicator(0, 1) is True   # far apart, forced on
        assert scene.los_indicator(0, 2) is False  # close, forced off

    def test_override_validation(self):
        bad_shape = np.zeros((2, 2), dtype=int)
        with pytest.raises(SceneError, match="los_override"):
            make_scene([[0, 0, 0], [5, 0, 0], [9, 0, 0]], 2, 0, los_override=bad_shape)
        asym = np.zeros((3, 3), dtype=int)
        asym[0, 1] = 1
        with pytest.raises(SceneError, match="symmetric"):
            make_scene([[0, 0, 0], [5, 0, 0], [9, 0, 0]], 2, 0, los_override=asym)
        diag = full_los(3)
        diag[1, 1] = 1
        with pytest.raises(SceneError, match="diagonal"):
            make_scene([[0, 0, 0], [5, 0, 0], [9, 0, 0]], 2, 0, los_override=diag)


class TestLinkGeometry:
    def test_straight_up(self):
        scene = make_scene([[0, 0, 0], [0, 0, 5]], 1, 0)
        g = scene.link_geometry(0, 1)
        assert g.aod_elevation == pytest.approx(0.0, abs=1e-15)
        assert g.aoa_elevation == pytest.approx(math.pi, abs=1e-12)
        assert g.distance == 5.0

    def test_along_x(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0]], 1, 0)
        g = scene.link_geometry(0, 1)
        assert g.aod_elevation == pytest.approx(math.pi / 2, rel=1e-15)
        assert g.aod_azimuth == 0.0

    def test_frozen_azimuth(self):
        scene = make_scene([[0, 0, 0], [3, 4, 0]], 1, 0)
        g = scene.link_geometry(0, 1)
        assert g.aod_azimuth == pytest.approx(0.9272952180016123, rel=1e-14)

    def test_bs_aod_only_for_bs_links(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0], [10, 0, 0]], 2, 0)
        assert scene.link_geometry(0, 1).bs_aod is not None
        assert scene.link_geometry(1, 2).bs_aod is None

    def test_bs_aod_convention(self):
        # broadside +y gives aod 0; along the +x array axis gives pi/2
        scene = make_scene([[0, 0, 0], [0, 5, 0], [5, 0, 0]], 2, 0)
        assert scene.link_geometry(0, 1).bs_aod == pytest.approx(0.0, abs=1e-15)
        assert scene.link_geometry(0, 2).bs_aod == pytest.approx(math.pi / 2, rel=1e-12)

    def test_bs_axis_rotation(self):
        # with the axis turned onto +y, the roles of the two nodes swap
        scene = make_scene(
            [[0, 0, 0], [0, 5, 0], [5, 0, 0]], 2, 0,
            bs_axis_azimuth=math.pi / 2,
        )
        assert scene.link_geometry(0, 1).bs_aod == pytest.approx(math.pi / 2, rel=1e-12)
        assert scene.link_geometry(0, 2).bs_aod == pytest.approx(0.0, abs=1e-12)

    def test_bs_axis_must_be_finite(self):
        with pytest.raises(SceneError, match="bs_axis_azimuth"):
            make_scene([[0, 0, 0], [0, 5, 0]], 1, 0, bs_axis_azimuth=math.inf)

    def test_direction_reconstruction(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            pos = rng.uniform(-20, 20, size=(2, 3))
            if np.linalg.norm(pos[0] - pos[1]) < 3.0:
                continue
            scene = make_scene(pos, 1, 0)
            g = scene.link_geometry(0, 1)
            delta = pos[1] - pos[0]
            unit = delta / np.linalg.norm(delta)
            rebuilt = direction_from_angles(g.aod_azimuth, g.aod_elevation)
            assert np.allclose(rebuilt, unit, atol=1e-12)
            back = direction_from_angles(g.aoa_azimuth, g.aoa_elevation)
            assert np.allclose(back, -unit, atol=1e-12)

    def test_same_node_error(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0]], 1, 0)
        with pytest.raises(SceneError):
            scene.link_geometry(0, 0)


class TestDerivedScenes:
    def test_with_elements_balanced_split(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0]], 1, 0)
        s2 = scene.with_elements(200)
        assert s2.irs_grid == (10, 20)
        assert s2.elements == 200
        s3 = scene.with_elements(64)
        assert s3.irs_grid == (8, 8)
        s4 = scene.with_elements(13)
        assert s4.irs_grid == (1, 13)

    def test_with_antennas(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0]], 1, 0)
        assert scene.with_antennas(7).bs_antennas == 7
        with pytest.raises(SceneError):
            scene.with_antennas(0)

    def test_original_unchanged(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0]], 1, 0)
        scene.with_elements(9)
        assert scene.elements == 400


class TestImmutability:
    def test_positions_read_only(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0]], 1, 0)
        with pytest.raises(ValueError):
            scene.positions[0, 0] = 1.0

    def test_frozen_dataclass(self):
        scene = make_scene([[0, 0, 0], [5, 0, 0]], 1, 0)
        with pytest.raises(AttributeError):
            scene.wavelength = 0.1
