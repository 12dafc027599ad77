import numpy as np
import pytest

from engelkit.distribution import CATALOG, PfaffianPair
from engelkit.endpoint import (
    AMBIGUOUS,
    REGULAR,
    SINGULAR,
    ControlPath,
    FieldVanishesError,
    adjoint_transport,
    bryant_hsu_test,
    char_control,
    classify_statistic,
    endpoint_jacobian,
    horizontal_integrate,
    sard_sample,
    singular_score,
    _ControlSystem,
)
from engelkit.flow import adaptive_rk45
from engelkit.poly import Point4, SparsePoly

ZERO_PAIR = PfaffianPair(SparsePoly.zero(), SparsePoly.zero())
ORIGIN = Point4.origin()


def test_control_path_validation():
    with pytest.raises(ValueError):
        ControlPath(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        ControlPath(np.array([[1.0, np.inf]]))
    ctrl = ControlPath.constant(0.5, -1.0, 3)
    assert ctrl.n_segments == 3
    assert ControlPath.from_json_dict(ctrl.to_json_dict()).u.tolist() == ctrl.u.tolist()


def test_endpoint_pure_w_direction():
    traj = horizontal_integrate(CATALOG["engel_std"], ORIGIN, ControlPath.constant(0, 1, 8))
    assert np.max(np.abs(traj.endpoint - np.array([0, 0, 0, 1.0]))) < 1e-10


def test_endpoint_pure_z_direction():
    for pair in CATALOG.values():
        traj = horizontal_integrate(pair, ORIGIN, ControlPath.constant(1, 0, 4))
        assert np.max(np.abs(traj.endpoint - np.array([0, 0, 1.0, 0]))) < 1e-10


def test_endpoint_diagonal_control_quadrature():
    # z = t, w = t, xdot = -z, ydot = -z^2/2 gives (-1/2, -1/6, 1, 1)
    traj = horizontal_integrate(CATALOG["engel_std"], ORIGIN, ControlPath.constant(1, 1, 8))
    expected = np.array([-0.5, -1.0 / 6.0, 1.0, 1.0])
    assert np.max(np.abs(traj.endpoint - expected)) < 1e-10


def test_jacobian_against_finite_differences_single_segment():
    res = endpoint_jacobian(
        CATALOG["d224"], ORIGIN, ControlPath.constant(1.0, 0.0, 1), fd_check=True
    )
    assert res.fd_max_discrepancy < 1e-6


def test_jacobian_last_segment_u1_column_moves_z():
    res = endpoint_jacobian(CATALOG["engel_std"], ORIGIN, ControlPath.constant(0, 1, 4))
    last_u1 = res.matrix[:, -2]
    assert abs(last_u1[2]) > 0.1


def test_jacobian_zero_pair_has_zero_xy_rows():
    rng = np.random.default_rng(1)
    ctrl = ControlPath(rng.uniform(-1, 1, size=(6, 2)))
    res = endpoint_jacobian(ZERO_PAIR, ORIGIN, ctrl)
    assert np.max(np.abs(res.matrix[0])) < 1e-13
    assert np.max(np.abs(res.matrix[1])) < 1e-13


def test_singular_score_orthonormal_rows():
    j = np.hstack([np.eye(4), np.zeros((4, 4))])
    assert singular_score(j) == pytest.approx(1.0)


def test_singular_score_rejects_zero():
    with pytest.raises(ValueError):
        singular_score(np.zeros((4, 8)))
    with pytest.raises(ValueError):
        singular_score(np.zeros((3, 8)) + 1.0)


def test_classification_bands():
    assert classify_statistic(1e-8) == SINGULAR
    assert classify_statistic(1e-5) == AMBIGUOUS
    assert classify_statistic(1e-3) == REGULAR


def test_known_singular_curve_engel_std():
    verdict = bryant_hsu_test(CATALOG["engel_std"], ORIGIN, ControlPath.constant(0, 1, 32))
    assert verdict.classification == SINGULAR
    assert verdict.bh_smallest < 1e-8
    assert verdict.sigma_ratio < 1e-8
    # witness covector is the line of -theta2 along z = 0: (0, -1, 0, 0)
    witness = verdict.witness
    assert witness is not None
    assert abs(abs(witness[1]) - 1.0) < 1e-8
    assert np.max(np.abs(np.delete(witness, 1))) < 1e-8
    assert verdict.witness_h_max <= 1e-6


def test_regular_curve_engel_std():
    verdict = bryant_hsu_test(CATALOG["engel_std"], ORIGIN, ControlPath.constant(1, 1, 32))
    assert verdict.classification == REGULAR
    assert verdict.jacobian_classification == REGULAR
    assert verdict.witness is None


def test_char_control_engel_std_is_constant_w_control():
    ctrl = char_control(CATALOG["engel_std"], Point4(0, 0, 0, 0.5), 0.7, 16)
    assert np.max(np.abs(ctrl.u[:, 0])) < 1e-12
    assert np.allclose(ctrl.u[:, 1], 0.7)


def test_char_control_rejects_bad_duration_and_vanishing_field():
    with pytest.raises(ValueError):
        char_control(CATALOG["d224"], Point4(0, 0, 0.1, 0.1), 0.0, 8)
    with pytest.raises(FieldVanishesError):
        char_control(CATALOG["d224"], ORIGIN, 1.0, 8)


@pytest.mark.parametrize("model", ["d224", "d2334a", "d2334b"])
def test_char_control_curves_are_singular(model):
    from engelkit.endpoint import CHAR_ARC_DURATION

    p0 = {
        "d224": Point4(-(0.1**3) / 3.0, -(0.1**3) / 3.0, 0.1, 0.1),
        "d2334a": Point4(0, 0, 0.1, 0.1),
        "d2334b": Point4(0, 0, 0.1, 0.0),
    }[model]
    pair = CATALOG[model]
    ctrl = char_control(pair, p0, CHAR_ARC_DURATION[model], 64)
    verdict = bryant_hsu_test(pair, p0, ctrl)
    assert verdict.classification == SINGULAR, (verdict.bh_smallest, verdict.sigma_ratio)


def test_adjoint_record_structure():
    ctrl = ControlPath.constant(0.3, 0.8, 4)
    record = adjoint_transport(CATALOG["d224"], Point4(0, 0, 0.2, 0.1), ctrl)
    assert record.times[0] == 0.0 and record.times[-1] == 1.0
    assert np.allclose(record.transports[0], np.eye(4))
    assert record.min_abs_det > 1e-6
    assert record.constraint_matrix.shape == (2 * len(record.times), 4)


def test_adjoint_duality_pairing_is_conserved():
    # <lambda(t), dq(t)> is constant when dq solves the variational equation
    # and lambda the adjoint transport along the same trajectory
    rng = np.random.default_rng(2)
    pair = CATALOG["d2334a"]
    sys = _ControlSystem(pair)
    u1, u2 = 0.7, -0.4

    def rhs(t, s):
        q, dq, lam = s[:4], s[4:8], s[8:12]
        a = sys.jac(q, u1, u2)
        return np.concatenate([sys.rhs(q, u1, u2), a @ dq, -a.T @ lam])

    for _ in range(5):
        dq0 = rng.normal(size=4)
        lam0 = rng.normal(size=4)
        s0 = np.concatenate([np.array([0.0, 0.0, 0.3, 0.2]), dq0, lam0])
        _, states, _, _ = adaptive_rk45(rhs, s0, (0.0, 1.0), 1e-10, 1e-12)
        pairings = [s[8:12] @ s[4:8] for s in states]
        assert max(abs(p - pairings[0]) for p in pairings) <= 1e-8


def test_refinement_preserves_endpoint_and_classification():
    rng = np.random.default_rng(3)
    pair = CATALOG["d2334b"]
    ctrl = ControlPath(rng.uniform(-1, 1, size=(8, 2)))
    fine = ctrl.refined()
    end_a = horizontal_integrate(pair, ORIGIN, ctrl).endpoint
    end_b = horizontal_integrate(pair, ORIGIN, fine).endpoint
    assert np.max(np.abs(end_a - end_b)) < 1e-9
    v_a = bryant_hsu_test(pair, ORIGIN, ctrl)
    v_b = bryant_hsu_test(pair, ORIGIN, fine)
    assert v_a.classification == v_b.classification == REGULAR


def test_detectors_agree_on_random_controls():
    rng = np.random.default_rng(4)
    for model, pair in CATALOG.items():
        for _ in range(5):
            ctrl = ControlPath(rng.uniform(-1, 1, size=(16, 2)))
            v = bryant_hsu_test(pair, ORIGIN, ctrl)
            classes = {v.classification, v.jacobian_classification}
            assert classes != {SINGULAR, REGULAR}, model


def test_sard_sample_empty():
    rep = sard_sample("d224", 0, seed=0)
    assert rep.n_curves == 0
    assert rep.endpoints == []


def test_sard_sample_rejects_engel_std():
    with pytest.raises(ValueError):
        sard_sample("engel_std", 5, seed=0)


def test_sard_sample_d224_small():
    rep = sard_sample("d224", 8, seed=9, detector_subset=2)
    assert rep.max_surface_distance <= 1e-6
    assert rep.detector_agreement == 1.0
    assert len(rep.endpoints) == 8
    assert rep.origin_reaching_count is None


def test_sard_sample_d2334a_reports_reference_family():
    rep = sard_sample("d2334a", 4, seed=9, detector_subset=0)
    assert rep.max_surface_distance <= 1e-6
    assert rep.reference_family  # separate curve family, not merged
    # origin-convergent endpoints lie on the invariant axis w = 0, x = y = 0
    for x, y, z, w in rep.endpoints:
        assert abs(x) < 1e-8 and abs(y) < 1e-8 and abs(w) < 1e-8


def test_sard_sample_d2334b_no_origin_approach():
    rep = sard_sample("d2334b", 6, seed=9, detector_subset=2)
    assert rep.origin_reaching_count == 0
    assert rep.min_rho_deviation >= -1e-8
    assert rep.max_surface_distance is None


def test_sard_report_csv(tmp_path):
    rep = sard_sample("d224", 3, seed=9, detector_subset=1)
    out = tmp_path / "cloud.csv"
    with open(out, "w") as fh:
        rep.write_endpoints_csv(fh, ["meta"])
    lines = out.read_text().splitlines()
    assert lines[0] == "# meta"
    assert lines[1] == "x,y,z,w,score"
    assert len(lines) == 5
