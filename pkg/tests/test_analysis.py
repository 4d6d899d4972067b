import math
import os

import pytest

from lv3.analysis import (
    DegenerateLeaf,
    LevelOutOfRange,
    OnEquilibrium,
    _run_jobs,
    alpha_limit,
    bifurcation_scan,
    boundary_margin,
    certified_integral_names,
    complement_edge_distance,
    default_section,
    detect_periodic,
    face_connection_abscissae,
    face_field,
    face_leaf,
    heteroclinic_match,
    make_ray,
    omega_limit,
    orbit_integral_drift,
    period_profile,
    sample_interior,
    verify_theorem_a,
    verify_theorem_b,
)
from lv3.darboux import SignError
from lv3.equilibria import interior_segment_R, limit_segments
from lv3.flow import DormandPrince45
from lv3.params import ParamVector
from lv3.rng import SplitMix64
from conftest import rand_params


# Regression constants: first computed by this implementation, then frozen.
PERIOD_2332 = 5.333659910622081
PERIOD_1111 = 15.894263411701777


def test_detect_periodic_on_manifold():
    orbit = detect_periodic(ParamVector(2, 3, 3, 2), (0.2, 0.2, 0.2))
    assert orbit is not None
    assert orbit.closure_error <= 1e-6
    assert orbit.period == pytest.approx(PERIOD_2332, rel=1e-6)
    assert len(orbit.crossings) >= 3


def test_detect_periodic_off_manifold_returns_none():
    assert detect_periodic(ParamVector(2, 1, 2, 1), (0.2, 0.2, 0.2)) is None


def test_detect_periodic_unit_parameters_with_conserved_integrals():
    k = ParamVector(1, 1, 1, 1)
    orbit = detect_periodic(k, (0.1, 0.1, 0.1))
    assert orbit is not None
    assert orbit.period == pytest.approx(PERIOD_1111, rel=1e-6)
    drift = orbit_integral_drift(k, (0.1, 0.1, 0.1), orbit.period)
    assert set(drift) == {"H", "V"}
    assert max(drift.values()) <= 1e-8


def test_detect_periodic_rejects_equilibrium_start():
    with pytest.raises(OnEquilibrium):
        detect_periodic(ParamVector(1, 1, 1, 1), (0.25, 0.25, 0.25))
    with pytest.raises(ValueError):
        detect_periodic(ParamVector(1, 1, 1, 1), (0.3, 0.0, 0.4))


def test_omega_and_alpha_limits_off_manifold():
    k = ParamVector(2, 1, 2, 1)
    om = omega_limit(k, (0.2, 0.2, 0.2))
    assert om.kind == "point-on-s_py"
    assert om.distance <= 1e-4
    assert om.terminal_speed <= 1e-8
    al = alpha_limit(k, (0.2, 0.2, 0.2))
    assert al.kind == "point-on-s_xz"
    assert al.distance <= 1e-4


def test_limit_roles_swap_under_negation():
    k = ParamVector(-2, -1, -2, -1)
    assert omega_limit(k, (0.2, 0.2, 0.2)).kind == "point-on-s_xz"
    assert alpha_limit(k, (0.2, 0.2, 0.2)).kind == "point-on-s_py"


def test_omega_limit_detects_periodicity_on_manifold():
    rep = omega_limit(ParamVector(2, 3, 3, 2), (0.2, 0.2, 0.2))
    assert rep.kind == "periodic"
    assert rep.closure_error <= 1e-6
    assert rep.period == pytest.approx(PERIOD_2332, rel=1e-6)


def test_non_ps_limits_live_on_boundary():
    k = ParamVector(1, -1, 1, 1)
    for rep in (omega_limit(k, (0.2, 0.2, 0.2)), alpha_limit(k, (0.2, 0.2, 0.2))):
        assert rep.kind in (
            "point-on-R_py",
            "point-on-R_xz",
            "boundary-unclassified",
            "inconclusive",
        )
        if rep.kind != "inconclusive":
            assert abs(boundary_margin(rep.witness)) <= 1e-4


def test_sign_symmetry_of_limit_kinds(rng):
    for _ in range(8):
        k = rand_params(rng)
        p = (0.2 + 0.2 * rng.uniform(), 0.2, 0.2)
        assert omega_limit(k, p, horizon=300.0).kind == alpha_limit(-k, p, horizon=300.0).kind


def test_inconclusive_on_tiny_horizon():
    rep = omega_limit(ParamVector(2, 1, 2, 1), (0.2, 0.2, 0.2), horizon=0.5)
    assert rep.kind == "inconclusive"
    assert rep.horizon_used <= 0.5 + 1e-12


# --- boundary faces -----------------------------------------------------------


def test_face_leaf_critical_level():
    leaf = face_leaf("Y", ParamVector(1, 1, 1, 1), 0.25)
    assert len(leaf.intersections) == 1
    assert leaf.intersections[0].coords == pytest.approx((0.5, 0.0, 0.5), abs=1e-12)


def test_face_leaf_two_symmetric_intersections():
    leaf = face_leaf("Y", ParamVector(1, 1, 1, 1), 0.2)
    (a, b) = leaf.intersections
    assert a.x == pytest.approx(1.0 - b.x, abs=1e-12)
    for p in leaf.intersections:
        assert abs((1.0 - p.x) * p.x - 0.2) <= 1e-12


def test_face_leaf_levels_approach_edge_endpoints():
    k = ParamVector(2, 1, 2, 1)
    lo_roots = []
    hi_roots = []
    for level in (1e-2, 1e-4, 1e-6):
        leaf = face_leaf("Sigma", k, level)
        (a, b) = leaf.intersections
        lo_roots.append(a.x)
        hi_roots.append(b.x)
    assert lo_roots[0] > lo_roots[1] > lo_roots[2]
    assert hi_roots[0] < hi_roots[1] < hi_roots[2]
    assert lo_roots[-1] < 1e-3 and hi_roots[-1] > 1.0 - 1e-5


def test_face_leaf_errors():
    k = ParamVector(2, 1, 2, 1)
    with pytest.raises(LevelOutOfRange):
        face_leaf("Y", k, 1.0)
    with pytest.raises(LevelOutOfRange):
        face_leaf("Y", k, 0.0)
    with pytest.raises(SignError):
        face_leaf("Y", ParamVector(1, 1, -1, 1), 0.1)


def test_face_orbits_stay_on_their_leaf():
    k = ParamVector(2, 1, 2, 1)
    gamma = k.k3 / k.k4
    start = (0.3, 0.5)
    level = start[1] * start[0] ** gamma
    stepper = DormandPrince45(face_field("Y", k), start, 30.0)
    worst = 0.0
    while not stepper.finished:
        stepper.step()
        x, z = stepper.y
        worst = max(worst, abs(math.log(z) + gamma * math.log(x) - math.log(level)))
    assert worst <= 1e-8


def test_heteroclinic_match_closes_on_manifold():
    match = heteroclinic_match(ParamVector(2, 3, 3, 2), 0.2)
    assert match.matched
    assert abs(match.x1 - match.x2) <= 1e-9


def test_heteroclinic_match_open_off_manifold():
    match = heteroclinic_match(ParamVector(2, 1, 2, 1), 0.2)
    assert not match.matched
    assert abs(match.x1 - match.x2) > 1e-3


def test_heteroclinic_flow_cross_validation():
    for k in (ParamVector(2, 3, 3, 2), ParamVector(2, 1, 2, 1)):
        match = heteroclinic_match(k, 0.2)
        back_y, fwd_y = face_connection_abscissae(k, "Y", 0.2)
        flow_x1 = back_y if abs(back_y - 0.2) > abs(fwd_y - 0.2) else fwd_y
        assert abs(flow_x1 - match.x1) <= 1e-4
        back_s, fwd_s = face_connection_abscissae(k, "Sigma", 0.2)
        flow_x2 = back_s if abs(back_s - 0.2) > abs(fwd_s - 0.2) else fwd_s
        assert abs(flow_x2 - match.x2) <= 1e-4


def test_heteroclinic_degenerate_abscissa():
    k = ParamVector(2, 1, 2, 1)
    with pytest.raises(DegenerateLeaf):
        heteroclinic_match(k, k.k3 / (k.k3 + k.k4))


def test_match_dichotomy_tracks_discriminant(rng):
    # same-sign grid mixing exact-manifold and far-off points
    grid = [
        ParamVector(1, 2, 2, 1),
        ParamVector(2, 3, 3, 2),
        ParamVector(0.5, 1.5, 1.5, 0.5),
        ParamVector(2, 1, 2, 1),
        ParamVector(1, 2, 1, 2),
        ParamVector(3, 1, 2, 1),
    ]
    from lv3.params import discriminant

    for k in grid:
        match = heteroclinic_match(k, 0.15)
        assert match.matched == (abs(discriminant(k)) <= 1e-12)


# --- harnesses -----------------------------------------------------------------


def test_verify_theorem_a_center_regime():
    report = verify_theorem_a(ParamVector(2, 3, 3, 2), 5)
    assert report["part"] == "a"
    assert report["passed"]
    assert report["n_periodic"] == 5
    assert report["segment_residual_max"] <= 1e-12
    assert report["worst_drift"] <= 1e-8
    assert report["face_matches"] == [True, True, True]


def test_verify_theorem_a_falls_back_to_part_b():
    report = verify_theorem_a(ParamVector(2, 1, 2, 1), 4)
    assert report["part"] == "b"
    assert report["hypothesis_mismatch"]
    assert report["n_periodic"] == 0
    # same-sign off-manifold parameters: boundary loops must stay open
    assert report["face_matches"] == [False, False, False]
    assert report["passed"]


def test_verify_theorem_a_part_b_without_sign_structure():
    report = verify_theorem_a(ParamVector(1, -1, 1, 1), 4)
    assert report["part"] == "b"
    assert "face_matches" not in report
    assert report["passed"]


def test_detection_rate_on_center_regime():
    # >= 95% of random interior starts must yield a periodic orbit; the
    # margin-excluded sampler should in fact give them all
    k = ParamVector(2, 3, 3, 2)
    starts = sample_interior(k, 100, SplitMix64(77))
    detected = sum(detect_periodic(k, p) is not None for p in starts)
    assert detected >= 95


def test_verify_theorem_b_checked_and_passed():
    report = verify_theorem_b(ParamVector(2, 1, 2, 1), 5)
    assert report["status"] == "checked"
    assert report["expected"] == {"alpha": "s_xz", "omega": "s_py"}
    assert report["passed"]
    assert report["n_fail"] == 0
    assert report["min_complement_distance"] > 1e-3
    assert report["face_matches"] == [False, False, False]


def test_verify_theorem_b_hypothesis_mismatch():
    report = verify_theorem_b(ParamVector(2, 3, 3, 2), 3)
    assert report["status"] == "hypothesis-mismatch"
    assert not report["passed"]


def test_verify_theorem_b_negated_regime():
    report = verify_theorem_b(ParamVector(-2, -1, -2, -1), 4)
    assert report["expected"] == {"alpha": "s_py", "omega": "s_xz"}
    assert report["passed"]


# --- period profile and scan -----------------------------------------------------


def test_period_profile_strictly_increasing():
    k = ParamVector(1, 1, 1, 1)
    offsets = [0.02, 0.07, 0.12, 0.17]
    points = make_ray((0.25, 0.25, 0.25), (0.0, -1.0, 0.0), offsets)
    report = period_profile(k, points)
    assert report["n_conclusive"] == 4
    assert report["strictly_increasing"]
    periods = [row["period"] for row in report["rows"]]
    assert periods[0] == pytest.approx(4 * math.pi, rel=0.05)


def test_period_profile_propagates_equilibrium_error():
    k = ParamVector(1, 1, 1, 1)
    with pytest.raises(OnEquilibrium):
        period_profile(k, [(0.25, 0.25, 0.25)])


def test_bifurcation_scan_slice():
    samples = [({"t": t}, ParamVector(2.0, t, 2.0, t)) for t in (1.5, 1.75, 2.0, 2.25, 2.5)]
    rows = bifurcation_scan(samples)
    kinds = [row["probe_kind"] for row in rows]
    assert kinds == [
        "point-on-s_py",
        "point-on-s_py",
        "periodic",
        "point-on-s_xz",
        "point-on-s_xz",
    ]
    regimes = [row["regime"] for row in rows]
    assert regimes[0].endswith("S+") and regimes[2].endswith("S") and regimes[-1].endswith("S-")
    assert rows[2]["discriminant"] == 0.0


def test_bifurcation_scan_handles_zero_vector():
    rows = bifurcation_scan([({"t": 0.0}, ParamVector(0, 0, 0, 0))])
    assert rows[0]["regime"] == "zero"


def test_bifurcation_scan_mirrored_slice():
    # negating the slice mirrors the diagram: same discriminants, sign
    # regimes flipped, probe outcomes swapped between the two segments
    ts = (1.5, 2.0, 2.5)
    rows = bifurcation_scan([({"t": t}, ParamVector(2.0, t, 2.0, t)) for t in ts])
    mirrored = bifurcation_scan([({"t": t}, ParamVector(-2.0, -t, -2.0, -t)) for t in ts])
    swap = {"point-on-s_py": "point-on-s_xz", "point-on-s_xz": "point-on-s_py",
            "periodic": "periodic"}
    for row, mrow in zip(rows, mirrored):
        assert mrow["discriminant"] == row["discriminant"]
        assert mrow["regime"].replace("PS-", "PS+") == row["regime"]
        assert mrow["probe_kind"] == swap[row["probe_kind"]]


# --- sampling and helpers ----------------------------------------------------------


def test_sample_interior_respects_exclusions():
    k = ParamVector(2, 3, 3, 2)
    rng = SplitMix64(7)
    segment = interior_segment_R(k)
    for p in sample_interior(k, 50, rng):
        assert boundary_margin(p.coords) > 1e-3
        assert segment.distance_to(p) > 1e-3


def test_complement_edge_distance():
    k = ParamVector(2, 1, 2, 1)
    s_py, _ = limit_segments(k)
    mid = s_py.point_at(0.5)
    # middle of the distinguished segment is 1/6 of the edge away from the
    # complement (in abscissa), measured along the edge direction
    expected = (0.5 - 1 / 3) * math.sqrt(2.0)
    assert complement_edge_distance(k, mid.coords, "py") == pytest.approx(expected, abs=1e-12)
    assert complement_edge_distance(k, (0.0, 0.5, 0.0), "xz") == pytest.approx(
        0.5 - 1 / 3, abs=1e-12
    )


def test_default_section_contains_interior_segment():
    k = ParamVector(2, 3, 3, 2)
    section = default_section(k)
    segment = interior_segment_R(k)
    for p in segment.sample(10):
        assert abs(section.value(p.coords)) <= 1e-12


def test_run_jobs_threaded_matches_sequential(monkeypatch):
    items = list(range(30))

    def job(i):
        return i * i

    sequential = _run_jobs(job, items)
    monkeypatch.setenv("LV3_THREADS", "4")
    assert _run_jobs(job, items) == sequential


def test_certified_names_prefer_primary_pair():
    assert certified_integral_names(ParamVector(2, 3, 3, 2)) == ("H", "V")
    assert certified_integral_names(ParamVector(2, 0, 0, 0)) == ("H", "Vtilde")
    assert certified_integral_names(ParamVector(2, 1, 2, 1)) == ()
