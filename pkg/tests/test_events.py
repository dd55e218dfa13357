import numpy as np
import pytest

from heomcorr.correlations import CorrelationPoint, MeasurementAngles
from heomcorr.errors import ParameterError
from heomcorr.events import find_crossings, find_sudden_changes, find_transitions


def make_points(times, classical, discord, lam=None):
    lam = np.full(len(times), 0.5) if lam is None else lam
    angles = MeasurementAngles(0.0, 0.0)
    return [
        CorrelationPoint(t=float(t), mutual_info=float(c + q), classical=float(c),
                         discord=float(q), angles=angles,
                         lambda_lo=float(v), lambda_hi=float(1 - v),
                         lambda_lo_perp=float(v), lambda_hi_perp=float(1 - v))
        for t, c, q, v in zip(times, classical, discord, lam)
    ]


class TestCrossings:
    def test_no_crossing(self):
        t = np.linspace(0, 1, 11)
        pts = make_points(t, np.full(11, 0.8), np.full(11, 0.2))
        assert find_crossings(pts) == []

    def test_linear_interpolation(self):
        pts = make_points([1.0, 1.2], [0.6, 0.4], [0.5, 0.5])
        events = find_crossings(pts)
        assert len(events) == 1
        assert events[0].t == pytest.approx(1.1)
        assert events[0].kind == "crossing"
        assert "quantum" in events[0].detail

    def test_direction_labels(self):
        t = [0.0, 1.0, 2.0, 3.0]
        pts = make_points(t, [0.6, 0.4, 0.4, 0.6], [0.5, 0.5, 0.5, 0.5])
        events = find_crossings(pts)
        assert len(events) == 2
        assert "quantum becomes larger" in events[0].detail
        assert "classical becomes larger" in events[1].detail

    def test_contact_stretch_merges(self):
        # C - Q touches zero over several samples between opposite signs
        gap = np.array([0.2, 0.1, 0.0, 0.0, 0.0, -0.1, -0.2])
        t = np.arange(7.0)
        pts = make_points(t, 0.5 + gap, np.full(7, 0.5))
        events = find_crossings(pts)
        assert len(events) == 1
        assert 1.0 < events[0].t < 5.0

    def test_tangency_without_sign_change(self):
        gap = np.array([0.2, 0.1, 0.0, 0.0, 0.1, 0.2])
        pts = make_points(np.arange(6.0), 0.5 + gap, np.full(6, 0.5))
        events = find_crossings(pts)
        assert len(events) == 1
        assert "tangency" in events[0].detail
        assert events[0].t == pytest.approx(2.5)

    def test_leading_zeros_do_not_emit(self):
        # a Bell start has C = Q exactly at t = 0; no event unless the sign
        # flips later
        gap = np.array([0.0, 0.1, 0.2, 0.3])
        pts = make_points(np.arange(4.0), 0.5 + gap, np.full(4, 0.5))
        assert find_crossings(pts) == []

    def test_determinism(self):
        rng = np.random.default_rng(0)
        t = np.linspace(0, 10, 200)
        c = 0.5 + 0.3 * np.sin(t) + 0.01 * rng.standard_normal(200)
        q = np.full(200, 0.5)
        pts = make_points(t, c, q)
        a = find_crossings(pts)
        b = find_crossings(pts)
        assert a == b

    def test_sign_constant_between_crossings(self):
        rng = np.random.default_rng(1)
        t = np.linspace(0, 10, 300)
        c = 0.5 + 0.2 * np.cos(1.7 * t)
        q = np.full(300, 0.5)
        pts = make_points(t, c, q)
        events = find_crossings(pts)
        cross_times = [e.t for e in events]
        gap = c - q
        for lo, hi in zip(cross_times[:-1], cross_times[1:]):
            inside = gap[(t > lo + 1e-9) & (t < hi - 1e-9)]
            signs = np.sign(inside[np.abs(inside) > 1e-9])
            assert len(set(signs.tolist())) <= 1


class TestSuddenChanges:
    def test_smooth_decay_is_quiet(self):
        # gentle exponentials: second-difference ratio to the median stays
        # well under the 20x default threshold across the window
        t = np.linspace(0, 10, 401)
        c = np.exp(-0.3 * t)
        q = 0.7 * np.exp(-0.45 * t)
        pts = make_points(t, c, q, lam=0.4 + 0.1 * np.exp(-0.3 * t))
        assert find_sudden_changes(pts) == []

    def test_single_kink_detected_once(self):
        t = np.linspace(0, 10, 401)
        kink = 4.0
        c = np.where(t < kink, 1.0 - 0.05 * t, 0.8 - 0.2 * (t - kink))
        q = np.full_like(t, 0.1)
        pts = make_points(t, c, q)
        events = [e for e in find_sudden_changes(pts) if e.series == "classical"]
        assert len(events) == 1
        assert events[0].t == pytest.approx(kink, abs=0.06)
        assert events[0].magnitude == pytest.approx(0.15, rel=0.2)

    def test_all_three_series_monitored(self):
        t = np.linspace(0, 10, 401)
        kink = np.where(t < 5.0, 0.5 - 0.01 * t, 0.45 - 0.15 * (t - 5.0))
        smooth = np.full_like(t, 0.2)
        for series_name, (c, q, lam) in {
            "classical": (kink, smooth, smooth),
            "discord": (smooth, kink, smooth),
            "lambda_lo": (smooth, smooth, kink),
        }.items():
            events = find_sudden_changes(make_points(t, c, q, lam))
            assert {e.series for e in events} == {series_name}

    def test_insufficient_samples(self):
        pts = make_points([0.0, 1.0], [0.5, 0.5], [0.2, 0.2])
        with pytest.raises(ParameterError):
            find_sudden_changes(pts, window=2)

    def test_determinism(self):
        t = np.linspace(0, 10, 301)
        c = np.abs(np.sin(0.9 * t)) * np.exp(-0.2 * t)
        pts = make_points(t, c, 0.5 * c)
        assert find_sudden_changes(pts) == find_sudden_changes(pts)


class TestGridRefinementStability:
    def test_halving_output_spacing_keeps_crossings_put(self):
        # detected crossing times must move by less than the coarse spacing
        # when the output grid is refined twofold
        import heomcorr as hc
        params = hc.BathParameters(eta=0.3, gamma=4.0, beta=2.5)
        model = hc.system_hamiltonian(1.5, 0.0)
        baths = (hc.matsubara_expansion(params, 6),) * 2
        times = {}
        for dt in (0.04, 0.02):
            n = int(round(4.0 / dt))
            grid = np.linspace(0.0, 4.0, n + 1)
            traj = hc.propagate(hc.bell_odd_state(), model, baths, grid, 2)
            pts = hc.correlation_trajectory(traj.times, traj.states)
            times[dt] = [e.t for e in find_crossings(pts)]
        assert len(times[0.04]) == len(times[0.02])
        for coarse, fine in zip(times[0.04], times[0.02]):
            assert abs(coarse - fine) < 0.04


class TestTransitions:
    @staticmethod
    def synthetic_transition(t0=5.0):
        # classical frozen then decaying at t0; quantum the other way round
        t = np.linspace(0, 10, 401)
        c = np.where(t < t0, 0.8, 0.8 - 0.12 * (t - t0))
        q = np.where(t < t0, 0.9 - 0.1 * t, 0.9 - 0.1 * t0)
        return t, c, q

    def test_synthetic_transition_found(self):
        t, c, q = self.synthetic_transition()
        events = find_transitions(make_points(t, c, q))
        assert len(events) == 1
        assert events[0].t == pytest.approx(5.0, abs=0.06)
        assert events[0].kind == "transition"

    def test_both_decaying_is_not_a_transition(self):
        # both slopes clearly above the plateau bound on both sides
        t = np.linspace(0, 10, 401)
        kink = np.where(t < 5.0, 1.0 - 0.1 * t, 0.5 - 0.3 * (t - 5.0))
        q = 1.9 - 0.12 * t
        events = find_transitions(make_points(t, kink, q))
        assert events == []

    def test_coincident_kinks_emit_single_transition(self):
        t, c, q = self.synthetic_transition()
        events = find_transitions(make_points(t, c, q))
        times = [e.t for e in events]
        assert len(times) == len(set(times))
