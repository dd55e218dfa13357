"""Feature detection on correlation trajectories.

Three detectors over a list of :class:`~heomcorr.correlations.CorrelationPoint`:

* crossings of the classical and quantum correlation curves (sign changes
  of C - Q, linearly interpolated),
* sudden changes: spikes of the second time difference of C, Q or the lower
  conditional-state eigenvalue, measured against the run's median to stay
  scale-free (the underlying cause is a switch of the optimal measurement
  branch, which kinks the curves),
* sudden transitions: sudden changes where one curve is flat on one side
  while the other decays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = ["Event", "find_crossings", "find_sudden_changes", "find_transitions"]

#: |C - Q| below this counts as "equal" when hunting sign changes
CROSSING_ZERO_TOL = 1e-9

#: second-difference spike threshold, in units of the series median
DEFAULT_THRESHOLD = 20.0

#: half-width (in samples) of the difference stencils
DEFAULT_WINDOW = 2

#: |dX/dt| below this counts as "constant" for transition detection
#: (bits*delta). The frozen side of a real transition in this model still
#: drifts at slopes of order 0.01-0.03 while the decaying side moves at
#: 0.1-0.6, so the bound sits between the two scales.
DEFAULT_PLATEAU_TOL = 0.05

#: series monitored by the sudden-change detector
MONITORED_SERIES = ("classical", "discord", "lambda_lo")


@dataclass(frozen=True)
class Event:
    """A detected trajectory feature, ordered by time.

    ``kind`` is "crossing", "sudden-change" or "transition". For crossings
    ``detail`` names the curve that becomes larger; for sudden changes
    ``series`` names the monitored curve and ``magnitude`` its first
    -derivative jump across the kink.
    """

    kind: str
    t: float
    detail: str
    series: str = ""
    magnitude: float = 0.0


def _times_and_series(points):
    times = np.array([p.t for p in points], dtype=float)
    if len(times) >= 2 and np.any(np.diff(times) <= 0):
        raise ParameterError("points must be ordered by strictly increasing time")
    series = {
        "classical": np.array([p.classical for p in points]),
        "discord": np.array([p.discord for p in points]),
        "lambda_lo": np.array([p.lambda_lo for p in points]),
    }
    return times, series


def find_crossings(points, zero_tol=CROSSING_ZERO_TOL):
    """Times where the classical and quantum correlations exchange order.

    Each sign change of ``C - Q`` between adjacent samples yields one
    crossing at the linearly interpolated root. Samples within ``zero_tol``
    of zero are treated as exact contact: a contact stretch between
    opposite signs still gives a single crossing, while one flanked by
    equal signs is reported as a single tangency event at its midpoint.
    """
    times, series = _times_and_series(points)
    gap = series["classical"] - series["discord"]
    sgn = np.where(np.abs(gap) <= zero_tol, 0, np.sign(gap)).astype(int)
    nz = np.flatnonzero(sgn)
    events = []
    for a, b in zip(nz[:-1], nz[1:]):
        if sgn[a] * sgn[b] < 0:
            t_root = times[a] + (times[b] - times[a]) * gap[a] / (gap[a] - gap[b])
            winner = "quantum" if sgn[a] > 0 else "classical"
            events.append(Event(kind="crossing", t=float(t_root),
                                detail=f"{winner} becomes larger"))
        elif b > a + 1:
            t_mid = 0.5 * (times[a + 1] + times[b - 1])
            side = "classical" if sgn[a] > 0 else "quantum"
            events.append(Event(kind="crossing", t=float(t_mid),
                                detail=f"tangency, {side} stays larger"))
    return events


def _second_difference(values, window, dt):
    """Centered second difference with stride ``window``; valid core only."""
    w = window
    return (values[2 * w:] - 2.0 * values[w:-w] + values[:-2 * w]) / (w * dt) ** 2


def _spike_events(times, values, name, window, threshold, dt):
    d2 = _second_difference(values, window, dt)
    scale = float(np.median(np.abs(d2)))
    # a flat series has zero median; fall back to a relative floor so exact
    # zeros stay unflagged but genuine kinks still register
    scale = max(scale, 1e-12 * float(np.max(np.abs(d2), initial=0.0)), 1e-300)
    flagged = np.abs(d2) > threshold * scale
    core = np.flatnonzero(flagged)
    events = []
    i = 0
    while i < len(core):
        j = i
        while j + 1 < len(core) and core[j + 1] == core[j] + 1:
            j += 1
        run = core[i:j + 1]
        peak = run[int(np.argmax(np.abs(d2[run])))]
        center = peak + window          # offset into the full sample array
        slope_right = (values[center + window] - values[center]) / (window * dt)
        slope_left = (values[center] - values[center - window]) / (window * dt)
        jump = float(abs(slope_right - slope_left))
        events.append(Event(
            kind="sudden-change", t=float(times[center]), series=name,
            magnitude=jump,
            detail=(f"{name}: derivative jump {jump:.6g}, "
                    f"second-difference peak {abs(d2[peak]) / scale:.1f}x median"),
        ))
        i = j + 1
    return events


def find_sudden_changes(points, window=DEFAULT_WINDOW, threshold=DEFAULT_THRESHOLD):
    """Kinks of the classical, quantum and lower-eigenvalue curves.

    Flags samples where the magnitude of the second central difference
    (stride ``window``) exceeds ``threshold`` times the series' own median;
    consecutive flagged samples merge into one event at the peak. One event
    per affected series is emitted, so a kink shared by C and Q appears
    once per curve with the same time stamp.
    """
    if len(points) < 2 * window + 1:
        raise ParameterError(
            f"need at least {2 * window + 1} samples for window={window}, "
            f"got {len(points)}"
        )
    times, series = _times_and_series(points)
    dt = float(np.median(np.diff(times)))
    events = []
    for name in MONITORED_SERIES:
        events.extend(_spike_events(times, series[name], name, window, threshold, dt))
    events.sort(key=lambda e: (e.t, e.series))
    return events


def find_transitions(points, plateau_tol=DEFAULT_PLATEAU_TOL,
                     window=DEFAULT_WINDOW, threshold=DEFAULT_THRESHOLD):
    """Sudden changes where one correlation is frozen while the other decays.

    For every sudden change of C or Q, one-sided slopes of both curves are
    measured just outside the kink; the event is a transition when, on
    either side, one curve's slope magnitude stays below ``plateau_tol``
    while the other curve's slope is below ``-plateau_tol``. The signature
    is a before/after contrast, so kinks too close to the data boundary for
    both sides to be measured are never classified. Coincident C and Q
    kinks produce a single transition event.
    """
    times, series = _times_and_series(points)
    dt = float(np.median(np.diff(times)))
    kinks = [e for e in find_sudden_changes(points, window, threshold)
             if e.series in ("classical", "discord")]
    c = series["classical"]
    q = series["discord"]
    n = len(times)
    w = window
    seen = set()
    events = []
    for ev in kinks:
        i = int(np.argmin(np.abs(times - ev.t)))
        if i in seen:
            continue
        seen.add(i)
        if i - 1 - w < 0 or i + 1 + w >= n:
            continue
        sides = [((c[i - 1] - c[i - 1 - w]) / (w * dt),
                  (q[i - 1] - q[i - 1 - w]) / (w * dt), "before"),
                 ((c[i + 1 + w] - c[i + 1]) / (w * dt),
                  (q[i + 1 + w] - q[i + 1]) / (w * dt), "after")]
        for dc, dq, side in sides:
            if abs(dc) < plateau_tol and dq < -plateau_tol:
                flat, decaying = "classical", "quantum"
            elif abs(dq) < plateau_tol and dc < -plateau_tol:
                flat, decaying = "quantum", "classical"
            else:
                continue
            events.append(Event(
                kind="transition", t=ev.t, series=ev.series,
                magnitude=ev.magnitude,
                detail=f"{flat} constant {side} the event while {decaying} decays",
            ))
            break
    events.sort(key=lambda e: e.t)
    return events
