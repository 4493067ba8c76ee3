"""Speed profiles: distance along a move segment as a function of time since departure."""
from __future__ import annotations

import bisect
import math
from typing import Iterable

import numpy as np

from .domain import KinodynamicLimits

_SPEED_TOL = 1e-9


def _solve_advance(v0: float, acc: float, d: float, h: float) -> float:
    """Time tau in [0, h] with v0*tau + acc*tau^2/2 = d (d >= 0, motion non-decreasing)."""
    if d <= 0.0:
        return 0.0
    disc = v0 * v0 + 2.0 * acc * d
    if disc < 0.0:
        disc = 0.0
    den = v0 + math.sqrt(disc)
    if den <= 0.0:
        return h
    return min(h, max(0.0, 2.0 * d / den))


class PiecewiseProfile:
    """Piecewise-constant acceleration; knots are (time, speed), positions are integrated.

    ``times[0] == 0`` and speeds at both ends are zero.
    """

    kind = "piecewise"

    def __init__(self, times: Iterable[float], speeds: Iterable[float]):
        t = [float(x) for x in times]
        v = [float(x) for x in speeds]
        if len(t) != len(v) or len(t) < 2:
            raise ValueError("need matching knot lists with at least two knots")
        if t[0] != 0.0:
            raise ValueError("profile must start at t = 0")
        for a, b in zip(t, t[1:]):
            if b < a:
                raise ValueError("knot times must be non-decreasing")
        if min(v) < -_SPEED_TOL:
            raise ValueError("profile not monotone non-decreasing (negative speed)")
        self.times = t
        self.speeds = v
        pos = [0.0]
        for i in range(len(t) - 1):
            pos.append(pos[-1] + 0.5 * (v[i] + v[i + 1]) * (t[i + 1] - t[i]))
        self.positions = pos

    # -- basic properties -------------------------------------------------
    @property
    def duration(self) -> float:
        return self.times[-1]

    @property
    def length(self) -> float:
        return self.positions[-1]

    def accelerations(self) -> list[float]:
        out = []
        for i in range(len(self.times) - 1):
            h = self.times[i + 1] - self.times[i]
            out.append(0.0 if h <= 0 else (self.speeds[i + 1] - self.speeds[i]) / h)
        return out

    @property
    def leading_wait(self) -> float:
        """Length of the initial rest period (zero speed, zero distance)."""
        w = 0.0
        for i in range(len(self.times) - 1):
            if self.speeds[i] == 0.0 and self.speeds[i + 1] == 0.0:
                w = self.times[i + 1]
            else:
                break
        return w

    # -- evaluation -------------------------------------------------------
    def _piece(self, t: float) -> int:
        i = bisect.bisect_right(self.times, t) - 1
        return min(max(i, 0), len(self.times) - 2)

    def _eval(self, t: float) -> tuple[float, float]:
        i = self._piece(t)
        t0, t1 = self.times[i], self.times[i + 1]
        v0, v1 = self.speeds[i], self.speeds[i + 1]
        h = t1 - t0
        tau = t - t0
        acc = 0.0 if h <= 0 else (v1 - v0) / h
        return self.positions[i] + v0 * tau + 0.5 * acc * tau * tau, v0 + acc * tau

    def evaluate(self, t: float) -> tuple[float, float]:
        """(position, speed) at time t in [0, duration]."""
        if t < -1e-12 or t > self.duration + 1e-12:
            raise ValueError(f"t={t} outside [0, {self.duration}]")
        t = min(max(t, 0.0), self.duration)
        if t >= self.duration:
            return self.length, self.speeds[-1]
        return self._eval(t)

    def position(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t >= self.duration:
            return self.length
        return self._eval(t)[0]

    def speed(self, t: float) -> float:
        if t <= 0.0 or t >= self.duration:
            return 0.0
        return self._eval(t)[1]

    def positions_at(self, ts: np.ndarray) -> np.ndarray:
        """Vectorised position for times clipped to [0, duration]."""
        t = np.clip(np.asarray(ts, dtype=float), 0.0, self.duration)
        knots = np.asarray(self.times)
        i = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(knots) - 2)
        acc = np.asarray(self.accelerations())
        tau = t - knots[i]
        v = np.asarray(self.speeds)
        pos = np.asarray(self.positions)[i] + v[i] * tau + 0.5 * acc[i] * tau * tau
        return np.where(t >= self.duration, self.length, pos)

    def sample(self, n: int = 1000) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ts = np.linspace(0.0, self.duration, n)
        pv = np.array([self.evaluate(float(t)) for t in ts])
        return ts, pv[:, 0], pv[:, 1]

    # -- inversion --------------------------------------------------------
    def first_time_at_least(self, s: float) -> float:
        """Earliest t with position(t) >= s (duration if never reached)."""
        if s <= 0.0:
            return 0.0
        p = self.positions
        i = bisect.bisect_left(p, s)  # first knot with p >= s
        if i >= len(p):
            return self.duration
        if i == 0:
            return 0.0
        k = i - 1
        h = self.times[i] - self.times[k]
        acc = 0.0 if h <= 0 else (self.speeds[i] - self.speeds[k]) / h
        return self.times[k] + _solve_advance(self.speeds[k], acc, s - p[k], h)

    def last_time_at_most(self, s: float) -> float:
        """Latest t with position(t) <= s (0 if position already exceeds s at departure)."""
        p = self.positions
        if s < 0.0:
            return 0.0
        k = bisect.bisect_right(p, s) - 1  # last knot with p <= s
        if k >= len(p) - 1:
            return self.duration
        h = self.times[k + 1] - self.times[k]
        acc = 0.0 if h <= 0 else (self.speeds[k + 1] - self.speeds[k]) / h
        return self.times[k] + _solve_advance(self.speeds[k], acc, s - p[k], h)

    # -- transforms -------------------------------------------------------
    def without_leading_wait(self) -> "PiecewiseProfile":
        w = self.leading_wait
        if w <= 0.0:
            return self
        idx = next(i for i, t in enumerate(self.times) if t >= w)
        return PiecewiseProfile([t - w for t in self.times[idx:]], self.speeds[idx:])

    def check_limits(self, limits: KinodynamicLimits, tol: float = 1e-6) -> list[str]:
        """Violations of the speed/acceleration bounds and rest-to-rest endpoints."""
        bad = []
        if abs(self.speeds[0]) > 1e-9 or abs(self.speeds[-1]) > 1e-9:
            bad.append("endpoint speed not zero")
        if min(self.speeds) < -tol or max(self.speeds) > limits.v_max + tol:
            bad.append("speed out of bounds")
        for a in self.accelerations():
            if a < limits.a_min - tol or a > limits.a_max + tol:
                bad.append("acceleration out of bounds")
                break
        return bad

    def to_dict(self) -> dict:
        return {"type": self.kind, "times": list(self.times), "speeds": list(self.speeds)}

    def __repr__(self):
        return f"{type(self).__name__}(T={self.duration:.6g}, L={self.length:.6g})"


class BezierProfile(PiecewiseProfile):
    """C1 spline of quadratic Bezier pieces on a uniform partition of [0, T].

    ``control`` holds 2N+1 position control points; piece i uses
    ``control[2i], control[2i+1], control[2i+2]``.  Speed and acceleration hulls are
    differences of control points, so bounds on them are exact.
    """

    kind = "bezier"

    def __init__(self, duration: float, control: Iterable[float], wait: float = 0.0):
        c = [float(x) for x in control]
        if len(c) < 3 or len(c) % 2 == 0:
            raise ValueError("need 2N+1 control points")
        n = (len(c) - 1) // 2
        wait = float(wait)
        T = float(duration) - wait
        if wait < 0 or T <= 0:
            raise ValueError("duration must exceed the leading wait")
        h = T / n
        times = [wait + i * h for i in range(n)] + [wait + T]
        speeds = [2.0 * (c[1] - c[0]) / h]
        for i in range(n):
            speeds.append(2.0 * (c[2 * i + 2] - c[2 * i + 1]) / h)
        if wait > 0:
            times = [0.0] + times
            speeds = [0.0] + speeds
        self.control = c
        self.T = T  # spline part only
        self.wait = wait
        super().__init__(times, speeds)
        # integrated knots drift by rounding; pin them to the control polygon
        self.positions = ([0.0] if wait > 0 else []) + [c[2 * i] for i in range(n + 1)]

    def _eval(self, t: float) -> tuple[float, float]:
        if t < self.wait:
            return 0.0, 0.0
        t -= self.wait
        n = (len(self.control) - 1) // 2
        h = self.T / n
        i = min(int(t / h), n - 1)
        u = (t - i * h) / h
        c0, c1, c2 = self.control[2 * i: 2 * i + 3]
        pos = (1 - u) ** 2 * c0 + 2 * u * (1 - u) * c1 + u * u * c2
        spd = 2.0 / h * ((1 - u) * (c1 - c0) + u * (c2 - c1))
        return pos, spd

    def without_leading_wait(self) -> "PiecewiseProfile":
        if self.wait > 0:
            return BezierProfile(self.T, self.control)
        return super().without_leading_wait()

    def to_dict(self) -> dict:
        d = {"type": self.kind, "duration": self.duration, "control": list(self.control)}
        if self.wait > 0:
            d["wait"] = self.wait
        return d


def profile_from_dict(d: dict) -> PiecewiseProfile:
    if d["type"] == "piecewise":
        return PiecewiseProfile(d["times"], d["speeds"])
    if d["type"] == "bezier":
        return BezierProfile(d["duration"], d["control"], d.get("wait", 0.0))
    raise ValueError(f"unknown profile type {d['type']!r}")
