"""Curvilinear (Frenet-frame) kinematic bicycle model and reference-path geometry.

Sign convention used throughout the package: the lateral offset ``d`` and the
path normal are positive to the LEFT of the direction of travel.

Two model variants share the same frame:

* 5-state model ``(s, d, mu, v, delta)`` with controls ``(a, omega)`` --
  acceleration and steering rate.  This is the model the barrier constraints
  and the control QP are written against.
* 7-state model ``(s, d, mu, v, delta, a, omega)`` with controls
  ``(u_jerk, u_steer)`` -- jerk and steering acceleration.  This is the model
  the nominal MPC plans with; it yields smooth ``(a, omega)`` labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import yaml
from scipy.optimize import minimize_scalar

PATH_SCHEMA_VERSION = 1


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class SingularityError(RuntimeError):
    """The Frenet projection is singular (1 - d*kappa <= 0).

    Carries the offending state so callers can diagnose mid-step failures.
    """

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class VehicleParams:
    """Geometry, actuation bounds and step size of the ego vehicle.

    ``l_r``/``l_f`` are the distances from the CoG to the rear/front axle.
    Bounds are (min, max) pairs; ``a``/``omega`` bound the 5-state controls,
    ``jerk``/``steer_acc`` bound the 7-state controls.
    """

    l_r: float = 1.395
    l_f: float = 1.395
    a_bounds: tuple[float, float] = (-6.0, 4.0)
    omega_bounds: tuple[float, float] = (-0.8, 0.8)
    jerk_bounds: tuple[float, float] = (-12.0, 12.0)
    steer_acc_bounds: tuple[float, float] = (-3.0, 3.0)
    dt: float = 0.1

    def __post_init__(self):
        if self.l_r <= 0 or self.l_f <= 0:
            raise ValueError(f"axle distances must be positive, got l_r={self.l_r}, l_f={self.l_f}")
        for name in ("a_bounds", "omega_bounds", "jerk_bounds", "steer_acc_bounds"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy min < max, got ({lo}, {hi})")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass(frozen=True)
class CurvilinearState:
    """Vehicle state relative to a reference path.

    ``a`` and ``omega`` are only meaningful for the 7-state MPC model and
    default to zero for the 5-state model.
    """

    s: float
    d: float
    mu: float
    v: float
    delta: float
    a: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not abs(self.mu) < math.pi:
            raise ValueError(f"|mu| must be < pi, got {self.mu}")
        if self.v < 0:
            raise ValueError(f"speed must be non-negative, got {self.v}")

    def as_array5(self) -> np.ndarray:
        return np.array([self.s, self.d, self.mu, self.v, self.delta], dtype=float)

    def as_array7(self) -> np.ndarray:
        return np.array(
            [self.s, self.d, self.mu, self.v, self.delta, self.a, self.omega], dtype=float
        )

    @staticmethod
    def from_array5(x) -> "CurvilinearState":
        return CurvilinearState(s=float(x[0]), d=float(x[1]), mu=float(x[2]),
                                v=float(x[3]), delta=float(x[4]))

    @staticmethod
    def from_array7(x) -> "CurvilinearState":
        return CurvilinearState(s=float(x[0]), d=float(x[1]), mu=float(x[2]),
                                v=float(x[3]), delta=float(x[4]),
                                a=float(x[5]), omega=float(x[6]))


@dataclass(frozen=True)
class Control:
    """5-state model control: acceleration and steering rate."""

    a: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.omega], dtype=float)

    def clipped(self, params: VehicleParams) -> "Control":
        return Control(
            a=min(max(self.a, params.a_bounds[0]), params.a_bounds[1]),
            omega=min(max(self.omega, params.omega_bounds[0]), params.omega_bounds[1]),
        )


@dataclass(frozen=True)
class ReferencePath:
    """Piecewise-constant-curvature reference path.

    ``segments`` is an ordered tuple of (arc_length, curvature) pairs.
    Curvature is treated as locally constant; segment joints are measure-zero
    and derivatives ignore them (d kappa / d s = 0).
    """

    segments: tuple[tuple[float, float], ...]
    lane_half_width: float
    closed: bool = False

    def __post_init__(self):
        if len(self.segments) == 0:
            raise ValueError("path must have at least one segment")
        object.__setattr__(self, "segments",
                           tuple((float(l), float(k)) for l, k in self.segments))
        for length, kappa in self.segments:
            if length <= 0:
                raise ValueError(f"segment arc_length must be positive, got {length}")
            if abs(kappa) * self.lane_half_width >= 1.0:
                raise ValueError(
                    f"|kappa|*lane_half_width must be < 1, got kappa={kappa}")
        if self.lane_half_width <= 0:
            raise ValueError("lane_half_width must be positive")

    @property
    def length(self) -> float:
        return sum(length for length, _ in self.segments)

    def wrap(self, s: float) -> float:
        """Wrap arc-length progress onto [0, length) for closed paths."""
        if self.closed:
            return s % self.length
        return s


def path_to_dict(path: ReferencePath) -> dict:
    return {
        "schema_version": PATH_SCHEMA_VERSION,
        "lane_half_width": path.lane_half_width,
        "closed": path.closed,
        "segments": [[length, kappa] for length, kappa in path.segments],
    }


def path_from_dict(data: dict) -> ReferencePath:
    return ReferencePath(
        segments=tuple((float(l), float(k)) for l, k in data["segments"]),
        lane_half_width=float(data["lane_half_width"]),
        closed=bool(data["closed"]),
    )


def save_path(path: ReferencePath, file) -> None:
    with open(file, "w") as fh:
        yaml.safe_dump(path_to_dict(path), fh, sort_keys=False)


def load_path(file) -> ReferencePath:
    with open(file) as fh:
        return path_from_dict(yaml.safe_load(fh))


def straight_path(length: float = 500.0, lane_half_width: float = 2.0) -> ReferencePath:
    return ReferencePath(segments=((length, 0.0),), lane_half_width=lane_half_width)


def stadium_track(straight: float = 150.0, curvature: float = 0.02,
                  lane_half_width: float = 2.0) -> ReferencePath:
    """Closed stadium: two straights joined by two half-circle arcs."""
    arc = math.pi / curvature
    return ReferencePath(
        segments=((straight, 0.0), (arc, curvature), (straight, 0.0), (arc, curvature)),
        lane_half_width=lane_half_width,
        closed=True,
    )


def slip_angle(delta: float, params: VehicleParams) -> float:
    """Kinematic slip angle beta = arctan(l_r/(l_r+l_f) * tan(delta)).

    Odd and strictly increasing on (-pi/2, pi/2).
    """
    if not abs(delta) < math.pi / 2:
        raise DomainError(f"|delta| must be < pi/2, got {delta}")
    ratio = params.l_r / (params.l_r + params.l_f)
    return math.atan(ratio * math.tan(delta))


def slip_angle_deriv(delta: float, params: VehicleParams) -> float:
    """d beta / d delta = k sec^2(delta) / (1 + k^2 tan^2(delta)), k = l_r/(l_r+l_f)."""
    if not abs(delta) < math.pi / 2:
        raise DomainError(f"|delta| must be < pi/2, got {delta}")
    k = params.l_r / (params.l_r + params.l_f)
    t = math.tan(delta)
    sec2 = 1.0 + t * t
    return k * sec2 / (1.0 + k * k * t * t)


def curvature_at(path: ReferencePath, s: float) -> float:
    """Piecewise-constant curvature of the containing segment."""
    s = path.wrap(s)
    if s < 0 or s > path.length:
        raise DomainError(f"s={s} outside open path of length {path.length}")
    acc = 0.0
    for length, kappa in path.segments:
        acc += length
        if s <= acc:
            return kappa
    return path.segments[-1][1]


def _projection_factor(d: float, kappa: float, state=None) -> float:
    denom = 1.0 - d * kappa
    if denom <= 0.0:
        raise SingularityError(f"projection singular: 1 - d*kappa = {denom} <= 0", state=state)
    return denom


def drift_bn(state: CurvilinearState, path: ReferencePath, params: VehicleParams) -> np.ndarray:
    """Drift f(x) of the 5-state model; the control matrix g is constant.

    Rows: ds, dd, dmu, dv, ddelta.  Controls enter only through dv = a and
    ddelta = omega, so f has zeros in those rows.
    """
    kappa = curvature_at(path, state.s)
    beta = slip_angle(state.delta, params)
    denom = _projection_factor(state.d, kappa, state)
    c = math.cos(state.mu + beta)
    sn = math.sin(state.mu + beta)
    s_dot = state.v * c / denom
    return np.array([
        s_dot,
        state.v * sn,
        (state.v / params.l_r) * math.sin(beta) - kappa * s_dot,
        0.0,
        0.0,
    ])


def control_matrix_bn() -> np.ndarray:
    """Constant g(x) of the 5-state model: a drives dv, omega drives ddelta."""
    g = np.zeros((5, 2))
    g[3, 0] = 1.0
    g[4, 1] = 1.0
    return g


def dynamics_mpc(state: CurvilinearState, u_jerk: float, u_steer: float,
                 path: ReferencePath, params: VehicleParams) -> np.ndarray:
    """Full 7-state derivative with jerk and steering acceleration as controls."""
    kappa = curvature_at(path, state.s)
    beta = slip_angle(state.delta, params)
    denom = _projection_factor(state.d, kappa, state)
    c = math.cos(state.mu + beta)
    sn = math.sin(state.mu + beta)
    s_dot = state.v * c / denom
    return np.array([
        s_dot,
        state.v * sn,
        (state.v / params.l_r) * math.sin(beta) - kappa * s_dot,
        state.a,
        state.omega,
        u_jerk,
        u_steer,
    ])


def drift_raw(x: np.ndarray, path: ReferencePath, params: VehicleParams) -> np.ndarray:
    """Drift of the 5-state model on a raw array, without state validation.

    Used by finite-difference oracles whose intermediate flow points may
    slightly leave the validated state set (e.g. v a hair below zero).
    """
    s, d, mu, v, delta = x
    kappa = curvature_at(path, s)
    k = params.l_r / (params.l_r + params.l_f)
    beta = math.atan(k * math.tan(delta))
    denom = 1.0 - d * kappa
    if denom <= 0.0:
        raise SingularityError(f"projection singular: 1 - d*kappa = {denom} <= 0")
    c = math.cos(mu + beta)
    sn = math.sin(mu + beta)
    s_dot = v * c / denom
    return np.array([
        s_dot,
        v * sn,
        (v / params.l_r) * math.sin(beta) - kappa * s_dot,
        0.0,
        0.0,
    ])


def _deriv5(x: np.ndarray, u: np.ndarray, path: ReferencePath, params: VehicleParams) -> np.ndarray:
    state = CurvilinearState(s=x[0], d=x[1], mu=x[2], v=max(x[3], 0.0), delta=x[4])
    dx = drift_bn(state, path, params)
    dx[3] += u[0]
    dx[4] += u[1]
    return dx


def _deriv7(x: np.ndarray, u: np.ndarray, path: ReferencePath, params: VehicleParams) -> np.ndarray:
    state = CurvilinearState(s=x[0], d=x[1], mu=x[2], v=max(x[3], 0.0), delta=x[4],
                             a=x[5], omega=x[6])
    return dynamics_mpc(state, u[0], u[1], path, params)


def step_rk4(state: CurvilinearState, control, path: ReferencePath,
             params: VehicleParams, dt: float | None = None,
             model: str = "bn") -> CurvilinearState:
    """Classical 4th-order Runge-Kutta step.

    ``model="bn"`` integrates the 5-state system with ``control`` a
    :class:`Control` (or (a, omega) pair); ``model="mpc"`` integrates the
    7-state system with ``control`` a (u_jerk, u_steer) pair.  Progress ``s``
    wraps modulo the path length on closed paths.  Speed is clamped at zero
    (the kinematic model has no reverse gear).
    """
    if dt is None:
        dt = params.dt
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if model == "bn":
        x = state.as_array5()
        deriv = _deriv5
    elif model == "mpc":
        x = state.as_array7()
        deriv = _deriv7
    else:
        raise ValueError(f"unknown model {model!r}")
    if isinstance(control, Control):
        u = control.as_array()
    else:
        u = np.asarray(control, dtype=float)

    k1 = deriv(x, u, path, params)
    k2 = deriv(x + 0.5 * dt * k1, u, path, params)
    k3 = deriv(x + 0.5 * dt * k2, u, path, params)
    k4 = deriv(x + dt * k3, u, path, params)
    x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    x_new[0] = path.wrap(x_new[0])
    x_new[3] = max(x_new[3], 0.0)
    # keep mu in (-pi, pi)
    x_new[2] = math.remainder(x_new[2], 2.0 * math.pi)
    if model == "bn":
        return CurvilinearState.from_array5(x_new)
    return CurvilinearState.from_array7(x_new)


def reference_pose(path: ReferencePath, s: float) -> tuple[float, float, float]:
    """Cartesian pose (x, y, phi) of the path point at arc length ``s``.

    The path starts at the origin heading along +x.
    """
    s = path.wrap(s)
    if s < 0 or s > path.length:
        raise DomainError(f"s={s} outside open path of length {path.length}")
    x, y, phi = 0.0, 0.0, 0.0
    remaining = s
    for length, kappa in path.segments:
        step = min(remaining, length)
        if step > 0:
            if kappa == 0.0:
                x += step * math.cos(phi)
                y += step * math.sin(phi)
            else:
                phi_new = phi + kappa * step
                x += (math.sin(phi_new) - math.sin(phi)) / kappa
                y -= (math.cos(phi_new) - math.cos(phi)) / kappa
                phi = phi_new
        remaining -= step
        if remaining <= 0:
            break
    return x, y, math.remainder(phi, 2.0 * math.pi)


def global_pose(path: ReferencePath, state: CurvilinearState) -> tuple[float, float, float]:
    """Cartesian CoG pose: path point at s, offset d along the left normal,
    heading = path tangent + mu."""
    x, y, phi = reference_pose(path, state.s)
    x += -math.sin(phi) * state.d
    y += math.cos(phi) * state.d
    return x, y, math.remainder(phi + state.mu, 2.0 * math.pi)


def project_to_path(path: ReferencePath, x: float, y: float,
                    s_hint: float | None = None) -> tuple[float, float]:
    """Project a Cartesian point onto the path, returning (s, d).

    Coarse grid search followed by bounded scalar minimization of the squared
    distance to the centerline.  With ``s_hint`` the search is restricted to a
    window around the hint, which also disambiguates closed-path wraps.
    """

    def dist2(s):
        px, py, _ = reference_pose(path, s)
        return (px - x) ** 2 + (py - y) ** 2

    total = path.length
    if s_hint is None:
        grid = np.linspace(0.0, total, 512)
        s0 = float(grid[np.argmin([dist2(si) for si in grid])])
        lo, hi = s0 - total / 256, s0 + total / 256
    else:
        lo, hi = s_hint - 20.0, s_hint + 20.0
    res = minimize_scalar(lambda s: dist2(path.wrap(s)) if path.closed else
                          dist2(min(max(s, 0.0), total)),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    s_star = path.wrap(res.x) if path.closed else min(max(res.x, 0.0), total)
    px, py, phi = reference_pose(path, s_star)
    # signed lateral offset: positive on the left of the tangent
    d = -(x - px) * math.sin(phi) + (y - py) * math.cos(phi)
    return s_star, d
