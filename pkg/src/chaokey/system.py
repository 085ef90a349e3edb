"""The nine-dimensional quaternion Chen system and its fixed-step integrator.

The complex Chen system is lifted to quaternions by writing
``x1 = u1 + i u2 + j u3 + k u4``, ``x2 = u5 + i u6 + j u7 + k u8`` and
``x3 = u9``. Separating components gives nine real ODEs::

    u1' = a(u5 - u1)          u5' = (b - a)u1 + b u5 - u1 u9
    u2' = a(u6 - u2)          u6' = (b - a)u2 + b u6 - u2 u9
    u3' = a(u7 - u3)          u7' = (b - a)u3 + b u7 - u3 u9
    u4' = a(u8 - u4)          u8' = (b - a)u4 + b u8 - u4 u9
    u9' = u1 u5 + u2 u6 + u3 u7 - c u9

The ninth equation has no ``u4 u8`` term by default. The quaternion
product would normally contribute one, so ``include_u4u8=True`` adds it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .errors import InvalidArg, NonFinite

DIM = 9
DEFAULT_DT = 1e-3
DEFAULT_TRANSIENT = 50_000
REFERENCE_INIT = (0.1,) * DIM


@dataclass(frozen=True)
class SystemParams:
    a: float = 27.0
    b: float = 23.0
    c: float = 1.0
    include_u4u8: bool = False

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidArg(f"parameter {name} must be a positive finite number, got {v!r}")

    @property
    def divergence(self) -> float:
        """Trace of the Jacobian, identical at every state."""
        return 4.0 * (self.b - self.a) - self.c

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, 1.0 if self.include_u4u8 else 0.0])

    def replace(self, **changes) -> "SystemParams":
        fields = dict(a=self.a, b=self.b, c=self.c, include_u4u8=self.include_u4u8)
        fields.update(changes)
        return SystemParams(**fields)


@dataclass(frozen=True, eq=False)
class Trajectory:
    dt: float
    transient_steps: int
    samples: np.ndarray  # (steps, 9)
    stride: int = 1

    def __len__(self):
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        start = self.transient_steps + self.stride
        return (start + self.stride * np.arange(len(self.samples))) * self.dt

    def component(self, i: int) -> np.ndarray:
        return self.samples[:, i]

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


# --- numba kernels --------------------------------------------------------
# Parameter arrays are laid out as [a, b, c, u4u8_flag].


@numba.njit(cache=True, nogil=True)
def _rhs(u, prm, out):
    a = prm[0]
    b = prm[1]
    c = prm[2]
    for k in range(4):
        out[k] = a * (u[4 + k] - u[k])
        out[4 + k] = (b - a) * u[k] + b * u[4 + k] - u[k] * u[8]
    s = u[0] * u[4] + u[1] * u[5] + u[2] * u[6]
    if prm[3] != 0.0:
        s += u[3] * u[7]
    out[8] = s - c * u[8]


@numba.njit(cache=True, nogil=True)
def _jac(u, prm, J):
    a = prm[0]
    b = prm[1]
    c = prm[2]
    J[:, :] = 0.0
    for k in range(4):
        J[k, k] = -a
        J[k, 4 + k] = a
        J[4 + k, k] = (b - a) - u[8]
        J[4 + k, 4 + k] = b
        J[4 + k, 8] = -u[k]
    nk = 4 if prm[3] != 0.0 else 3
    for k in range(nk):
        J[8, k] = u[4 + k]
        J[8, 4 + k] = u[k]
    J[8, 8] = -c


@numba.njit(cache=True, nogil=True)
def _rk4(u, prm, dt, k1, k2, k3, k4, tmp):
    n = u.shape[0]
    _rhs(u, prm, k1)
    for i in range(n):
        tmp[i] = u[i] + 0.5 * dt * k1[i]
    _rhs(tmp, prm, k2)
    for i in range(n):
        tmp[i] = u[i] + 0.5 * dt * k2[i]
    _rhs(tmp, prm, k3)
    for i in range(n):
        tmp[i] = u[i] + dt * k3[i]
    _rhs(tmp, prm, k4)
    for i in range(n):
        u[i] = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@numba.njit(cache=True, nogil=True)
def _finite(u):
    for i in range(u.shape[0]):
        if not np.isfinite(u[i]):
            return False
    return True


@numba.njit(cache=True, nogil=True)
def _integrate(u0, prm, dt, steps, transient, stride):
    """Returns (samples, failed_at); failed_at is -1 on success."""
    n = u0.shape[0]
    u = u0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    out = np.empty((steps, n))
    for i in range(transient):
        _rk4(u, prm, dt, k1, k2, k3, k4, tmp)
        if not _finite(u):
            return out, i
    for s in range(steps):
        for _ in range(stride):
            _rk4(u, prm, dt, k1, k2, k3, k4, tmp)
        if not _finite(u):
            return out, transient + s * stride
        out[s, :] = u
    return out, -1


@numba.njit(cache=True, nogil=True)
def _step(u, prm, dt):
    n = u.shape[0]
    _rk4(u, prm, dt, np.empty(n), np.empty(n), np.empty(n), np.empty(n), np.empty(n))
    return u


# --- public API -------------------------------------------------------------


def _state(s) -> np.ndarray:
    u = np.asarray(s, dtype=np.float64)
    if u.shape != (DIM,):
        raise InvalidArg(f"state must have {DIM} components, got shape {u.shape}")
    return u


def derivative(s, p: SystemParams) -> np.ndarray:
    u = _state(s)
    out = np.empty(DIM)
    _rhs(u, p.as_array(), out)
    return out


def jacobian(s, p: SystemParams) -> np.ndarray:
    u = _state(s)
    J = np.empty((DIM, DIM))
    _jac(u, p.as_array(), J)
    return J


def rk4_step(s, p: SystemParams, dt: float) -> np.ndarray:
    if dt < 0:
        raise InvalidArg("dt must be non-negative")
    u = _step(_state(s).copy(), p.as_array(), float(dt))
    if not np.all(np.isfinite(u)):
        raise NonFinite("RK4 step produced a non-finite state")
    return u


def simulate(init, p: SystemParams, dt: float = DEFAULT_DT, steps: int = 10_000,
             transient: int = DEFAULT_TRANSIENT, stride: int = 1) -> Trajectory:
    """Integrate ``transient + steps * stride`` RK4 steps and keep the tail.

    Every ``stride``-th state after the transient is retained, so the result
    always holds exactly ``steps`` samples.
    """
    if int(steps) <= 0:
        raise InvalidArg(f"steps must be positive, got {steps}")
    if transient < 0 or stride < 1:
        raise InvalidArg("transient must be >= 0 and stride >= 1")
    if not dt > 0:
        raise InvalidArg(f"dt must be positive, got {dt}")
    u0 = _state(init)
    if not np.all(np.isfinite(u0)):
        raise NonFinite("initial state is not finite")
    samples, failed = _integrate(u0.copy(), p.as_array(), float(dt),
                                 int(steps), int(transient), int(stride))
    if failed >= 0:
        raise NonFinite(f"trajectory diverged at integration step {failed}")
    return Trajectory(dt=float(dt), transient_steps=int(transient), samples=samples,
                      stride=int(stride))


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"u{i + 1}" for i in range(DIM)])
        for t, row in zip(traj.times, traj.samples):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
