"""Dynamics diagnostics: Lyapunov spectrum, bifurcation scans, the 0-1 test
for chaos, spectral entropy and C0 complexity."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numba
import numpy as np

from ._parallel import pmap
from .errors import DegenerateInput, InvalidArg, NonFinite
from .system import (DEFAULT_DT, DEFAULT_TRANSIENT, DIM, REFERENCE_INIT, SystemParams,
                     _jac, _rhs, simulate)

PARAM_NAMES = ("a", "b", "c")


# --- Lyapunov spectrum ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LyapunovSpectrum:
    exponents: np.ndarray  # sorted descending
    settle_time: float
    divergence: float | None = None
    trace_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    trace: np.ndarray = field(default_factory=lambda: np.empty((0, DIM)))

    @property
    def total(self) -> float:
        return float(np.sum(self.exponents))

    @property
    def sum_error(self) -> float | None:
        if self.divergence is None:
            return None
        return abs(self.total - self.divergence)

    def sign_pattern(self, zero_tol: float = 0.05) -> str:
        return "".join("0" if abs(x) < zero_tol else ("+" if x > 0 else "-")
                       for x in self.exponents)

    def to_dict(self) -> dict:
        return {
            "exponents": [float(x) for x in self.exponents],
            "sum": self.total,
            "divergence": self.divergence,
            "settle_time": self.settle_time,
            "sign_pattern": self.sign_pattern(),
        }


@numba.njit(cache=True, nogil=True)
def _benettin(f, jac, u0, prm, dt, nsteps, ntransient, reorth, trace_every):
    n = u0.shape[0]
    u = u0.copy()
    Q = np.eye(n)
    J = np.empty((n, n))
    K1 = np.empty((n, n))
    K2 = np.empty((n, n))
    K3 = np.empty((n, n))
    K4 = np.empty((n, n))
    Qs = np.empty((n, n))
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    us = np.empty(n)
    acc = np.zeros(n)
    n_trace = 0
    if trace_every > 0:
        n_trace = (nsteps - ntransient) // (reorth * trace_every) + 1
    tr_t = np.empty(n_trace)
    tr = np.empty((n_trace, n))
    ti = 0
    nqr = 0
    for step in range(nsteps):
        f(u, prm, k1)
        jac(u, prm, J)
        np.dot(J, Q, K1)
        for i in range(n):
            us[i] = u[i] + 0.5 * dt * k1[i]
        Qs[:, :] = Q + 0.5 * dt * K1
        f(us, prm, k2)
        jac(us, prm, J)
        np.dot(J, Qs, K2)
        for i in range(n):
            us[i] = u[i] + 0.5 * dt * k2[i]
        Qs[:, :] = Q + 0.5 * dt * K2
        f(us, prm, k3)
        jac(us, prm, J)
        np.dot(J, Qs, K3)
        for i in range(n):
            us[i] = u[i] + dt * k3[i]
        Qs[:, :] = Q + dt * K3
        f(us, prm, k4)
        jac(us, prm, J)
        np.dot(J, Qs, K4)
        for i in range(n):
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        Q += dt / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        for i in range(n):
            if not np.isfinite(u[i]):
                return acc, tr_t, tr, step
        if (step + 1) % reorth == 0:
            q, r = np.linalg.qr(Q)
            for j in range(n):
                d = r[j, j]
                if d < 0.0:
                    q[:, j] = -q[:, j]
                    d = -d
                if step >= ntransient:
                    acc[j] += np.log(d)
            Q[:, :] = q
            if step >= ntransient:
                nqr += 1
                if trace_every > 0 and nqr % trace_every == 0 and ti < n_trace:
                    span = (step + 1 - (ntransient // reorth) * reorth) * dt
                    tr_t[ti] = (step + 1) * dt
                    tr[ti, :] = acc / span
                    ti += 1
    return acc, tr_t[:ti], tr[:ti], -1


def lyapunov_spectrum(p: SystemParams = SystemParams(), init=REFERENCE_INIT, dt: float = DEFAULT_DT,
                      total_time: float = 500.0, transient_time: float = 50.0,
                      reorth_every: int = 10, trace_every: int = 0,
                      rhs=None, jac=None) -> LyapunovSpectrum:
    """Benettin/QR estimate of the full Lyapunov spectrum.

    The variational equations are co-integrated with the state by RK4 and
    re-orthonormalized every ``reorth_every`` steps. Log stretch factors are
    averaged over ``total_time - transient_time``.

    ``rhs``/``jac`` may be replaced with other numba-compiled kernels of
    signature ``f(u, prm, out)``; ``prm`` is ``p.as_array()``. In that case the
    analytic divergence is not reported.

    ``trace_every`` > 0 records the running estimate every that many
    re-orthonormalizations.
    """
    if not (total_time > transient_time >= 0):
        raise InvalidArg("need total_time > transient_time >= 0")
    if not dt > 0 or reorth_every < 1:
        raise InvalidArg("dt must be positive and reorth_every >= 1")
    custom = rhs is not None or jac is not None
    if custom and (rhs is None or jac is None):
        raise InvalidArg("rhs and jac must be supplied together")
    f = rhs if custom else _rhs
    J = jac if custom else _jac
    u0 = np.asarray(init, dtype=np.float64).copy()
    nsteps = int(round(total_time / dt))
    ntr = int(round(transient_time / dt))
    acc, tr_t, tr, failed = _benettin(f, J, u0, p.as_array(), float(dt), nsteps, ntr,
                                      int(reorth_every), int(trace_every))
    if failed >= 0:
        raise NonFinite(f"Lyapunov integration diverged at step {failed}")
    # log factors are only summed at QR points after the transient
    last_qr = (nsteps // reorth_every) * reorth_every
    first_qr = ((ntr // reorth_every) + 1) * reorth_every
    span = max(last_qr - first_qr + reorth_every, reorth_every) * dt
    exps = np.sort(acc / span)[::-1]
    return LyapunovSpectrum(
        exponents=exps,
        settle_time=float(transient_time),
        divergence=None if custom else p.divergence,
        trace_times=tr_t,
        trace=np.sort(tr, axis=1)[:, ::-1] if len(tr) else tr,
    )


def write_lyapunov_trace_csv(spec: LyapunovSpectrum, path) -> None:
    n = spec.trace.shape[1] if spec.trace.ndim == 2 else len(spec.exponents)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time"] + [f"LE{i + 1}" for i in range(n)])
        for t, row in zip(spec.trace_times, spec.trace):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])


# --- bifurcation --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BifurcationData:
    parameter: str
    values: np.ndarray
    extrema: list  # one 1-d array per parameter value; None where integration failed
    component: int = 0

    @property
    def failed(self) -> list[bool]:
        return [e is None for e in self.extrema]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["param", "value"])
            for v, ext in zip(self.values, self.extrema):
                if ext is None:
                    continue
                for e in ext:
                    w.writerow([f"{v:.17g}", f"{e:.17g}"])


def local_maxima(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        return np.empty(0)
    mid = x[1:-1]
    return mid[(x[:-2] < mid) & (mid > x[2:])]


def bifurcation_scan(p_base: SystemParams = SystemParams(), vary: str = "a", lo: float = 20.0,
                     hi: float = 30.0, n_points: int = 500, component: int = 0,
                     dt: float = DEFAULT_DT, steps: int = 50_000,
                     transient: int = DEFAULT_TRANSIENT, init=REFERENCE_INIT,
                     workers: int | None = None) -> BifurcationData:
    if vary not in PARAM_NAMES:
        raise InvalidArg(f"vary must be one of {PARAM_NAMES}")
    if not lo < hi or n_points < 2:
        raise InvalidArg("need lo < hi and n_points >= 2")
    if not 0 <= component < DIM:
        raise InvalidArg(f"component must be in [0, {DIM})")
    values = np.linspace(lo, hi, n_points)

    def one(v):
        try:
            traj = simulate(init, p_base.replace(**{vary: float(v)}), dt, steps, transient)
        except (NonFinite, InvalidArg):
            return None
        return local_maxima(traj.component(component))

    return BifurcationData(vary, values, pmap(one, values, workers), component)


# --- 0-1 test -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ZeroOneResult:
    K: float
    s: np.ndarray
    p: np.ndarray
    c: float
    k_values: np.ndarray
    c_values: np.ndarray


def translation_variables(x, c: float) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative sums s(n) = sum x(j) sin(jc), p(n) = sum x(j) cos(jc), j = 1..n."""
    x = np.asarray(x, dtype=float)
    j = np.arange(1, len(x) + 1)
    return np.cumsum(x * np.sin(j * c)), np.cumsum(x * np.cos(j * c))


def _msd(p, s, ncut):
    # mean over a fixed window of (p[j+n]-p[j])^2 + (s[j+n]-s[j])^2, n = 1..ncut
    N = len(p)
    W = N - ncut
    L = 1 << int(np.ceil(np.log2(N + W)))
    out = np.zeros(ncut)
    for z in (p, s):
        cs = np.concatenate(([0.0], np.cumsum(z * z)))
        head = cs[W]
        n = np.arange(1, ncut + 1)
        tail = cs[n + W] - cs[n]
        cross = np.fft.irfft(np.conj(np.fft.rfft(z[:W], L)) * np.fft.rfft(z, L), L)[1:ncut + 1]
        out += head + tail - 2.0 * cross
    return out / W


def _k_for(x, c, ncut):
    s, p = translation_variables(x, c)
    n = np.arange(1, ncut + 1)
    m = _msd(p, s, ncut)
    # subtract the oscillatory term so regular signals give a bounded D(n)
    d = m - np.mean(x) ** 2 * (1.0 - np.cos(n * c)) / (1.0 - np.cos(c))
    if np.std(d) == 0.0:
        return 0.0, s, p
    return float(np.corrcoef(n, d)[0, 1]), s, p


def zero_one_test(x, c01: float | None = None, seed: int = 0, n_draws: int = 100) -> ZeroOneResult:
    """Gottwald-Melbourne 0-1 test, correlation method.

    K is the median over ``n_draws`` frequencies drawn uniformly from
    (pi/5, 4pi/5) of corr(n, D(n)) for n <= N/10, unless ``c01`` pins a single
    frequency. K near 1 indicates chaos, near 0 regular motion.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 1000:
        raise InvalidArg("0-1 test needs a 1-d sequence of at least 1000 samples")
    if c01 is not None and not 0.0 < c01 < np.pi:
        raise InvalidArg("c01 must lie in (0, pi)")
    ncut = len(x) // 10
    if not np.any(x):
        s = np.zeros(len(x))
        c = np.pi / 2 if c01 is None else float(c01)
        return ZeroOneResult(0.0, s, s.copy(), c, np.zeros(1), np.array([c]))
    if c01 is not None:
        cs = np.array([float(c01)])
    else:
        cs = np.random.default_rng(seed).uniform(np.pi / 5, 4 * np.pi / 5, n_draws)
    ks = np.empty(len(cs))
    for i, c in enumerate(cs):
        ks[i] = _k_for(x, c, ncut)[0]
    K = float(np.median(ks))
    pick = int(np.argmin(np.abs(ks - K)))
    _, s, p = _k_for(x, cs[pick], ncut)
    return ZeroOneResult(K, s, p, float(cs[pick]), ks, cs)


# --- spectral complexity --------------------------------------------------------


def spectral_entropy(x) -> float:
    """Normalized Shannon entropy of the one-sided power spectrum (DC excluded)."""
    x = np.asarray(x, dtype=float)
    if len(x) < 256:
        raise InvalidArg("spectral entropy needs at least 256 samples")
    x = x - x.mean()
    power = np.abs(np.fft.fft(x)[1:len(x) // 2 + 1]) ** 2
    total = power.sum()
    if not total > 0:
        raise DegenerateInput("sequence has no spectral power after mean removal")
    prob = power / total
    nz = prob[prob > 0]
    return float(min(1.0, max(0.0, -np.sum(nz * np.log(nz)) / np.log(len(power)))))


def c0_complexity(x, r: float = 5.0) -> float:
    """Share of signal energy left after removing the dominant Fourier modes.

    Coefficients whose squared magnitude exceeds ``r`` times the mean are the
    regular part.
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 256:
        raise InvalidArg("C0 complexity needs at least 256 samples")
    energy = np.sum(x * x)
    if not energy > 0:
        raise DegenerateInput("zero-energy sequence")
    X = np.fft.fft(x)
    mag2 = np.abs(X) ** 2
    X[mag2 <= r * mag2.mean()] = 0.0
    regular = np.fft.ifft(X).real
    return float(min(1.0, max(0.0, np.sum((x - regular) ** 2) / energy)))


@dataclass(frozen=True, eq=False)
class ComplexityGrid:
    a_values: np.ndarray
    c_values: np.ndarray
    se: np.ndarray  # shape (len(a_values), len(c_values)); NaN where integration failed
    c0: np.ndarray

    def to_csv(self, path, which: str = "se") -> None:
        grid = {"se": self.se, "c0": self.c0}[which]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["a\\c"] + [f"{c:.17g}" for c in self.c_values])
            for a, row in zip(self.a_values, grid):
                w.writerow([f"{a:.17g}"] + [f"{v:.17g}" for v in row])


def complexity_sequence(a: float, c: float, b: float = 23.0, n_samples: int = 8192,
                        stride: int = 10, dt: float = DEFAULT_DT,
                        transient: int = DEFAULT_TRANSIENT, init=REFERENCE_INIT) -> np.ndarray:
    """The u1 series a grid cell analyses."""
    traj = simulate(init, SystemParams(a=a, b=b, c=c), dt, n_samples, transient, stride=stride)
    return traj.component(0)


def complexity_grid(a_range=(20.0, 30.0), c_range=(0.5, 2.0), b_fixed: float = 23.0,
                    resolution=(20, 20), n_samples: int = 8192, stride: int = 10,
                    dt: float = DEFAULT_DT, transient: int = DEFAULT_TRANSIENT,
                    init=REFERENCE_INIT, workers: int | None = None) -> ComplexityGrid:
    if not (a_range[0] < a_range[1] and c_range[0] < c_range[1]):
        raise InvalidArg("parameter ranges must be non-degenerate")
    na, nc = (resolution, resolution) if np.isscalar(resolution) else resolution
    if na < 1 or nc < 1:
        raise InvalidArg("resolution must be positive")
    a_vals = np.linspace(a_range[0], a_range[1], int(na))
    c_vals = np.linspace(c_range[0], c_range[1], int(nc))
    cells = [(a, c) for a in a_vals for c in c_vals]

    def one(cell):
        try:
            x = complexity_sequence(cell[0], cell[1], b_fixed, n_samples, stride, dt,
                                    transient, init)
            return spectral_entropy(x), c0_complexity(x)
        except (NonFinite, DegenerateInput, InvalidArg):
            return np.nan, np.nan

    res = np.array(pmap(one, cells, workers), dtype=float).reshape(len(a_vals), len(c_vals), 2)
    return ComplexityGrid(a_vals, c_vals, res[..., 0], res[..., 1])
