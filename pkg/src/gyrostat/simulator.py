"""Fixed-step RK4 integration with conservation monitoring, and the
invariant-set escape experiment used for the singular uniform rotations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GyrostatParams, StateLike, as_vec, momentum_scale
from .equilibria import COINCIDENCE_TOL, Equilibrium
from .isolation import Isolation, reduce_level_system, sign_analysis

DEFAULT_DT = 1e-3
MAX_STORED = 100_000
DIVERGENCE_FACTOR = 1e12


class SimulationDiverged(RuntimeError):
    """A state component grew beyond the divergence guard."""


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n, 3)
    drift: float
    drift_f1: float
    drift_f2: float
    steps: int

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _rk4_step(m1, m2, m3, h, i1, i2, i3, u1, u2, u3):
    def f(a, b, c):
        w1, w2, w3 = a / i1, b / i2, c / i3
        n1, n2, n3 = a + u1, b + u2, c + u3
        return n2 * w3 - n3 * w2, n3 * w1 - n1 * w3, n1 * w2 - n2 * w1

    h2 = 0.5 * h
    k1 = f(m1, m2, m3)
    k2 = f(m1 + h2 * k1[0], m2 + h2 * k1[1], m3 + h2 * k1[2])
    k3 = f(m1 + h2 * k2[0], m2 + h2 * k2[1], m3 + h2 * k2[2])
    k4 = f(m1 + h * k3[0], m2 + h * k3[1], m3 + h * k3[2])
    h6 = h / 6.0
    return (
        h6 * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
        h6 * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
        h6 * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]),
    )


class _Stepper:
    """Scalar RK4 loop state; Kahan-compensated accumulation of M."""

    def __init__(self, params: GyrostatParams, initial: np.ndarray, reverse: bool):
        self.i = tuple(float(v) for v in params.I)
        self.u = params.mu
        self.sign = -1.0 if reverse else 1.0
        self.m = [float(v) for v in initial]
        self.comp = [0.0, 0.0, 0.0]

    def step(self, h: float):
        d = _rk4_step(*self.m, self.sign * h, *self.i, *self.u)
        for n in range(3):
            y = d[n] - self.comp[n]
            t = self.m[n] + y
            self.comp[n] = (t - self.m[n]) - y
            self.m[n] = t


def _n_steps(dt: float, t_end: float) -> int:
    return max(1, int(math.ceil(t_end / dt - 1e-9)))


_SPLIT = 134217729.0  # 2^27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _two_prod(a, b):
    p = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_square_over(hi, lo, d):
    """(hi + lo)^2 / d as an unevaluated sum of two doubles."""
    p, e = _two_prod(hi, hi)
    e = e + 2.0 * hi * lo
    q = p / d
    s, se = _two_prod(q, d)
    return q, (((p - s) - se) + e) / d


def dd_integrals(params: GyrostatParams, hi: np.ndarray, lo: np.ndarray):
    """F1 and F2 in double-double arithmetic for states ``hi + lo`` of shape (n, 3).

    The plain double evaluation of F carries a rounding floor of a few ulps,
    which hides RK4 truncation drift at small steps.
    """
    hi, lo = _two_sum(hi, lo)
    mu = np.asarray(params.mu)
    inertia = params.I
    out = []
    for terms in (
        [_dd_square_over(hi[:, k], lo[:, k], inertia[k]) for k in range(3)],
        [_dd_square_over(*_shifted(hi[:, k], lo[:, k], mu[k]), 1.0) for k in range(3)],
    ):
        s, e = terms[0]
        for q, ql in terms[1:]:
            s, t = _two_sum(s, q)
            e = e + t + ql
        s, e = _two_sum(s, e)
        out.append((0.5 * s, 0.5 * e))
    return out


def _shifted(hi, lo, c):
    s, e = _two_sum(hi, c)
    return s, e + lo


class _DriftMonitor:
    """Max relative deviation of F1, F2 from their initial values, in chunks."""

    CHUNK = 8192

    def __init__(self, params: GyrostatParams, m0: np.ndarray):
        self.params = params
        (a, ae), (b, be) = dd_integrals(params, m0[None, :], np.zeros((1, 3)))
        self.f0 = ((a[0], ae[0]), (b[0], be[0]))
        self.scale = tuple(v[0] if v[0] > 0 else 1.0 for v in self.f0)
        self.buf: list = []
        self.d1 = self.d2 = 0.0

    def push(self, hi, comp):
        self.buf.append((*hi, *comp))
        if len(self.buf) >= self.CHUNK:
            self.flush()

    def flush(self):
        if not self.buf:
            return
        arr = np.array(self.buf)
        self.buf.clear()
        (a, ae), (b, be) = dd_integrals(self.params, arr[:, :3], -arr[:, 3:])
        (a0, a0e), (b0, b0e) = self.f0
        self.d1 = max(self.d1, float(np.max(np.abs((a - a0) + (ae - a0e)))) / self.scale[0])
        self.d2 = max(self.d2, float(np.max(np.abs((b - b0) + (be - b0e)))) / self.scale[1])

    @property
    def drift(self) -> float:
        self.flush()
        return max(self.d1, self.d2)


def integrate(
    params: GyrostatParams,
    initial: StateLike,
    dt: float = DEFAULT_DT,
    t_end: float = 1.0,
    *,
    reverse: bool = False,
    max_stored: int = MAX_STORED,
) -> Trajectory:
    """Integrate dM/dt with classical RK4 at fixed step ``dt``.

    Drift is the maximum over all steps of |F(t) - F(0)| / F(0) (absolute when
    F(0) = 0), taken over both integrals.  With ``reverse`` the flow is run
    backward in time.  At most ``max_stored`` states are kept.

    Raises:
        SimulationDiverged: if a component exceeds 1e12 times the initial scale.
    """
    if not (dt > 0 and t_end > 0):
        raise ValueError("dt and t_end must be positive")
    m0 = as_vec(initial)
    n = _n_steps(dt, t_end)
    every = max(1, int(math.ceil(n / (max_stored - 1))))
    limit = DIVERGENCE_FACTOR * momentum_scale(params, m0)
    stepper = _Stepper(params, m0, reverse)
    monitor = _DriftMonitor(params, m0)
    times, states = [0.0], [tuple(m0)]
    for k in range(1, n + 1):
        h = dt if k < n else t_end - (n - 1) * dt
        stepper.step(h)
        m = stepper.m
        if not (abs(m[0]) <= limit and abs(m[1]) <= limit and abs(m[2]) <= limit):
            raise SimulationDiverged(f"state {m} exceeded {limit:g} at step {k}")
        monitor.push(m, stepper.comp)
        if k % every == 0 or k == n:
            times.append(k * dt if k < n else t_end)
            states.append(tuple(m))
    drift = monitor.drift
    return Trajectory(np.array(times), np.array(states), drift, monitor.d1, monitor.d2, n)


# --- singular-case analysis ------------------------------------------------


def _projection_coefficient(params: GyrostatParams, axis: int) -> float:
    """c_k in dM_k/dt = c_k M_{k+1} M_{k+2} (cyclic) for mu along axis k."""
    k = axis - 1
    I = params.I
    return 1.0 / I[(k + 2) % 3] - 1.0 / I[(k + 1) % 3]


def singular_axis(params: GyrostatParams, equilibrium: Equilibrium) -> int:
    """Axis of the singular uniform rotation ``equilibrium``; ValueError otherwise."""
    from .classifier import singular_points

    m = equilibrium.vec
    for sp in singular_points(params):
        if np.linalg.norm(sp.vec - m) <= COINCIDENCE_TOL * momentum_scale(params, m):
            return params.alignment.axis
    raise ValueError(f"{tuple(m)} is not a singular uniform rotation")


def projected_x_rate_squared(params: GyrostatParams, singular: Equilibrium, x: float) -> float:
    """Closed-form (dx/dt)^2 on the invariant level set of a singular rotation.

    Axis 1, point (-I1 mu1/(I1-I2), 0, 0):
        -2 x^3 (I1-I2) / (I1^2 I2 I3) * (x (I1-I3)/2 - I1 (I2-I3) mu1 / (I1-I2))
    Axis 3, point (0, 0, I3 mu3/(I2-I3)):
        -2 x^3 (I1-I3)(I2-I3) / (I1 I2 I3^2) * (x/2 + I3 (I1-I2) mu3 / ((I1-I3)(I2-I3)))
    """
    axis = singular_axis(params, singular)
    i1, i2, i3 = params.I
    mu = params.effective_mu
    if axis == 1:
        return (
            -2.0 * x**3 * (i1 - i2) / (i1**2 * i2 * i3)
            * (0.5 * x * (i1 - i3) - i1 * (i2 - i3) * mu[0] / (i1 - i2))
        )
    return (
        -2.0 * x**3 * (i1 - i3) * (i2 - i3) / (i1 * i2 * i3**2)
        * (0.5 * x + i3 * (i1 - i2) * mu[2] / ((i1 - i3) * (i2 - i3)))
    )


def escape_threshold(params: GyrostatParams, singular: Equilibrium) -> float:
    """Nonzero root of the closed-form rate: where the level curve turns back."""
    axis = singular_axis(params, singular)
    i1, i2, i3 = params.I
    mu = params.effective_mu
    if axis == 1:
        return 2.0 * i1 * (i2 - i3) * mu[0] / ((i1 - i2) * (i1 - i3))
    return -2.0 * i3 * (i1 - i2) * mu[2] / ((i1 - i3) * (i2 - i3))


def reduced_x_rate_squared(params: GyrostatParams, equilibrium: Equilibrium, x: float) -> float:
    """(c_k M_i M_j)^2 evaluated from the reduced level system at offset x."""
    red = reduce_level_system(params, equilibrium)
    c = _projection_coefficient(params, red.axis)
    return c * c * red.u(x) * red.v(x)


@dataclass
class EscapeResult:
    escaped: bool
    escape_time: float | None
    max_deviation: float
    threshold_x: float
    escape_radius: float
    delta: float
    initial: np.ndarray
    trajectory: Trajectory | None = None

    @property
    def inconclusive(self) -> bool:
        return not self.escaped


def escape_initial_state(
    params: GyrostatParams, equilibrium: Equilibrium, delta: float
) -> np.ndarray:
    """Initial condition ``delta`` away from the equilibrium.

    When the rotation is not isolated on its level set the start lies on that
    set, on the admissible side of x, with branch signs making x move further
    away.  Otherwise the off-axis components are displaced by ``delta``.
    """
    red = reduce_level_system(params, equilibrium)
    verdict = sign_analysis(red, params)
    base = equilibrium.vec
    i, j = (a - 1 for a in red.off_axes)
    if verdict.verdict is Isolation.NOT_ISOLATED:
        x0 = verdict.side * delta
        m = red.reconstruct(x0, signs=(1.0, -1.0))
        c = _projection_coefficient(params, red.axis)
        if c * m[i] * m[j] * x0 < 0:
            m[j] = -m[j]
        return m
    m = base.copy()
    m[i] += delta / math.sqrt(2.0)
    m[j] += delta / math.sqrt(2.0)
    return m


def escape_experiment(
    params: GyrostatParams,
    equilibrium: Equilibrium,
    delta: float | None = None,
    dt: float = DEFAULT_DT,
    t_max: float = 1e3,
    escape_radius: float | None = None,
    keep_trajectory: bool = False,
) -> EscapeResult:
    """Start ``delta`` from the equilibrium and wait for ``|M - Me| >= escape_radius``.

    For singular rotations the defaults are tied to the escape threshold x*:
    ``delta = 1e-3 |x*|`` and ``escape_radius = |x*| / 2``; elsewhere the
    momentum scale max(|Me|, |mu|) stands in for |x*|.
    """
    base = equilibrium.vec
    try:
        threshold = escape_threshold(params, equilibrium)
    except ValueError:
        threshold = math.nan
    ref = abs(threshold) if math.isfinite(threshold) else momentum_scale(params, base)
    delta = 1e-3 * ref if delta is None else float(delta)
    radius = 0.5 * ref if escape_radius is None else float(escape_radius)
    if delta <= 0 or radius <= 0:
        raise ValueError("delta and escape_radius must be positive")
    m0 = escape_initial_state(params, equilibrium, delta)

    stepper = _Stepper(params, m0, reverse=False)
    n = _n_steps(dt, t_max)
    monitor = _DriftMonitor(params, m0) if keep_trajectory else None
    b1, b2, b3 = base
    max_dev = float(np.linalg.norm(m0 - base))
    escaped, t_esc = max_dev >= radius, (0.0 if max_dev >= radius else None)
    every = max(1, int(math.ceil(n / (MAX_STORED - 1))))
    times, states = [0.0], [tuple(m0)]
    k = 0
    while not escaped and k < n:
        k += 1
        stepper.step(dt)
        a, b, c = stepper.m
        dev = math.sqrt((a - b1) ** 2 + (b - b2) ** 2 + (c - b3) ** 2)
        if dev > max_dev:
            max_dev = dev
        if monitor is not None:
            monitor.push(stepper.m, stepper.comp)
            if k % every == 0:
                times.append(k * dt)
                states.append((a, b, c))
        if dev >= radius:
            escaped, t_esc = True, k * dt
    traj = None
    if keep_trajectory:
        if times[-1] != k * dt:
            times.append(k * dt)
            states.append(tuple(stepper.m))
        drift = monitor.drift
        traj = Trajectory(np.array(times), np.array(states), drift, monitor.d1, monitor.d2, k)
    return EscapeResult(escaped, t_esc, max_dev, threshold, radius, delta, m0, traj)
