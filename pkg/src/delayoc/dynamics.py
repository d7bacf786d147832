"""Delay state equation: integration, objective, admissibility, comparison.

The delay functional ``int a(xi) x(t+xi) dxi`` is fixed at the model level as
a trapezoid rule over the kernel's own sample grid (spacing ``delta``); the
integrator then solves that semi-discrete equation by the method of steps
with classical RK4.  Off-grid lookups of the computed path use cubic Hermite
dense output (linear interpolation inside the supplied history), so step
halving refines only the time-stepping error.
"""
from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigMismatch, Inadmissible, NonFiniteState
from .model import Array, HistoryState, ProblemConfig, positivity_tolerance


@dataclass(frozen=True)
class ControlPath:
    """Nonnegative piecewise-constant consumption on a uniform grid.

    ``values[i]`` applies on [i*dt, (i+1)*dt); beyond the last cell the
    control continues with 0 (the standing truncation device).
    """

    dt: float
    values: Array

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if not self.dt > 0:
            raise ConfigMismatch("control step must be > 0")
        if self.values.size and float(np.min(self.values)) < 0:
            raise ConfigMismatch("control values must be >= 0")

    @property
    def duration(self) -> float:
        return self.dt * len(self.values)

    def value_at(self, t: Array) -> Array:
        idx = np.floor(np.asarray(t, dtype=float) / self.dt).astype(int)
        out = np.zeros_like(np.asarray(t, dtype=float))
        inside = (idx >= 0) & (idx < len(self.values))
        out[inside] = self.values[idx[inside]]
        return out


def constant_control(level: float, dt: float, horizon: float) -> ControlPath:
    n = int(round(horizon / dt))
    return ControlPath(dt=dt, values=np.full(n, float(level)))


@dataclass(frozen=True)
class Trajectory:
    """State samples on [-T, horizon] with admissibility metadata."""

    dt: float
    start: float
    values: Array
    hist_len: int          # index of t = 0 in ``values``
    substeps: int          # dt-steps per history cell
    admissible: bool
    min_value: float

    @property
    def times(self) -> Array:
        return self.start + np.arange(len(self.values)) * self.dt

    @property
    def forward(self) -> Array:
        """Samples on [0, horizon]."""
        return self.values[self.hist_len:]

    @property
    def horizon(self) -> float:
        return (len(self.values) - 1 - self.hist_len) * self.dt

    def at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))


class TailPolicy:
    """How the objective accounts for the integral beyond the horizon."""

    def __init__(self, kind: str, extra: float | None = None):
        if kind not in ("none", "zero_control", "upper_bound"):
            raise ConfigMismatch(f"unknown tail policy {kind!r}")
        self.kind = kind
        self.extra = extra


def no_tail() -> TailPolicy:
    return TailPolicy("none")


def zero_control_tail(extra: float | None = None) -> TailPolicy:
    return TailPolicy("zero_control", extra)


def upper_bound_tail() -> TailPolicy:
    return TailPolicy("upper_bound")


# ---------------------------------------------------------------------------
# stepping core
# ---------------------------------------------------------------------------

class Stepper:
    """Precomputed RK4 stepping for one (config, substeps, lag-mode) triple.

    State arrays are batched: ``x`` and ``m`` have shape (B, L) where column
    ``hist_len + i`` holds the value / derivative at t = i*dt.
    """

    def __init__(self, cfg: ProblemConfig, substeps: int = 1, pointwise: bool = False):
        if substeps < 1:
            raise ConfigMismatch("substeps must be >= 1")
        self.cfg = cfg
        self.n = cfg.n_hist
        self.s = substeps
        self.dt = cfg.delta / substeps
        self.off = self.n * self.s
        self.pointwise = pointwise
        self.f0 = cfg.dynamics.f0
        self.r = cfg.r
        if pointwise:
            if self.n % 2:
                raise ConfigMismatch("pointwise lag needs an even history grid")
            self.lag = (self.n // 2) * self.s
        else:
            w = cfg.kernel_weights
            self.w_low = w[:-1]
            self.w_self = float(w[-1])
            self.offs = (np.arange(self.n) - self.n) * self.s

    def history_columns(self, eta: HistoryState) -> Array:
        """History nodes upsampled to the dt grid (linear, hence exact)."""
        self.cfg.check_history(eta)
        coarse_t = np.linspace(-self.cfg.T, 0.0, self.n + 1)
        fine_t = np.linspace(-self.cfg.T, 0.0, self.off + 1)
        return np.interp(fine_t, coarse_t, eta.nodes())

    def alloc(self, eta: HistoryState, n_steps: int, batch: int) -> tuple[Array, Array]:
        L = self.off + n_steps + 1
        x = np.empty((batch, L))
        m = np.zeros((batch, L))
        x[:, : self.off + 1] = self.history_columns(eta)[None, :]
        return x, m

    def _rhs(self, xv, q, c):
        return self.r * xv + self.f0(xv, q) - c

    def init_derivative(self, x: Array, m: Array, c0) -> None:
        p = self.off
        if self.pointwise:
            q = x[:, p - self.lag]
        else:
            q = x[:, p + self.offs] @ self.w_low + self.w_self * x[:, p]
        m[:, p] = self._rhs(x[:, p], q, c0)

    def step(self, x: Array, m: Array, i: int, c_now, c_next) -> None:
        """Advance from node i to node i+1 (classical RK4, frozen delay lookups)."""
        dt, off = self.dt, self.off
        p = off + i
        xp = x[:, p]
        k1 = m[:, p]

        if self.pointwise:
            v0 = x[:, p - self.lag]         # not needed by stages; kept for clarity
            cell = p - self.lag
            hermite = dt / 8.0 if cell >= off else 0.0
            q_mid = 0.5 * (x[:, cell] + x[:, cell + 1]) \
                + hermite * (m[:, cell] - m[:, cell + 1])
            q_end = x[:, p + 1 - self.lag]
            y = xp + 0.5 * dt * k1
            k2 = self._rhs(y, q_mid, c_now)
            y = xp + 0.5 * dt * k2
            k3 = self._rhs(y, q_mid, c_now)
            y = xp + dt * k3
            k4 = self._rhs(y, q_end, c_now)
            xn = xp + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            x[:, p + 1] = xn
            m[:, p + 1] = self._rhs(xn, q_end, c_next)
        else:
            idx = p + self.offs
            g0 = x[:, idx]
            g1 = x[:, idx + 1]
            mask = idx >= off
            mid = 0.5 * (g0 + g1)
            if mask.any():
                mid = mid + (dt / 8.0) * (m[:, idx] - m[:, idx + 1]) * mask
            q_mid = mid @ self.w_low
            q_end = g1 @ self.w_low
            ws = self.w_self
            y = xp + 0.5 * dt * k1
            k2 = self._rhs(y, q_mid + ws * y, c_now)
            y = xp + 0.5 * dt * k2
            k3 = self._rhs(y, q_mid + ws * y, c_now)
            y = xp + dt * k3
            k4 = self._rhs(y, q_end + ws * y, c_now)
            xn = xp + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            x[:, p + 1] = xn
            m[:, p + 1] = self._rhs(xn, q_end + ws * xn, c_next)

    def rollout(self, eta: HistoryState, c_steps: Array, n_steps: int) -> tuple[Array, Array]:
        """Integrate a batch of controls; c_steps has shape (B, >= n_steps)."""
        c_steps = np.atleast_2d(np.asarray(c_steps, dtype=float))
        if c_steps.shape[1] < n_steps:
            pad = np.zeros((c_steps.shape[0], n_steps - c_steps.shape[1]))
            c_steps = np.hstack([c_steps, pad])
        x, m = self.alloc(eta, n_steps, c_steps.shape[0])
        self.init_derivative(x, m, c_steps[:, 0])
        for i in range(n_steps):
            c_next = c_steps[:, i + 1] if i + 1 < n_steps else c_steps[:, n_steps - 1] * 0.0
            self.step(x, m, i, c_steps[:, i], c_next)
        if not np.isfinite(x[:, self.off:]).all():
            raise NonFiniteState("integrator produced NaN/Inf")
        return x, m

    def steps_for(self, horizon: float) -> int:
        n_steps = int(round(horizon / self.dt))
        if abs(n_steps * self.dt - horizon) > 1e-9 * max(1.0, horizon):
            n_steps = int(np.ceil(horizon / self.dt - 1e-12))
        return max(n_steps, 1)

    def expand_control(self, c: ControlPath, n_steps: int) -> Array:
        """Per-dt-step control values; zero-padded past the control's end."""
        k = int(round(c.dt / self.dt))
        if k < 1 or abs(k * self.dt - c.dt) > 1e-9 * self.dt:
            raise ConfigMismatch(
                f"control step {c.dt} is not a multiple of the state step {self.dt}"
            )
        steps = np.repeat(c.values, k)
        if len(steps) >= n_steps:
            return steps[:n_steps]
        return np.append(steps, np.zeros(n_steps - len(steps)))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def integrate(cfg: ProblemConfig, eta: HistoryState, c: ControlPath,
              horizon: float, substeps: int = 1, pointwise: bool = False) -> Trajectory:
    """Solve the delay state equation on [0, horizon] from the history eta."""
    if not horizon > 0:
        raise ConfigMismatch("horizon must be > 0")
    if not eta.in_h_plus():
        raise ConfigMismatch("initial state must lie in H_plus (eta0 > 0)")
    st = Stepper(cfg, substeps, pointwise)
    n_steps = st.steps_for(horizon)
    c_steps = st.expand_control(c, n_steps)
    x, _ = st.rollout(eta, c_steps, n_steps)
    row = x[0]
    fwd = row[st.off:]
    min_value = float(np.min(fwd))
    admissible = min_value > positivity_tolerance(eta.eta0)
    return Trajectory(dt=st.dt, start=-cfg.T, values=row, hist_len=st.off,
                      substeps=st.s, admissible=admissible, min_value=min_value)


def discount_nodes(rho: float, dt: float, n_nodes: int) -> tuple[Array, Array]:
    """Trapezoid weights times e^{-rho t} on the node grid, and the grid."""
    t = np.arange(n_nodes) * dt
    w = np.full(n_nodes, dt)
    w[0] = w[-1] = dt / 2.0
    return w * np.exp(-rho * t), t


def control_node_values(c_steps: Array, n_nodes: int) -> Array:
    """Right-continuous control sampled at grid nodes (last node: last cell)."""
    c_steps = np.asarray(c_steps, dtype=float)
    vals = np.empty(n_nodes)
    vals[:-1] = c_steps[: n_nodes - 1]
    vals[-1] = c_steps[n_nodes - 2] if n_nodes > 1 else 0.0
    return vals


def objective(cfg: ProblemConfig, eta: HistoryState, c: ControlPath,
              horizon: float, tail: TailPolicy | None = None,
              substeps: int = 1, pointwise: bool = False) -> float:
    """Discounted utility of (eta, c) over [0, horizon] plus the tail term."""
    tail = tail or no_tail()
    extra = 0.0
    if tail.kind == "zero_control":
        extra = tail.extra if tail.extra is not None else min(3.0 / cfg.rho, 20.0)
    st = Stepper(cfg, substeps, pointwise)
    n_main = st.steps_for(horizon)
    n_steps = st.steps_for(horizon + extra) if extra else n_main
    c_steps = st.expand_control(c, n_steps)
    if extra:
        c_steps[n_main:] = 0.0
    x, _ = st.rollout(eta, c_steps, n_steps)
    fwd = x[0, st.off:]
    if not np.min(fwd[: n_main + 1]) > positivity_tolerance(eta.eta0):
        raise Inadmissible(
            f"state hits zero on [0, {horizon}] (min {np.min(fwd[:n_main + 1]):.3e})"
        )
    w, _ = discount_nodes(cfg.rho, st.dt, n_steps + 1)
    c_nodes = control_node_values(c_steps, n_steps + 1)
    xs = np.maximum(fwd, positivity_tolerance(eta.eta0))
    value = float(w @ (cfg.u1.u(c_nodes) + cfg.u2.u(xs)))
    if tail.kind == "zero_control":
        value += 0.0  # simulated continuation already included above
    elif tail.kind == "upper_bound":
        value += np.exp(-cfg.rho * horizon) * cfg.utility_sup / cfg.rho
    return value


def comparison_check(cfg: ProblemConfig, eta_a: HistoryState, eta_b: HistoryState,
                     c_a: ControlPath, c_b: ControlPath, horizon: float,
                     substeps: int = 1, pointwise: bool = False) -> bool:
    """Trajectory-ordering oracle: eta_a <= eta_b and c_a >= c_b should give
    x_a <= x_b up to a grid tolerance."""
    xa = integrate(cfg, eta_a, c_a, horizon, substeps, pointwise).values
    xb = integrate(cfg, eta_b, c_b, horizon, substeps, pointwise).values
    scale = 1.0 + max(float(np.max(np.abs(xa))), float(np.max(np.abs(xb))))
    return bool(np.all(xa <= xb + 1e-8 * scale))


def window_state(cfg: ProblemConfig, traj: Trajectory, t: float) -> HistoryState:
    """The history window (x(t), x(t + xi)) read off a computed trajectory."""
    s = traj.substeps
    p = traj.hist_len + int(round(t / traj.dt))
    if abs((p - traj.hist_len) * traj.dt - t) > 1e-9 * (1 + abs(t)):
        raise ConfigMismatch(f"time {t} is not on the trajectory grid")
    if p >= len(traj.values) or p - cfg.n_hist * s < 0:
        raise ConfigMismatch(f"time {t} outside the trajectory")
    eta1 = traj.values[p - cfg.n_hist * s: p: s]
    return HistoryState(float(traj.values[p]), eta1.copy())


def integrate_batch(cfg: ProblemConfig, pairs, horizon: float,
                    substeps: int = 1, workers: int = 1) -> list[Trajectory]:
    """Integrate independent (eta, control) pairs, optionally in a thread pool."""
    if workers <= 1:
        return [integrate(cfg, eta, c, horizon, substeps) for eta, c in pairs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(integrate, cfg, eta, c, horizon, substeps) for eta, c in pairs]
        return [f.result() for f in futs]


def trajectory_csv(cfg: ProblemConfig, traj: Trajectory, c: ControlPath | None = None) -> str:
    """CSV columns: t, x, c, discounted_utility_density."""
    buf = io.StringIO()
    buf.write("t,x,c,discounted_utility_density\n")
    times = traj.times
    cs = c.value_at(np.maximum(times, 0.0)) if c is not None else np.zeros_like(times)
    cs[times < 0] = 0.0
    for t, xv, cv in zip(times, traj.values, cs):
        if t >= 0 and xv > 0:
            dens = np.exp(-cfg.rho * t) * (cfg.u1.u(np.array(cv)) + cfg.u2.u(np.array(xv)))
        else:
            dens = 0.0
        buf.write(f"{t:.12g},{xv:.12g},{cv:.12g},{float(dens):.12g}\n")
    return buf.getvalue()
