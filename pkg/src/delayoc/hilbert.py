"""Grid-level realization of the product-space reformulation R x L2(-T, 0).

Points carry a present component and a sampled past segment; the shift
semigroup, the generator inverse, the associated weak norm and mild
solutions of the evolution form of the state equation all live here, along
with the concentrated-lag counterexample showing the present component is
not controlled by the weak norm for the pointwise-delay generator.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .dynamics import ControlPath, Stepper
from .errors import ConfigMismatch, NoConvergence
from .model import Array, HistoryState, ProblemConfig


@dataclass(frozen=True)
class HilbertPoint:
    """(eta0, eta1) with eta1 sampled on the uniform grid over [-T, 0)."""

    eta0: float
    eta1: Array

    def __post_init__(self):
        object.__setattr__(self, "eta1", np.asarray(self.eta1, dtype=float))

    @property
    def n(self) -> int:
        return len(self.eta1)

    def as_history(self) -> HistoryState:
        return HistoryState(self.eta0, self.eta1)


def from_history(eta: HistoryState) -> HilbertPoint:
    return HilbertPoint(eta.eta0, eta.eta1)


def _check_point(cfg: ProblemConfig, p: HilbertPoint) -> None:
    if p.n != cfg.n_hist:
        raise ConfigMismatch(f"point has {p.n} history samples, config wants {cfg.n_hist}")
    if not np.all(np.isfinite(p.eta1)) or not np.isfinite(p.eta0):
        raise ConfigMismatch("non-finite entries in Hilbert point")


def l2_inner(cfg: ProblemConfig, f: Array, g: Array) -> float:
    """Trapezoid inner product on [-T, 0] for samples on the [-T, 0) grid.

    The last half-open cell is closed with a constant extension of the final
    sample, which keeps constants exact.
    """
    d = cfg.delta
    w = np.full(cfg.n_hist, d)
    w[0] = d / 2.0
    w[-1] = 1.5 * d
    return float(np.sum(w * f * g))


def inner(cfg: ProblemConfig, p: HilbertPoint, q: HilbertPoint) -> float:
    return p.eta0 * q.eta0 + l2_inner(cfg, p.eta1, q.eta1)


def norm(cfg: ProblemConfig, p: HilbertPoint) -> float:
    return float(np.sqrt(inner(cfg, p, p)))


def apply_semigroup(cfg: ProblemConfig, t: float, p: HilbertPoint) -> HilbertPoint:
    """Shift semigroup: present grows at rate r, the past window slides."""
    if t < 0:
        raise ConfigMismatch("semigroup defined for t >= 0")
    _check_point(cfg, p)
    n, T, r = cfg.n_hist, cfg.T, cfg.r
    xi = np.linspace(-T, 0.0, n + 1)[:-1]
    shifted = t + xi
    hist_grid = xi
    # constant extension of eta1 on the final half-open cell
    past = np.interp(np.minimum(shifted, 0.0), hist_grid, p.eta1)
    grown = p.eta0 * np.exp(r * np.maximum(shifted, 0.0))
    eta1 = np.where(shifted < 0.0, past, grown)
    return HilbertPoint(p.eta0 * np.exp(r * t), eta1)


def apply_A_inverse(cfg: ProblemConfig, p: HilbertPoint) -> HilbertPoint:
    """Inverse of the generator: (eta0/r, s -> eta0/r - int_s^0 eta1).

    Partial integrals use right-aligned rectangle sums on the sample grid so
    that the discrete forward-difference generator inverts them exactly.
    """
    if cfg.r == 0.0:
        raise ZeroDivisionError("A^{-1} requires r != 0")
    _check_point(cfg, p)
    q0 = p.eta0 / cfg.r
    tail = cfg.delta * np.cumsum(p.eta1[::-1])[::-1]   # I_j = int_{xi_j}^0 eta1
    return HilbertPoint(q0, q0 - tail)


def apply_discrete_A(cfg: ProblemConfig, q: HilbertPoint) -> HilbertPoint:
    """Forward-difference generator on the grid; domain closes with eta1(0) = eta0."""
    _check_point(cfg, q)
    v = np.append(q.eta1, q.eta0)
    return HilbertPoint(cfg.r * q.eta0, np.diff(v) / cfg.delta)


def minus_one_norm(cfg: ProblemConfig, p: HilbertPoint) -> float:
    """The weak norm ||A^{-1} p||."""
    return norm(cfg, apply_A_inverse(cfg, p))


# ---------------------------------------------------------------------------
# mild solutions
# ---------------------------------------------------------------------------

@dataclass
class MildSolution:
    times: Array                 # coarse output times (multiples of delta)
    points: list[HilbertPoint]
    path_times: Array            # fine grid on [0, horizon]
    path: Array                  # first component on the fine grid
    iterations: int

    @property
    def first_components(self) -> Array:
        return np.array([p.eta0 for p in self.points])


def mild_solve(cfg: ProblemConfig, p: HilbertPoint, c: ControlPath, horizon: float,
               fine_per_cell: int = 16, tol: float = 1e-10,
               max_iter: int = 200) -> MildSolution:
    """Picard iteration on the variation-of-constants form of the state equation.

    Independent of the RK4 route: the fixed point solves
    z(t) = eta0 e^{rt} + int_0^t e^{r(t-tau)} [f0(z, Q z) - c] dtau
    on its own fine grid, with the same sampled-kernel delay functional.
    """
    _check_point(cfg, p)
    if not horizon > 0:
        raise ConfigMismatch("horizon must be > 0")
    n, T = cfg.n_hist, cfg.T
    fpc = fine_per_cell
    dtf = cfg.delta / fpc
    off = n * fpc
    n_t = int(round(horizon / dtf))
    if abs(n_t * dtf - horizon) > 1e-9:
        n_t = int(np.ceil(horizon / dtf - 1e-12))

    coarse = np.linspace(-T, 0.0, n + 1)
    fine_hist = np.linspace(-T, 0.0, off + 1)[:-1]
    hist = np.interp(fine_hist, coarse, np.append(p.eta1, p.eta0))

    t = np.arange(n_t + 1) * dtf
    c_vals = c.value_at(t)
    w = cfg.kernel_weights
    ert = np.exp(cfg.r * t)
    emt = np.exp(-cfg.r * t)

    full = np.empty(off + n_t + 1)
    full[:off] = hist
    full[off:] = p.eta0          # initial Picard guess: frozen present

    z = full[off:]
    for it in range(1, max_iter + 1):
        q = np.zeros(n_t + 1)
        for j in range(n + 1):
            q += w[j] * full[j * fpc: j * fpc + n_t + 1]
        g = emt * (cfg.dynamics.f0(z, q) - c_vals)
        integral = np.concatenate(([0.0], np.cumsum((g[1:] + g[:-1]) * (dtf / 2.0))))
        z_new = ert * (p.eta0 + integral)
        gap = float(np.max(np.abs(z_new - z)))
        full[off:] = z_new
        z = full[off:]
        if gap < tol:
            break
    else:
        raise NoConvergence(f"Picard iteration stalled (last sup-difference {gap:.2e})")

    out_times = np.arange(int(round(n_t / fpc)) + 1) * cfg.delta
    points = []
    for k in range(len(out_times)):
        pos = off + k * fpc
        window = full[pos - off: pos: fpc]
        points.append(HilbertPoint(float(full[pos]), window.copy()))
    return MildSolution(times=out_times, points=points, path_times=t,
                        path=full[off:].copy(), iterations=it)


# ---------------------------------------------------------------------------
# concentrated-lag counterexample
# ---------------------------------------------------------------------------

def remark_c(eta0: float, int_eta1: float, r: float) -> float:
    """Matching constant of the pointwise-delay generator inverse."""
    return eta0 / (r + 1.0) - r / (r + 1.0) * int_eta1


@dataclass
class CounterexampleRow:
    n: int
    abs_eta0: float
    minus_one_norm: float


@dataclass
class CounterexampleTable:
    r: float
    T: float
    rows: list[CounterexampleRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,abs_eta0,minus_one_norm\n")
        for row in self.rows:
            buf.write(f"{row.n},{row.abs_eta0:.12g},{row.minus_one_norm:.12g}\n")
        return buf.getvalue()


def pointwise_delay_counterexample(n_max: int = 1024, T: float = 1.0) -> CounterexampleTable:
    """Family with |eta0| fixed at 1/2 while the weak norm of the
    pointwise-delay generator vanishes.

    eta1_n carries mass -1/2 on a ramp of width T/n at the left end, so the
    matching constant is c = 1/2, the present component of the generator
    inverse vanishes, and the remaining L2 piece shrinks like sqrt(T/(12 n)).
    """
    r = 1.0 / 3.0   # (1 - r) / (1 + r) = 1/2
    eta0 = 0.5
    rows = []
    n = 1
    while n <= n_max:
        width = T / n
        m = max(256, 16 * n)
        s = np.linspace(-T, 0.0, m + 1)
        eta1 = np.where(s < -T + width, -0.5 / width, 0.0)
        partial = np.concatenate(
            ([0.0], np.cumsum((eta1[1:] + eta1[:-1]) * (T / m) / 2.0))
        )
        int_total = float(partial[-1])
        c = remark_c(eta0, int_total, r)
        q0 = (eta0 - c) / r
        q1 = c + partial
        l2 = float(np.trapz(q1 ** 2, dx=T / m))
        rows.append(CounterexampleRow(n, abs(eta0), float(np.sqrt(q0 ** 2 + l2))))
        n *= 2
    return CounterexampleTable(r=r, T=T, rows=rows)


def zero_control_weak_norm_ratio(cfg: ProblemConfig, eta_a: HistoryState,
                                 eta_b: HistoryState, fine_per_cell: int = 8) -> float:
    """Empirical constant sup_t ||X(t) - Xbar(t)||_{-1} / ||eta - etabar||_{-1}
    over [0, T] for zero-control mild solutions."""
    zero = ControlPath(dt=cfg.T, values=np.zeros(1))
    sa = mild_solve(cfg, from_history(eta_a), zero, cfg.T, fine_per_cell)
    sb = mild_solve(cfg, from_history(eta_b), zero, cfg.T, fine_per_cell)
    denom = minus_one_norm(cfg, HilbertPoint(eta_a.eta0 - eta_b.eta0,
                                             eta_a.eta1 - eta_b.eta1))
    worst = 0.0
    for pa, pb in zip(sa.points, sb.points):
        d = HilbertPoint(pa.eta0 - pb.eta0, pa.eta1 - pb.eta1)
        worst = max(worst, minus_one_norm(cfg, d))
    return worst / denom
