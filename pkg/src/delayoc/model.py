"""Model data: problem configuration, hypothesis certificates, history states.

All model functions (dynamics, utilities) must accept numpy arrays and
broadcast; the integrators and validators call them on whole grids.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import ConfigMismatch

Array = np.ndarray

#: admissibility cutoff below which a state counts as having touched zero
def positivity_tolerance(eta0: float) -> float:
    return 1e-12 * (1.0 + abs(eta0))


@dataclass(frozen=True)
class DynamicsSpec:
    """Production term f0(x, y): jointly concave, nondecreasing in y, Lipschitz."""

    f0: Callable[[Array, Array], Array]
    lipschitz_const: float
    name: str = ""


@dataclass(frozen=True)
class KernelSpec:
    """Delay kernel a(.) sampled on the closed uniform grid over [-T, 0].

    ``samples[0]`` is a(-T) and must be exactly zero; ``derivative_bound``
    is the declared W^{1,2}-style slope bound checked against finite
    differences.  ``claims_mass_near_zero`` marks kernels asserting that
    every right-neighborhood of 0 carries positive mass.
    """

    samples: Array
    derivative_bound: float
    name: str = ""
    claims_mass_near_zero: bool = True

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))

    @property
    def n_hist(self) -> int:
        return len(self.samples) - 1


@dataclass(frozen=True)
class UtilitySpec:
    """Consumption utility: increasing, strictly concave, bounded, u'(0+) = inf."""

    u: Callable[[Array], Array]
    u_prime: Callable[[Array], Array]
    u_sup: float
    name: str = ""


@dataclass(frozen=True)
class StateUtilitySpec:
    """State utility: nondecreasing, concave, bounded above; may be identically 0."""

    u: Callable[[Array], Array]
    u_sup: float
    nonintegrable_at_zero: bool = False
    strong_blowup: bool = False
    name: str = ""

    @property
    def is_zero(self) -> bool:
        probe = np.array([1e-6, 0.5, 1.0, 7.0])
        return bool(np.all(self.u(probe) == 0.0)) and self.u_sup == 0.0


def zero_state_utility() -> StateUtilitySpec:
    return StateUtilitySpec(
        u=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        u_sup=0.0,
        name="zero",
    )


@dataclass(frozen=True)
class HistoryState:
    """A point (eta0, eta1) of R x L2(-T, 0): present value plus sampled history.

    ``eta1`` holds n_hist samples on the uniform grid over [-T, 0); the
    value at 0 is ``eta0`` itself.  The state function is the piecewise
    linear interpolant through those nodes.
    """

    eta0: float
    eta1: Array

    def __post_init__(self):
        object.__setattr__(self, "eta1", np.asarray(self.eta1, dtype=float))

    def in_h_plus(self) -> bool:
        return self.eta0 > 0.0

    def in_h_plus_plus(self) -> bool:
        return self.eta0 > 0.0 and bool(np.all(self.eta1 >= 0.0))

    def nodes(self) -> Array:
        """State samples on the closed grid [-T, 0], ending with eta0."""
        return np.append(self.eta1, self.eta0)

    def with_eta0(self, eta0: float) -> "HistoryState":
        return HistoryState(float(eta0), self.eta1)


def constant_history(eta0: float, n_hist: int, level: float | None = None) -> HistoryState:
    level = eta0 if level is None else level
    return HistoryState(float(eta0), np.full(n_hist, float(level)))


@dataclass(frozen=True)
class ProblemConfig:
    """All model data for one control problem instance."""

    r: float
    rho: float
    T: float
    dynamics: DynamicsSpec
    kernel: KernelSpec
    u1: UtilitySpec
    u2: StateUtilitySpec
    name: str = ""

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigMismatch(f"rho must be > 0, got {self.rho}")
        if not self.T > 0:
            raise ConfigMismatch(f"T must be > 0, got {self.T}")

    @property
    def n_hist(self) -> int:
        return self.kernel.n_hist

    @property
    def delta(self) -> float:
        """History grid spacing T / n_hist."""
        return self.T / self.n_hist

    @cached_property
    def kernel_weights(self) -> Array:
        """Trapezoid weights times kernel samples on the closed [-T, 0] grid."""
        n = self.n_hist
        w = np.full(n + 1, self.delta)
        w[0] = w[-1] = self.delta / 2.0
        return w * self.kernel.samples

    @property
    def utility_sup(self) -> float:
        return self.u1.u_sup + self.u2.u_sup

    @property
    def value_upper_bound(self) -> float:
        return self.utility_sup / self.rho

    @cached_property
    def fingerprint(self) -> str:
        """Content hash from numeric probes of all model functions."""
        xs = np.geomspace(1e-6, 50.0, 24)
        ys = np.linspace(-20.0, 20.0, 9)
        h = hashlib.sha256()
        h.update(np.array([self.r, self.rho, self.T, self.dynamics.lipschitz_const]).tobytes())
        h.update(self.kernel.samples.tobytes())
        h.update(np.asarray(self.dynamics.f0(xs, ys[:, None])).tobytes())
        h.update(np.asarray(self.u1.u(xs)).tobytes())
        h.update(np.asarray(self.u1.u_prime(xs)).tobytes())
        h.update(np.asarray(self.u2.u(xs)).tobytes())
        h.update(np.array([self.u1.u_sup, self.u2.u_sup]).tobytes())
        return h.hexdigest()

    def history(self, eta0: float, level: float | None = None) -> HistoryState:
        return constant_history(eta0, self.n_hist, level)

    def check_history(self, eta: HistoryState) -> None:
        if len(eta.eta1) != self.n_hist:
            raise ConfigMismatch(
                f"history has {len(eta.eta1)} samples, kernel grid needs {self.n_hist}"
            )


def with_state_utility(cfg: ProblemConfig, u2: StateUtilitySpec, suffix: str = "") -> ProblemConfig:
    return replace(cfg, u2=u2, name=cfg.name + suffix)


def with_kernel(cfg: ProblemConfig, kernel: KernelSpec, suffix: str = "") -> ProblemConfig:
    return replace(cfg, kernel=kernel, name=cfg.name + suffix)


# ---------------------------------------------------------------------------
# hypothesis validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    witness: object = None
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[HypothesisCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.name != "growth_nonnegative_section4")

    @property
    def section4_ready(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            extra = f"  witness={c.witness}" if (not c.passed and c.witness is not None) else ""
            lines.append(f"[{mark}] {c.name}{extra}")
        return "\n".join(lines)


_CONCAVITY_TOL = 1e-10
_N_SAMPLE = 100


def _check(checks, name, passed, witness=None, detail=""):
    checks.append(HypothesisCheck(name, bool(passed), witness, detail))


def _dynamics_checks(checks, dyn: DynamicsSpec):
    rng = np.random.default_rng(20240 + 7)
    f0, c_lip = dyn.f0, dyn.lipschitz_const
    px = rng.uniform(0.0, 30.0, _N_SAMPLE)
    py = rng.uniform(-15.0, 25.0, _N_SAMPLE)
    qx = rng.uniform(0.0, 30.0, _N_SAMPLE)
    qy = rng.uniform(-15.0, 25.0, _N_SAMPLE)

    ok, witness = True, None
    for lam in (0.25, 0.5, 0.75):
        mx, my = lam * px + (1 - lam) * qx, lam * py + (1 - lam) * qy
        gap = f0(mx, my) - lam * f0(px, py) - (1 - lam) * f0(qx, qy)
        if np.min(gap) < -_CONCAVITY_TOL:
            i = int(np.argmin(gap))
            ok, witness = False, (lam, (px[i], py[i]), (qx[i], qy[i]))
            break
    _check(checks, "dynamics_jointly_concave", ok, witness)

    dy = f0(px, py + 1.0) - f0(px, py)
    bad = np.min(dy)
    _check(checks, "dynamics_monotone_in_delay", bad >= -1e-12,
           None if bad >= -1e-12 else (px[int(np.argmin(dy))], py[int(np.argmin(dy))]))

    lhs = np.abs(f0(px, py) - f0(qx, qy))
    rhs = c_lip * (np.abs(px - qx) + np.abs(py - qy))
    viol = lhs - rhs * (1 + 1e-9) - 1e-12
    i = int(np.argmax(viol))
    _check(checks, "dynamics_lipschitz", np.max(viol) <= 0,
           None if np.max(viol) <= 0 else ((px[i], py[i]), (qx[i], qy[i])),
           f"declared C_f0={c_lip}")

    ys = np.geomspace(1e-2, 100.0, 50)
    vals = f0(np.zeros_like(ys), ys)
    _check(checks, "dynamics_positive_at_origin", np.min(vals) > 0,
           None if np.min(vals) > 0 else ys[int(np.argmin(vals))],
           "f0(0, y) > 0 for y > 0")


def _kernel_checks(checks, ker: KernelSpec, T: float):
    a = ker.samples
    n = ker.n_hist
    dx = T / n
    _check(checks, "kernel_vanishes_at_minus_T", a[0] == 0.0, float(a[0]))
    _check(checks, "kernel_nonnegative", np.min(a) >= 0.0,
           None if np.min(a) >= 0 else float(np.min(a)))
    slopes = np.abs(np.diff(a)) / dx
    worst = float(np.max(slopes)) if len(slopes) else 0.0
    _check(checks, "kernel_slope_bound", worst <= ker.derivative_bound * (1 + 1e-6) + 1e-9,
           worst, f"declared bound {ker.derivative_bound}")
    if ker.claims_mass_near_zero:
        ok, witness = True, None
        for frac in (8, 4, 2):
            m = n // frac
            mass = np.trapz(a[n - m:], dx=dx)
            if not mass > 0:
                ok, witness = False, T / frac
                break
        _check(checks, "kernel_mass_near_zero", ok, witness, "Eq. (3.1)(ii) surrogate")


def _u1_checks(checks, u1: UtilitySpec):
    cs = np.geomspace(1e-8, 1e3, _N_SAMPLE)
    u, up = u1.u(cs), u1.u_prime(cs)
    _check(checks, "u1_strictly_increasing", np.all(np.diff(u) > 0))
    mid = u1.u((cs[:-1] + cs[1:]) / 2)
    _check(checks, "u1_strictly_concave", np.all(mid > (u[:-1] + u[1:]) / 2),
           detail="midpoint test on a log grid")
    _check(checks, "u1_marginal_decreasing", np.all(np.diff(up) < 0))
    _check(checks, "u1_bounded", np.isfinite(u1.u_sup) and np.all(u <= u1.u_sup + 1e-12),
           None if np.isfinite(u1.u_sup) else u1.u_sup)
    _check(checks, "u1_inada_at_zero", float(u1.u_prime(np.array(1e-8))) > 1e3,
           float(u1.u_prime(np.array(1e-8))))


def _u2_checks(checks, u2: StateUtilitySpec, rho: float, c_lip: float):
    xs = np.geomspace(1e-6, 100.0, _N_SAMPLE)
    u = u2.u(xs)
    _check(checks, "u2_nondecreasing", np.all(np.diff(u) >= -1e-12))
    mid = u2.u((xs[:-1] + xs[1:]) / 2)
    _check(checks, "u2_concave", np.all(mid >= (u[:-1] + u[1:]) / 2 - 1e-9))
    _check(checks, "u2_bounded_above",
           np.isfinite(u2.u_sup) and np.all(u <= u2.u_sup + 1e-12))

    if u2.nonintegrable_at_zero:
        # crude singularity probe: 64-node uniform trapezoid on [delta, 1]
        grid = np.linspace(1e-6, 1.0, 64)
        est = float(np.trapz(u2.u(grid), grid))
        _check(checks, "u2_nonintegrable_at_zero", est < -1e3, est,
               "trapezoid of U2 on [1e-6, 1]")
    if u2.strong_blowup:
        val = float(1e-6 * u2.u(np.array(1e-6)))
        _check(checks, "u2_strong_blowup", val < -1e3, val, "x*U2(x) at x=1e-6")

    # discounted floor integrability (Hypothesis 2.2(ii) integral condition):
    # estimate the blow-up exponent p of |U2| near 0 and require rho > p*C_f0.
    mag = np.abs(np.asarray(u2.u(np.array([1e-6, 1e-7])), dtype=float))
    if mag[0] > 1.0:
        p_hat = float(np.log(mag[1] / mag[0]) / np.log(10.0))
        _check(checks, "u2_discounted_floor_integrable", rho > p_hat * c_lip,
               None if rho > p_hat * c_lip else (p_hat, c_lip, rho),
               f"requires rho > p*C_f0 with p~{p_hat:.2f}")
    else:
        _check(checks, "u2_discounted_floor_integrable", True, detail="U2 bounded near 0")


def validate_config(cfg: ProblemConfig) -> ValidationReport:
    """Run every hypothesis certificate; report-only, deterministic."""
    checks: list[HypothesisCheck] = []
    _check(checks, "rho_positive", cfg.rho > 0, cfg.rho)
    _check(checks, "T_positive", cfg.T > 0, cfg.T)
    _dynamics_checks(checks, cfg.dynamics)
    _kernel_checks(checks, cfg.kernel, cfg.T)
    _u1_checks(checks, cfg.u1)
    _u2_checks(checks, cfg.u2, cfg.rho, cfg.dynamics.lipschitz_const)

    # section-4 growth condition r*x + f0(x, 0) >= 0 for sampled x >= 0
    xs = np.geomspace(1e-6, 100.0, 50)
    xs = np.append(0.0, xs)
    growth = cfg.r * xs + cfg.dynamics.f0(xs, np.zeros_like(xs))
    ok = bool(np.min(growth) >= -1e-12)
    _check(checks, "growth_nonnegative_section4", ok,
           None if ok else float(xs[int(np.argmin(growth))]))
    return ValidationReport(checks)
