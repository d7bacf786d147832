"""Built-in catalog of model pieces and full problem presets.

Every preset passes ``validate_config``.  Presets with r = 0 fold linear
growth into f0 and are eligible for the section-4 approximation pipelines;
presets with r != 0 exercise the Hilbert-space operators (A^-1 needs r != 0).
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigMismatch
from .model import (
    DynamicsSpec,
    KernelSpec,
    ProblemConfig,
    StateUtilitySpec,
    UtilitySpec,
    zero_state_utility,
)


def saturating_dynamics(slope_x: float = 0.5, cap: float = 10.0,
                        slope_y: float = 0.3) -> DynamicsSpec:
    """f0(x, y) = slope_x * min(x, cap) + slope_y * y."""
    def f0(x, y):
        return slope_x * np.minimum(x, cap) + slope_y * y

    return DynamicsSpec(f0=f0, lipschitz_const=slope_x + slope_y,
                        name=f"saturating({slope_x},{cap},{slope_y})")


def linear_delay_dynamics(slope_y: float = 0.25) -> DynamicsSpec:
    """f0(x, y) = slope_y * y: production driven purely by the delayed stock."""
    def f0(x, y):
        return slope_y * y + 0.0 * x

    return DynamicsSpec(f0=f0, lipschitz_const=slope_y, name=f"linear_delay({slope_y})")


def bounded_root_utility(gamma: float = 0.5) -> UtilitySpec:
    """U1(c) = c^gamma / (1 + c^gamma): bounded by 1, U1'(0+) = +inf."""
    def u(c):
        cg = np.power(np.asarray(c, dtype=float), gamma)
        return cg / (1.0 + cg)

    def u_prime(c):
        c = np.asarray(c, dtype=float)
        cg = np.power(c, gamma)
        return gamma * np.power(c, gamma - 1.0) / (1.0 + cg) ** 2

    return UtilitySpec(u=u, u_prime=u_prime, u_sup=1.0, name=f"bounded_root({gamma})")


def weak_state_utility(n: int = 1, scale: float = 1.0) -> StateUtilitySpec:
    """U2(x) = scale * min(0, 1 - 1/(n x)): not integrable at 0+, zero on [1/n, inf)."""
    def u(x):
        x = np.asarray(x, dtype=float)
        return scale * np.minimum(0.0, 1.0 - 1.0 / (n * x))

    return StateUtilitySpec(u=u, u_sup=0.0, nonintegrable_at_zero=True,
                            strong_blowup=False, name=f"weak({n},{scale})")


def strong_state_utility(n: int = 1, scale: float = 1.0) -> StateUtilitySpec:
    """U2(x) = scale * min(0, 1 - 1/(n x)^2): x*U2(x) -> -inf at 0+."""
    def u(x):
        x = np.asarray(x, dtype=float)
        return scale * np.minimum(0.0, 1.0 - 1.0 / (n * x) ** 2)

    return StateUtilitySpec(u=u, u_sup=0.0, nonintegrable_at_zero=True,
                            strong_blowup=True, name=f"strong({n},{scale})")


def raised_cosine_kernel(T: float, n_hist: int = 64) -> KernelSpec:
    """Smooth kernel (1 - cos) / T on [-T, 0], normalized to unit trapezoid mass."""
    xi = np.linspace(-T, 0.0, n_hist + 1)
    a = (1.0 - np.cos(2.0 * np.pi * (xi + T) / T)) / T
    a[0] = 0.0
    a /= np.trapz(a, dx=T / n_hist)
    bound = float(np.max(np.abs(np.diff(a)))) / (T / n_hist) * 1.05
    return KernelSpec(samples=a, derivative_bound=bound, name="raised-cosine")


def flat_kernel(T: float, n_hist: int = 64) -> KernelSpec:
    """Uniform-density kernel, unit mass.  Violates a(-T)=0; test use only."""
    a = np.full(n_hist + 1, 1.0 / T)
    a /= np.trapz(a, dx=T / n_hist)
    return KernelSpec(samples=a, derivative_bound=1e-9, name="flat")


_PRESET_BUILDERS = {}


def _register(name):
    def deco(fn):
        _PRESET_BUILDERS[name] = fn
        return fn
    return deco


@_register("saturating-production")
def _saturating_production(n_hist=64):
    return ProblemConfig(
        r=0.05, rho=1.0, T=1.0,
        dynamics=saturating_dynamics(0.5, 10.0, 0.3),
        kernel=raised_cosine_kernel(1.0, n_hist),
        u1=bounded_root_utility(0.5),
        u2=weak_state_utility(1, 1.0),
        name="saturating-production",
    )


@_register("zero-state-utility")
def _zero_state_utility(n_hist=64):
    return ProblemConfig(
        r=0.0, rho=1.0, T=1.0,
        dynamics=saturating_dynamics(0.5, 10.0, 0.3),
        kernel=raised_cosine_kernel(1.0, n_hist),
        u1=bounded_root_utility(0.5),
        u2=zero_state_utility(),
        name="zero-state-utility",
    )


@_register("strong-blowup")
def _strong_blowup(n_hist=64):
    return ProblemConfig(
        r=0.0, rho=1.5, T=1.0,
        dynamics=saturating_dynamics(0.4, 10.0, 0.2),
        kernel=raised_cosine_kernel(1.0, n_hist),
        u1=bounded_root_utility(0.5),
        u2=strong_state_utility(1, 1.0),
        name="strong-blowup",
    )


@_register("discounted-linear")
def _discounted_linear(n_hist=64):
    return ProblemConfig(
        r=0.3, rho=0.4, T=1.0,
        dynamics=linear_delay_dynamics(0.25),
        kernel=raised_cosine_kernel(1.0, n_hist),
        u1=bounded_root_utility(0.5),
        u2=zero_state_utility(),
        name="discounted-linear",
    )


@_register("pointwise-lag")
def _pointwise_lag(n_hist=64):
    return ProblemConfig(
        r=0.0, rho=1.5, T=1.0,
        dynamics=saturating_dynamics(0.4, 10.0, 0.2),
        kernel=raised_cosine_kernel(1.0, n_hist),
        u1=bounded_root_utility(0.5),
        u2=zero_state_utility(),
        name="pointwise-lag",
    )


def preset_names() -> list[str]:
    return list(_PRESET_BUILDERS)


def get_preset(name: str, n_hist: int = 64) -> ProblemConfig:
    try:
        builder = _PRESET_BUILDERS[name]
    except KeyError:
        raise ConfigMismatch(f"unknown preset {name!r}; have {preset_names()}") from None
    return builder(n_hist=n_hist)


def builtin_catalog(n_hist: int = 64) -> list[ProblemConfig]:
    """All named presets, each passing validate_config."""
    return [get_preset(name, n_hist) for name in preset_names()]
