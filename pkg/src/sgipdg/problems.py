"""Problem data for -Laplace(u) + c u = f on [0, 1]^d with zero Dirichlet data.

Fields are callables on point arrays of shape ``(npts, d)``. A field may
also be a :class:`SeparableField`, a short sum of products of 1D functions;
assembly and error measurement then use exact Kronecker factorisations
instead of d-dimensional quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class SeparableTerm:
    coef: float
    factors: tuple
    derivatives: Optional[tuple] = None


@dataclass(frozen=True)
class SeparableField:
    """sum_t coef_t * prod_m g_{t,m}(x_m)."""

    terms: tuple

    @property
    def dim(self):
        return len(self.terms[0].factors)

    def __call__(self, x):
        x = np.atleast_2d(x)
        out = np.zeros(x.shape[0])
        for term in self.terms:
            val = np.full(x.shape[0], float(term.coef))
            for m, g in enumerate(term.factors):
                val = val * g(x[:, m])
            out += val
        return out

    @property
    def has_gradient(self):
        return all(t.derivatives is not None for t in self.terms)

    def gradient(self, x):
        x = np.atleast_2d(x)
        d = x.shape[1]
        out = np.zeros(x.shape)
        for term in self.terms:
            vals = [g(x[:, m]) for m, g in enumerate(term.factors)]
            for m in range(d):
                val = np.full(x.shape[0], float(term.coef)) * term.derivatives[m](x[:, m])
                for n in range(d):
                    if n != m:
                        val = val * vals[n]
                out[:, m] += val
        return out


def _const(value):
    return lambda t: np.full(np.shape(t), float(value))


@dataclass(frozen=True)
class ProblemSpec:
    d: int
    c: Callable
    f: Callable
    u: Optional[Callable] = None
    grad_u: Optional[Callable] = None
    name: str = "custom"
    constant_c: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        if self.d < 2:
            raise ProblemError("dimension must be >= 2")
        if self.grad_u is None and isinstance(self.u, SeparableField) and self.u.has_gradient:
            object.__setattr__(self, "grad_u", self.u.gradient)

    @property
    def has_exact(self):
        return self.u is not None

    def check_coefficient(self, values):
        values = np.asarray(values)
        if np.any(values < 0.0):
            raise ProblemError(
                f"coefficient c is negative at a quadrature node (min {values.min():.3e})"
            )


def _sin(t):
    return np.sin(np.pi * t)


def _dsin(t):
    return np.pi * np.cos(np.pi * t)


def _one_minus_sq(t):
    return 1.0 - t * t


def _sin_weighted(t):
    return (1.0 - t * t) * np.sin(np.pi * t)


def sine_solution(d):
    return SeparableField((SeparableTerm(1.0, (_sin,) * d, (_dsin,) * d),))


def example1(d):
    """c = prod(1 - x_m^2), u = prod sin(pi x_m)."""
    c = SeparableField((SeparableTerm(1.0, (_one_minus_sq,) * d),))
    f = SeparableField((
        SeparableTerm(d * np.pi**2, (_sin,) * d),
        SeparableTerm(1.0, (_sin_weighted,) * d),
    ))
    return ProblemSpec(d, c, f, sine_solution(d), name="example1")


def constant_c(d, value=1.0):
    c = SeparableField((SeparableTerm(float(value), (_const(1.0),) * d),))
    f = SeparableField((SeparableTerm(d * np.pi**2 + value, (_sin,) * d),))
    return ProblemSpec(d, c, f, sine_solution(d), name="constant_c", constant_c=float(value))


def example1_nonseparable(d):
    """Example 1 with plain callables only (forces the quadrature paths)."""
    ref = example1(d)

    def c(x):
        return np.prod(1.0 - np.atleast_2d(x) ** 2, axis=1)

    return ProblemSpec(
        d,
        c,
        lambda x: ref.f(x),
        lambda x: ref.u(x),
        ref.grad_u,
        name="example1_quad",
    )


def gaussian_c(d):
    """Non-separable smooth coefficient exp(-|x - 1/2|^2), u = prod sin."""
    u = sine_solution(d)

    def c(x):
        x = np.atleast_2d(x)
        return np.exp(-np.sum((x - 0.5) ** 2, axis=1))

    def f(x):
        return (d * np.pi**2 + c(x)) * u(x)

    return ProblemSpec(d, c, f, u, name="gaussian_c")


PROBLEMS = {
    "example1": example1,
    "constant_c": constant_c,
    "example1_quad": example1_nonseparable,
    "gaussian_c": gaussian_c,
}


def builtin_problem(name, d):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ProblemError(
            f"unknown problem {name!r}; choose from {', '.join(sorted(PROBLEMS))}"
        ) from None
    if d < 2:
        raise ProblemError("dimension must be >= 2")
    return factory(d)
