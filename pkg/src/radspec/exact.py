"""Closed-form solutions and special functions used as independent oracles.

Everything here is checkable by hand or against classical identities:
power-law harmonics, spherical Bessel modes of the ball eigenproblem,
the fundamental singularity, and manufactured semilinear problems whose
exact solution is known by construction.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .sphere import SphereField, lb_eigenvalue
from .system import RadialPotential, TraceState, ZeroPotential


# ---------------------------------------------------------------------------
# Spherical Bessel functions


def spherical_bessel(l, x):
    """j_l(x) by stable recurrence: upward for x > l, downward (Miller) otherwise."""
    if l < 0:
        raise ValueError("order must be >= 0")
    if x < 0:
        raise ValueError("argument must be >= 0")
    if x == 0.0:
        return 1.0 if l == 0 else 0.0
    if x < 1e-6:
        # leading series term, enough at this magnitude
        num = x**l
        for k in range(1, l + 1):
            num /= 2 * k + 1
        return num * (1.0 - x * x / (2.0 * (2 * l + 3)))
    j0 = math.sin(x) / x
    if l == 0:
        return j0
    j1 = math.sin(x) / x**2 - math.cos(x) / x
    if l == 1:
        return j1
    if x > l:
        jm, jc = j0, j1
        for k in range(1, l):
            jm, jc = jc, (2 * k + 1) / x * jc - jm
        return jc
    # downward recurrence, normalized against j0
    start = l + 20 + int(1.5 * x)
    jp, jc = 0.0, 1e-30
    out = 0.0
    for k in range(start, 0, -1):
        jm = (2 * k + 1) / x * jc - jp
        jp, jc = jc, jm
        if k - 1 == l:
            out = jp
        if abs(jc) > 1e250:
            jc *= 1e-250
            jp *= 1e-250
            out *= 1e-250
    return out * j0 / jc


def spherical_bessel_derivative(l, x):
    """d/dx j_l(x)."""
    if x == 0.0:
        return 1.0 / 3.0 if l == 1 else 0.0
    if l == 0:
        return -spherical_bessel(1, x)
    return spherical_bessel(l - 1, x) - (l + 1) / x * spherical_bessel(l, x)


def bessel_zero(l, k, tol=1e-12):
    """k-th positive zero of j_l, by interlacing brackets and bisection.

    Zeros of consecutive orders interlace, so brackets for order l come
    from the zeros of order l - 1; the base case j_0 = sin(x)/x has zeros
    at multiples of pi.
    """
    if l < 0 or k < 1:
        raise ValueError("need l >= 0 and k >= 1")
    count = k + l  # zeros needed at order 0 to reach order l by interlacing
    zeros = [m * math.pi for m in range(1, count + 1)]
    for order in range(1, l + 1):
        new = []
        for m in range(len(zeros) - 1):
            lo, hi = zeros[m], zeros[m + 1]
            flo = spherical_bessel(order, lo)
            fhi = spherical_bessel(order, hi)
            if flo == 0.0:
                new.append(lo)
                continue
            if flo * fhi > 0.0:
                raise RuntimeError(
                    f"bracket for zero {m + 1} of j_{order} not found in "
                    f"({lo:.6f}, {hi:.6f})"
                )
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = spherical_bessel(order, mid)
                if fm == 0.0 or hi - lo < tol:
                    break
                if flo * fm < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            new.append(0.5 * (lo + hi))
        zeros = new
        if len(zeros) < k:
            raise RuntimeError(f"search window exhausted before zero {k} of j_{l}")
    return zeros[k - 1]


# ---------------------------------------------------------------------------
# Trace evaluators


def constant_coefficient(basis):
    """Coefficient of the constant function 1 on the l = 0 mode."""
    return math.sqrt(4.0 * math.pi) if basis.n == 3 else math.sqrt(2.0 * math.pi)


def harmonic_trace(basis, l, m, sign, t):
    """Boundary data at radius t of the power-law harmonic r^l Y (+) or its
    singular partner r^{2-n-l} Y (-)."""
    if t <= 0:
        raise ValueError("radius must be positive")
    y = SphereField.unit(basis, l, m)
    if sign in (1, "+", "plus"):
        return TraceState(t, y * t**l, y * (l * t ** (l - 1.0)))
    if sign in (-1, "-", "minus"):
        p = 2.0 - basis.n - l
        if basis.n == 2 and l == 0:
            raise ValueError("the n=2, l=0 singular partner is log r; use log_trace")
        return TraceState(t, y * t**p, y * (p * t ** (p - 1.0)))
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def fundamental_trace(basis, t):
    """Boundary data of the fundamental singularity r^{2-n} (n = 3)."""
    if basis.n != 3:
        raise ValueError("fundamental_trace is the n = 3 singularity; n = 2 uses log_trace")
    c = constant_coefficient(basis)
    f = SphereField.unit(basis, 0, 0) * (c / t)
    g = SphereField.unit(basis, 0, 0) * (-c / t**2)
    return TraceState(t, f, g)


def log_trace(basis, t):
    """Boundary data of log r, the slowly-singular harmonic for n = 2."""
    if basis.n != 2:
        raise ValueError("log_trace applies to n = 2")
    c = constant_coefficient(basis)
    f = SphereField.unit(basis, 0, 0) * (c * math.log(t))
    g = SphereField.unit(basis, 0, 0) * (c / t)
    return TraceState(t, f, g)


def bessel_trace(basis, l, m, lam, t):
    """Boundary data of j_l(sqrt(lam) r) Y_l^m, which solves Δu = -lam u."""
    s = math.sqrt(lam)
    y = SphereField.unit(basis, l, m)
    f = y * spherical_bessel(l, s * t)
    g = y * (s * spherical_bessel_derivative(l, s * t))
    return TraceState(t, f, g)


# ---------------------------------------------------------------------------
# Registered solutions and manufactured problems


@dataclass
class ExactSolution:
    """A named trace evaluator with the problem data it solves."""

    name: str
    basis: object
    trace: object  # t -> TraceState
    potential: object
    nonlinearity: object = None
    t_range: tuple = (0.5, 1.5)
    residual_step: float = 2e-4

    def sample(self, n_points=None):
        lo, hi = self.t_range
        if n_points is None:
            n_points = max(int(round((hi - lo) / self.residual_step)) + 1, 5)
        ts = np.linspace(lo, hi, n_points)
        return [self.trace(t) for t in ts]


def oracle_library(basis):
    """The standard closed-form solutions available on a given basis."""
    sols = []
    n, l_top = basis.n, basis.l_max
    for l, m in [(0, 0), (1, 0), (min(2, l_top), min(1, l_top))]:
        if l > l_top:
            continue
        sols.append(
            ExactSolution(
                name=f"harmonic(l={l},m={m},+)",
                basis=basis,
                trace=lambda t, l=l, m=m: harmonic_trace(basis, l, m, "+", t),
                potential=ZeroPotential(),
                t_range=(0.5, 1.5),
            )
        )
    for l, m in [(0, 0), (1, 0)]:
        if l > l_top or (n == 2 and l == 0):
            continue
        sols.append(
            ExactSolution(
                name=f"harmonic(l={l},m={m},-)",
                basis=basis,
                trace=lambda t, l=l, m=m: harmonic_trace(basis, l, m, "-", t),
                potential=ZeroPotential(),
                t_range=(1.0, 2.0),
            )
        )
    if n == 3:
        sols.append(
            ExactSolution(
                name="fundamental",
                basis=basis,
                trace=lambda t: fundamental_trace(basis, t),
                potential=ZeroPotential(),
                t_range=(1.0, 2.0),
            )
        )
        lam0 = math.pi**2
        sols.append(
            ExactSolution(
                name="bessel(l=0,k=1)",
                basis=basis,
                trace=lambda t: bessel_trace(basis, 0, 0, lam0, t),
                potential=RadialPotential.constant(-lam0),
                t_range=(0.5, 1.5),
            )
        )
        if l_top >= 1:
            lam1 = bessel_zero(1, 1) ** 2
            sols.append(
                ExactSolution(
                    name="bessel(l=1,k=1)",
                    basis=basis,
                    trace=lambda t: bessel_trace(basis, 1, 0, lam1, t),
                    potential=RadialPotential.constant(-lam1),
                    t_range=(0.5, 1.5),
                )
            )
    else:
        sols.append(
            ExactSolution(
                name="log",
                basis=basis,
                trace=lambda t: log_trace(basis, t),
                potential=ZeroPotential(),
                t_range=(1.0, 2.0),
            )
        )
    gauss = _gaussian_linear(basis)
    sols.append(gauss.solution)
    return sols


@dataclass
class ManufacturedProblem:
    """A semilinear problem with a known exact solution."""

    name: str
    potential: object
    nonlinearity: object
    solution: ExactSolution
    radius: float = 1.0
    boundary: str = "none"
    notes: str = ""


def _gaussian_linear(basis):
    n = basis.n
    c = constant_coefficient(basis)

    def trace(t):
        e = math.exp(-t * t)
        f = SphereField.unit(basis, 0, 0) * (c * e)
        g = SphereField.unit(basis, 0, 0) * (-2.0 * t * c * e)
        return TraceState(t, f, g)

    pot = RadialPotential.polynomial([-2.0 * n, 0.0, 4.0])
    sol = ExactSolution(
        name="gaussian-linear",
        basis=basis,
        trace=trace,
        potential=pot,
        t_range=(0.2, 1.5),
    )
    return ManufacturedProblem(
        name="gaussian-linear",
        potential=pot,
        nonlinearity=None,
        solution=sol,
        radius=1.0,
        notes="u = exp(-r^2) solves Δu = (4 r^2 - 2 n) u exactly",
    )


def manufactured_problem(name, basis):
    """Look up a manufactured fixture by name.

    'cubic-forced' adds a radial forcing term, so F(x, 0) != 0 there;
    that extension beyond forcing-free nonlinearities is deliberate, to
    have a nonzero exact solution to converge to.
    """
    from .nonlinear import PowerLaw, RadialForcing, SumNonlinearity, ZeroNonlinearity

    if name == "gaussian-linear":
        return _gaussian_linear(basis)

    if name == "cubic-forced":
        n = basis.n
        c = constant_coefficient(basis)

        def trace(t):
            f = SphereField.unit(basis, 0, 0) * (c * (1.0 - t * t))
            g = SphereField.unit(basis, 0, 0) * (-2.0 * t * c)
            return TraceState(t, f, g)

        def forcing(t):
            return -2.0 * n - (1.0 - t * t) ** 3

        nl = SumNonlinearity([PowerLaw(3), RadialForcing(forcing)])
        sol = ExactSolution(
            name="cubic-forced",
            basis=basis,
            trace=trace,
            potential=ZeroPotential(),
            nonlinearity=nl,
            t_range=(0.3, 1.0),
        )
        return ManufacturedProblem(
            name="cubic-forced",
            potential=ZeroPotential(),
            nonlinearity=nl,
            solution=sol,
            radius=1.0,
            boundary="dirichlet",
            notes="u = 1 - r^2 solves Δu = u^3 + h with h = -2n - (1 - r^2)^3; "
            "vanishing Dirichlet data on the unit sphere",
        )

    if name == "zero":
        from .nonlinear import PowerLaw as _P

        def trace(t):
            return TraceState(
                t, SphereField.zero(basis), SphereField.zero(basis)
            )

        sol = ExactSolution(
            name="zero",
            basis=basis,
            trace=trace,
            potential=ZeroPotential(),
            nonlinearity=_P(3),
            t_range=(0.5, 1.5),
        )
        return ManufacturedProblem(
            name="zero",
            potential=ZeroPotential(),
            nonlinearity=_P(3),
            solution=sol,
            radius=1.0,
            notes="the zero solution of any forcing-free problem",
        )

    raise KeyError(f"unknown manufactured problem {name!r}")
