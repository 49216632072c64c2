"""Radial trace dynamics for elliptic systems Δu = V·u.

A solution on a ball is represented by its Dirichlet/Neumann boundary
data (f, g) on spheres of radius t.  In t these satisfy a first-order
evolution system; substituting t = e^tau and weighting the pair by
powers of t produces an autonomous-plus-decaying-coupling form

    d/dtau (f~, g~) = L (f~, g~) + C(tau) (f~, g~),

where L is block-diagonal over sphere modes with blocks
[[alpha, 1], [lambda_l, alpha + 2 - n]] and the coupling C(tau) carries
the potential with an e^{2 tau} prefactor.  This module owns the state
types, the rescaling maps, the operator assembly, finite-difference
residual checks, the conserved pairing of solution pairs, and the
resolvent of the limiting block operator.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .sphere import SphereBasis, SphereField, lb_eigenvalue


@dataclass
class TraceState:
    """Boundary data (u, du/dr) on the sphere of radius t."""

    t: float
    f: SphereField
    g: SphereField

    def __post_init__(self):
        if self.f.basis != self.g.basis or self.f.coeffs.shape != self.g.coeffs.shape:
            raise ValueError("f and g must share basis and shape")


@dataclass
class RescaledState:
    """Weighted pair (f~, g~) = (t^alpha f, t^{1+alpha} g) at tau = log t."""

    tau: float
    f: SphereField
    g: SphereField
    alpha: float

    def __post_init__(self):
        if self.f.basis != self.g.basis or self.f.coeffs.shape != self.g.coeffs.shape:
            raise ValueError("f and g must share basis and shape")


def rescale_forward(x, alpha):
    """Trace at radius t -> weighted pair at tau = log t."""
    if x.t <= 0:
        raise ValueError(f"radius must be positive, got {x.t}")
    tau = np.log(x.t)
    return RescaledState(
        tau=tau,
        f=x.f * x.t**alpha,
        g=x.g * x.t ** (1.0 + alpha),
        alpha=alpha,
    )


def rescale_inverse(xt):
    """Inverse of :func:`rescale_forward`."""
    t = np.exp(xt.tau)
    return TraceState(t=t, f=xt.f * t ** (-xt.alpha), g=xt.g * t ** (-1.0 - xt.alpha))


def adjoint_transform(x, alpha, n=None):
    """Weighted pair (-t^{n-1-alpha} g, t^{n-2-alpha} f) solving the adjoint flow.

    Whenever (f, g) solves the trace system, the returned pair solves the
    adjoint system checked by :func:`adjoint_residual`.
    """
    if x.t <= 0:
        raise ValueError(f"radius must be positive, got {x.t}")
    if n is None:
        n = x.f.basis.n
    tau = np.log(x.t)
    return RescaledState(
        tau=tau,
        f=x.g * (-(x.t ** (n - 1.0 - alpha))),
        g=x.f * x.t ** (n - 2.0 - alpha),
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# Potentials


class Potential:
    """Base class for the zeroth-order coefficient V in Δu = V·u.

    ``gamma`` is the user-declared Hölder exponent of t -> t^2 V(t, .);
    it is recorded for validation and reporting, not used numerically.
    """

    gamma = 1.0
    is_radial = False
    bandlimit = None  # degree hint for quadrature sizing; None = unknown
    name = "potential"

    def sup_abs(self, t):
        """Upper bound for sup |V| over radii in (0, t] and all angles."""
        raise NotImplementedError

    def radial_value(self, t):
        raise ValueError(f"{self.name} is not radial")

    def node_values(self, t, basis):
        """Values of V(t, .) at the quadrature nodes of ``basis``."""
        if self.is_radial:
            v = self.radial_value(t)
            if np.ndim(v) == 0:
                return np.full(basis.n_nodes, float(v))
            return np.broadcast_to(np.asarray(v), (basis.n_nodes,) + np.shape(v)).copy()
        raise NotImplementedError

    def shifted(self, shift):
        """The potential V + shift (used with shift = -lambda for eigenproblems)."""
        if shift == 0:
            return self
        return ShiftedPotential(self, shift)


class ZeroPotential(Potential):
    is_radial = True
    bandlimit = 0
    name = "zero"

    def sup_abs(self, t):
        return 0.0

    def radial_value(self, t):
        return 0.0


class RadialPotential(Potential):
    """Radial potential V(|x|) given by a callable of the radius."""

    is_radial = True
    bandlimit = 0

    def __init__(self, func, name="radial", gamma=1.0):
        self._func = func
        self.name = name
        self.gamma = gamma

    @classmethod
    def constant(cls, c):
        return cls(lambda t: c + 0.0 * t, name=f"constant({c})")

    @classmethod
    def polynomial(cls, coeffs):
        coeffs = list(coeffs)
        return cls(
            lambda t: np.polynomial.polynomial.polyval(t, coeffs),
            name=f"poly({coeffs})",
        )

    @classmethod
    def table(cls, ts, values, name="table"):
        ts = np.asarray(ts, dtype=float)
        values = np.asarray(values, dtype=float)
        if ts.ndim != 1 or ts.size != values.shape[0]:
            raise ValueError("table radii and values must align")

        def interp(t):
            return np.interp(t, ts, values, left=values[0], right=values[-1])

        return cls(interp, name=name)

    def radial_value(self, t):
        return self._func(t)

    def sup_abs(self, t):
        ts = np.linspace(1e-12, t, 513)
        vals = np.array([np.max(np.abs(self._func(s))) for s in ts])
        return float(vals.max())


class SpherePotential(Potential):
    """Angle-dependent potential from a callable (t, *node_angles) -> node values."""

    def __init__(self, func, sup_bound, bandlimit=None, name="general", gamma=1.0):
        self._func = func
        self._sup = sup_bound  # callable t -> bound, or a constant
        self.bandlimit = bandlimit
        self.name = name
        self.gamma = gamma

    def node_values(self, t, basis):
        return basis.evaluate_on_nodes(lambda *angles: self._func(t, *angles))

    def sup_abs(self, t):
        if callable(self._sup):
            return float(self._sup(t))
        return float(self._sup)


class HarmonicTablePotential(Potential):
    """General potential given spectrally: per radius sample, coefficients of V(t, .).

    Linear interpolation in t between samples, constant extrapolation
    outside.  The bandlimit is the table's degree.
    """

    def __init__(self, basis, ts, coeff_rows, name="harmonic-table", gamma=1.0):
        self.basis = basis
        self.ts = np.asarray(ts, dtype=float)
        self.coeff_rows = np.asarray(coeff_rows, dtype=float)
        if self.coeff_rows.shape != (self.ts.size, basis.n_modes):
            raise ValueError("coefficient table must be (n_samples, n_modes)")
        self.bandlimit = basis.l_max
        self.name = name
        self.gamma = gamma

    def _coeffs_at(self, t):
        out = np.empty(self.basis.n_modes)
        for j in range(self.basis.n_modes):
            out[j] = np.interp(t, self.ts, self.coeff_rows[:, j])
        return out

    def node_values(self, t, basis):
        c = self._coeffs_at(t)
        if basis.n != self.basis.n or basis.l_max < self.basis.l_max:
            raise ValueError("potential table does not fit the requested basis")
        if basis.l_max > self.basis.l_max:
            padded = np.zeros(basis.n_modes)
            padded[: c.size] = c
            c = padded
        return basis.synthesize(c)

    def sup_abs(self, t):
        mask = self.ts <= max(t, self.ts[0])
        rows = self.coeff_rows[mask] if mask.any() else self.coeff_rows[:1]
        sups = [np.max(np.abs(self.basis.synthesize(r))) for r in rows]
        return float(max(sups))


class ShiftedPotential(Potential):
    """V + shift, sharing radial structure with the base potential."""

    def __init__(self, base, shift):
        self.base = base
        self.shift = float(shift)
        self.is_radial = base.is_radial
        self.bandlimit = base.bandlimit
        self.gamma = base.gamma
        self.name = f"{base.name}+({self.shift})"

    def sup_abs(self, t):
        return self.base.sup_abs(t) + abs(self.shift)

    def radial_value(self, t):
        return self.base.radial_value(t) + self.shift

    def node_values(self, t, basis):
        return self.base.node_values(t, basis) + self.shift


# ---------------------------------------------------------------------------
# Pair-state vectors and weighted norms

# A pair state lives in coefficient space as x = [f-coeffs, g-coeffs]
# (mode-major, components contiguous per mode for value_dim > 1).


def pair_weights(basis, beta=0.0, value_dim=1):
    """Diagonal weights whose Euclidean norm realizes the pair Sobolev norm.

    The f block carries (1+lambda)^{(1/2+beta)/2}, the g block
    (1+lambda)^{(-1/2+beta)/2}.
    """
    wf = basis.sobolev_weights(0.5 + beta) ** 0.5
    wg = basis.sobolev_weights(-0.5 + beta) ** 0.5
    if value_dim > 1:
        wf = np.repeat(wf, value_dim)
        wg = np.repeat(wg, value_dim)
    return np.concatenate([wf, wg])


def state_to_vector(state):
    """Flatten a (f, g) pair into [f-coeffs, g-coeffs]."""
    return np.concatenate([np.ravel(state.f.coeffs), np.ravel(state.g.coeffs)])


def vector_to_fields(basis, x, value_dim=1):
    m = basis.n_modes * value_dim
    shape = (basis.n_modes,) if value_dim == 1 else (basis.n_modes, value_dim)
    f = SphereField(basis, x[:m].reshape(shape))
    g = SphereField(basis, x[m:].reshape(shape))
    return f, g


def vector_to_rescaled(basis, x, tau, alpha, value_dim=1):
    f, g = vector_to_fields(basis, x, value_dim)
    return RescaledState(tau=tau, f=f, g=g, alpha=alpha)


def pair_norm(state, beta=0.0):
    """sqrt(|f|_{H^{1/2+beta}}^2 + |g|_{H^{-1/2+beta}}^2)."""
    return float(
        np.hypot(state.f.sobolev_norm(0.5 + beta), state.g.sobolev_norm(-0.5 + beta))
    )


# ---------------------------------------------------------------------------
# The evolution operator


class RadialEvolutionOperator:
    """Right-hand side of the rescaled trace evolution for one problem setup.

    Holds the sphere basis, the weight alpha, and the potential, and
    exposes the constant block-diagonal part, the decaying coupling, and
    the combined right-hand side for integrators.  All actions are pure.
    """

    def __init__(self, basis, alpha, potential=None, value_dim=1):
        self.basis = basis
        self.alpha = float(alpha)
        self.potential = potential if potential is not None else ZeroPotential()
        self.value_dim = int(value_dim)
        self.n = basis.n
        lam = basis.eigenvalues
        if value_dim > 1:
            lam = np.repeat(lam, value_dim)
        self._lam = lam
        self._m = lam.size
        self.dim = 2 * self._m

    # -- limiting (constant) part

    def limit_block(self, l):
        """2x2 constant block for one scalar mode of degree l."""
        lam = lb_eigenvalue(self.n, l)
        a = self.alpha
        return np.array([[a, 1.0], [lam, a + 2.0 - self.n]])

    def limit_matrix(self):
        a, n = self.alpha, self.n
        m = self._m
        top = np.hstack([a * np.eye(m), np.eye(m)])
        bot = np.hstack([np.diag(self._lam), (a + 2.0 - n) * np.eye(m)])
        return np.vstack([top, bot])

    def limit_eigenvalues(self):
        """Per-mode eigenvalue pairs (alpha + l, alpha + 2 - n - l)."""
        degs = self.basis.degrees
        return self.alpha + degs, self.alpha + 2.0 - self.n - degs

    def apply_limit(self, x):
        m = self._m
        f, g = x[:m], x[m:]
        df = self.alpha * f + g
        dg = self._lam_mul(f) + (self.alpha + 2.0 - self.n) * g
        return np.concatenate([df, dg])

    def _lam_mul(self, f):
        if f.ndim == 1:
            return self._lam * f
        return self._lam[:, None] * f

    # -- decaying coupling

    def coupling_field(self, tau, f_coeffs):
        """Coefficients of e^{2 tau} * projection(V(e^tau, .) * f)."""
        t = np.exp(tau)
        pot = self.potential
        scale = np.exp(2.0 * tau)
        if isinstance(pot, ZeroPotential):
            return np.zeros_like(f_coeffs)
        if pot.is_radial:
            v = pot.radial_value(t)
            if np.ndim(v) == 0:
                return scale * float(v) * f_coeffs
            fmat = f_coeffs.reshape(self.basis.n_modes, self.value_dim)
            return scale * (fmat @ np.asarray(v).T).reshape(f_coeffs.shape)
        vals = pot.node_values(t, self.basis)
        if self.value_dim == 1:
            return scale * self.basis.project_product(vals, f_coeffs)
        fmat = f_coeffs.reshape(self.basis.n_modes, self.value_dim)
        return scale * self.basis.project_product(vals, fmat).reshape(f_coeffs.shape)

    def apply_coupling(self, tau, x):
        """(f, g) -> (0, e^{2 tau} V_t f) on flattened pair vectors."""
        m = self._m
        out = np.zeros_like(x)
        if x.ndim == 1:
            out[m:] = self.coupling_field(tau, x[:m])
        else:
            for j in range(x.shape[1]):
                out[m:, j] = self.coupling_field(tau, x[:m, j])
        return out

    def rhs(self, tau, x):
        m = self._m
        f, g = x[:m], x[m:]
        df = self.alpha * f + g
        dg = self._lam_mul(f) + (self.alpha + 2.0 - self.n) * g
        t = np.exp(tau)
        pot = self.potential
        if not isinstance(pot, ZeroPotential):
            if pot.is_radial:
                v = pot.radial_value(t)
                if np.ndim(v) == 0:
                    dg = dg + np.exp(2.0 * tau) * float(v) * f
                else:
                    dg = dg + self._matrix_coupling(tau, f, np.asarray(v))
            else:
                if x.ndim == 1:
                    dg = dg + self.coupling_field(tau, f)
                else:
                    cols = [self.coupling_field(tau, f[:, j]) for j in range(f.shape[1])]
                    dg = dg + np.stack(cols, axis=1)
        return np.concatenate([df, dg])

    def _matrix_coupling(self, tau, f, v):
        scale = np.exp(2.0 * tau)
        if f.ndim == 1:
            fmat = f.reshape(self.basis.n_modes, self.value_dim)
            return scale * (fmat @ v.T).reshape(f.shape)
        out = np.empty_like(f)
        for j in range(f.shape[1]):
            fmat = f[:, j].reshape(self.basis.n_modes, self.value_dim)
            out[:, j] = scale * (fmat @ v.T).ravel()
        return out

    def coupling_norm(self, tau, beta=0.0):
        """Measured operator norm of the coupling from the beta-pair space to the base pair space.

        Equals e^{2 tau} times the norm of the multiplication-then-project
        map H^{1/2+beta} -> H^{-1/2}.
        """
        if self.value_dim != 1:
            raise NotImplementedError("coupling norms are implemented for scalar systems")
        pot = self.potential
        if isinstance(pot, ZeroPotential):
            return 0.0
        t = np.exp(tau)
        basis = self.basis
        if pot.is_radial:
            v = float(pot.radial_value(t))
            mv = v * np.eye(basis.n_modes)
        else:
            vals = pot.node_values(t, basis)
            mv = basis._table @ (basis.weights[:, None] * vals[:, None] * basis._table.T)
        w_out = basis.sobolev_weights(-0.5) ** 0.5
        w_in = basis.sobolev_weights(0.5 + beta) ** 0.5
        weighted = (w_out[:, None] * mv) / w_in[None, :]
        return float(np.exp(2.0 * tau) * np.linalg.norm(weighted, 2))

    # -- resolvent of the limiting operator

    def resolvent_block(self, mu, l):
        """Inverse of (limit block - i mu) for one scalar mode."""
        b = self.limit_block(l).astype(complex)
        b[0, 0] -= 1j * mu
        b[1, 1] -= 1j * mu
        return np.linalg.inv(b)

    def resolvent_apply(self, mu, x):
        """Apply (L - i mu)^{-1} blockwise to a flattened pair vector."""
        m = self._m
        f, g = x[:m].astype(complex), x[m:].astype(complex)
        a = self.alpha
        d11 = a - 1j * mu
        d22 = a + 2.0 - self.n - 1j * mu
        det = d11 * d22 - self._lam
        rf = (d22 * f - g) / det
        rg = (-self._lam * f + d11 * g) / det
        return np.concatenate([rf, rg])

    def resolvent_norm(self, mu, beta=0.0):
        """Operator norm of (L - i mu)^{-1} on the weighted pair space."""
        worst = 0.0
        for l in range(self.basis.l_max + 1):
            lam = lb_eigenvalue(self.n, l)
            wf = (1.0 + lam) ** ((0.5 + beta) / 2.0)
            wg = (1.0 + lam) ** ((-0.5 + beta) / 2.0)
            w = np.diag([wf, wg])
            winv = np.diag([1.0 / wf, 1.0 / wg])
            r = self.resolvent_block(mu, l)
            worst = max(worst, np.linalg.norm(w @ r @ winv, 2))
        return float(worst)

    def default_max_step(self, t_upper=1.0):
        """Step cap 0.1 / (alpha + lambda_max + sup|V|) for the explicit integrator."""
        lam_max = lb_eigenvalue(self.n, self.basis.l_max)
        sup = self.potential.sup_abs(max(t_upper, 1e-12))
        return 0.1 / (abs(self.alpha) + lam_max + sup + 1.0)


def flow(op, x0, tau0, tau1, rtol=1e-12, atol=1e-14, max_step=None, method="DOP853"):
    """Propagate pair vectors (columns of x0) from tau0 to tau1 under the full system."""
    x0 = np.asarray(x0, dtype=float)
    if tau1 == tau0:
        return x0.copy()
    shape = x0.shape
    if max_step is None:
        max_step = op.default_max_step(np.exp(max(tau0, tau1)))
    sol = solve_ivp(
        lambda tau, y: op.rhs(tau, y.reshape(shape)).ravel(),
        (tau0, tau1),
        x0.ravel(),
        method=method,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
        dense_output=False,
    )
    if not sol.success:
        raise RuntimeError(f"integrator failed between tau={tau0} and {tau1}: {sol.message}")
    return sol.y[:, -1].reshape(shape)


# ---------------------------------------------------------------------------
# Residual checks and the conserved pairing


def _project_nonlinearity(basis, nonlinearity, t, f_coeffs):
    u_vals = basis.synthesize(f_coeffs)
    w = nonlinearity.eval(t, basis.node_angles, u_vals)
    return basis.analyze(np.asarray(w))


def ses_residual(states, potential=None, nonlinearity=None):
    """Relative finite-difference defect of a sampled trace trajectory.

    Uses centered differences at interior samples and measures the defect
    in the pair norm, normalized by the largest state norm; invariant
    under rescaling the whole trajectory.  With ``nonlinearity`` the
    semilinear right-hand side (0, F(t, ., f)) is included.
    """
    if len(states) < 3:
        raise ValueError("need at least 3 samples for the centered stencil")
    states = sorted(states, key=lambda s: s.t)
    basis = states[0].f.basis
    n = basis.n
    lam = basis.eigenvalues
    pot = potential if potential is not None else ZeroPotential()
    scale = max(pair_norm(s) for s in states)
    if scale == 0.0:
        return 0.0
    worst = 0.0
    for i in range(1, len(states) - 1):
        lo, mid, hi = states[i - 1], states[i], states[i + 1]
        dt = hi.t - lo.t
        dfdt = (hi.f.coeffs - lo.f.coeffs) / dt
        dgdt = (hi.g.coeffs - lo.g.coeffs) / dt
        t = mid.t
        rhs_f = mid.g.coeffs
        rhs_g = _apply_vt(pot, t, basis, mid.f, 1.0) + _lam_times(lam, mid.f.coeffs) / t**2
        rhs_g = rhs_g - (n - 1.0) / t * mid.g.coeffs
        if nonlinearity is not None:
            rhs_g = rhs_g + _project_nonlinearity(basis, nonlinearity, t, mid.f.coeffs)
        err_f = SphereField(basis, dfdt - rhs_f)
        err_g = SphereField(basis, dgdt - rhs_g)
        worst = max(worst, np.hypot(err_f.sobolev_norm(0.5), err_g.sobolev_norm(-0.5)))
    return worst / scale


def _lam_times(lam, coeffs):
    if coeffs.ndim == 1:
        return lam * coeffs
    return lam[:, None] * coeffs


def _apply_vt(pot, t, basis, f, scale):
    if isinstance(pot, ZeroPotential):
        return np.zeros_like(f.coeffs)
    if pot.is_radial:
        v = pot.radial_value(t)
        if np.ndim(v) == 0:
            return scale * float(v) * f.coeffs
        return scale * (f.coeffs @ np.asarray(v).T)
    vals = pot.node_values(t, basis)
    return scale * basis.project_product(vals, f.coeffs)


def rses_residual(states, potential=None, nonlinearity=None):
    """Relative finite-difference defect of a sampled rescaled trajectory."""
    if len(states) < 3:
        raise ValueError("need at least 3 samples for the centered stencil")
    states = sorted(states, key=lambda s: s.tau)
    basis = states[0].f.basis
    alpha = states[0].alpha
    n = basis.n
    lam = basis.eigenvalues
    pot = potential if potential is not None else ZeroPotential()
    scale = max(pair_norm(s) for s in states)
    if scale == 0.0:
        return 0.0
    worst = 0.0
    for i in range(1, len(states) - 1):
        lo, mid, hi = states[i - 1], states[i], states[i + 1]
        dtau = hi.tau - lo.tau
        dfdt = (hi.f.coeffs - lo.f.coeffs) / dtau
        dgdt = (hi.g.coeffs - lo.g.coeffs) / dtau
        tau = mid.tau
        t = np.exp(tau)
        rhs_f = alpha * mid.f.coeffs + mid.g.coeffs
        rhs_g = _lam_times(lam, mid.f.coeffs) + (alpha + 2.0 - n) * mid.g.coeffs
        rhs_g = rhs_g + _apply_vt(pot, t, basis, mid.f, np.exp(2.0 * tau))
        if nonlinearity is not None:
            u = np.exp(-alpha * tau) * mid.f.coeffs
            w = _project_nonlinearity(basis, nonlinearity, t, u)
            rhs_g = rhs_g + np.exp((alpha + 2.0) * tau) * w
        err_f = SphereField(basis, dfdt - rhs_f)
        err_g = SphereField(basis, dgdt - rhs_g)
        worst = max(worst, np.hypot(err_f.sobolev_norm(0.5), err_g.sobolev_norm(-0.5)))
    return worst / scale


def adjoint_residual(states, potential=None):
    """Relative finite-difference defect against the adjoint flow.

    ``states`` are pairs as produced by :func:`adjoint_transform`, sampled
    on a tau grid.
    """
    if len(states) < 3:
        raise ValueError("need at least 3 samples for the centered stencil")
    states = sorted(states, key=lambda s: s.tau)
    basis = states[0].f.basis
    alpha = states[0].alpha
    n = basis.n
    lam = basis.eigenvalues
    pot = potential if potential is not None else ZeroPotential()
    scale = max(pair_norm(s) for s in states)
    if scale == 0.0:
        return 0.0
    worst = 0.0
    for i in range(1, len(states) - 1):
        lo, mid, hi = states[i - 1], states[i], states[i + 1]
        dtau = hi.tau - lo.tau
        dp = (hi.f.coeffs - lo.f.coeffs) / dtau
        dq = (hi.g.coeffs - lo.g.coeffs) / dtau
        tau = mid.tau
        t = np.exp(tau)
        rhs_p = -alpha * mid.f.coeffs - _lam_times(lam, mid.g.coeffs)
        rhs_p = rhs_p - _apply_vt(pot, t, basis, mid.g, np.exp(2.0 * tau))
        rhs_q = -mid.f.coeffs + (n - 2.0 - alpha) * mid.g.coeffs
        err_p = SphereField(basis, dp - rhs_p)
        err_q = SphereField(basis, dq - rhs_q)
        worst = max(worst, np.hypot(err_p.sobolev_norm(0.5), err_q.sobolev_norm(-0.5)))
    return worst / scale


def wronskian(x, y):
    """Conserved pairing t^{n-1} (<f_x, g_y> - <g_x, f_y>) of two trace states.

    Constant in t along any two solutions sharing a real symmetric
    potential; the Green-identity invariant used as a conservation check.
    """
    if abs(x.t - y.t) > 1e-12 * max(1.0, abs(x.t)):
        raise ValueError(f"states live at different radii {x.t} and {y.t}")
    if x.f.basis != y.f.basis:
        raise ValueError("states live on different bases")
    n = x.f.basis.n
    val = x.f.inner(y.g) - x.g.inner(y.f)
    out = x.t ** (n - 1.0) * val
    if abs(out.imag) < 1e-300 or (
        np.isrealobj(x.f.coeffs)
        and np.isrealobj(x.g.coeffs)
        and np.isrealobj(y.f.coeffs)
        and np.isrealobj(y.g.coeffs)
    ):
        return float(out.real)
    return out


def origin_admissibility(states, p):
    """Heuristic boundedness flag for t^p |f|_{1/2} + t^{n-1-p} |g|_{-1/2} near t = 0.

    The criterion is an admissibility condition for reconstructing an
    interior solution from traces; it cannot be verified from finitely
    many samples, so this only checks for the absence of a growth trend
    toward the smallest sampled radii and must be read as a diagnostic.
    Returns (flag, sup of the sampled quantity).
    """
    states = sorted(states, key=lambda s: s.t)
    n = states[0].f.basis.n
    if not 0.0 < p < n / 2.0:
        raise ValueError(f"p must lie in (0, n/2), got {p}")
    q = np.array(
        [
            s.t**p * s.f.sobolev_norm(0.5) + s.t ** (n - 1.0 - p) * s.g.sobolev_norm(-0.5)
            for s in states
        ]
    )
    sup = float(q.max())
    med = float(np.median(q)) if q.size else 0.0
    head = q[: max(2, q.size // 4)]
    bounded = bool(head.max() <= 10.0 * max(med, 1e-300))
    return bounded, sup
