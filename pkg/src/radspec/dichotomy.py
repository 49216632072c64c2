"""Exponential splitting of the rescaled radial trace flow.

The flow decomposes phase space into an unstable family (data of
solutions that extend boundedly toward the origin, decaying backward in
log-radius) and a complementary stable family (decaying forward).  Both
families are computed by marching orthonormal frames along the grid and
re-orthonormalizing; per-step triangular transfer factors record the
growth and make the evolution operators applicable in frame coordinates.

Anchoring matters numerically.  Each family is carried along the
direction in which it attracts nearby subspaces: the unstable frame is
seeded with the eigenvectors of the limiting block operator at the
bottom of the grid (where the coupling is negligible) and carried
upward; the stable frame is seeded at the top and carried downward.
Transporting the stable family upward instead would amplify seed and
rounding errors by exp((2 l_max + 1) * span), which is hopeless at any
useful truncation, while the backward sweep contracts them at the same
rate.  For a vanishing potential both conventions coincide with the
eigenspaces of the limiting operator.
"""

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import qr, solve_triangular

from .sphere import SphereBasis
from .system import (
    RadialEvolutionOperator,
    RescaledState,
    ZeroPotential,
    flow,
    pair_weights,
    state_to_vector,
    vector_to_rescaled,
)


class DichotomyError(RuntimeError):
    """Construction failure: bad weight, lost transversality, or integrator trouble."""


# ---------------------------------------------------------------------------
# Admissible weights and achievable rates


def validate_alpha(n, alpha):
    """Distance from -alpha to the forbidden integer set for dimension n.

    The forbidden set is the integers outside the open interval
    (2 - n, 0); for n = 2 and n = 3 that is all of Z.  Constructions
    refuse weights whose gap is below the configured tolerance.
    """
    if n < 2:
        raise ValueError(f"ambient dimension must be >= 2, got {n}")
    x = -float(alpha)
    candidates = [np.floor(x), np.ceil(x), 0.0, float(2 - n)]
    best = np.inf
    for c in candidates:
        c = float(np.round(c))
        if c >= 0.0 or c <= 2.0 - n:
            best = min(best, abs(x - c))
    return float(best)


def achievable_rates(n, alpha):
    """Supremum backward/forward rates (eta_u_sup, eta_s_sup) of the limiting operator.

    eta_u_sup is the smallest positive eigenvalue alpha + l or
    alpha + 2 - n - l; eta_s_sup the magnitude of the largest negative
    one.  Any rates strictly below these are realized by the splitting.
    """
    pos, neg = [], []
    for l in range(0, 64):
        for nu in (alpha + l, alpha + 2.0 - n - l):
            if nu > 0:
                pos.append(nu)
            elif nu < 0:
                neg.append(-nu)
    if not pos or not neg:
        return 0.0, 0.0
    return float(min(pos)), float(min(neg))


def trace_window(n, alpha):
    """Whether rates below the achievable suprema can satisfy
    -eta_s < alpha < eta_u + n/2 - 1, the window in which the unstable
    family consists exactly of interior-solution traces.

    Empty for every admissible alpha when n = 2; for n > 2 it holds
    whenever 0 < alpha < n - 2.
    """
    eta_u_sup, eta_s_sup = achievable_rates(n, alpha)
    lower_ok = -eta_s_sup < alpha
    upper_ok = alpha < eta_u_sup + n / 2.0 - 1.0
    return bool(lower_ok and upper_ok)


@dataclass
class EngineConfig:
    """Numerical knobs shared by the frame-marching constructions."""

    gap_tol: float = 1e-6
    asymptotic_tol: float = 1e-10
    delta_orth: float = 0.5
    transversality_tol: float = 1e-8
    rtol: float = 1e-12
    atol: float = 1e-14
    max_step: float = None
    rank_collapse_cond: float = 1e8


@dataclass
class SubspaceFrame:
    """Orthonormal (in the weighted pair norm) basis of one family at one tau."""

    tau: float
    matrix: np.ndarray  # (dim, k), columns weighted-orthonormal
    flavor: str  # 'unstable' | 'stable'
    weights: np.ndarray = None

    @property
    def dim(self):
        return self.matrix.shape[1]

    def gram_defect(self):
        w = self.weights if self.weights is not None else np.ones(self.matrix.shape[0])
        wm = w[:, None] * self.matrix
        g = wm.T @ wm
        return float(np.abs(g - np.eye(g.shape[0])).max())


def spectral_frames(op, beta=0.0):
    """Eigenframes of the limiting block operator, split by eigenvalue sign.

    Returns (unstable frame, stable frame, unstable rates, stable rates)
    with columns in mode-major order.  The eigenvector of the block for
    eigenvalue nu is (1, nu - alpha); the repeated-eigenvalue block
    (n = 2, l = 0) is defective and contributes its full two-dimensional
    generalized eigenspace to the side of sign(alpha).
    """
    basis = op.basis
    vd = op.value_dim
    m = basis.n_modes * vd
    w = pair_weights(basis, beta, vd)
    cols_u, cols_s, rates_u, rates_s = [], [], [], []
    for k, mode in enumerate(basis.modes):
        l = mode.l
        nu_p = op.alpha + l
        nu_m = op.alpha + 2.0 - op.n - l
        for comp in range(vd):
            idx = k * vd + comp
            if abs(nu_p - nu_m) < 1e-9:
                # defective block: both directions share sign(alpha + l)
                for slot, rate in ((0, nu_p), (1, nu_m)):
                    v = np.zeros(2 * m)
                    v[idx if slot == 0 else m + idx] = 1.0
                    if rate > 0:
                        cols_u.append(v)
                        rates_u.append(rate)
                    else:
                        cols_s.append(v)
                        rates_s.append(rate)
                continue
            for nu in (nu_p, nu_m):
                v = np.zeros(2 * m)
                v[idx] = 1.0
                v[m + idx] = nu - op.alpha
                if nu > 0:
                    cols_u.append(v)
                    rates_u.append(nu)
                else:
                    cols_s.append(v)
                    rates_s.append(nu)

    def pack(cols, flavor):
        if not cols:
            return SubspaceFrame(-np.inf, np.zeros((2 * m, 0)), flavor, w)
        mat = np.stack(cols, axis=1)
        mat = mat / np.linalg.norm(w[:, None] * mat, axis=0)
        return SubspaceFrame(-np.inf, mat, flavor, w)

    return (
        pack(cols_u, "unstable"),
        pack(cols_s, "stable"),
        np.array(rates_u),
        np.array(rates_s),
    )


# ---------------------------------------------------------------------------
# Closed forms (n = 3, zero potential)


def _check_closed_form(state):
    if state.f.basis.n != 3:
        raise ValueError("closed forms are implemented for n = 3")


def closed_form_projection(state, flavor):
    """Projection of a pair onto one family of the uncoupled n = 3 flow.

    Per mode of degree l, with pair coefficients (a, b):
    unstable component ((l+1) a + b) / (2l+1) times (1, l),
    stable component (l a - b) / (2l+1) times (1, -(l+1)).
    """
    _check_closed_form(state)
    degs = state.f.basis.degrees
    a, b = state.f.coeffs, state.g.coeffs
    if a.ndim == 2:
        degs = degs[:, None]
    if flavor == "unstable":
        amp = ((degs + 1.0) * a + b) / (2.0 * degs + 1.0)
        fc, gc = amp, degs * amp
    elif flavor == "stable":
        amp = (degs * a - b) / (2.0 * degs + 1.0)
        fc, gc = amp, -(degs + 1.0) * amp
    else:
        raise ValueError(f"flavor must be 'unstable' or 'stable', got {flavor!r}")
    out = replace(
        state,
        f=replace(state.f, coeffs=fc),
        g=replace(state.g, coeffs=gc),
    )
    return out


def closed_form_evolution(state, tau, tau0, flavor):
    """Explicit evolution of the uncoupled n = 3 flow applied to a pair.

    Multiplies the projected mode components by e^{(alpha + l)(tau - tau0)}
    (unstable, tau <= tau0) or e^{(alpha - l - 1)(tau - tau0)} (stable,
    tau >= tau0).
    """
    _check_closed_form(state)
    if flavor == "unstable" and tau > tau0 + 1e-12:
        raise ValueError("backward family: need tau <= tau0")
    if flavor == "stable" and tau < tau0 - 1e-12:
        raise ValueError("forward family: need tau >= tau0")
    proj = closed_form_projection(state, flavor)
    degs = state.f.basis.degrees
    alpha = state.alpha
    if proj.f.coeffs.ndim == 2:
        degs = degs[:, None]
    if flavor == "unstable":
        fac = np.exp((alpha + degs) * (tau - tau0))
    else:
        fac = np.exp((alpha - degs - 1.0) * (tau - tau0))
    return RescaledState(
        tau=tau,
        f=replace(proj.f, coeffs=fac * proj.f.coeffs),
        g=replace(proj.g, coeffs=fac * proj.g.coeffs),
        alpha=alpha,
    )


def closed_form_projection_matrix(basis, flavor, value_dim=1):
    """Dense matrix of the closed-form projection, for comparisons."""
    m = basis.n_modes * value_dim
    degs = np.repeat(basis.degrees, value_dim).astype(float)
    p = np.zeros((2 * m, 2 * m))
    for k in range(m):
        l = degs[k]
        if flavor == "unstable":
            row = np.array([l + 1.0, 1.0]) / (2.0 * l + 1.0)
            vec = np.array([1.0, l])
        else:
            row = np.array([l, -1.0]) / (2.0 * l + 1.0)
            vec = np.array([1.0, -(l + 1.0)])
        for i, vi in enumerate((0, m)):
            for j, vj in enumerate((0, m)):
                p[vi + k, vj + k] = vec[i] * row[j]
    return p


# ---------------------------------------------------------------------------
# Frame marching


def _weighted_qr(mat, w, cond_limit):
    wm = w[:, None] * mat
    g = wm.T @ wm
    if g.shape[0] and np.linalg.cond(g) > cond_limit:
        raise DichotomyError(
            f"frame rank collapse: pre-orthonormalization Gram condition "
            f"{np.linalg.cond(g):.3e}"
        )
    q, r = qr(wm, mode="economic")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs[None, :]
    r = signs[:, None] * r
    return q / w[:, None], r


def _march(op, frame_mat, tau_a, tau_b, cfg, w):
    """Carry a frame from tau_a to tau_b, re-orthonormalizing every delta_orth.

    Returns the new weighted-orthonormal frame and the accumulated
    triangular transfer R with  Phi(tau_b, tau_a) F_a = F_b R.
    """
    span = tau_b - tau_a
    nsub = max(1, int(np.ceil(abs(span) / cfg.delta_orth)))
    taus = np.linspace(tau_a, tau_b, nsub + 1)
    f = frame_mat
    transfer = np.eye(frame_mat.shape[1])
    for i in range(nsub):
        try:
            f = flow(op, f, taus[i], taus[i + 1], rtol=cfg.rtol, atol=cfg.atol,
                     max_step=cfg.max_step)
        except RuntimeError as exc:
            raise DichotomyError(str(exc)) from exc
        f, r = _weighted_qr(f, w, cfg.rank_collapse_cond)
        transfer = r @ transfer
    return f, transfer


def propagate_subspace(op, frame, tau_to, config=None):
    """Transport a frame to tau_to under the full flow.

    The natural directions are forward for the unstable family and
    backward for the stable one; the function transports either way and
    returns the re-orthonormalized frame together with the accumulated
    growth factors (the triangular transfer).
    """
    cfg = config or EngineConfig()
    w = frame.weights
    if w is None:
        w = pair_weights(op.basis, 0.0, op.value_dim)
    mat, transfer = _march(op, frame.matrix, frame.tau, tau_to, cfg, w)
    return SubspaceFrame(tau_to, mat, frame.flavor, w), transfer


# ---------------------------------------------------------------------------
# The table


@dataclass
class DichotomyTable:
    """Per-grid-point frames, transfers, and measured rate certificate.

    tau_grid is ascending.  u_frames[k] spans the unstable family at
    tau_grid[k]; Phi(tau_{k+1}, tau_k) U_k = U_{k+1} t_u[k].  s_frames[k]
    spans the stable family; Phi(tau_k, tau_{k+1}) S_{k+1} = S_k t_s[k].
    The rate certificate is measured from the transfer factors and never
    exceeds what the data shows.
    """

    basis: SphereBasis
    alpha: float
    beta: float
    value_dim: int
    tau_grid: np.ndarray
    u_frames: list
    s_frames: list
    t_u: list
    t_s: list
    weights: np.ndarray
    rates: dict
    seed_rates_u: np.ndarray
    seed_rates_s: np.ndarray
    tau_min: float
    potential_name: str = "zero"
    op: RadialEvolutionOperator = None
    _proj_cache: dict = None

    def __post_init__(self):
        if self._proj_cache is None:
            self._proj_cache = {}

    @property
    def dim(self):
        return 2 * self.basis.n_modes * self.value_dim

    @property
    def n_unstable(self):
        return self.u_frames[0].shape[1]

    def index_of(self, tau, tol=1e-9):
        k = int(np.argmin(np.abs(self.tau_grid - tau)))
        if abs(self.tau_grid[k] - tau) <= tol * max(1.0, abs(tau)):
            return k
        return None

    def frame(self, k, flavor):
        mat = self.u_frames[k] if flavor == "unstable" else self.s_frames[k]
        return SubspaceFrame(self.tau_grid[k], mat, flavor, self.weights)

    def projector(self, k, flavor="unstable"):
        """Dense oblique projection onto one family along the other at grid point k."""
        key = (k, flavor)
        if key not in self._proj_cache:
            u, s = self.u_frames[k], self.s_frames[k]
            mu = u.shape[1]
            full = np.linalg.inv(np.hstack([u, s]))
            self._proj_cache[(k, "unstable")] = u @ full[:mu]
            self._proj_cache[(k, "stable")] = s @ full[mu:]
        return self._proj_cache[key]

    def spectral_projector(self, flavor="unstable"):
        """Projection of the limiting operator, the tau -> -inf asymptote."""
        fu, fs, _, _ = spectral_frames(self._require_op(), self.beta)
        u, s = fu.matrix, fs.matrix
        mu = u.shape[1]
        full = np.linalg.inv(np.hstack([u, s]))
        return (u @ full[:mu]) if flavor == "unstable" else (s @ full[mu:])

    def weighted_norm(self, mat):
        return float(np.linalg.norm((self.weights[:, None] * mat) / self.weights[None, :], 2))

    def deviation_from_limit(self, k, flavor="unstable"):
        return self.weighted_norm(self.projector(k, flavor) - self.spectral_projector(flavor))

    def certificate(self):
        return dict(self.rates)

    def _require_op(self):
        if self.op is None:
            raise DichotomyError(
                "this table was loaded without its operator; attach one for "
                "off-grid or limit-projection queries"
            )
        return self.op

    # -- evolution application

    def project(self, z_vec, k, flavor="unstable"):
        return self.projector(k, flavor) @ z_vec

    def _coords(self, mat, z_vec):
        sol, *_ = np.linalg.lstsq(mat, z_vec, rcond=None)
        return sol

    def apply_evolution(self, z_vec, tau, tau0, flavor):
        """Phi^{u,s}(tau, tau0) z for grid-aligned or intermediate times.

        Unstable needs tau <= tau0, stable tau0 <= tau; both must lie
        within the grid.  Intermediate times are handled by short flows
        from the neighboring grid point; transport between grid points
        runs in frame coordinates through the stored triangular factors.
        """
        grid = self.tau_grid
        eps = 1e-12 * max(1.0, abs(grid[-1]))
        if not (grid[0] - eps <= tau <= grid[-1] + eps) or not (
            grid[0] - eps <= tau0 <= grid[-1] + eps
        ):
            raise ValueError("requested times fall outside the table grid")
        if flavor == "unstable":
            if tau > tau0 + eps:
                raise ValueError("backward family: need tau <= tau0")
            return self._apply_unstable(z_vec, tau, tau0)
        if flavor == "stable":
            if tau < tau0 - eps:
                raise ValueError("forward family: need tau >= tau0")
            return self._apply_stable(z_vec, tau, tau0)
        raise ValueError(f"flavor must be 'unstable' or 'stable', got {flavor!r}")

    def _frames_at(self, tau):
        """(U, S) at an intermediate tau by short flows from the bracketing grid points."""
        k = self.index_of(tau)
        if k is not None:
            return self.u_frames[k], self.s_frames[k], k, k
        op = self._require_op()
        a = int(np.searchsorted(self.tau_grid, tau) - 1)
        a = min(max(a, 0), len(self.tau_grid) - 2)
        cfg = EngineConfig()
        u = flow(op, self.u_frames[a], self.tau_grid[a], tau, rtol=cfg.rtol, atol=cfg.atol)
        s = flow(op, self.s_frames[a + 1], self.tau_grid[a + 1], tau, rtol=cfg.rtol,
                 atol=cfg.atol)
        return u, s, a, a + 1

    def _oblique_coords(self, u, s, z_vec):
        full = np.hstack([u, s])
        sol = np.linalg.solve(full, z_vec)
        return sol[: u.shape[1]], sol[u.shape[1]:]

    def _apply_unstable(self, z_vec, tau, tau0):
        u0, s0, anchor, _ = self._frames_at(tau0)
        c, _ = self._oblique_coords(u0, s0, z_vec)
        # u0 = Phi(tau0, tau_anchor) U_anchor, so the same coordinates are
        # valid in U_anchor at the anchor grid point below tau0.
        k_target = self.index_of(tau)
        b = (
            k_target
            if k_target is not None
            else min(max(int(np.searchsorted(self.tau_grid, tau) - 1), 0), len(self.tau_grid) - 2)
        )
        if anchor < b:
            raise ValueError("unstable transport cannot ascend the grid")
        for j in range(anchor - 1, b - 1, -1):
            c = solve_triangular(self.t_u[j], c)
        y = self.u_frames[b] @ c
        if k_target is None:
            op = self._require_op()
            cfg = EngineConfig()
            y = flow(op, y, self.tau_grid[b], tau, rtol=cfg.rtol, atol=cfg.atol)
        return y

    def _apply_stable(self, z_vec, tau, tau0):
        u0, s0, _, anchor = self._frames_at(tau0)
        d, = (self._oblique_coords(u0, s0, z_vec)[1],)
        k_target = self.index_of(tau)
        b = (
            k_target
            if k_target is not None
            else min(max(int(np.searchsorted(self.tau_grid, tau) - 1), 0), len(self.tau_grid) - 2)
        )
        if b < anchor:
            # target in the same interval, below the stable anchor point
            op = self._require_op()
            cfg = EngineConfig()
            y = s0 @ d if self.index_of(tau0) is None else self.s_frames[anchor] @ d
            start = tau0 if self.index_of(tau0) is None else self.tau_grid[anchor]
            return flow(op, y, start, tau, rtol=cfg.rtol, atol=cfg.atol)
        for j in range(anchor, b):
            d = solve_triangular(self.t_s[j], d)
        y = self.s_frames[b] @ d
        if k_target is None:
            op = self._require_op()
            cfg = EngineConfig()
            y = flow(op, y, self.tau_grid[b], tau, rtol=cfg.rtol, atol=cfg.atol)
        return y

    # -- persistence

    def save(self, path):
        """Versioned binary dump: grid, frames, transfers, certificate."""
        meta = dict(
            version=1,
            n=self.basis.n,
            l_max=self.basis.l_max,
            quad_degree=self.basis.quad_degree,
            alpha=self.alpha,
            beta=self.beta,
            value_dim=self.value_dim,
            tau_min=self.tau_min,
            potential_name=self.potential_name,
            rates=self.rates,
        )
        np.savez_compressed(
            path,
            meta=json.dumps(meta),
            tau_grid=self.tau_grid,
            u_frames=np.stack(self.u_frames),
            s_frames=np.stack(self.s_frames),
            t_u=np.stack(self.t_u) if self.t_u else np.zeros((0, 0, 0)),
            t_s=np.stack(self.t_s) if self.t_s else np.zeros((0, 0, 0)),
            weights=self.weights,
            seed_rates_u=self.seed_rates_u,
            seed_rates_s=self.seed_rates_s,
        )

    @classmethod
    def load(cls, path, potential=None):
        data = np.load(path, allow_pickle=False)
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != 1:
            raise DichotomyError(f"unsupported table version {meta.get('version')!r}")
        basis = SphereBasis(meta["n"], meta["l_max"], meta["quad_degree"])
        op = None
        if potential is not None:
            op = RadialEvolutionOperator(basis, meta["alpha"], potential, meta["value_dim"])
        return cls(
            basis=basis,
            alpha=meta["alpha"],
            beta=meta["beta"],
            value_dim=meta["value_dim"],
            tau_grid=data["tau_grid"],
            u_frames=list(data["u_frames"]),
            s_frames=list(data["s_frames"]),
            t_u=list(data["t_u"]),
            t_s=list(data["t_s"]),
            weights=data["weights"],
            rates=meta["rates"],
            seed_rates_u=data["seed_rates_u"],
            seed_rates_s=data["seed_rates_s"],
            tau_min=meta["tau_min"],
            potential_name=meta["potential_name"],
            op=op,
        )


def _product_log_sigma(mats):
    """(log sigma_min, log sigma_max) of the ordered product, overflow-safe."""
    if not mats:
        return 0.0, 0.0
    p = np.eye(mats[0].shape[0])
    shift = 0.0
    for r in mats:
        p = r @ p
        s = np.linalg.norm(p)
        if s > 1e120 or (s > 0 and s < 1e-120):
            p = p / s
            shift += np.log(s)
    sv = np.linalg.svd(p, compute_uv=False)
    return float(shift + np.log(sv[-1])), float(shift + np.log(sv[0]))


def auto_tau_min(potential, tau_hint, asymptotic_tol):
    """Smallest tau at which the coupling norm bound e^{2 tau} sup|V| is negligible."""
    sup = potential.sup_abs(float(np.exp(tau_hint)))
    if sup * np.exp(2.0 * tau_hint) < asymptotic_tol:
        return float(tau_hint)
    return float(0.5 * np.log(asymptotic_tol / sup))


def build_dichotomy(op, tau_grid, beta=0.0, tau_min=None, config=None,
                    asymptotic_side="lower"):
    """Construct the splitting table on a grid.

    The unstable family is seeded with the limiting eigenframe at the
    bottom point (which must be deep enough that the coupling is below
    ``asymptotic_tol``; the bottom is extended automatically when
    ``tau_min`` is None) and carried forward.  The stable family is
    seeded at the top and carried backward.  For tables on a right half
    line, pass ``asymptotic_side='upper'``: the decay requirement then
    applies at the top and the roles of exact/free anchor swap.
    """
    cfg = config or EngineConfig()
    gap = validate_alpha(op.n, op.alpha)
    if gap <= cfg.gap_tol:
        raise DichotomyError(
            f"weight alpha={op.alpha} is within {gap:.2e} of a forbidden shift "
            f"(tolerance {cfg.gap_tol:g})"
        )
    grid = np.unique(np.asarray(tau_grid, dtype=float))
    if grid.size < 2:
        raise DichotomyError("need at least two grid points")
    pot = op.potential

    if asymptotic_side == "lower":
        if tau_min is None:
            tau_min = auto_tau_min(pot, grid[0], cfg.asymptotic_tol)
        bound = pot.sup_abs(float(np.exp(tau_min))) * np.exp(2.0 * tau_min)
        if bound >= cfg.asymptotic_tol:
            raise DichotomyError(
                f"coupling bound {bound:.3e} at tau_min={tau_min:.3f} exceeds "
                f"asymptotic tolerance {cfg.asymptotic_tol:g}"
            )
        if tau_min < grid[0] - 1e-12:
            step = np.median(np.diff(grid))
            ext = np.arange(grid[0] - step, tau_min - 0.5 * step, -step)[::-1]
            grid = np.concatenate([[tau_min], ext[ext > tau_min + 1e-12], grid])
    elif asymptotic_side == "upper":
        top_vals = [
            float(np.max(np.abs(pot.node_values(float(np.exp(t)), op.basis))))
            * np.exp(2.0 * t)
            for t in np.linspace(grid[-1] - 0.5, grid[-1], 4)
        ]
        if max(top_vals) >= cfg.asymptotic_tol:
            raise DichotomyError(
                f"coupling does not decay at the top of the grid "
                f"(max bound {max(top_vals):.3e}); a right-half-line table needs "
                f"t^2 V -> 0"
            )
        tau_min = grid[0] if tau_min is None else tau_min
    else:
        raise ValueError("asymptotic_side must be 'lower' or 'upper'")

    frame_u, frame_s, rates_u, rates_s = spectral_frames(op, beta)
    w = frame_u.weights
    k_pts = grid.size

    u_frames = [frame_u.matrix]
    t_u = []
    f = frame_u.matrix
    for k in range(k_pts - 1):
        f, r = _march(op, f, grid[k], grid[k + 1], cfg, w)
        u_frames.append(f)
        t_u.append(r)

    s_frames = [None] * k_pts
    s_frames[-1] = frame_s.matrix
    t_s = [None] * (k_pts - 1)
    f = frame_s.matrix
    for k in range(k_pts - 2, -1, -1):
        f, r = _march(op, f, grid[k + 1], grid[k], cfg, w)
        s_frames[k] = f
        t_s[k] = r

    for k in range(k_pts):
        both = w[:, None] * np.hstack([u_frames[k], s_frames[k]])
        smin = np.linalg.svd(both, compute_uv=False)[-1]
        if smin < cfg.transversality_tol:
            raise DichotomyError(
                f"families lose transversality at tau={grid[k]:.4f} "
                f"(smallest principal value {smin:.3e})"
            )

    span = grid[-1] - grid[0]
    log_min_u, _ = _product_log_sigma(t_u)
    log_min_s, _ = _product_log_sigma(list(reversed(t_s)))
    eta_u = log_min_u / span if span > 0 else 0.0
    eta_s = log_min_s / span if span > 0 else 0.0

    table = DichotomyTable(
        basis=op.basis,
        alpha=op.alpha,
        beta=beta,
        value_dim=op.value_dim,
        tau_grid=grid,
        u_frames=u_frames,
        s_frames=s_frames,
        t_u=t_u,
        t_s=t_s,
        weights=w,
        rates={},
        seed_rates_u=rates_u,
        seed_rates_s=rates_s,
        tau_min=float(tau_min),
        potential_name=getattr(pot, "name", "potential"),
        op=op,
    )
    k_const = 1.0
    for k in range(k_pts):
        k_const = max(
            k_const,
            table.weighted_norm(table.projector(k, "unstable")),
            table.weighted_norm(table.projector(k, "stable")),
        )
    table.rates = {"eta_u": float(eta_u), "eta_s": float(eta_s), "K": float(k_const)}
    return table


def unstable_frame_at(op, tau_top, beta=0.0, tau_min=None, config=None):
    """The unstable frame at a single time, marched up from the asymptotic seed."""
    cfg = config or EngineConfig()
    gap = validate_alpha(op.n, op.alpha)
    if gap <= cfg.gap_tol:
        raise DichotomyError(f"weight alpha={op.alpha} too close to a forbidden shift")
    if tau_min is None:
        tau_min = auto_tau_min(op.potential, tau_top - 6.0, cfg.asymptotic_tol)
        tau_min = min(tau_min, tau_top - 6.0)
    frame_u, _, rates_u, _ = spectral_frames(op, beta)
    mat, _ = _march(op, frame_u.matrix, tau_min, tau_top, cfg, frame_u.weights)
    return SubspaceFrame(tau_top, mat, "unstable", frame_u.weights)


def apply_phi(table, state, tau, tau0, flavor):
    """Evolution operator of the splitting applied to a pair state.

    At tau = tau0 this is the projection onto the requested family.
    """
    z = state_to_vector(state)
    y = table.apply_evolution(z, tau, tau0, flavor)
    return vector_to_rescaled(table.basis, y, tau, table.alpha, table.value_dim)
