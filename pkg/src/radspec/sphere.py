"""Spectral basis on the unit sphere S^{n-1} (n = 2 or 3).

Fields are stored as coefficient vectors over the Laplace-Beltrami
eigenbasis: Fourier modes on the circle for n = 2, real spherical
harmonics for n = 3, truncated at degree ``l_max``.  The quadrature rule
attached to a basis is sized so that products of band-limited fields are
integrated exactly, which keeps Parseval identities and Galerkin
projections of pointwise products reliable up to rounding.

Sobolev norms of fractional order are evaluated spectrally,
``sqrt(sum (1 + lambda_k)^s |c_k|^2)``.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import sph_harm_y


@dataclass(frozen=True, order=True)
class Mode:
    """Basis label (degree l, order m).

    For n = 3, m runs over -l..l (negative m are the sine-type real
    harmonics).  For n = 2, m is 0 for the constant mode and +1 / -1 for
    the cosine / sine mode of degree l >= 1.
    """

    l: int
    m: int


def lb_eigenvalue(n, l):
    """Eigenvalue l*(l + n - 2) of -Laplace-Beltrami on S^{n-1}."""
    if n < 2:
        raise ValueError(f"ambient dimension must be >= 2, got {n}")
    if l < 0:
        raise ValueError(f"degree must be >= 0, got {l}")
    return float(l * (l + n - 2))


def enumerate_modes(n, l_max):
    """Canonical ordered list of modes of degree <= l_max.

    The ordering is by (l, m) and is the reproducibility contract for
    every coefficient vector in this package.
    """
    if l_max < 0:
        raise ValueError(f"l_max must be >= 0, got {l_max}")
    modes = []
    if n == 2:
        for l in range(l_max + 1):
            if l == 0:
                modes.append(Mode(0, 0))
            else:
                modes.append(Mode(l, -1))
                modes.append(Mode(l, 1))
    elif n == 3:
        for l in range(l_max + 1):
            for m in range(-l, l + 1):
                modes.append(Mode(l, m))
    else:
        raise ValueError(f"only n = 2 and n = 3 bases are implemented, got n={n}")
    return modes


def mode_count(n, l_max):
    return len(enumerate_modes(n, l_max))


def _real_harmonics_grid(l_max, theta, phi):
    """Real orthonormal spherical harmonics on a flattened (theta, phi) grid.

    Returns an array of shape (n_modes, n_points) in enumerate_modes order.
    """
    out = np.empty((mode_count(3, l_max), theta.size))
    k = 0
    for l in range(l_max + 1):
        # scipy's sph_harm_y(l, m, polar, azimuth) with Condon-Shortley phase
        ylm = {m: sph_harm_y(l, m, theta, phi) for m in range(l + 1)}
        for m in range(-l, l + 1):
            if m == 0:
                out[k] = ylm[0].real
            elif m > 0:
                out[k] = np.sqrt(2.0) * (-1.0) ** m * ylm[m].real
            else:
                out[k] = np.sqrt(2.0) * (-1.0) ** (-m) * ylm[-m].imag
            k += 1
    return out


class SphereBasis:
    """Truncated Laplace-Beltrami eigenbasis with attached quadrature.

    Parameters
    ----------
    n : int
        Ambient dimension (2 or 3); the sphere is S^{n-1}.
    l_max : int
        Truncation degree.
    quad_degree : int, optional
        The quadrature integrates spherical polynomials of degree up to
        ``quad_degree`` exactly.  Defaults to ``2 * l_max``, enough for
        pairwise products of band-limited fields; raise it when
        projecting products with rough multipliers or powers.
    """

    def __init__(self, n, l_max, quad_degree=None):
        if n not in (2, 3):
            raise ValueError(f"only n = 2 and n = 3 are implemented, got n={n}")
        if l_max < 0:
            raise ValueError(f"l_max must be >= 0, got {l_max}")
        if quad_degree is None:
            quad_degree = 2 * l_max
        self.n = int(n)
        self.l_max = int(l_max)
        self.quad_degree = int(quad_degree)
        self.modes = enumerate_modes(n, l_max)
        self.degrees = np.array([mo.l for mo in self.modes])
        self.eigenvalues = np.array([lb_eigenvalue(n, mo.l) for mo in self.modes])
        self._build_quadrature()

    def _build_quadrature(self):
        deg = self.quad_degree
        if self.n == 2:
            m_azim = max(deg + 1, 1)
            theta = 2.0 * np.pi * np.arange(m_azim) / m_azim
            self.weights = np.full(m_azim, 2.0 * np.pi / m_azim)
            self.node_angles = (theta,)
            table = np.empty((len(self.modes), m_azim))
            for k, mo in enumerate(self.modes):
                if mo.l == 0:
                    table[k] = 1.0 / np.sqrt(2.0 * np.pi)
                elif mo.m > 0:
                    table[k] = np.cos(mo.l * theta) / np.sqrt(np.pi)
                else:
                    table[k] = np.sin(mo.l * theta) / np.sqrt(np.pi)
        else:
            n_polar = max((deg + 2) // 2, 1)
            m_azim = max(deg + 1, 1)
            x, wx = leggauss(n_polar)
            theta1 = np.arccos(x)
            phi1 = 2.0 * np.pi * np.arange(m_azim) / m_azim
            theta, phi = np.meshgrid(theta1, phi1, indexing="ij")
            theta, phi = theta.ravel(), phi.ravel()
            w = np.repeat(wx, m_azim) * (2.0 * np.pi / m_azim)
            self.weights = w
            self.node_angles = (theta, phi)
            table = _real_harmonics_grid(self.l_max, theta, phi)
        self._table = table

    @property
    def n_modes(self):
        return len(self.modes)

    @property
    def n_nodes(self):
        return self.weights.size

    def mode_index(self, l, m):
        return self.modes.index(Mode(l, m))

    def evaluate_on_nodes(self, func):
        """Evaluate ``func`` at the quadrature nodes.

        ``func`` takes the node angle arrays (theta,) for n = 2 or
        (theta, phi) for n = 3 and returns an array of node values.
        Arrays are passed through unchanged.
        """
        if callable(func):
            vals = np.asarray(func(*self.node_angles))
        else:
            vals = np.asarray(func)
        if vals.shape[0] != self.n_nodes:
            raise ValueError(
                f"node values have leading size {vals.shape[0]}, expected {self.n_nodes}"
            )
        return vals

    def synthesize(self, coeffs):
        """Coefficient vector -> node values; shape (M,) or (M, N) -> (nodes,) or (nodes, N)."""
        coeffs = np.asarray(coeffs)
        return np.tensordot(self._table.T, coeffs, axes=1)

    def analyze(self, values):
        """Node values -> coefficients of the degree <= l_max projection."""
        values = np.asarray(values)
        if values.ndim == 1:
            return self._table @ (self.weights * values)
        return self._table @ (self.weights[:, None] * values)

    def project_product(self, multiplier_values, coeffs):
        """Galerkin projection of the pointwise product multiplier * field.

        ``multiplier_values`` has shape (nodes,) for scalar multipliers or
        (nodes, N, N) for matrix-valued ones acting on an (M, N) field.
        """
        vals = self.synthesize(coeffs)
        mult = np.asarray(multiplier_values)
        if mult.ndim == 1:
            if vals.ndim == 1:
                prod = mult * vals
            else:
                prod = mult[:, None] * vals
        elif mult.ndim == 3:
            if vals.ndim != 2:
                raise ValueError("matrix multiplier requires an (M, N) coefficient array")
            prod = np.einsum("pij,pj->pi", mult, vals)
        else:
            raise ValueError("multiplier must have shape (nodes,) or (nodes, N, N)")
        return self.analyze(prod)

    def sobolev_weights(self, s):
        """Per-mode weights (1 + lambda)^s used by the spectral H^s norm."""
        return (1.0 + self.eigenvalues) ** s

    def __eq__(self, other):
        return (
            isinstance(other, SphereBasis)
            and self.n == other.n
            and self.l_max == other.l_max
            and self.quad_degree == other.quad_degree
        )

    def __repr__(self):
        return f"SphereBasis(n={self.n}, l_max={self.l_max}, quad_degree={self.quad_degree})"


@dataclass
class SphereField:
    """A function on S^{n-1} stored spectrally.

    ``coeffs`` has shape (n_modes,) for scalar fields or (n_modes, N) for
    fields with N components per mode.
    """

    basis: SphereBasis
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.shape[0] != self.basis.n_modes:
            raise ValueError(
                f"coefficient vector of length {self.coeffs.shape[0]} does not match "
                f"{self.basis.n_modes} modes"
            )
        if self.coeffs.ndim > 2:
            raise ValueError("coeffs must be 1-D or 2-D")

    @property
    def value_dim(self):
        return 1 if self.coeffs.ndim == 1 else self.coeffs.shape[1]

    @classmethod
    def zero(cls, basis, value_dim=1):
        shape = (basis.n_modes,) if value_dim == 1 else (basis.n_modes, value_dim)
        return cls(basis, np.zeros(shape))

    @classmethod
    def unit(cls, basis, l, m, component=0, value_dim=1):
        """The basis mode Y_l^m (optionally placed in one component slot)."""
        out = cls.zero(basis, value_dim)
        k = basis.mode_index(l, m)
        if value_dim == 1:
            out.coeffs[k] = 1.0
        else:
            out.coeffs[k, component] = 1.0
        return out

    @classmethod
    def random(cls, basis, rng, value_dim=1, scale=1.0):
        shape = (basis.n_modes,) if value_dim == 1 else (basis.n_modes, value_dim)
        return cls(basis, scale * rng.standard_normal(shape))

    def sobolev_norm(self, s):
        w = self.basis.sobolev_weights(s)
        mags = np.abs(self.coeffs) ** 2
        if mags.ndim == 2:
            mags = mags.sum(axis=1)
        return float(np.sqrt(np.dot(w, mags)))

    def l2_norm(self):
        return self.sobolev_norm(0.0)

    def inner(self, other):
        """Coefficient-space inner product sum_k c_k(self) * conj(c_k(other))."""
        _check_compatible(self, other)
        val = np.sum(self.coeffs * np.conj(other.coeffs))
        return complex(val)

    def values_on_nodes(self):
        return self.basis.synthesize(self.coeffs)

    def __add__(self, other):
        _check_compatible(self, other)
        return SphereField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_compatible(self, other)
        return SphereField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SphereField(self.basis, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SphereField(self.basis, -self.coeffs)

    def copy(self):
        return SphereField(self.basis, self.coeffs.copy())


def _check_compatible(f, g):
    if f.basis != g.basis:
        raise ValueError(f"incompatible bases {f.basis} and {g.basis}")
    if f.coeffs.shape != g.coeffs.shape:
        raise ValueError(f"incompatible shapes {f.coeffs.shape} and {g.coeffs.shape}")


def sobolev_norm(f, s):
    """Spectral Sobolev norm sqrt(sum (1 + lambda_k)^s |c_k|^2)."""
    return f.sobolev_norm(s)


def quadrature_inner_product(f, g):
    """L^2 inner product of two fields computed by spherical quadrature.

    Agrees with the coefficient-space sum up to quadrature tolerance and
    is real for real fields.
    """
    _check_compatible(f, g)
    basis = f.basis
    fv = basis.synthesize(f.coeffs)
    gv = basis.synthesize(g.coeffs)
    prod = fv * np.conj(gv)
    if prod.ndim == 2:
        prod = prod.sum(axis=1)
    val = np.dot(basis.weights, prod)
    if np.isrealobj(f.coeffs) and np.isrealobj(g.coeffs):
        return float(val.real)
    return complex(val)


def project_pointwise_product(multiplier, f, quad_degree=None):
    """Degree <= l_max Galerkin projection of the pointwise product V * f.

    ``multiplier`` is a callable over node angles or a node-value array on
    the basis quadrature grid.  The basis quadrature must resolve at least
    degree ``2 * l_max`` products; pass a finer ``quad_degree`` (a new
    basis is built internally) when the multiplier itself carries degree.
    """
    basis = f.basis
    if quad_degree is not None and quad_degree > basis.quad_degree:
        fine = SphereBasis(basis.n, basis.l_max, quad_degree)
        vals = fine.evaluate_on_nodes(multiplier)
        coeffs = fine.project_product(vals, f.coeffs)
        return SphereField(basis, coeffs)
    if basis.quad_degree < 2 * basis.l_max:
        raise ValueError(
            f"quadrature degree {basis.quad_degree} cannot resolve products at "
            f"l_max={basis.l_max}; need at least {2 * basis.l_max}"
        )
    vals = basis.evaluate_on_nodes(multiplier)
    coeffs = basis.project_product(vals, f.coeffs)
    return SphereField(basis, coeffs)


def complex_harmonic_coeffs(f):
    """Coefficients of a real n=3 field over the complex harmonics Y_l^m.

    Returned in enumerate_modes order, with scipy's Condon-Shortley
    convention.  Inverse of :func:`field_from_complex_harmonics`.
    """
    basis = f.basis
    if basis.n != 3:
        raise ValueError("complex harmonics are only defined for n = 3")
    a = np.asarray(f.coeffs)
    if a.ndim != 1:
        raise ValueError("component fields must be converted one at a time")
    c = np.zeros(basis.n_modes, dtype=complex)
    for k, mo in enumerate(basis.modes):
        l, m = mo.l, mo.m
        if m == 0:
            c[k] = a[k]
        elif m > 0:
            a_cos = a[basis.mode_index(l, m)]
            a_sin = a[basis.mode_index(l, -m)]
            c[k] = (-1.0) ** m * (a_cos - 1j * a_sin) / np.sqrt(2.0)
        else:
            a_cos = a[basis.mode_index(l, -m)]
            a_sin = a[basis.mode_index(l, m)]
            c[k] = (a_cos + 1j * a_sin) / np.sqrt(2.0)
    return c


def field_from_complex_harmonics(basis, c):
    """Real-basis field from complex Y_l^m coefficients of a real function."""
    if basis.n != 3:
        raise ValueError("complex harmonics are only defined for n = 3")
    c = np.asarray(c, dtype=complex)
    a = np.zeros(basis.n_modes)
    for k, mo in enumerate(basis.modes):
        l, m = mo.l, mo.m
        if m == 0:
            a[k] = c[k].real
        elif m > 0:
            cp = c[basis.mode_index(l, m)]
            a[k] = np.sqrt(2.0) * ((-1.0) ** m * cp).real
        else:
            cp = c[basis.mode_index(l, -m)]
            a[k] = -np.sqrt(2.0) * ((-1.0) ** (-m) * cp).imag
    return SphereField(basis, a)
