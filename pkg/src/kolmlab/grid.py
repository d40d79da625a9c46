"""Phase-space grids, fields, Fourier transforms, and norms.

Conventions used throughout the package
---------------------------------------

Phase space is R^d_x x R^d_v with total dimension n = 2d.  A point is
written z = (x, v); the dual variable is zeta = (xi, eta).

The Fourier transform carries no prefactor on the forward side::

    fhat(zeta) = integral f(z) exp(-i z . zeta) dz
    f(z)       = (2 pi)^(-n) integral fhat(zeta) exp(+i z . zeta) dzeta

Consequences (the "conversion dictionary"):

* Plancherel:       ||fhat||_L2 = (2 pi)^(n/2) ||f||_L2 = (2 pi)^d ||f||_L2
* inner products:   <f, g> = (2 pi)^(-n) <fhat, ghat>
* d = 1 example:    f = exp(-(x^2+v^2)/2)  =>  fhat = 2 pi exp(-(xi^2+eta^2)/2)

Discretization: the box [-L, L)^n with M points per axis, spacing
dz = 2L/M, represents compactly-concentrated fields by periodic
truncation.  The dual grid has spacing dzeta = pi / L and carries
frequencies k * dzeta for signed k in [-M/2, M/2); arrays store them in
FFT order.  Both quadratures are plain uniform sums (midpoint rule on a
periodic box), which integrate band-limited functions exactly, so the
discrete Plancherel identity holds to rounding.

Axis order of field arrays is x-axes first, then v-axes, row-major.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundaryGuardError, DataError, GridMismatchError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform periodic discretization of the box [-L, L)^(2d).

    Parameters
    ----------
    d : spatial dimension (the grid covers 2d axes; d in {1, 2} to keep
        memory bounded).
    points_per_axis : even number of samples per axis.
    half_width : L, half the box edge length, same for every axis.
    """

    d: int
    points_per_axis: int
    half_width: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise DataError(f"grid dimension d must be 1 or 2, got {self.d}")
        m = self.points_per_axis
        if m <= 0 or m % 2 != 0:
            raise DataError(f"points_per_axis must be even and positive, got {m}")
        if not (self.half_width > 0 and np.isfinite(self.half_width)):
            raise DataError(f"half_width must be positive, got {self.half_width}")

    @property
    def n_axes(self) -> int:
        return 2 * self.d

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def dual_spacing(self) -> float:
        return np.pi / self.half_width

    @property
    def nyquist(self) -> float:
        """Largest representable frequency magnitude, (M/2) * dzeta."""
        return (self.points_per_axis // 2) * self.dual_spacing

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.n_axes

    def axis_points(self) -> np.ndarray:
        """Physical sample points of one axis: -L, -L+dz, ..., L-dz."""
        return -self.half_width + self.spacing * np.arange(self.points_per_axis)

    def dual_axis_points(self) -> np.ndarray:
        """Dual sample points of one axis in FFT order."""
        return TWO_PI * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    def mesh(self) -> np.ndarray:
        """Physical coordinates, shape grid.shape + (2d,)."""
        axes = [self.axis_points()] * self.n_axes
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def dual_mesh(self) -> np.ndarray:
        """Dual coordinates in FFT order, shape grid.shape + (2d,)."""
        axes = [self.dual_axis_points()] * self.n_axes
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def dual_radii(self) -> np.ndarray:
        """|zeta| on the dual grid."""
        zeta = self.dual_axis_points()
        r2 = np.zeros(self.shape)
        for ax in range(self.n_axes):
            shape = [1] * self.n_axes
            shape[ax] = self.points_per_axis
            r2 = r2 + (zeta**2).reshape(shape)
        return np.sqrt(r2)


def _check_values(grid: PhaseGrid, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    if values.shape != grid.shape:
        raise DataError(f"values shape {values.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(values)):
        raise DataError("field values contain non-finite entries")
    return values


@dataclass(frozen=True)
class PhaseField:
    """Complex samples of a function on the physical grid."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values))


@dataclass(frozen=True)
class SpectralField:
    """Complex samples on the dual grid, axes in FFT frequency order."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values))


@dataclass(frozen=True)
class NormReport:
    """Norm bookkeeping for one field.

    full_norm and restricted_norm live on the physical side; band_norm and
    tail_norm are spectral-side norms of the band/tail split, so
    band_norm^2 + tail_norm^2 equals the squared spectral norm.
    """

    full_norm: float
    restricted_norm: float
    band_norm: float
    tail_norm: float


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")


def fourier_forward(field: PhaseField) -> SpectralField:
    """Forward transform on the periodic box.

    The samples start at -L, so the array is cyclically shifted to put
    z = 0 first; the plain DFT then evaluates the convention above at the
    FFT-ordered dual points (the summand is 2L-periodic in each z axis,
    making the shift harmless).
    """
    g = field.grid
    vals = np.fft.ifftshift(field.values)
    out = np.fft.fftn(vals) * g.spacing**g.n_axes
    return SpectralField(g, out)


def fourier_inverse(spec: SpectralField) -> PhaseField:
    """Inverse of :func:`fourier_forward`; exact round trip to rounding."""
    g = spec.grid
    vals = np.fft.ifftn(spec.values) / g.spacing**g.n_axes
    return PhaseField(g, np.fft.fftshift(vals))


def l2_norm(field, mask: np.ndarray | None = None) -> float:
    """L2 norm by the uniform quadrature of the field's own grid.

    Works for PhaseField (spacing dz) and SpectralField (spacing dzeta).
    `mask` restricts the sum to a boolean region of matching shape.
    """
    g = field.grid
    w = g.spacing if isinstance(field, PhaseField) else g.dual_spacing
    dens = np.abs(field.values) ** 2
    if mask is not None:
        mask = np.asarray(mask)
        if mask.shape != dens.shape:
            raise DataError(f"mask shape {mask.shape} != field shape {dens.shape}")
        dens = dens[mask.astype(bool)]
    return float(np.sqrt(w**g.n_axes * np.sum(dens)))


def band_project(spec: SpectralField, n_cut: float) -> SpectralField:
    """Zero every dual node with |zeta| > n_cut.

    Idempotent bitwise: the kept values are returned unchanged.  With the
    closed inequality, n_cut = 0 keeps exactly the origin node.
    """
    if n_cut < 0:
        raise DataError(f"band radius must be >= 0, got {n_cut}")
    keep = spec.grid.dual_radii() <= n_cut
    return SpectralField(spec.grid, np.where(keep, spec.values, 0.0))


def band_mass(spec: SpectralField, n_cut: float) -> tuple[float, float]:
    """(mass inside |zeta| <= n_cut, mass outside), as squared-norm masses."""
    g = spec.grid
    keep = g.dual_radii() <= n_cut
    dens = np.abs(spec.values) ** 2 * g.dual_spacing**g.n_axes
    inside = float(np.sum(dens[keep]))
    outside = float(np.sum(dens) - inside)
    return inside, max(outside, 0.0)


def norm_report(field: PhaseField, n_cut: float, mask: np.ndarray | None = None) -> NormReport:
    """Assemble the standard norm bookkeeping for one physical field."""
    spec = fourier_forward(field)
    inside, outside = band_mass(spec, n_cut)
    return NormReport(
        full_norm=l2_norm(field),
        restricted_norm=l2_norm(field, mask) if mask is not None else l2_norm(field),
        band_norm=float(np.sqrt(inside)),
        tail_norm=float(np.sqrt(outside)),
    )


def boundary_energy_fraction(field) -> float:
    """Fraction of squared mass on the outermost sample layer of any axis.

    For a PhaseField the layer consists of indices {0, M-1} per axis (the
    box edge); for a SpectralField, of the two extreme frequency rings.
    A field is trustworthy on the periodic box only when this is tiny.
    """
    vals = np.abs(field.values) ** 2
    total = float(np.sum(vals))
    if total == 0.0:
        return 0.0
    m = field.grid.points_per_axis
    if isinstance(field, PhaseField):
        edge_idx = (0, m - 1)
    else:
        # FFT order: index M/2 is the -Nyquist node, M/2 - 1 the largest positive
        edge_idx = (m // 2, m // 2 - 1)
    edge_mask = np.zeros(field.grid.shape, dtype=bool)
    for ax in range(field.grid.n_axes):
        sl = [slice(None)] * field.grid.n_axes
        for idx in edge_idx:
            sl[ax] = idx
            edge_mask[tuple(sl)] = True
    return float(np.sum(vals[edge_mask]) / total)


def require_resolved(field, tol: float = 1e-8, what: str = "field"):
    """Refuse to proceed when the boundary layer carries relative mass > tol."""
    frac = boundary_energy_fraction(field)
    if frac > tol:
        raise BoundaryGuardError(
            f"{what}: boundary energy fraction {frac:.3e} exceeds {tol:.1e}; "
            "enlarge the box or tighten the data"
        )
    return frac


def parseval_inner(f: PhaseField, g: PhaseField) -> complex:
    """Physical-side inner product <f, g> with g conjugated."""
    _same_grid(f, g)
    gr = f.grid
    return complex(gr.spacing**gr.n_axes * np.sum(f.values * np.conj(g.values)))
