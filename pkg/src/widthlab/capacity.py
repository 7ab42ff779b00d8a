"""Relative extremal functions and relative capacities of explicit condensers.

Two condenser families carry closed forms: Reinhardt condensers (closed
polydisc inside an open polydisc) and monomial polyhedral condensers
(sublevel sets of F_k(z) = z_k^{p_k} - c_k).  For both, the extremal
function is max_k log(|F_k(z)|/a_k)/log(a_k/b_k) and the capacity is
(2 pi)^n m0 / prod(log(a_k/b_k)) with m0 the covering multiplicity.

For general one-dimensional condensers a five-point finite-difference
solver computes the harmonic extremal field on a mask grid and the
capacity as the discrete flux through a mid-level contour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import (
    GeometryError,
    NumericError,
    OutOfDomainError,
    ParameterError,
)
from .multiindex import MAX_DIMENSION, GeometryVector

GRID_MAGIC = "widthlab-grid"
GRID_VERSION = 1

OUTSIDE, DOMAIN, COMPACT = 0, 1, 2


def _validate_radii(a, b):
    if len(a) != len(b) or not a:
        raise GeometryError("radii a and b must have equal length >= 1")
    if len(a) > MAX_DIMENSION:
        raise GeometryError(f"dimension must be <= {MAX_DIMENSION}")
    for k, (ak, bk) in enumerate(zip(a, b)):
        if not (0.0 < bk < ak) or not math.isfinite(ak):
            raise GeometryError(f"axis {k}: need 0 < b < a, got b={bk}, a={ak}")


@dataclass(frozen=True)
class ReinhardtCondenser:
    """Closed polydisc of radii b inside the open polydisc of radii a."""

    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        _validate_radii(self.a, self.b)

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def multiplicity(self) -> int:
        return 1

    @property
    def alpha(self) -> tuple[float, ...]:
        return tuple(bk / ak for ak, bk in zip(self.a, self.b))

    def geometry(self) -> GeometryVector:
        return GeometryVector(self.alpha)

    def map_abs(self, z) -> np.ndarray:
        """|F_k(z)| for the underlying map, here the identity."""
        return np.abs(np.asarray(z, dtype=complex).ravel())

    def with_inner_radii(self, b) -> "ReinhardtCondenser":
        return ReinhardtCondenser(self.a, tuple(float(v) for v in b))


def _default_shift(p: tuple[int, ...], b: tuple[float, ...]) -> tuple[complex, ...]:
    # small fixed regular-value shift for ramified axes; identity axes need none
    return tuple(
        (bk / 100.0) * (1 + 1j) / math.sqrt(2) if pk >= 2 else 0.0
        for pk, bk in zip(p, b)
    )


@dataclass(frozen=True)
class PolyhedralCondenser:
    """Monomial polyhedral condenser: sublevel sets of F_k(z) = z_k^{p_k} - c_k.

    The underlying map is a proper m0 = prod(p_k)-sheeted covering of the
    polydisc; the shift c makes the origin a regular value when any
    p_k >= 2.  Capacity and the Hefer matrix stay in closed form.
    """

    p: tuple[int, ...]
    a: tuple[float, ...]
    b: tuple[float, ...]
    c_reg: tuple[complex, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        _validate_radii(self.a, self.b)
        if len(self.p) != len(self.a):
            raise GeometryError("powers p must match radii length")
        for k, pk in enumerate(self.p):
            if not (isinstance(pk, int) and pk >= 1):
                raise GeometryError(f"p[{k}]={pk!r} must be a positive integer")
        if self.c_reg is None:
            object.__setattr__(self, "c_reg", _default_shift(self.p, self.b))
        else:
            object.__setattr__(
                self, "c_reg", tuple(complex(v) for v in self.c_reg)
            )
        for k, (ck, bk, pk) in enumerate(zip(self.c_reg, self.b, self.p)):
            if abs(ck) >= bk / 2.0:
                raise GeometryError(
                    f"axis {k}: |c_reg|={abs(ck)} must stay below b/2={bk / 2}"
                )
            if pk == 1 and ck != 0.0:
                # a shift on an identity axis is just a translation; keep it at 0
                raise GeometryError(f"axis {k}: shift requires p >= 2")

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def multiplicity(self) -> int:
        return math.prod(self.p)

    @property
    def alpha(self) -> tuple[float, ...]:
        return tuple(bk / ak for ak, bk in zip(self.a, self.b))

    @property
    def regularized(self) -> bool:
        return any(c != 0.0 for c in self.c_reg)

    def geometry(self) -> GeometryVector:
        return GeometryVector(self.alpha)

    def map_values(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex).ravel()
        return np.array(
            [zk**pk - ck for zk, pk, ck in zip(z, self.p, self.c_reg)],
            dtype=complex,
        )

    def map_abs(self, z) -> np.ndarray:
        return np.abs(self.map_values(z))

    def with_inner_radii(self, b) -> "PolyhedralCondenser":
        return PolyhedralCondenser(self.p, self.a, tuple(float(v) for v in b), self.c_reg)


Condenser = ReinhardtCondenser | PolyhedralCondenser


@dataclass(frozen=True)
class CapacityValue:
    """Relative capacity C(K, D) with its provenance."""

    value: float
    provenance: str  # 'closed-form' | 'flux-integral'
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.value > 0.0 and math.isfinite(self.value)):
            raise ParameterError(f"capacity {self.value!r} must be positive and finite")


@dataclass(frozen=True)
class SublevelScaling:
    """Sublevel set K_c = {u <= -1+c} as a condenser, with its capacity."""

    level: float
    condenser: Condenser
    capacity: CapacityValue


def product_extremal_at(cond: Condenser, z) -> float:
    """Relative extremal function u(z) = max_k log(|F_k(z)|/a_k)/log(a_k/b_k).

    Clamped to [-1, 0]; z must lie in the outer polyhedron (every
    |F_k(z)| < a_k).
    """
    w = cond.map_abs(z)
    if len(w) != cond.n:
        raise ParameterError(f"point dimension {len(w)} != condenser dimension {cond.n}")
    terms = []
    for k in range(cond.n):
        if w[k] >= cond.a[k]:
            raise OutOfDomainError(
                f"axis {k}: |F(z)|={w[k]} outside the open level {cond.a[k]}"
            )
        if w[k] == 0.0:
            terms.append(-math.inf)
        else:
            terms.append(
                math.log(w[k] / cond.a[k]) / math.log(cond.a[k] / cond.b[k])
            )
    return min(0.0, max(-1.0, max(terms)))


def product_capacity(cond: Condenser) -> CapacityValue:
    """Closed-form capacity (2 pi)^n m0 / prod(log(a_k/b_k)).

    For shifted polyhedral maps the closed form of the unshifted
    polyhedron is reported and the shift is flagged in the metadata.
    """
    logs = math.prod(math.log(ak / bk) for ak, bk in zip(cond.a, cond.b))
    value = (2.0 * math.pi) ** cond.n * cond.multiplicity / logs
    meta = {}
    if isinstance(cond, PolyhedralCondenser) and cond.regularized:
        meta["regular_value_shift"] = [repr(c) for c in cond.c_reg]
    return CapacityValue(value=value, provenance="closed-form", metadata=meta)


def sublevel_scale(cond: Condenser, c: float) -> SublevelScaling:
    """Sublevel condenser K_c = {u <= -1+c} and its rescaled capacity.

    K_c is the product sublevel set |F_k| <= a_k (b_k/a_k)^(1-c) and its
    capacity is C(K, D) / (1-c)^n.
    """
    if not 0.0 < c < 1.0:
        raise ParameterError(f"sublevel parameter c={c} must be in (0, 1)")
    b_scaled = tuple(
        ak * (bk / ak) ** (1.0 - c) for ak, bk in zip(cond.a, cond.b)
    )
    scaled = cond.with_inner_radii(b_scaled)
    base = product_capacity(cond)
    value = base.value / (1.0 - c) ** cond.n
    meta = dict(base.metadata)
    meta["sublevel_c"] = c
    return SublevelScaling(
        level=c,
        condenser=scaled,
        capacity=CapacityValue(value=value, provenance="closed-form", metadata=meta),
    )


# ---------------------------------------------------------------------------
# planar finite-difference solver
# ---------------------------------------------------------------------------


@dataclass
class PlanarCondenserGrid:
    """Mask grid for a planar condenser on a uniform node grid.

    codes is (ny, nx) with 0 outside the domain, 1 in the domain ring,
    2 on the compact set; node (i, j) sits at origin + h*(j, i).
    The solved field u lives on the same grid: -1 on the compact mask,
    0 outside, discrete-harmonic in between.
    """

    codes: np.ndarray
    h: float
    origin: tuple[float, float]
    u: np.ndarray | None = None

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.uint8)
        if self.codes.ndim != 2:
            raise GeometryError("codes must be a 2-d array")
        if not (self.h > 0.0 and math.isfinite(self.h)):
            raise GeometryError(f"grid spacing h={self.h!r} must be positive")
        if not (self.codes == COMPACT).any():
            raise GeometryError("compact mask is empty")
        if not (self.codes == DOMAIN).any():
            raise GeometryError("domain ring is empty")

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape


@dataclass(frozen=True)
class PlanarSolution:
    u: np.ndarray
    capacity: CapacityValue
    residual: float
    iterations: int
    grid: PlanarCondenserGrid = field(repr=False)


def annulus_grid(
    a: float = 1.0, b: float = 0.5, nodes: int = 1024, pad: float = 0.05
) -> PlanarCondenserGrid:
    """Mask grid for the circular condenser (|z| <= b, |z| < a)."""
    if not 0.0 < b < a:
        raise GeometryError(f"need 0 < b < a, got b={b}, a={a}")
    half = a + pad
    x = np.linspace(-half, half, nodes)
    h = x[1] - x[0]
    X, Y = np.meshgrid(x, x)
    r = np.hypot(X, Y)
    codes = np.where(r <= b, COMPACT, np.where(r < a, DOMAIN, OUTSIDE)).astype(np.uint8)
    return PlanarCondenserGrid(codes=codes, h=float(h), origin=(-half, -half))


def square_domain_disc_grid(
    side: float = 2.0, b: float = 0.5, nodes: int = 512
) -> PlanarCondenserGrid:
    """Square domain of the given side centred at 0 with a disc compact set."""
    half = side / 2.0
    pad = 2.0 * side / nodes
    x = np.linspace(-half - pad, half + pad, nodes)
    h = x[1] - x[0]
    X, Y = np.meshgrid(x, x)
    inside = (np.abs(X) < half) & (np.abs(Y) < half)
    codes = np.where(
        np.hypot(X, Y) <= b, COMPACT, np.where(inside, DOMAIN, OUTSIDE)
    ).astype(np.uint8)
    return PlanarCondenserGrid(codes=codes, h=float(h), origin=(-half - pad, -half - pad))


def save_grid(grid: PlanarCondenserGrid, path) -> None:
    """Write the plain-text mask format (header + row-major 0/1/2 digits)."""
    ny, nx = grid.shape
    with open(path, "w") as fh:
        fh.write(f"# {GRID_MAGIC} v{GRID_VERSION}\n")
        fh.write(f"{nx} {ny}\n")
        fh.write(f"{grid.h!r} {grid.origin[0]!r} {grid.origin[1]!r}\n")
        for row in grid.codes:
            fh.write("".join(str(int(v)) for v in row) + "\n")


def load_grid(path) -> PlanarCondenserGrid:
    """Read the plain-text mask format written by save_grid."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if len(lines) < 3:
        raise ParameterError(f"grid file {path} truncated")
    try:
        nx, ny = (int(v) for v in lines[0].split())
        h, x0, y0 = (float(v) for v in lines[1].split())
    except ValueError as exc:
        raise ParameterError(f"grid file {path}: malformed header: {exc}") from exc
    body = "".join(tok for ln in lines[2:] for tok in ln.split())
    if len(body) != nx * ny:
        raise ParameterError(
            f"grid file {path}: body has {len(body)} cells, expected {nx * ny}"
        )
    codes = np.frombuffer(body.encode(), dtype=np.uint8) - ord("0")
    if codes.max() > COMPACT:
        raise ParameterError(f"grid file {path}: cell codes must be 0, 1 or 2")
    return PlanarCondenserGrid(
        codes=codes.reshape(ny, nx).copy(), h=h, origin=(x0, y0)
    )


def _check_separation(codes: np.ndarray, cells: int = 4) -> None:
    """Compact mask must keep `cells` grid cells of domain around it."""
    from scipy.ndimage import binary_dilation

    compact = codes == COMPACT
    struct = np.ones((2 * cells + 1, 2 * cells + 1), dtype=bool)
    grown = binary_dilation(compact, structure=struct)
    if (grown & (codes == OUTSIDE)).any():
        raise GeometryError(
            f"compact and outside masks are within {cells} cells of each other"
        )
    edge = np.zeros_like(compact)
    edge[0, :] = edge[-1, :] = True
    edge[:, 0] = edge[:, -1] = True
    if (grown & edge).any():
        raise GeometryError("compact mask touches the grid edge")


def _assemble(codes: np.ndarray):
    """Five-point system over domain cells; Dirichlet -1 on compact, 0 outside."""
    ny, nx = codes.shape
    idx = -np.ones(codes.shape, dtype=np.int64)
    iy, ix = np.nonzero(codes == DOMAIN)
    N = len(iy)
    idx[iy, ix] = np.arange(N)
    rows, cols, vals = [np.arange(N)], [np.arange(N)], [np.full(N, 4.0)]
    rhs = np.zeros(N)
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        ny_, nx_ = iy + dy, ix + dx
        inside = (0 <= ny_) & (ny_ < ny) & (0 <= nx_) & (nx_ < nx)
        ncode = np.full(N, OUTSIDE, dtype=np.uint8)
        ncode[inside] = codes[ny_[inside], nx_[inside]]
        is_dom = ncode == DOMAIN
        rows.append(np.arange(N)[is_dom])
        cols.append(idx[ny_[is_dom], nx_[is_dom]])
        vals.append(np.full(is_dom.sum(), -1.0))
        rhs[ncode == COMPACT] += -1.0
    A = sps.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(N, N),
    )
    return A, rhs, idx


def _solve_dirichlet(A, rhs, tol: float):
    """AMG-preconditioned CG with iterative refinement to a max-norm residual."""
    iterations = 0
    N = A.shape[0]
    if N <= 40_000:
        solve = spla.factorized(A.tocsc())
        x = solve(rhs)
        for _ in range(3):
            r = rhs - A @ x
            if np.abs(r).max() <= tol / 2:
                break
            x = x + solve(r)
            iterations += 1
        return x, iterations
    import pyamg

    ml = pyamg.ruge_stuben_solver(A)
    M = ml.aspreconditioner(cycle="V")
    x = np.zeros(N)
    for _ in range(8):
        r = rhs - A @ x
        if np.abs(r).max() <= tol / 2:
            break
        dx, info = spla.cg(A, r, rtol=1e-12, atol=0.0, M=M, maxiter=400)
        iterations += 1
        if info > 0:
            iterations += info
        x = x + dx
    return x, iterations


def flux_through_level(grid: PlanarCondenserGrid, level: float) -> float:
    """Discrete flux of u through the contour {u <= level}.

    Sums the normal difference quotients times h over grid edges leaving
    the set S = compact + {u <= level}: each edge contributes
    (u_out - u_in)/h * h.  By the discrete divergence theorem the value
    is contour-independent up to the accumulated solver residual.
    """
    if grid.u is None:
        raise ParameterError("grid has no solved field; run planar_capacity_fd first")
    if not -1.0 < level < 0.0:
        raise ParameterError(f"contour level {level} must be in (-1, 0)")
    codes, u = grid.codes, grid.u
    S = (codes == COMPACT) | ((codes != OUTSIDE) & (u <= level))
    flux = 0.0
    for axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
        out_nbr = np.roll(u, -shift, axis=axis)
        out_S = np.roll(S, -shift, axis=axis)
        if shift > 0:
            sl = [slice(None)] * 2
            sl[axis] = slice(-1, None)
        else:
            sl = [slice(None)] * 2
            sl[axis] = slice(0, 1)
        out_S[tuple(sl)] = False  # beyond the array counts as outside (u = 0)
        out_nbr[tuple(sl)] = 0.0
        crossing = S & ~out_S
        flux += float(np.sum(out_nbr[crossing] - u[crossing]))
    return flux


def planar_capacity_fd(
    grid: PlanarCondenserGrid,
    tol: float = 1e-10,
    contour_level: float = -0.5,
) -> PlanarSolution:
    """Solve the planar condenser field and return the flux capacity.

    u solves the five-point discrete Laplace equation with u = -1 on the
    compact mask and u = 0 outside the domain; the linear solve is pushed
    to a max-norm residual below tol.  The capacity is the discrete flux
    through the contour {u = contour_level}.
    """
    _check_separation(grid.codes)
    A, rhs, idx = _assemble(grid.codes)
    x, iterations = _solve_dirichlet(A, rhs, tol)
    residual = float(np.abs(rhs - A @ x).max())
    if residual > tol:
        raise NumericError(
            f"linear solve stalled at max-norm residual {residual:.3e} > {tol:.1e}",
            iterations=iterations,
            residual=residual,
        )
    u = np.zeros(grid.shape)
    u[grid.codes == COMPACT] = -1.0
    u[grid.codes == DOMAIN] = x
    grid.u = u
    flux = flux_through_level(grid, contour_level)
    cap = CapacityValue(
        value=flux,
        provenance="flux-integral",
        metadata={
            "residual": residual,
            "contour_level": contour_level,
            "h": grid.h,
            "iterations": iterations,
        },
    )
    return PlanarSolution(
        u=u, capacity=cap, residual=residual, iterations=iterations, grid=grid
    )
