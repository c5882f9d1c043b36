"""A planar band model for attractors of interval maps.

The band map H(x, y) = (f(x), delta*(x - 1/2) + delta^2 * y) acts on
B = [0,1] x [-1,1].  Its first coordinate is f itself and every vertical
fiber is contracted by delta^2, so the nested images H^n(B) shrink onto a
thin snake that follows the graph-like attractor of f.  Maps may be
:class:`~pseudoarc.exactmap.PLMap` or :class:`~pseudoarc.lattice.LatticeMap`;
float work only needs ``float_arrays``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError
from .lattice import LatticeMap
from .rational import HALF, ONE, ZERO, as_rational, fmt

CENTER = (0.5, 0.0)


def _check_delta(delta):
    delta = as_rational(delta)
    if not ZERO < delta <= HALF:
        raise DomainError(f"delta must lie in (0, 1/2], got {fmt(delta)}")
    return delta


@dataclass(frozen=True)
class BandPoint:
    x: object
    y: object
    mode: str = "exact"

    def __post_init__(self):
        if not (0 <= self.x <= 1 and -1 <= self.y <= 1):
            raise DomainError("point outside the band [0,1] x [-1,1]")


def band_map(f, delta, p):
    """H(p); exact for exact points, double precision for float points."""
    delta = _check_delta(delta)
    if p.mode == "exact":
        x, y = as_rational(p.x), as_rational(p.y)
        return BandPoint(f(x), delta * (x - HALF) + delta * delta * y, "exact")
    d = float(delta)
    return BandPoint(float(f.eval_float(p.x)), d * (p.x - 0.5) + d * d * p.y, "float")


def _band_step(fx, fy, d, x, y):
    return np.interp(x, fx, fy), d * (x - 0.5) + d * d * y


@dataclass
class AttractorCloud:
    points: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def __len__(self):
        return len(self.points)

    def concat(self, other):
        return AttractorCloud(np.vstack([self.points, other.points]), dict(self.params))

    def to_text(self):
        lines = [f"# {key}: {self.params[key]}" for key in sorted(self.params)]
        lines.extend(f"{x:.17g} {y:.17g}" for x, y in self.points)
        return "\n".join(lines) + "\n"


def attractor_cloud(f, delta, burn_in, kept, seeds, seed, jitter=2.0**-40):
    """Tail points of float band orbits from ``seeds`` uniform starts.

    Each orbit drops ``burn_in`` images and keeps the next ``kept``.  Points
    are ordered by step, then by start.  As in Birkhoff sums, a seeded
    jitter of size ``jitter`` on x after each step stops integer-slope maps
    from draining the binary digits of the orbit.
    """
    delta = _check_delta(delta)
    if burn_in < 0 or kept < 1 or seeds < 1:
        raise DomainError("budgets must be positive")
    fx, fy = f.float_arrays()
    d = float(delta)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), 1])))
    x = rng.random(seeds)
    y = rng.uniform(-1.0, 1.0, seeds)
    out = np.empty((kept, seeds, 2))
    for step in range(burn_in + kept):
        x, y = _band_step(fx, fy, d, x, y)
        if jitter:
            x = np.clip(x + rng.uniform(-jitter, jitter, seeds), 0.0, 1.0)
        if step >= burn_in:
            out[step - burn_in, :, 0] = x
            out[step - burn_in, :, 1] = y
    params = {"delta": fmt(delta), "burn_in": burn_in, "kept": kept, "seeds": seeds, "seed": seed}
    return AttractorCloud(out.reshape(-1, 2), params)


@dataclass
class Raster:
    width: int
    height: int
    pixels: np.ndarray
    bounds: tuple = (0.0, 1.0, -1.0, 1.0)

    def to_pgm(self):
        """Binary PGM, counts scaled by 255/max with integer rounding."""
        top = int(self.pixels.max()) if self.pixels.size else 0
        if top == 0:
            grey = np.zeros_like(self.pixels, dtype=np.uint8)
        else:
            grey = ((self.pixels.astype(np.int64) * 255 + top // 2) // top).astype(np.uint8)
        return f"P5\n{self.width} {self.height}\n255\n".encode() + grey.tobytes()


def attractor_raster(cloud, width, height):
    """Occupancy counts on a width x height grid over the band; row 0 is y = 1."""
    if width < 1 or height < 1:
        raise DomainError("raster dimensions must be positive")
    pts = cloud.points
    col = np.clip((pts[:, 0] * width).astype(np.int64), 0, width - 1)
    row = np.clip(((1.0 - pts[:, 1]) / 2.0 * height).astype(np.int64), 0, height - 1)
    counts = np.bincount(row * width + col, minlength=width * height)
    return Raster(width, height, counts.reshape(height, width).astype(np.int64))


def hausdorff_distance(A, B):
    """Exact Hausdorff distance between two finite point sets in the plane."""
    if len(A) == 0 or len(B) == 0:
        raise DomainError("Hausdorff distance of an empty cloud")
    a, b = A.points, B.points
    d_ab = cKDTree(b).query(a)[0].max()
    d_ba = cKDTree(a).query(b)[0].max()
    return float(max(d_ab, d_ba))


@dataclass
class EdgeCertificate:
    kind: str
    orbit: list

    def to_text(self):
        pts = "; ".join(f"({fmt(x)}, {fmt(y)})" for x, y in self.orbit)
        return f"edge: {self.kind}\norbit: {pts}\n"


def _endpoints(f):
    if isinstance(f, LatticeMap):
        return f.endpoint_values()
    return f.ys[0], f.ys[-1]


def edge_dynamics_check(f, delta):
    """Exact edge behaviour of H, read off f(0) and f(1).

    fixed_edge: f(0) = 0, the left edge maps into itself and holds the
    fixed point y = delta(0 - 1/2)/(1 - delta^2).  swapped_edges: f(0) = 1
    and f(1) = 0, the vertical edges are exchanged, with the period-2
    orbit (0, y0), (1, -y0), y0 = (delta/2)/(1 + delta^2).
    """
    delta = _check_delta(delta)
    f0, f1 = _endpoints(f)
    d2 = delta * delta
    if f0 == ZERO:
        return EdgeCertificate("fixed_edge", [(ZERO, -(delta / 2) / (1 - d2))])
    if f0 == ONE and f1 == ZERO:
        y0 = (delta / 2) / (1 + d2)
        return EdgeCertificate("swapped_edges", [(ZERO, y0), (ONE, -y0)])
    if f1 == ONE:
        return EdgeCertificate("fixed_edge", [(ONE, (delta / 2) / (1 - d2))])
    return EdgeCertificate("neither", [])


def _band_boundary(samples):
    """``samples`` points once around the rectangle, counterclockwise from (0, -1)."""
    t = (np.arange(samples) + 0.5) / samples * 6.0  # perimeter 1 + 2 + 1 + 2
    x = np.empty(samples)
    y = np.empty(samples)
    s = t < 1
    x[s], y[s] = t[s], -1.0
    s = (t >= 1) & (t < 3)
    x[s], y[s] = 1.0, -1.0 + (t[s] - 1)
    s = (t >= 3) & (t < 4)
    x[s], y[s] = 1.0 - (t[s] - 3), 1.0
    s = t >= 4
    x[s], y[s] = 0.0, 1.0 - (t[s] - 4)
    return x, y


def estimate_boundary_rotation(f, delta, n_band_iters=8, samples=4096):
    """Experimental rotation estimate of H around the attractor.

    The boundary of the band is pushed forward n times to approximate a
    curve enclosing the attractor; each sample q on it is paired with
    H(q), and the angular displacements about (1/2, 0) are combined by a
    circular mean.  Returns ``(estimate in [0, 1), "experimental")``.
    """
    delta = _check_delta(delta)
    if samples < 8:
        raise DomainError("need at least 8 boundary samples")
    if n_band_iters < 1:
        raise DomainError("n_band_iters must be positive")
    fx, fy = f.float_arrays()
    d = float(delta)
    x, y = _band_boundary(samples)
    for _ in range(n_band_iters):
        x, y = _band_step(fx, fy, d, x, y)
    hx, hy = _band_step(fx, fy, d, x, y)
    a0 = np.arctan2(y - CENTER[1], x - CENTER[0])
    a1 = np.arctan2(hy - CENTER[1], hx - CENTER[0])
    mean = np.exp(1j * (a1 - a0)).mean()
    if abs(mean) < 1e-12:
        return 0.0, "experimental"
    est = (np.angle(mean) / (2 * np.pi)) % 1.0
    # values just below 1 are rotations near 0
    if est > 1 - 1e-12:
        est = 0.0
    return float(est), "experimental"
