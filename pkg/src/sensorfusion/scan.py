"""
Poisson-disk scan patterns and probe-overlap statistics.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist
from scipy.stats import qmc

from .errors import ValidationError


@dataclass(frozen=True)
class ScanPattern:
    """Ordered lateral scan positions.

    Parameters
    ----------
    positions : ndarray of shape (n, 2)
        ``(x, y)`` positions in meters, measured from the region origin.
    min_distance : float
        Guaranteed minimum pairwise distance ``r`` (m).
    region : tuple of float
        ``(width, height)`` of the rectangle ``[0, width] x [0, height]`` (m).
    rng_seed : int or None
        Seed used to generate the pattern, kept as metadata.
    """

    positions: np.ndarray
    min_distance: float
    region: tuple
    rng_seed: object = None
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64).reshape(-1, 2)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "region", tuple(float(v) for v in self.region))
        if self.min_distance < 0:
            raise ValidationError("min_distance must be non-negative")
        if self.check:
            w, h = self.region
            if np.any(pos < 0) or np.any(pos[:, 0] > w) or np.any(pos[:, 1] > h):
                raise ValidationError("scan positions must lie inside the region")
            if len(pos) > 1 and pdist(pos).min() < self.min_distance:
                raise ValidationError("scan positions violate the minimum distance")

    def __len__(self):
        return len(self.positions)

    def __eq__(self, other):
        return (isinstance(other, ScanPattern)
                and np.array_equal(self.positions, other.positions)
                and self.min_distance == other.min_distance
                and self.region == other.region
                and self.rng_seed == other.rng_seed)

    def __hash__(self):
        return hash((self.positions.tobytes(), self.min_distance, self.region, self.rng_seed))

    def to_dict(self):
        return {"positions": self.positions.tolist(), "min_distance": self.min_distance,
                "region": list(self.region), "rng_seed": self.rng_seed}

    @classmethod
    def from_dict(cls, d):
        return cls(positions=np.array(d["positions"], dtype=np.float64).reshape(-1, 2),
                   min_distance=d["min_distance"], region=tuple(d["region"]),
                   rng_seed=d.get("rng_seed"))


def poisson_disk(region, r, target_count, rng_seed=0):
    """Maximal Poisson-disk sample of ``region`` reduced to ``target_count`` points.

    Parameters
    ----------
    region : tuple of float
        ``(width, height)`` in meters.
    r : float
        Minimum pairwise distance in meters.
    target_count : int
        Number of positions to keep.
    rng_seed : int
        Seeds both the sampler and the subset selection.

    Returns
    -------
    ScanPattern

    Raises
    ------
    ValidationError
        If the region cannot hold ``target_count`` points at spacing ``r``.
    """
    width, height = (float(v) for v in region)
    if r <= 0 or width <= 0 or height <= 0:
        raise ValidationError("region and r must be positive")
    target_count = int(target_count)
    if target_count < 1:
        raise ValidationError("target_count must be at least 1")
    if width * height < target_count * r * r * np.pi / 4:
        raise ValidationError(
            f"region {width:.3g} x {height:.3g} m cannot hold {target_count} points at r = {r:.3g} m")
    rng = np.random.default_rng(rng_seed)
    if target_count == 1:
        pts = rng.uniform(size=(1, 2)) * [width, height]
    else:
        sampler = qmc.PoissonDisk(d=2, radius=r, ncandidates=30, rng=rng,
                                  l_bounds=[0.0, 0.0], u_bounds=[width, height])
        pts = sampler.fill_space()
        if len(pts) < target_count:
            raise ValidationError(
                f"Poisson-disk sampling produced only {len(pts)} points, {target_count} requested")
        keep = np.sort(rng.choice(len(pts), target_count, replace=False))
        pts = pts[keep]
    return ScanPattern(positions=pts, min_distance=float(r), region=(width, height),
                       rng_seed=rng_seed)


def disk_overlap(distance, diameter):
    """Intersection area of two equal disks divided by the disk area."""
    d = np.clip(np.asarray(distance, dtype=np.float64) / diameter, 0.0, 1.0)
    return (2 / np.pi) * (np.arccos(d) - d * np.sqrt(1 - d * d))


def overlap_fraction(pattern, probe_diameter):
    """Mean nearest-neighbor area overlap of the probe footprints.

    For every position the distance to its nearest neighbor is converted to
    the lens-shaped intersection area of two disks of ``probe_diameter``
    divided by one disk area; the mean over positions is returned.
    """
    if probe_diameter <= 0:
        raise ValidationError("probe diameter must be positive")
    if len(pattern) < 2:
        raise ValidationError("overlap needs at least two positions")
    dist, _ = cKDTree(pattern.positions).query(pattern.positions, k=2)
    return float(np.mean(disk_overlap(dist[:, 1], probe_diameter)))


def write_scan(pattern, path):
    """Plain text: a ``#`` header with r and seed, then ``x<TAB>y`` rows."""
    w, h = pattern.region
    lines = [f"# r={pattern.min_distance!r} seed={pattern.rng_seed!r} region={w!r},{h!r}"]
    lines += [f"{x!r}\t{y!r}" for x, y in pattern.positions.tolist()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_scan(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValidationError(f"{path}: missing scan header")
        meta = dict(item.split("=", 1) for item in header[1:].split())
        rows = [line.split("\t") for line in fh if line.strip()]
    try:
        seed = None if meta.get("seed", "None") == "None" else int(meta["seed"])
        region = tuple(float(v) for v in meta["region"].split(","))
        pts = np.array([[float(x), float(y)] for x, y in rows]).reshape(-1, 2)
        r = float(meta["r"])
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed scan file ({exc})") from exc
    return ScanPattern(positions=pts, min_distance=r, region=region, rng_seed=seed)
