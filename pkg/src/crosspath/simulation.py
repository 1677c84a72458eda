"""Seeded Monte Carlo for two walkers on a disk or a sphere.

Every random quantity comes from a Philox stream keyed by
``(seed, kind, index, role)``: ``kind`` separates long walks from first-step
trials, ``index`` is the replica or chunk, and ``role`` is agent 1, agent 2
or the transmission draw. Results therefore do not depend on how many
threads run the replicas or chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .analytic import RegionModel
from .plane_geometry import PlanarPoint, planar_endpoint, segments_intersect_array
from .sphere_geometry import (
    SphereStepParams,
    SphericalPoint,
    arcs_intersect_array,
    cart_array,
    rodrigues_endpoint,
    rodrigues_endpoint_array,
    rodrigues_step,
    sph_angles,
)

WALK, FIRST_STEP = 0, 1
AGENT1, AGENT2, TRANSMISSION = 0, 1, 2
FIRST_STEP_CHUNK = 1 << 18
TWO_PI = 2.0 * math.pi


def stream(seed: int, kind: int, index: int, role: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=(kind, index, role))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class WalkConfig:
    region: RegionModel
    d1: float
    d2: float
    steps: int = 15000
    seed: int = 0
    tau: float = 1.0
    replicas: int = 1

    def __post_init__(self) -> None:
        if not (self.d1 > 0 and self.d2 > 0):
            raise ValueError("step lengths must be positive")
        if self.steps < 1 or self.replicas < 1:
            raise ValueError("steps and replicas must be at least 1")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.region.kind == "disk":
            if not self.d1 + self.d2 < self.region.size:
                raise ValueError("disk walks need d1 + d2 < r")
        else:
            SphereStepParams(self.d1, self.d2, self.region.size)

    def as_dict(self) -> dict:
        return {
            "region": self.region.kind,
            "radius": self.region.size,
            "d1": self.d1,
            "d2": self.d2,
            "steps": self.steps,
            "seed": self.seed,
            "tau": self.tau,
            "replicas": self.replicas,
        }


@dataclass
class CrossingSeries:
    indicators: np.ndarray
    running_frequency: np.ndarray
    crossings_total: int
    # in-region positions V(0..steps) per agent, kept only on request
    tracks: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @classmethod
    def from_indicators(cls, indicators: np.ndarray, tracks=None) -> "CrossingSeries":
        counts = np.cumsum(indicators, dtype=np.int64)
        k = np.arange(1, len(indicators) + 1)
        return cls(indicators, counts / k, int(counts[-1]) if len(counts) else 0, tracks)


@dataclass(frozen=True)
class BandSpec:
    p_ref: float
    level: float
    z: float
    lower: np.ndarray
    upper: np.ndarray


# ---------------------------------------------------------------- sampling

def uniform_point_disk(rng: np.random.Generator, r: float, size: int | None = None):
    """Uniform point(s) in the disk of radius r; arrays when ``size`` is given."""
    u, t = rng.random(size), rng.random(size)
    rad = r * np.sqrt(u)
    ang = TWO_PI * t
    if size is None:
        return PlanarPoint(float(rad * math.cos(ang)), float(rad * math.sin(ang)))
    return rad * np.cos(ang), rad * np.sin(ang)


def uniform_point_sphere(rng: np.random.Generator, rho: float, size: int | None = None):
    """Uniform point(s) on the sphere: theta uniform, cos(phi) uniform on [-1, 1]."""
    theta = TWO_PI * rng.random(size)
    phi = np.arccos(1.0 - 2.0 * rng.random(size))
    if size is None:
        return SphericalPoint(rho, float(theta), float(phi))
    return theta, phi


def reflect_into_disk(x: float, y: float, r: float) -> tuple[float, float]:
    """Send a point that left the disk to the opposite side, as deep inside as it was outside."""
    n = math.hypot(x, y)
    if n <= r:
        return x, y
    depth = n - r
    if depth >= r:
        raise ValueError("step overshoots the disk by more than its radius")
    s = -(r - depth) / n
    return s * x, s * y


def step_plane(v: PlanarPoint, d: float, rng: np.random.Generator, r: float) -> tuple[PlanarPoint, PlanarPoint]:
    """One planar step: the raw endpoint (used for crossings) and the in-disk position."""
    w = planar_endpoint(v, d, TWO_PI * rng.random())
    return w, PlanarPoint(*reflect_into_disk(w.x, w.y, r))


def step_sphere(v: SphericalPoint, d: float, rng: np.random.Generator) -> SphericalPoint:
    return rodrigues_endpoint(v, d, TWO_PI * rng.random())


# ---------------------------------------------------------------- walks

def _disk_track(rng: np.random.Generator, r: float, d: float, steps: int):
    start = uniform_point_disk(rng, r)
    alphas = TWO_PI * rng.random(steps)
    pos = np.empty((steps + 1, 2))
    raw = np.empty((steps, 2))
    x, y = start.x, start.y
    pos[0] = x, y
    cos, sin = np.cos(alphas), np.sin(alphas)
    for k in range(steps):
        wx = x + d * cos[k]
        wy = y + d * sin[k]
        raw[k] = wx, wy
        x, y = reflect_into_disk(wx, wy, r)
        pos[k + 1] = x, y
    return pos, raw


def _sphere_track(rng: np.random.Generator, rho: float, d: float, steps: int):
    start = uniform_point_sphere(rng, rho)
    alphas = TWO_PI * rng.random(steps)
    angle = d / rho
    pos = np.empty((steps + 1, 3))
    theta, phi = start.theta, start.phi
    pos[0] = cart_array(1.0, theta, phi)
    for k in range(steps):
        x, y, z = rodrigues_step(theta, phi, angle, float(alphas[k]))
        pos[k + 1] = x, y, z
        theta, phi = sph_angles(x, y, z)
    return pos * rho, pos[1:] * rho


def _transmission(indicators: np.ndarray, tau: float, rng_factory) -> np.ndarray:
    if tau >= 1.0:
        return indicators
    return indicators & (rng_factory().random(len(indicators)) < tau)


def run_walk(config: WalkConfig, replica: int = 0, keep_tracks: bool = False) -> CrossingSeries:
    """Simulate both walkers for ``config.steps`` steps from uniform starts.

    Step k tests the paths V(k-1) -> W(k) for a crossing, where on the disk
    W(k) is the raw endpoint before any reflection.
    """
    reg = config.region
    r1 = stream(config.seed, WALK, replica, AGENT1)
    r2 = stream(config.seed, WALK, replica, AGENT2)
    if reg.kind == "disk":
        pos1, raw1 = _disk_track(r1, reg.size, config.d1, config.steps)
        pos2, raw2 = _disk_track(r2, reg.size, config.d2, config.steps)
        hits = segments_intersect_array(
            pos1[:-1, 0], pos1[:-1, 1], raw1[:, 0], raw1[:, 1],
            pos2[:-1, 0], pos2[:-1, 1], raw2[:, 0], raw2[:, 1],
        )
    else:
        pos1, raw1 = _sphere_track(r1, reg.size, config.d1, config.steps)
        pos2, raw2 = _sphere_track(r2, reg.size, config.d2, config.steps)
        hits = arcs_intersect_array(pos1[:-1], raw1, pos2[:-1], raw2)
    hits = _transmission(hits, config.tau, lambda: stream(config.seed, WALK, replica, TRANSMISSION))
    return CrossingSeries.from_indicators(hits, (pos1, pos2) if keep_tracks else None)


def run_replicas(config: WalkConfig, threads: int = 1) -> list[CrossingSeries]:
    if threads <= 1 or config.replicas == 1:
        return [run_walk(config, i) for i in range(config.replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run_walk(config, i), range(config.replicas)))


# ---------------------------------------------------------------- first step

def _first_step_chunk(config: WalkConfig, chunk: int, n: int) -> int:
    reg = config.region
    r1 = stream(config.seed, FIRST_STEP, chunk, AGENT1)
    r2 = stream(config.seed, FIRST_STEP, chunk, AGENT2)
    if reg.kind == "disk":
        x1, y1 = uniform_point_disk(r1, reg.size, n)
        x2, y2 = uniform_point_disk(r2, reg.size, n)
        a1 = TWO_PI * r1.random(n)
        a2 = TWO_PI * r2.random(n)
        hits = segments_intersect_array(
            x1, y1, x1 + config.d1 * np.cos(a1), y1 + config.d1 * np.sin(a1),
            x2, y2, x2 + config.d2 * np.cos(a2), y2 + config.d2 * np.sin(a2),
        )
    else:
        rho = reg.size
        t1, p1 = uniform_point_sphere(r1, rho, n)
        t2, p2 = uniform_point_sphere(r2, rho, n)
        a1 = TWO_PI * r1.random(n)
        a2 = TWO_PI * r2.random(n)
        hits = arcs_intersect_array(
            cart_array(rho, t1, p1), rodrigues_endpoint_array(rho, t1, p1, config.d1, a1),
            cart_array(rho, t2, p2), rodrigues_endpoint_array(rho, t2, p2, config.d2, a2),
        )
    hits = _transmission(hits, config.tau, lambda: stream(config.seed, FIRST_STEP, chunk, TRANSMISSION))
    return int(np.count_nonzero(hits))


def estimate_first_step(config: WalkConfig, trials: int, threads: int = 1) -> tuple[float, float]:
    """Frequency of first-step crossings over ``trials`` fresh uniform starts, with its binomial standard error.

    Trials are processed in fixed-size chunks with their own streams, so the
    answer is the same for any ``threads``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    sizes = [FIRST_STEP_CHUNK] * (trials // FIRST_STEP_CHUNK)
    if trials % FIRST_STEP_CHUNK:
        sizes.append(trials % FIRST_STEP_CHUNK)
    jobs = list(enumerate(sizes))
    if threads <= 1:
        counts = [_first_step_chunk(config, c, n) for c, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(lambda job: _first_step_chunk(config, *job), jobs))
    freq = sum(counts) / trials
    return freq, math.sqrt(freq * (1.0 - freq) / trials)


# ---------------------------------------------------------------- reference bands

def normal_quantile(level: float) -> float:
    return NormalDist().inv_cdf(0.5 + level / 2.0)


def hypothetical_bands(p_ref: float, steps: int, level: float = 0.95) -> BandSpec:
    """Per-step interval for the running frequency of i.i.d. Bernoulli(p_ref) indicators."""
    if not 0.0 < p_ref < 1.0:
        raise ValueError(f"p_ref must be in (0, 1), got {p_ref}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    z = normal_quantile(level)
    k = np.arange(1, steps + 1)
    half = z * np.sqrt(p_ref * (1.0 - p_ref) / k)
    return BandSpec(p_ref, level, z, p_ref - half, p_ref + half)
