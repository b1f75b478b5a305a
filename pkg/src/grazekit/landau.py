"""N-particle Euler-Maruyama approximation of the Landau dynamics.

Each particle diffuses against companions drawn from the cloud itself: for a
pair separation z = X_i - X_j the drift is b(z) = -2|z|^gamma z and the noise
matrix sigma(z) satisfies sigma sigma^T = |z|^gamma (|z|^2 Id - z z^T), the
Landau diffusion matrix.  Three pairing modes trade cost against exactness:

* ``full``        — every ordered pair, O(N^2), capped at N <= 2048;
* ``subsampled``  — m uniform companions per particle per step, O(N m);
* ``conservative``— m rounds of random perfect matchings with one shared
                    Gaussian increment per matched pair, applied with
                    opposite signs; since sigma(-z) = -sigma(z) and
                    b(-z) = -b(z), every pair's contributions to the total
                    momentum cancel exactly.

The |z|^gamma singularity at coincident velocities is tamed by evaluating
the SCALAR factors |z|^gamma, |z|^{gamma/2} at max(|z|, reg_delta); the
vector structure keeps the raw z, so exactly coincident pairs contribute
zero automatically.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import rngstreams
from .errors import DegenerateInputError, InstabilityError, ParameterError
from .particles import ParticleCloud
from .trajectory import run_schedule

__all__ = [
    "LandauCoefficients",
    "LandauConfig",
    "sigma_eval",
    "b_eval",
    "step",
    "run",
]

_FULL_PAIRING_CAP = 2048
_PAIRINGS = ("full", "subsampled", "conservative")


def sigma_eval(gamma, z):
    """Noise matrix sigma(z), a 3x3 square root of the diffusion matrix.

    sigma(z) = |z|^{gamma/2} [[ z2, -z3,  0 ],
                              [-z1,  0,  z3 ],
                              [  0,  z1, -z2 ]]

    satisfying sigma sigma^T = |z|^gamma (|z|^2 Id - z z^T), sigma^T z = 0
    and sigma(-z) = -sigma(z).  Raises DegenerateInputError at z = 0; the
    stepping code regularizes upstream instead of calling this.
    """
    _check_gamma(gamma)
    z = np.asarray(z, dtype=float)
    if z.shape != (3,):
        raise ParameterError("z must be a 3-vector")
    r = np.linalg.norm(z)
    if r == 0.0:
        raise DegenerateInputError("sigma(z) needs |z| > 0")
    z1, z2, z3 = z
    mat = np.array([[z2, -z3, 0.0],
                    [-z1, 0.0, z3],
                    [0.0, z1, -z2]])
    return r ** (gamma / 2.0) * mat


def b_eval(gamma, z):
    """Drift vector b(z) = -2 |z|^gamma z (the divergence of the rows of
    the diffusion matrix).  Odd: b(-z) = -b(z)."""
    _check_gamma(gamma)
    z = np.asarray(z, dtype=float)
    if z.shape != (3,):
        raise ParameterError("z must be a 3-vector")
    r = np.linalg.norm(z)
    if r == 0.0:
        raise DegenerateInputError("b(z) needs |z| > 0")
    return -2.0 * r ** gamma * z


def _check_gamma(gamma):
    if not (-3.0 <= gamma < 0.0):
        raise ParameterError(f"gamma must lie in [-3, 0), got {gamma}")


@dataclass(frozen=True)
class LandauCoefficients:
    """Regularized pair coefficients: the |z|^gamma scalar factors are
    evaluated at max(|z|, reg_delta) while the vector parts keep z."""

    gamma: float
    reg_delta: float = 0.0

    def __post_init__(self):
        _check_gamma(self.gamma)
        if not (self.reg_delta >= 0.0):
            raise ParameterError("reg_delta must be >= 0")

    def _floored(self, Z):
        r = np.linalg.norm(Z, axis=-1)
        return np.maximum(r, self.reg_delta)

    def drift(self, Z):
        """b_delta for a (..., 3) array of separations."""
        rf = self._floored(Z)
        w = np.zeros_like(rf)
        alive = rf > 0.0
        w[alive] = rf[alive] ** self.gamma
        return -2.0 * w[..., None] * Z

    def noise(self, Z, dB):
        """sigma_delta(Z) @ dB for matching (..., 3) arrays."""
        rf = self._floored(Z)
        pref = np.zeros_like(rf)
        alive = rf > 0.0
        pref[alive] = rf[alive] ** (self.gamma / 2.0)
        z1, z2, z3 = Z[..., 0], Z[..., 1], Z[..., 2]
        b1, b2, b3 = dB[..., 0], dB[..., 1], dB[..., 2]
        out = np.stack([z2 * b1 - z3 * b2,
                        -z1 * b1 + z3 * b3,
                        z1 * b2 - z2 * b3], axis=-1)
        return pref[..., None] * out


@dataclass(frozen=True)
class LandauConfig:
    """Parameters of one Landau particle run."""

    gamma: float
    n: int
    dt: float
    T: float
    pairing: str = "subsampled"
    m: int = 64
    reg_delta: float = None
    seed: int = 0

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.n < 2:
            raise ParameterError("need at least 2 particles")
        if not (self.dt > 0.0):
            raise ParameterError("dt must be positive")
        if not (self.T >= 0.0):
            raise ParameterError("T must be >= 0")
        if self.pairing not in _PAIRINGS:
            raise ParameterError(f"pairing must be one of {_PAIRINGS}")
        if self.pairing == "full" and self.n > _FULL_PAIRING_CAP:
            raise ParameterError(
                f"full pairing is for validation runs with N <= {_FULL_PAIRING_CAP}")
        if self.m < 1:
            raise ParameterError("m must be >= 1")
        if self.reg_delta is not None and not (self.reg_delta >= 0.0):
            raise ParameterError("reg_delta must be >= 0")


def _resolve_delta(config, cloud):
    """Default regularization floor: 1e-3 of the cloud's RMS speed."""
    if config.reg_delta is not None:
        return float(config.reg_delta)
    return 1e-3 * np.sqrt(cloud.m2())


def _step_full(X, coeffs, dt, rng, block=256):
    n = X.shape[0]
    drift = np.empty_like(X)
    noise = np.empty_like(X)
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        Z = X[lo:hi, None, :] - X[None, :, :]
        dB = rng.normal(scale=np.sqrt(dt), size=Z.shape)
        drift[lo:hi] = coeffs.drift(Z).sum(axis=1)
        noise[lo:hi] = coeffs.noise(Z, dB).sum(axis=1)
    scale = n - 1
    return X + (dt / scale) * drift + noise / np.sqrt(scale), n * (n - 1)


def _step_subsampled(X, coeffs, dt, m, rng):
    n = X.shape[0]
    J = rng.integers(0, n - 1, size=(n, m))
    J[J >= np.arange(n)[:, None]] += 1
    Z = X[:, None, :] - X[J]
    dB = rng.normal(scale=np.sqrt(dt), size=Z.shape)
    drift = coeffs.drift(Z).sum(axis=1)
    noise = coeffs.noise(Z, dB).sum(axis=1)
    return X + (dt / m) * drift + noise / np.sqrt(m), n * m


def _step_conservative(X, coeffs, dt, m, rng):
    n = X.shape[0]
    half = n // 2
    drift = np.zeros_like(X)
    noise = np.zeros_like(X)
    for _ in range(m):
        perm = rng.permutation(n)
        a, b = perm[:2 * half:2], perm[1:2 * half:2]
        Z = X[a] - X[b]
        dB = rng.normal(scale=np.sqrt(dt), size=(half, 3))
        db = coeffs.drift(Z)
        ns = coeffs.noise(Z, dB)
        drift[a] += db
        drift[b] -= db
        noise[a] += ns
        noise[b] -= ns
    # uniform 1/m normalization keeps the matched pair's increments exactly
    # antisymmetric (an unmatched particle in an odd-N round just idles)
    return X + (dt / m) * drift + noise / np.sqrt(m), m * half


def step(cloud, config, rng):
    """One Euler-Maruyama step; returns a new cloud dt later.

    Raises InstabilityError (with the offending particle indices) if any
    velocity becomes non-finite.
    """
    if cloud.n != config.n:
        raise ParameterError(
            f"cloud has {cloud.n} particles but config says {config.n}")
    coeffs = LandauCoefficients(config.gamma, _resolve_delta(config, cloud))
    X = cloud.velocities
    # overflow/invalid intermediates surface as the non-finite check below
    with np.errstate(over="ignore", invalid="ignore"):
        if config.pairing == "full":
            Xn, events = _step_full(X, coeffs, config.dt, rng)
        elif config.pairing == "subsampled":
            Xn, events = _step_subsampled(X, coeffs, config.dt, config.m, rng)
        else:
            Xn, events = _step_conservative(X, coeffs, config.dt, config.m, rng)
    bad = ~np.all(np.isfinite(Xn), axis=1)
    if np.any(bad):
        idx = np.where(bad)[0]
        raise InstabilityError(
            f"non-finite velocities after step {cloud.step_index} "
            f"(first indices {idx[:8].tolist()})", indices=idx)
    return ParticleCloud(velocities=Xn, time=cloud.time + config.dt,
                         step_index=cloud.step_index + 1,
                         events=cloud.events + events)


def run(config, initial_cloud, schedule=None):
    """Run to the horizon, snapshotting at the scheduled times.

    The regularization floor defaults to 1e-3 of the INITIAL cloud's RMS
    speed and is then held fixed for the whole run.  Each step consumes its
    own deterministic substream keyed by (seed, step index), so a run is
    reproducible regardless of snapshot schedule.
    """
    if initial_cloud.n != config.n:
        raise ParameterError(
            f"cloud has {initial_cloud.n} particles but config says {config.n}")
    resolved = replace(config, reg_delta=_resolve_delta(config, initial_cloud))

    def _advance(cloud):
        rng = rngstreams.stream(resolved.seed, "landau-step", cloud.step_index)
        return step(cloud, resolved, rng)

    return run_schedule(initial_cloud, _advance, resolved.T, resolved.dt,
                        schedule)
