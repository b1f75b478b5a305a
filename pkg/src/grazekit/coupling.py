"""Coupled Boltzmann/Landau slab dynamics, subdivision builder, rate sweeps.

The coupled integrator advances a Boltzmann-family particle system V and a
Landau particle system Y through the slabs of a time subdivision, sharing
randomness so that the paired-L2 distance sqrt(mean |V_i - Y_i|^2) isolates
the grazing-limit error instead of Monte Carlo noise:

* level "common":   both sides use the same companion index per (particle,
  slab), with coefficients frozen at the slab start.
* level "gaussian": additionally, the Landau diffusion increment per
  (particle, slab) is built from the same draws as the Boltzmann jump
  aggregate: the window angle sums Sum(theta cos phi), Sum(theta sin phi),
  standardized, drive the transverse band of per-direction variance
  Delta * Phi * (pi/4) int_window theta^2 beta (the r_eta-scaled Landau
  tensor, an exact moment match of the linearized jump aggregate), and when
  the kernel carries angular mass above the window top eta (Coulomb) the
  remaining Landau band (pi/4) int_{theta>eta} theta^2 beta is driven by
  the standardized above-eta jump sums -- the Landau increment keeps its
  full diffusion covariance while staying maximally correlated with the
  Boltzmann path.

Both sides integrate their mean drift with the frozen-coefficient
exponential map (relative-velocity contraction e^{-k Phi Delta}) and add
centered fluctuations on top; this compensated-martingale form stays stable
even for near-coincident pairs whose within-slab collision count is huge.
The V side additionally carries its longitudinal fluctuation, the
non-Gaussian shape of the sampled above-eta jumps and the exact-versus-
linearized angle geometry; those have no Landau counterpart and are part of
the measured gap.  A Tanaka azimuth rotation phi0 aligns the Landau pair
frame with the Boltzmann pair frame when the toggle is on.  Per-pair
candidate counts above normal_fallback switch to their conditional Gaussian
aggregate (same moments), keeping cost bounded at small eps.
"""

import functools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from . import rngstreams
from .boltzmann import BoltzmannConfig, _theta_min_eff
from .errors import InstabilityError, ParameterError
from .geometry import frame, phi_zero
from .kernels import CoulombKernel, GrazingKernel, r_eta, residual_k
from .landau import LandauConfig
from .metrics import w2_exact
from .particles import ParticleCloud, sample_initial

__all__ = ["Subdivision", "build_subdivision", "CouplingPlan", "CoupledResult",
           "coupled_run", "SweepReport", "rate_sweep"]


# ---------------------------------------------------------------------------
# subdivision
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Subdivision:
    """Time grid a_0 < ... < a_K = T with a_0 < 1/n and every gap in
    (1/(4n), 1/n), each interior node a near-minimizer of h in its cell."""

    grid: np.ndarray
    n: int
    h_values: np.ndarray

    @property
    def T(self):
        return float(self.grid[-1])

    @property
    def widths(self):
        return np.diff(self.grid)

    def riemann_sum(self):
        """Sum over cells of (a_{i+1} - a_i) h(a_i)."""
        return float(np.sum(self.widths * self.h_values[:-1]))

    def slab_bounds(self):
        """All integration slabs including the leading [0, a_0]."""
        edges = np.concatenate(([0.0], self.grid))
        return list(zip(edges[:-1], edges[1:]))


def _sample_h(h, pts):
    vals = np.asarray(h(pts), dtype=float)
    if vals.shape != pts.shape:
        vals = np.array([float(h(p)) for p in pts], dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals < 0.0):
        raise ParameterError("h must be finite and >= 0 on (0, T)")
    return vals


def build_subdivision(h, T, n, samples_per_cell=32):
    """Near-minimizing time grid for the weight profile h.

    Nodes a_i are the argmin of h over samples_per_cell midpoints of the
    cell (i/(2n), (2i+1)/(4n)]; the last cell is clipped so the final gap
    to T also lands in (1/(4n), 1/n).  Needs T > 1/(4n).
    """
    if not (T > 0.0 and np.isfinite(T)):
        raise ParameterError("T must be positive and finite")
    if n < 1 or int(n) != n:
        raise ParameterError("n must be a positive integer")
    if samples_per_cell < 1:
        raise ParameterError("samples_per_cell must be >= 1")
    n = int(n)
    if T <= 1.0 / (4.0 * n):
        raise ParameterError(
            f"T={T} too small for resolution n={n}: need T > 1/(4n)")
    K = max(1, int(math.floor(2.0 * n * T)))
    nodes = []
    for i in range(K):
        lo, hi = i / (2.0 * n), (2 * i + 1) / (4.0 * n)
        if i == K - 1:
            lo, hi = max(lo, T - 1.0 / n), min(hi, T - 1.0 / (4.0 * n))
        pts = lo + (hi - lo) * (np.arange(samples_per_cell) + 0.5) \
            / samples_per_cell
        vals = _sample_h(h, pts)
        nodes.append(pts[int(np.argmin(vals))])
    grid = np.array(nodes + [T])
    h_values = _sample_h(h, grid)
    gaps = np.diff(grid)
    if not (grid[0] < 1.0 / n and np.all(gaps > 1.0 / (4.0 * n))
            and np.all(gaps < 1.0 / n)):
        raise ParameterError("subdivision construction violated its gap "
                             "invariants (T and n are incompatible)")
    return Subdivision(grid=grid, n=n, h_values=h_values)


# ---------------------------------------------------------------------------
# angular window moments
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=256)
def _window_moments(kernel, lo, hi):
    """beta-integrals over [lo, hi]: mass (closed-form from the tail), and
    quadratures of (1-cos), (1-cos)^2, theta^2 against beta."""
    mass = float(np.asarray(kernel.tail.H(lo))) - \
        float(np.asarray(kernel.tail.H(hi)))

    def q(f):
        val, _ = integrate.quad(lambda t: f(t) * float(kernel.beta(t)),
                                lo, hi, limit=200)
        return val

    return {
        "mass": mass,
        "one_cos": q(lambda t: 1.0 - math.cos(t)),
        "one_cos_sq": q(lambda t: (1.0 - math.cos(t)) ** 2),
        "theta_sq": q(lambda t: t * t),
        "sin_sq": q(lambda t: math.sin(t) ** 2),
    }


# ---------------------------------------------------------------------------
# coupling plan
# ---------------------------------------------------------------------------

_LEVELS = ("common", "gaussian")


@dataclass(frozen=True)
class CouplingPlan:
    """Shared-randomness recipe for one coupled run.

    Stream consumption order per slab k is fixed: companion_stream(k) yields
    the n companion indices; jump_stream(k) yields, in order, the window
    Poisson counts, the bulk angle/azimuth uniforms, the Gaussian-fallback
    normals, then (if the kernel has mass above eta) the large-angle counts
    and their angle/azimuth uniforms; gauss_stream(k) yields the Landau
    normals used only at level "common".  Both sides therefore consume
    identical companion indices and base draws in identical order.

    eta: top of the matching window (defaults to the kernel support top).
    truncation_m: companions with |Y| >= M contribute no Landau diffusion.
    """

    seed: int
    subdivision: Subdivision
    tanaka: bool = True
    level: str = "gaussian"
    eta: float = None
    truncation_m: float = math.inf
    normal_fallback: int = 100_000

    def __post_init__(self):
        if self.level not in _LEVELS:
            raise ParameterError(f"level must be one of {_LEVELS}")
        if self.eta is not None and not (self.eta > 0.0):
            raise ParameterError("eta must be positive")
        if not (self.truncation_m > 0.0):
            raise ParameterError("truncation_m must be positive")
        if self.normal_fallback < 0:
            raise ParameterError("normal_fallback must be >= 0")

    def companion_stream(self, k):
        return rngstreams.stream(self.seed, "slab-comp", k)

    def jump_stream(self, k):
        return rngstreams.stream(self.seed, "slab-jump", k)

    def gauss_stream(self, k):
        return rngstreams.stream(self.seed, "slab-gauss", k)


# ---------------------------------------------------------------------------
# coupled integrator
# ---------------------------------------------------------------------------

@dataclass
class CoupledResult:
    times: np.ndarray
    paired_l2: np.ndarray
    w2: np.ndarray
    m2_boltz: np.ndarray
    m2_landau: np.ndarray
    boltz_cloud: ParticleCloud
    landau_cloud: ParticleCloud
    events: int

    @property
    def sup_paired_l2(self):
        return float(np.max(self.paired_l2))


def _angle_sums(rng, counts, kernel, z_lo, mass, n):
    """Per-particle sums of (1-cos th), sin th cos/sin ph, th cos/sin ph
    over `counts` draws from the window tail law; z in [z_lo, z_lo+mass]."""
    owners = np.repeat(np.arange(n), counts)
    tot = owners.size
    th = np.asarray(kernel.tail.G(z_lo + mass * rng.random(tot)))
    ph = rng.uniform(0.0, 2.0 * np.pi, tot)
    sin_t, cos_p, sin_p = np.sin(th), np.cos(ph), np.sin(ph)

    def acc(w):
        # bincount yields int64 when owners is empty; keep float semantics
        return np.bincount(owners, weights=w,
                           minlength=n).astype(np.float64, copy=False)

    return (acc(1.0 - np.cos(th)), acc(sin_t * cos_p), acc(sin_t * sin_p),
            acc(th * cos_p), acc(th * sin_p))


def coupled_run(boltz_config, landau_config, plan, initial_cloud, *,
                w2_mode="none"):
    """Run both systems through the plan's slabs from a shared initial cloud.

    Returns the paired-L2 distance at t=0 and at every slab boundary, plus
    m2 of both sides; w2_mode "terminal" adds the exact assignment W2 at the
    final time, "all" at every boundary ("none" leaves NaN).
    """
    if w2_mode not in ("none", "terminal", "all"):
        raise ParameterError("w2_mode must be 'none', 'terminal' or 'all'")
    kernel = boltz_config.kernel
    n = initial_cloud.n
    if boltz_config.n != n or landau_config.n != n:
        raise ParameterError("both configs must match the initial cloud size")
    if abs(kernel.gamma - landau_config.gamma) > 1e-12:
        raise ParameterError(
            f"kernel gamma {kernel.gamma} != Landau gamma {landau_config.gamma}")
    sub = plan.subdivision
    if abs(boltz_config.T - sub.T) > 1e-9 or abs(landau_config.T - sub.T) > 1e-9:
        raise ParameterError("config horizons must equal the subdivision end")
    slabs = sub.slab_bounds()
    min_width = min(b - a for a, b in slabs)
    if boltz_config.dt > min_width * (1 + 1e-9) or \
            landau_config.dt > min_width * (1 + 1e-9):
        raise ParameterError("config dt is coarser than the subdivision "
                             "slabs; shrink dt or lower n")

    sup_lo, sup_hi = kernel.support
    lo_win = max(_theta_min_eff(boltz_config), sup_lo)
    eta = kernel.support[1] if plan.eta is None else float(plan.eta)
    eta = min(eta, sup_hi)
    if not lo_win < eta:
        raise ParameterError(f"matching window [{lo_win}, {eta}] is empty")

    mom = _window_moments(kernel, lo_win, eta)
    mass_w, mu1 = mom["mass"], mom["one_cos"] / mom["mass"]
    var1 = max(mom["one_cos_sq"] / mom["mass"] - mu1 * mu1, 0.0)
    e_th2 = mom["theta_sq"] / mom["mass"]
    r_eta_win = 0.25 * np.pi * mom["theta_sq"]
    z_hi = float(np.asarray(kernel.tail.H(eta)))  # window z in [z_hi, z_hi+mass_w]
    mass_lg = z_hi  # tail mass above eta (H vanishes at the support top)
    if mass_lg > 1e-14:
        mom_lg = _window_moments(kernel, eta, sup_hi)
        mu1_lg, one_cos_lg = mom_lg["one_cos"] / mom_lg["mass"], \
            mom_lg["one_cos"]
        r_tail = 0.25 * np.pi * mom_lg["theta_sq"]
        sin2_lg = mom_lg["sin_sq"]
    else:
        mass_lg, mu1_lg, one_cos_lg = 0.0, 0.0, 0.0
        r_tail, sin2_lg = 0.0, 0.0
    k_res = residual_k(kernel, lo_win)
    # total (1-cos) drift mass: compensated window + large jumps + sub-window
    k_full = np.pi * (mom["one_cos"] + one_cos_lg) + k_res

    v_floor = boltz_config.v_floor
    if v_floor is None:
        v_floor = 1e-3 * np.sqrt(initial_cloud.m2())
    if not isinstance(kernel, CoulombKernel) and not v_floor > 0.0:
        raise ParameterError("soft/grazing coupling needs v_floor > 0 "
                             "(the collision rate is unbounded otherwise)")
    delta = landau_config.reg_delta
    if delta is None:
        delta = 1e-3 * np.sqrt(initial_cloud.m2())
    gamma = landau_config.gamma
    m_trunc = plan.truncation_m

    V = initial_cloud.velocities.copy()
    Y = initial_cloud.velocities.copy()
    times = [0.0]
    dists = [0.0]
    m2b, m2l = [initial_cloud.m2()], [initial_cloud.m2()]
    w2s = [0.0 if w2_mode == "all" else np.nan]
    events = 0

    for k, (t0, t1) in enumerate(slabs):
        delta_t = t1 - t0
        comp = plan.companion_stream(k).integers(0, n - 1, size=n)
        comp += comp >= np.arange(n)
        rng_j = plan.jump_stream(k)

        X = V - V[comp]
        Z = Y - Y[comp]
        rX = np.linalg.norm(X, axis=1)
        rZ = np.linalg.norm(Z, axis=1)
        phi_v = np.asarray(kernel.phi(np.maximum(rX, v_floor)), dtype=float)
        phi_l = np.maximum(rZ, delta) ** gamma

        lam = delta_t * phi_v * 2.0 * np.pi * mass_w
        counts = rng_j.poisson(lam)
        fb = counts > plan.normal_fallback
        events += int(counts.sum())
        s1, s2, s3, t2, t3 = _angle_sums(
            rng_j, np.where(fb, 0, counts), kernel, z_hi, mass_w, n)
        if np.any(fb):
            g = rng_j.standard_normal((int(fb.sum()), 3))
            kf = counts[fb].astype(float)
            s1[fb] = kf * mu1 + np.sqrt(kf * var1) * g[:, 0]
            sd_th = np.sqrt(kf * e_th2 / 2.0)
            # sin(theta) ~ theta in the fallback regime: reuse the same
            # normals so the matched pair stays perfectly correlated
            t2[fb], t3[fb] = sd_th * g[:, 1], sd_th * g[:, 2]
            s2[fb], s3[fb] = t2[fb], t3[fb]
        # center the window longitudinal sum by its compensator
        s1 -= lam * mu1

        l2 = l3 = None
        if mass_lg > 0.0:
            lam_lg = delta_t * phi_v * 2.0 * np.pi * mass_lg
            counts_lg = rng_j.poisson(lam_lg)
            events += int(counts_lg.sum())
            l1, l2, l3, _, _ = _angle_sums(
                rng_j, counts_lg, kernel, 0.0, mass_lg, n)
            s1 += l1 - lam_lg * mu1_lg
            s2 += l2
            s3 += l3

        okX = rX > 0.0
        okZ = rZ > 0.0
        both = okX & okZ
        phi0 = np.zeros(n)
        if plan.tanaka and np.any(both):
            phi0[both] = phi_zero(X[both], Z[both])

        # --- V side: exponential mean drift + centered fluctuations
        contract_v = np.exp(-k_full * phi_v * delta_t)
        V_new = V[comp] + contract_v[:, None] * X
        if np.any(okX):
            i_x, j_x = frame(X[okX])
            V_new[okX] += (-0.5 * s1[okX, None] * X[okX]
                           + 0.5 * (s2[okX, None] * i_x + s3[okX, None] * j_x))

        # --- Y side: exponential drift + transverse diffusion whose total
        # per-direction variance is Delta*Phi_L*(pi/4) int theta^2 beta over
        # [theta_min, support top]: the window band (r_eta_win) is driven by
        # the matched window draws, the above-eta band (r_tail) by the
        # standardized large-jump aggregate (or fresh normals off-level)
        contract_l = np.exp(-2.0 * phi_l * delta_t)
        Y_new = Y[comp] + contract_l[:, None] * Z
        if plan.level == "gaussian":
            sig_t = 2.0 * np.sqrt(delta_t * phi_v * r_eta_win)
            u2, u3 = t2 / sig_t, t3 / sig_t
            if mass_lg > 0.0:
                sig_lg = np.sqrt(delta_t * phi_v * np.pi * sin2_lg)
                ut2, ut3 = l2 / sig_lg, l3 / sig_lg
        else:
            g = plan.gauss_stream(k).standard_normal((n, 4))
            u2, u3 = g[:, 0], g[:, 1]
            if mass_lg > 0.0:
                ut2, ut3 = g[:, 2], g[:, 3]
        # Tanaka: the Landau frame takes the azimuth offset phi0, i.e. the
        # kick coordinates rotate by R(phi0) relative to the Boltzmann draws
        cos0, sin0 = np.cos(phi0), np.sin(phi0)
        u2r = cos0 * u2 - sin0 * u3
        u3r = sin0 * u2 + cos0 * u3
        diff_ok = okZ & (np.linalg.norm(Y[comp], axis=1) < m_trunc)
        if np.any(diff_ok):
            i_z, j_z = frame(Z[diff_ok])
            amp = np.sqrt(delta_t * phi_l[diff_ok] * r_eta_win)
            kick2, kick3 = amp * u2r[diff_ok], amp * u3r[diff_ok]
            if mass_lg > 0.0:
                amp_t = np.sqrt(delta_t * phi_l[diff_ok] * r_tail)
                kick2 += amp_t * (cos0 * ut2 - sin0 * ut3)[diff_ok]
                kick3 += amp_t * (sin0 * ut2 + cos0 * ut3)[diff_ok]
            Y_new[diff_ok] += kick2[:, None] * i_z + kick3[:, None] * j_z

        bad = ~(np.all(np.isfinite(V_new), axis=1)
                & np.all(np.isfinite(Y_new), axis=1))
        if np.any(bad):
            idx = np.where(bad)[0]
            raise InstabilityError(
                f"non-finite state after slab {k} (first indices "
                f"{idx[:8].tolist()})", indices=idx)
        V, Y = V_new, Y_new

        times.append(t1)
        dists.append(float(np.sqrt(np.mean(np.sum((V - Y) ** 2, axis=1)))))
        m2b.append(float(np.mean(np.sum(V * V, axis=1))))
        m2l.append(float(np.mean(np.sum(Y * Y, axis=1))))
        last = k == len(slabs) - 1
        if w2_mode == "all" or (w2_mode == "terminal" and last):
            w2s.append(w2_exact(V, Y))
        else:
            w2s.append(np.nan)

    return CoupledResult(
        times=np.array(times), paired_l2=np.array(dists), w2=np.array(w2s),
        m2_boltz=np.array(m2b), m2_landau=np.array(m2l),
        boltz_cloud=ParticleCloud(velocities=V, time=sub.T,
                                  step_index=len(slabs), events=events),
        landau_cloud=ParticleCloud(velocities=Y, time=sub.T,
                                   step_index=len(slabs)),
        events=events)


# ---------------------------------------------------------------------------
# eps sweep
# ---------------------------------------------------------------------------

def _default_h(s):
    return np.asarray(s, dtype=float) ** -0.5


@dataclass
class SweepReport:
    family: str
    eps_list: tuple
    seeds: tuple
    p: int
    distances: np.ndarray      # (n_eps, n_seeds) terminal paired-L2
    sup_distances: np.ndarray  # (n_eps, n_seeds) sup over slab boundaries
    w2: np.ndarray             # (n_eps, n_seeds), NaN when not computed
    m2_drift_boltz: np.ndarray
    m2_drift_landau: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    slope: float
    slope_stderr: float
    intercept: float
    proven_exponent: float
    conjectured_exponent: float
    verdict: str
    series: dict               # (eps, seed) -> CoupledResult


def _fit_line(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(x.size - 2, 1)
    sxx = np.sum((x - x.mean()) ** 2)
    return float(slope), float(np.sqrt(np.sum(resid ** 2) / dof / sxx)), \
        float(intercept)


def rate_sweep(boltz_template, landau_template, eps_list, seeds, *, p=5,
               tanaka=True, level="gaussian", w2_mode="none", h_profile=None,
               normal_fallback=100_000):
    """Coupled-distance sweep over a decreasing eps grid.

    Per (eps, seed): rebuild the kernel at eps, derive the window eta, the
    subdivision resolution n, the diffusion truncation M and the floors from
    the recipe with moment exponent p, run the coupled integrator, and
    record the terminal paired-L2.  Soft families fit log(distance) against
    log(eps); Coulomb against log(1/log(1/eps)).  The verdict is
    "decreasing" when the mean distances strictly decrease along the grid
    (Coulomb: do not increase beyond 2 paired standard errors), otherwise
    "inconclusive".
    """
    eps_list = tuple(float(e) for e in eps_list)
    seeds = tuple(int(s) for s in seeds)
    if len(eps_list) < 4 or not all(a > b for a, b in
                                    zip(eps_list, eps_list[1:])):
        raise ParameterError("need >= 4 strictly decreasing eps values")
    if len(seeds) < 10 or len(set(seeds)) != len(seeds):
        raise ParameterError("need >= 10 distinct seeds")
    kernel0 = boltz_template.kernel
    if isinstance(kernel0, GrazingKernel):
        family = "grazing"
    elif isinstance(kernel0, CoulombKernel):
        family = "coulomb"
    else:
        raise ParameterError("rate sweeps need a grazing or coulomb kernel")
    T = boltz_template.T
    if abs(landau_template.T - T) > 1e-12:
        raise ParameterError("template horizons differ")
    n = boltz_template.n
    if landau_template.n != n:
        raise ParameterError("template particle counts differ")
    h = _default_h if h_profile is None else h_profile
    expo = 2.0 * p / (2.0 * p + 3.0)

    clouds = {s: sample_initial({"name": "isotropic-gaussian", "sigma2": 1.0},
                                n, rngstreams.stream(s, "coupled-init"))
              for s in seeds}

    shape = (len(eps_list), len(seeds))
    dist = np.empty(shape)
    sup_dist = np.empty(shape)
    w2 = np.full(shape, np.nan)
    drift_b = np.empty(shape)
    drift_l = np.empty(shape)
    series = {}
    for i, eps in enumerate(eps_list):
        if family == "grazing":
            kern = GrazingKernel(gamma=kernel0.gamma, nu=kernel0.nu, eps=eps)
            eta = kern.support[1]
            # degenerate-bound regime: no angular mass above eta, r_eta = 1
            if abs(r_eta(kern, eta) - 1.0) > 1e-8:
                raise ParameterError("grazing sweep window must exhaust the "
                                     "kernel support with r_eta = 1")
            small = eps
        else:
            kern = CoulombKernel(eps=eps)  # h_eps = eps schedule
            eta = min(1.0 / math.log(1.0 / eps), kern.support[1])
            small = 1.0 / math.log(1.0 / eps)
        n_sub = max(1, round(small ** -expo))
        sub = build_subdivision(h, T, n_sub)
        dtv = 0.5 * min(b - a for a, b in sub.slab_bounds())
        for j, s in enumerate(seeds):
            cloud = clouds[s]
            m2_0 = cloud.m2()
            m_trunc = math.sqrt(2.0 * m2_0) * small ** (-2.0 / (2.0 * p + 3.0)) \
                if family == "grazing" else \
                math.sqrt(2.0 * m2_0) * math.log(1.0 / eps) ** (2.0 / (2.0 * p + 3.0))
            if family == "coulomb":
                v_floor = boltz_template.v_floor
                reg_delta = landau_template.reg_delta
                if v_floor is None:
                    v_floor = 0.05 * math.sqrt(m2_0)
                if reg_delta is None:
                    reg_delta = 0.05 * math.sqrt(m2_0)
            else:
                v_floor = boltz_template.v_floor
                reg_delta = landau_template.reg_delta
            # theta_min=None lets the kernel defaults apply: eps/64 for the
            # grazing family, the support bottom eps for Coulomb
            bc = replace(boltz_template, kernel=kern, dt=dtv,
                         theta_min=None, v_floor=v_floor, seed=s)
            lc = replace(landau_template, gamma=kern.gamma, dt=dtv,
                         reg_delta=reg_delta, seed=s)
            plan = CouplingPlan(seed=s, subdivision=sub, tanaka=tanaka,
                                level=level, eta=eta, truncation_m=m_trunc,
                                normal_fallback=normal_fallback)
            res = coupled_run(bc, lc, plan, cloud, w2_mode=w2_mode)
            series[(eps, s)] = res
            dist[i, j] = res.paired_l2[-1]
            sup_dist[i, j] = res.sup_paired_l2
            w2[i, j] = res.w2[-1]
            drift_b[i, j] = res.m2_boltz[-1] / m2_0 - 1.0
            drift_l[i, j] = res.m2_landau[-1] / m2_0 - 1.0

    means = dist.mean(axis=1)
    stderrs = dist.std(axis=1, ddof=1) / math.sqrt(len(seeds))
    if family == "grazing":
        x = np.log(np.asarray(eps_list))
        decreasing = bool(np.all(np.diff(means) < 0.0))
    else:
        x = np.log(1.0 / np.log(1.0 / np.asarray(eps_list)))
        diffs = np.diff(dist, axis=0)  # paired across seeds
        se = diffs.std(axis=1, ddof=1) / math.sqrt(len(seeds))
        decreasing = bool(np.all(diffs.mean(axis=1) <= 2.0 * se))
    slope, slope_se, intercept = _fit_line(x, np.log(means))
    return SweepReport(
        family=family, eps_list=eps_list, seeds=seeds, p=p,
        distances=dist, sup_distances=sup_dist, w2=w2,
        m2_drift_boltz=drift_b, m2_drift_landau=drift_l,
        means=means, stderrs=stderrs, slope=slope, slope_stderr=slope_se,
        intercept=intercept, proven_exponent=p / (2.0 * p + 3.0),
        conjectured_exponent=1.0,
        verdict="decreasing" if decreasing else "inconclusive",
        series=series)
