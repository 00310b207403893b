"""RSS ranging, multilateration, and iterative network localization.

Ranging inverts the monotone received-level-vs-distance curve of the
corresponding channel model; measurement noise is zero-mean Gaussian in
the dB domain. Localization proceeds in rounds: nodes fixed from at
least four references become references themselves ("promotion") until
no further node can be localized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from . import acoustic as ac
from . import optical as opt
from .errors import DegenerateGeometryError, DomainError
from .geometry import Deployment, FaceSet, link_table

TECHS = ("optical", "acoustic")
MIN_REFERENCES = 4
_REFINE_SWEEPS = 2

_D_MIN_OPTICAL = 1e-3
_D_MAX_OPTICAL = 1e6
_D_MIN_ACOUSTIC = 1.0
_D_MAX_ACOUSTIC = 1e7
_BISECTION_ITERS = 80


def _q_inverse(p: float) -> float:
    """Inverse Gaussian tail: x with Q(x) = p."""
    return NormalDist().inv_cdf(1.0 - p)


@dataclass(frozen=True)
class RangeMeasurement:
    observer: int
    reference: int
    estimated_distance: float
    tech: str
    noise_sigma_db: float
    clamped: bool = False

    def __post_init__(self):
        if self.estimated_distance <= 0:
            raise DomainError("estimated distance must be positive")


@dataclass(frozen=True)
class LocalizationResult:
    estimates: dict  # node id -> np.ndarray(3,)
    localized_fraction: float
    rmse: float  # over localized nodes; nan if none localized
    rmse_inclusive: float  # unlocalized nodes scored at the volume center
    rounds: int = 0


def optical_level_db(d: float | np.ndarray, gain: float | np.ndarray, water: opt.WaterType):
    """Received optical level in dBW at distance d for a link gain G."""
    ln10 = math.log(10.0)
    return (
        10.0 * np.log10(gain)
        - (10.0 * water.extinction_c / ln10) * d
        - 20.0 * np.log10(d)
    )


def acoustic_level_db(d: float | np.ndarray, params: ac.AcousticParams):
    """Received acoustic level in dB re uPa at distance d."""
    a = ac.thorp_absorption(params.frequency)
    return (
        params.source_level
        - 10.0 * params.spreading_exponent * np.log10(d)
        - (np.asarray(d) / 1000.0) * a
    )


def measure_rss(
    true_distance: float,
    tech: str,
    *,
    gain: float | None = None,
    water: opt.WaterType | None = None,
    aco_params: ac.AcousticParams | None = None,
    noise_sigma_db: float = 0.0,
    rng: np.random.Generator | None = None,
    noise_db: float | None = None,
) -> float:
    """Noisy received level in dB for a feasible link at the true distance.

    For optical links `gain` is the distance-independent link prefactor
    (see optical.link_gain); a zero gain means the link is out of beam and
    no measurement exists. Noise is either drawn from `rng` or passed
    explicitly via `noise_db`.
    """
    if tech == "optical":
        if gain is None or water is None:
            raise DomainError("optical measurement needs a link gain and a water type")
        if gain <= 0.0:
            raise DomainError("link is out of beam; no optical measurement")
        level = float(optical_level_db(true_distance, gain, water))
    elif tech == "acoustic":
        if aco_params is None:
            raise DomainError("acoustic measurement needs acoustic parameters")
        if true_distance < _D_MIN_ACOUSTIC:
            raise DomainError("acoustic ranging needs distance >= 1 m")
        level = float(acoustic_level_db(true_distance, aco_params))
    else:
        raise DomainError(f"unknown ranging tech {tech!r}")
    if noise_db is None:
        noise_db = float(rng.normal(0.0, noise_sigma_db)) if rng is not None and noise_sigma_db > 0 else 0.0
    return level + noise_db


def _bisect_invert(rss_db: np.ndarray, model, lo: float, hi: float):
    """Invert a monotone-decreasing dB-level model on each array entry."""
    rss_db = np.asarray(rss_db, dtype=float)
    lo_a = np.full(rss_db.shape, lo)
    hi_a = np.full(rss_db.shape, hi)
    clamped = model(np.full(rss_db.shape, lo)) < rss_db
    for _ in range(_BISECTION_ITERS):
        mid = 0.5 * (lo_a + hi_a)
        too_strong = model(mid) > rss_db  # level still above target: true d is farther
        lo_a = np.where(too_strong, mid, lo_a)
        hi_a = np.where(too_strong, hi_a, mid)
    d = 0.5 * (lo_a + hi_a)
    return np.where(clamped, lo, d), clamped


def invert_range(
    rss_db: float,
    tech: str,
    *,
    gain: float | None = None,
    water: opt.WaterType | None = None,
    aco_params: ac.AcousticParams | None = None,
    with_flag: bool = False,
):
    """Distance solving the channel model for the observed level.

    Levels above the model's value at the minimum range are clamped to
    that range; pass with_flag=True to also receive the clamp indicator.
    """
    if tech == "optical":
        if gain is None or water is None or gain <= 0.0:
            raise DomainError("optical inversion needs a positive link gain and a water type")
        d, clamped = _bisect_invert(
            np.array(rss_db), lambda x: optical_level_db(x, gain, water), _D_MIN_OPTICAL, _D_MAX_OPTICAL
        )
    elif tech == "acoustic":
        if aco_params is None:
            raise DomainError("acoustic inversion needs acoustic parameters")
        d, clamped = _bisect_invert(
            np.array(rss_db), lambda x: acoustic_level_db(x, aco_params), _D_MIN_ACOUSTIC, _D_MAX_ACOUSTIC
        )
    else:
        raise DomainError(f"unknown ranging tech {tech!r}")
    d = float(d)
    return (d, bool(clamped)) if with_flag else d


def multilaterate(
    ref_positions: np.ndarray,
    distances: np.ndarray,
    weights: np.ndarray | None = None,
    max_iter: int = 60,
    tol: float = 1e-6,
    return_converged: bool = False,
):
    """Position from >= 4 (reference position, distance) pairs.

    Difference-of-spheres linearization seeds a Gauss-Newton refinement of
    the nonlinear range residuals. Coplanar or otherwise rank-deficient
    reference geometry raises DegenerateGeometryError.
    """
    x = np.asarray(ref_positions, dtype=float)
    d = np.asarray(distances, dtype=float)
    if x.ndim != 2 or x.shape[1] != 3 or len(x) != len(d):
        raise DomainError("need matching (k, 3) positions and (k,) distances")
    if len(x) < MIN_REFERENCES:
        raise DomainError(f"need at least {MIN_REFERENCES} references, got {len(x)}")

    a_mat = 2.0 * (x[1:] - x[0])
    b_vec = (d[0] ** 2 - d[1:] ** 2) + (np.sum(x[1:] ** 2, axis=1) - np.sum(x[0] ** 2))
    s = np.linalg.svd(a_mat, compute_uv=False)
    if s[-1] <= max(s[0], 1.0) * 1e-9:
        raise DegenerateGeometryError("reference positions are (nearly) coplanar")
    p = np.linalg.lstsq(a_mat, b_vec, rcond=None)[0]

    w = np.ones(len(x)) if weights is None else np.asarray(weights, dtype=float)

    def cost(q):
        delta = q - x
        res = np.sqrt(np.einsum("ij,ij->i", delta, delta)) - d
        return float(w @ (res * res))

    converged = False
    current = cost(p)
    for _ in range(max_iter):
        delta = p - x
        norms = np.maximum(np.sqrt(np.einsum("ij,ij->i", delta, delta)), 1e-12)
        r = norms - d
        jac = delta / norms[:, None]
        jw = jac * w[:, None]
        try:
            step = np.linalg.solve(jw.T @ jac, -(jw.T @ r))
        except np.linalg.LinAlgError:
            raise DegenerateGeometryError("normal equations are singular") from None
        # backtrack on overshoot so noisy fits settle instead of oscillating
        scale = 1.0
        for _ in range(8):
            q = p + scale * step
            trial_cost = cost(q)
            if trial_cost <= current:
                break
            scale *= 0.5
        p = q
        current = trial_cost
        if scale * math.sqrt(float(step @ step)) < tol:
            converged = True
            break
    if return_converged:
        return p, converged
    return p


def _estimate_covariance(p, x, d, w, weights_are_inv_var: bool):
    """Estimator covariance at the solution, for promoted-reference weighting."""
    delta = p[None, :] - x
    norms = np.maximum(np.linalg.norm(delta, axis=1), 1e-12)
    jac = delta / norms[:, None]
    jtj = (jac * w[:, None]).T @ jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        return np.full((3, 3), np.inf)
    if not weights_are_inv_var:
        dof = max(len(x) - 3, 1)
        cov = cov * float(np.sum(w * (norms - d) ** 2) / dof)
    return cov


def _range_error_sigma(d: np.ndarray, tech: str, sigma_db: float, water, aco_params):
    """First-order range error std dev implied by dB-domain noise."""
    ln10 = math.log(10.0)
    if tech == "optical":
        slope = (10.0 * water.extinction_c + 20.0 / np.maximum(d, 1e-6)) / ln10
    else:
        a = ac.thorp_absorption(aco_params.frequency)
        slope = 10.0 * aco_params.spreading_exponent / (np.maximum(d, 1.0) * ln10) + a / 1000.0
    return sigma_db / slope


def network_localize(
    dep: Deployment,
    mode: str,
    faces: FaceSet,
    rng: np.random.Generator,
    opt_params: opt.OpticalParams | None = None,
    water: opt.WaterType | None = None,
    aco_params: ac.AcousticParams | None = None,
    noise_sigma_db_optical: float = 1.0,
    noise_sigma_db_acoustic: float = 1.0,
    weighting: str = "uniform",
) -> LocalizationResult:
    """Iterative RSS localization of every node against anchors + promoted nodes.

    mode selects which ranging technologies contribute measurements
    ("acoustic", "optical", or "hybrid" pooling both). The noise draw per
    (reference, observer, tech) pair depends only on the generator state at
    entry, so matched generators yield matched noise across modes.
    """
    if mode not in ("acoustic", "optical", "hybrid"):
        raise DomainError(f"unknown localization mode {mode!r}")
    if weighting not in ("uniform", "inverse_variance"):
        raise DomainError(f"unknown weighting {weighting!r}")
    use_opt = mode in ("optical", "hybrid")
    use_aco = mode in ("acoustic", "hybrid")
    if use_opt and (opt_params is None or water is None):
        raise DomainError(f"mode {mode!r} needs optical parameters and a water type")
    if use_aco and aco_params is None:
        raise DomainError(f"mode {mode!r} needs acoustic parameters")

    anchors = dep.anchor_positions
    nodes = dep.node_positions
    n_anchors, n_nodes = len(anchors), len(nodes)
    if n_anchors < MIN_REFERENCES:
        raise DomainError(f"need at least {MIN_REFERENCES} anchors, got {n_anchors}")
    all_pos = np.vstack([anchors, nodes])  # reference index space: anchors first
    m = len(all_pos)

    # both matrices are always drawn so optical/acoustic/hybrid runs with
    # matched generators share per-pair noise exactly
    noise_opt = rng.standard_normal((m, n_nodes)) * noise_sigma_db_optical
    noise_aco = rng.standard_normal((m, n_nodes)) * noise_sigma_db_acoustic

    diff = all_pos[:, None, :] - all_pos[None, n_anchors:, :]
    d_true = np.linalg.norm(diff, axis=2)  # (m, n_nodes), ref -> observer node

    est_d = {}
    feasible = {}
    sigma_d = {}
    if use_opt:
        dist_full, in_beam_full, cos_full = link_table(all_pos, faces)
        in_beam = in_beam_full[:, n_anchors:]
        cos_sum = cos_full[:, n_anchors:]
        c0 = (
            opt_params.tx_power
            * opt_params.tx_efficiency
            * opt_params.rx_efficiency
            * opt_params.rx_aperture_area
            / (2.0 * math.pi * (1.0 - math.cos(faces.divergence_half_angle)))
        )
        gain = np.where(in_beam, c0 * cos_sum, np.nan)
        with np.errstate(invalid="ignore", divide="ignore"):
            pr = gain * np.exp(-water.extinction_c * d_true) / np.maximum(d_true, _D_MIN_OPTICAL) ** 2
            rss = optical_level_db(np.maximum(d_true, _D_MIN_OPTICAL), gain, water) + noise_opt
            # invert per-pair: level/gain relation is separable, solve for
            # the composite exp(-c d)/d^2 term instead of per-pair bisection
            comp_db = rss - 10.0 * np.log10(gain)
        d_est, _ = _bisect_invert(
            comp_db, lambda x: optical_level_db(x, 1.0, water), _D_MIN_OPTICAL, _D_MAX_OPTICAL
        )
        # a measurement exists only where the link is detectable: same FEC
        # BER gate as the connectivity graph, so localization coverage
        # tracks network connectivity
        pr_min = (
            math.sqrt(opt_params.noise_variance)
            * _q_inverse(opt_params.fec_ber_threshold)
            / opt_params.responsivity
        )
        with np.errstate(invalid="ignore"):
            detectable = in_beam & (pr >= pr_min)
        feasible["optical"] = detectable & (d_true >= _D_MIN_OPTICAL)
        est_d["optical"] = d_est
        sigma_d["optical"] = _range_error_sigma(
            d_est, "optical", max(noise_sigma_db_optical, 1e-12), water, None
        )
    if use_aco:
        okay = (d_true >= _D_MIN_ACOUSTIC) & (d_true <= ac.max_detectable_range(aco_params))
        rss = acoustic_level_db(np.maximum(d_true, _D_MIN_ACOUSTIC), aco_params) + noise_aco
        d_est, _ = _bisect_invert(
            rss, lambda x: acoustic_level_db(x, aco_params), _D_MIN_ACOUSTIC, _D_MAX_ACOUSTIC
        )
        feasible["acoustic"] = okay
        est_d["acoustic"] = d_est
        sigma_d["acoustic"] = _range_error_sigma(
            d_est, "acoustic", max(noise_sigma_db_acoustic, 1e-12), None, aco_params
        )

    ref_known = np.zeros(m, dtype=bool)
    ref_known[:n_anchors] = True
    ref_est_pos = all_pos.copy()  # anchors true; promoted nodes use estimates
    ref_var = np.zeros(m)  # per-axis position variance of each reference
    estimates: dict = {}
    rounds = 0

    while True:
        rounds += 1
        known_before = ref_known.copy()
        new_estimates = {}
        for j in range(n_nodes):
            if j in estimates:
                continue
            ref_idx, dists, var = [], [], []
            for tech in TECHS:
                if tech not in feasible:
                    continue
                mask = feasible[tech][:, j] & known_before
                mask[n_anchors + j] = False
                idx = np.nonzero(mask)[0]
                ref_idx.append(idx)
                dists.append(est_d[tech][idx, j])
                # promoted references carry their own position uncertainty
                var.append(sigma_d[tech][idx, j] ** 2 + ref_var[idx])
            if not ref_idx:
                continue
            idx = np.concatenate(ref_idx)
            if len(idx) < MIN_REFERENCES:
                continue
            dist_vec = np.concatenate(dists)
            var_vec = np.maximum(np.concatenate(var), 1e-12)
            weights = 1.0 / var_vec if weighting == "inverse_variance" else None
            try:
                pos, converged = multilaterate(
                    ref_est_pos[idx], dist_vec, weights=weights, return_converged=True
                )
            except DegenerateGeometryError:
                continue  # may become solvable once more references appear
            if not converged:
                continue
            w = weights if weights is not None else np.ones(len(idx))
            cov = _estimate_covariance(pos, ref_est_pos[idx], dist_vec, w, weights is not None)
            new_estimates[j] = (pos, float(np.trace(cov) / 3.0))
        if not new_estimates:
            break
        for j, (pos, pvar) in new_estimates.items():
            estimates[j] = pos
            ref_known[n_anchors + j] = True
            ref_est_pos[n_anchors + j] = pos
            ref_var[n_anchors + j] = pvar

    # refinement sweeps: nodes promoted early (few, poor references) are
    # re-solved against the full final reference set, so late-arriving
    # high-quality references improve early fixes instead of being ignored
    for _ in range(_REFINE_SWEEPS):
        if not estimates:
            break
        for j in sorted(estimates):
            ref_idx, dists, var = [], [], []
            for tech in TECHS:
                if tech not in feasible:
                    continue
                mask = feasible[tech][:, j] & ref_known
                mask[n_anchors + j] = False
                idx = np.nonzero(mask)[0]
                ref_idx.append(idx)
                dists.append(est_d[tech][idx, j])
                var.append(sigma_d[tech][idx, j] ** 2 + ref_var[idx])
            idx = np.concatenate(ref_idx)
            dist_vec = np.concatenate(dists)
            var_vec = np.maximum(np.concatenate(var), 1e-12)
            weights = 1.0 / var_vec if weighting == "inverse_variance" else None
            try:
                pos, converged = multilaterate(
                    ref_est_pos[idx], dist_vec, weights=weights, return_converged=True
                )
            except DegenerateGeometryError:
                continue
            if not converged:
                continue
            w = weights if weights is not None else np.ones(len(idx))
            cov = _estimate_covariance(pos, ref_est_pos[idx], dist_vec, w, weights is not None)
            estimates[j] = pos
            ref_est_pos[n_anchors + j] = pos
            ref_var[n_anchors + j] = float(np.trace(cov) / 3.0)

    localized = sorted(estimates)
    frac = len(localized) / n_nodes
    if localized:
        errs = np.array([np.linalg.norm(estimates[j] - nodes[j]) for j in localized])
        rmse = float(np.sqrt(np.mean(errs**2)))
    else:
        rmse = float("nan")
    center = dep.volume.center()
    sq = []
    for j in range(n_nodes):
        e = estimates[j] if j in estimates else center
        sq.append(float(np.sum((e - nodes[j]) ** 2)))
    rmse_incl = float(np.sqrt(np.mean(sq)))
    return LocalizationResult(
        estimates=estimates,
        localized_fraction=frac,
        rmse=rmse,
        rmse_inclusive=rmse_incl,
        rounds=rounds,
    )
