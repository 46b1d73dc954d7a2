"""SINR and SNR coverage probability of the typical user.

The coverage integral runs over the serving link's path loss, weighting the
per-(tier, state) serving densities by the void probabilities of stronger
competitors, a noise exponential, and the Laplace transforms of the per-tier
interference (a sum over the interferer gain pmf of integrals against the
path-loss density above the association exclusion zone).  The Nakagami gamma
tail is handled with the standard alternating binomial bound, so every term is
a finite n-sum of exponentials.

Integrals are computed in the squared-radius variable per blockage annulus,
which makes the serving density constant and every integrand analytic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf, erfcx

from . import intensity
from .association import AssociationTable, association_table, power_ratios
from .model import LinkState, NetworkConfig

_STATES = (LinkState.LOS, LinkState.NLOS)

EXCLUSION_MODES = ("with_gains", "without_gains")


def eta(n: int) -> float:
    """Tightest exponential-bound rate n*(n!)**(-1/n) for a Gamma(n) tail."""
    if n < 1:
        raise ValueError("shape must be a positive integer")
    return n * math.exp(-math.lgamma(n + 1.0) / n)


def psi(n: int, x) -> np.ndarray | float:
    """1 - (1 + x)^(-n): one minus the Gamma(n, 1/n) Laplace transform at n*x."""
    return -np.expm1(-n * np.log1p(x))


def _exclusion_ratios(cfg: NetworkConfig, k: int, exclusion_zone: str) -> np.ndarray:
    if exclusion_zone == "with_gains":
        return power_ratios(cfg, k)
    if exclusion_zone == "without_gains":
        pb = np.array([t.tx_power * t.bias for t in cfg.tiers])
        return pb / pb[k]
    raise ValueError(f"exclusion_zone must be one of {EXCLUSION_MODES}, "
                     f"got {exclusion_zone!r}")


def _interference_batch(cfg: NetworkConfig, k: int, j: int, s_int: LinkState,
                        gamma_k: float, l: np.ndarray, n_values: np.ndarray,
                        g0: float, excl_ratio: float,
                        abs_tol: float = 1e-8, max_waves: int = 12):
    """Interference exponents for tier j in state s_int at serving losses l.

    Returns (values, converged) with values shaped (len(n_values), len(l)).
    Each value is sum_G p_G * integral over t > excl_ratio*l of
    psi(N, q_nG * l / t) dLambda_{j,s_int}(t), evaluated per annulus in the
    squared-radius variable where the measure is flat.
    """
    from .quadrature import G7_WEIGHTS, K15_NODES, K15_WEIGHTS

    segs = intensity.state_segments(cfg.tiers[j], s_int)
    out = np.zeros((n_values.size, l.size))
    if not segs:
        return out, True
    n_fad = cfg.fading.n(s_int)
    eta_i = eta(n_fad)
    pmf = cfg.interferer_gain_pmf(j)
    gains = np.array([g for g, _ in pmf])
    probs = np.array([p for _, p in pmf])
    # q[n, G] * l / t is the psi argument
    q = (n_values[:, None] * eta_i * gamma_k * cfg.tiers[j].tx_power
         * gains[None, :] / (cfg.tiers[k].tx_power * g0 * n_fad))
    a = excl_ratio * l
    converged = True
    tol_seg = abs_tol / len(segs)
    unit = 0.5 * (K15_NODES + 1.0)  # GK nodes mapped onto [0, 1]
    for seg in segs:
        v_lo = np.clip((a / seg.kappa) ** (2.0 / seg.alpha), seg.lo_r2, seg.hi_r2)
        width = seg.hi_r2 - v_lo            # (L,)
        if not np.any(width > 0.0):
            continue
        # psi has a boundary layer just above the exclusion radius whose
        # relative scale varies with l, so the initial grid is geometric
        # toward the left edge rather than uniform
        edges = np.concatenate([[0.0], np.geomspace(1e-8, 1.0, 17)])
        for wave in range(max_waves):
            p_lo, p_hi = edges[:-1], edges[1:]
            half = 0.5 * (p_hi - p_lo)      # (P,)
            umid = 0.5 * (p_hi + p_lo)
            u = umid[:, None] + half[:, None] * K15_NODES[None, :]   # (P, 15)
            v = v_lo[:, None, None] + width[:, None, None] * u[None, :, :]  # (L,P,15)
            t = seg.kappa * v ** (0.5 * seg.alpha)
            with np.errstate(divide="ignore"):
                arg = q[:, :, None, None, None] * (l[:, None, None] / t)[None, None]
            vals = psi(n_fad, arg)                       # (n,G,L,P,15)
            k15 = np.einsum("ngifw,w->ngif", vals, K15_WEIGHTS)
            g7 = np.einsum("ngifw,w->ngif", vals, G7_WEIGHTS)
            scale = width[None, None, :, None] * half[None, None, None, :]
            k15 = k15 * scale
            g7 = g7 * scale
            comb = np.einsum("g,ngif->nif", probs, k15)   # (n,L,P)
            err = np.einsum("g,ngif->nif", probs, np.abs(k15 - g7))
            worst = err.max(axis=(0, 1))                  # per panel
            if err.sum(axis=2).max() <= tol_seg:
                break
            bad = worst > tol_seg / (2.0 * max(1, p_lo.size))
            if not np.any(bad) or edges.size > 512:
                converged = False
                break
            mids = 0.5 * (p_lo[bad] + p_hi[bad])
            edges = np.sort(np.concatenate([edges, mids]))
        else:
            converged = False
        out += math.pi * cfg.tiers[j].density * seg.weight * comb.sum(axis=2)
    return out, converged


def interference_term(cfg: NetworkConfig, j: int, s_int: LinkState, k: int,
                      n: int, gamma: float, l: float, g0: float | None = None,
                      exclusion_zone: str = "with_gains",
                      abs_tol: float = 1e-10) -> float:
    """One tier/state interference exponent at a single serving path loss.

    This is the gain-pmf-weighted integral of psi against tier j's state-s_int
    path-loss density from the exclusion boundary upward; it appears negated
    inside the coverage integrand's exponential.
    """
    if g0 is None:
        g0 = cfg.tiers[k].serving_gain
    ratio = _exclusion_ratios(cfg, k, exclusion_zone)[j]
    vals, _ = _interference_batch(cfg, k, j, s_int, float(gamma),
                                  np.array([float(l)]), np.array([int(n)]),
                                  g0, ratio, abs_tol=abs_tol)
    return float(vals[0, 0])


@dataclass(frozen=True)
class CoverageCurve:
    """Coverage values over a grid, with the per-(tier, state) decomposition."""

    x: np.ndarray               # grid: linear SINR thresholds, or rate in bit/s
    probability: np.ndarray     # (n,)
    joint: np.ndarray           # (n, K, 2): joint coverage-and-association mass
    association: AssociationTable
    error: np.ndarray           # (n,) summed quadrature error estimates
    converged: np.ndarray       # (n,) bool
    mode: str
    exclusion_zone: str
    meta: dict = field(default_factory=dict)

    def conditional(self, k: int) -> np.ndarray:
        """P(covered | associated with tier k) over the grid."""
        a_k = float(self.association.per_tier[k])
        if a_k <= 0.0:
            return np.zeros_like(self.probability)
        return self.joint[:, k, :].sum(axis=1) / a_k


def _normalize_thresholds(cfg: NetworkConfig, thresholds) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(thresholds, dtype=float))
    if arr.ndim == 1:
        arr = np.repeat(arr[:, None], cfg.n_tiers, axis=1)
    if arr.ndim != 2 or arr.shape[1] != cfg.n_tiers:
        raise ValueError("thresholds must be a scalar, a grid, or a grid x K array")
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("thresholds must be positive and finite (linear units)")
    return arr


def _term(cfg: NetworkConfig, k: int, state: LinkState, gamma_k: float,
          g0_k: float, mode: str, excl_ratios: np.ndarray,
          outer_abs_tol: float, outer_rel_tol: float, inner_abs_tol: float):
    """Joint mass of {associated via (k, state)} and {SINR > gamma_k}."""
    from .quadrature import integrate_function

    tier = cfg.tiers[k]
    segs = intensity.state_segments(tier, state)
    if not segs:
        return 0.0, 0.0, True
    n_serv = cfg.fading.n(state)
    eta_s = eta(n_serv)
    n_arr = np.arange(1, n_serv + 1)
    coefs = np.array([(-1.0) ** (n + 1) * math.comb(n_serv, n) for n in n_arr])
    ratios = power_ratios(cfg, k)
    band = cfg.same_band_tiers(k) if mode == "sinr" else ()
    noise_rate = eta_s * gamma_k * tier.noise_power / (tier.tx_power * g0_k)
    inner_ok = [True]

    def f_of_l(l: np.ndarray) -> np.ndarray:
        assoc = np.zeros_like(l)
        for j, tj in enumerate(cfg.tiers):
            assoc += intensity.lambda_total(tj, ratios[j] * l)
        logs = -(n_arr[:, None] * noise_rate) * l[None, :] - assoc[None, :]
        for j in band:
            for s_int in _STATES:
                vals, ok = _interference_batch(
                    cfg, k, j, s_int, gamma_k, l, n_arr, g0_k,
                    excl_ratios[j], abs_tol=inner_abs_tol)
                logs -= vals
                inner_ok[0] = inner_ok[0] and ok
        return coefs @ np.exp(logs)

    # breakpoints in serving path loss from every competitor's kinks
    kinks = set()
    for j, tj in enumerate(cfg.tiers):
        for bp in intensity.breakpoints(tj):
            kinks.add(bp / ratios[j])
            if j in band:
                kinks.add(bp / excl_ratios[j])

    value, err = 0.0, 0.0
    converged = True
    for seg in segs:
        def ev(v: np.ndarray, _seg=seg) -> np.ndarray:
            return f_of_l(_seg.kappa * v ** (0.5 * _seg.alpha))

        v_kinks = [(x / seg.kappa) ** (2.0 / seg.alpha)
                   for x in kinks if seg.lo_x < x < seg.hi_x]
        # same decay-sliver guard as the association integral
        width = seg.hi_r2 - seg.lo_r2
        v_kinks.extend(seg.lo_r2 + width * np.geomspace(1e-12, 1.0, 13)[:-1])
        res = integrate_function(ev, (seg.lo_r2, seg.hi_r2), tuple(v_kinks),
                                 abs_tol=outer_abs_tol / len(segs),
                                 rel_tol=outer_rel_tol)
        w = math.pi * tier.density * seg.weight
        value += w * res.value
        err += w * res.error
        converged = converged and res.converged
    return value, err, converged and inner_ok[0]


def sinr_coverage(cfg: NetworkConfig, thresholds, *, mode: str = "sinr",
                  serving_gain_override: float | None = None,
                  exclusion_zone: str = "with_gains",
                  outer_abs_tol: float = 1e-7, outer_rel_tol: float = 1e-6,
                  inner_abs_tol: float = 1e-8,
                  assoc: AssociationTable | None = None) -> CoverageCurve:
    """Coverage probability across a threshold grid.

    thresholds are linear; pass an (n, K) array for per-tier values (rate
    coverage does).  mode "sinr" includes same-band interference, "snr" drops
    it.  serving_gain_override replaces the aligned serving gain G0 in the
    SINR numerator only; association keeps the intended gains.
    """
    if mode not in ("sinr", "snr"):
        raise ValueError(f"mode must be 'sinr' or 'snr', got {mode!r}")
    grid = _normalize_thresholds(cfg, thresholds)
    if assoc is None:
        assoc = association_table(cfg)
    n_pts = grid.shape[0]
    joint = np.zeros((n_pts, cfg.n_tiers, 2))
    errs = np.zeros(n_pts)
    conv = np.ones(n_pts, dtype=bool)
    for i in range(n_pts):
        for k in range(cfg.n_tiers):
            g0_k = serving_gain_override if serving_gain_override is not None \
                else cfg.tiers[k].serving_gain
            excl = _exclusion_ratios(cfg, k, exclusion_zone)
            for col, state in enumerate(_STATES):
                v, e, ok = _term(cfg, k, state, grid[i, k], g0_k, mode, excl,
                                 outer_abs_tol, outer_rel_tol, inner_abs_tol)
                joint[i, k, col] = v
                errs[i] += e
                conv[i] = conv[i] and ok
    return CoverageCurve(
        x=grid[:, 0], probability=joint.sum(axis=(1, 2)), joint=joint,
        association=assoc,
        error=errs, converged=conv, mode=mode, exclusion_zone=exclusion_zone,
        meta={"serving_gain_override": serving_gain_override})


def snr_coverage(cfg: NetworkConfig, thresholds, **kwargs) -> CoverageCurve:
    """Noise-limited coverage: the same integral with interference dropped."""
    kwargs.setdefault("mode", "snr")
    if kwargs["mode"] != "snr":
        raise ValueError("snr_coverage computes mode='snr'")
    return sinr_coverage(cfg, thresholds, **kwargs)


def hybrid_coverage(cfg: NetworkConfig, thresholds, **kwargs) -> CoverageCurve:
    """SINR coverage of a mixed microwave/mmWave deployment.

    Association spans all tiers; interference never crosses bands.  This is
    sinr_coverage with the band bookkeeping made explicit at the call site.
    """
    if not cfg.is_hybrid:
        raise ValueError("hybrid_coverage requires a microwave tier")
    return sinr_coverage(cfg, thresholds, **kwargs)


def _gauss_segment_integrals(p: float, c: float, x0: np.ndarray, x1: np.ndarray):
    """(int e^{-p x^2 - c x} dx, int x e^{-p x^2 - c x} dx) over [x0, x1].

    Stable for the large c^2/(4p) regime via the scaled complementary error
    function; requires p > 0 and c >= 0.
    """
    rp = math.sqrt(p)
    z0 = rp * x0 + c / (2.0 * rp)
    z1 = rp * x1 + c / (2.0 * rp)
    e0 = np.exp(-(p * x0 * x0 + c * x0))
    e1 = np.exp(-(p * x1 * x1 + c * x1))
    i_const = (math.sqrt(math.pi) / (2.0 * rp)) * (e0 * erfcx(z0) - e1 * erfcx(z1))
    i_lin = (e0 - e1) / (2.0 * p) - (c / (2.0 * p)) * i_const
    return i_const, i_lin


def _quadratic_pieces(cfg: NetworkConfig, ratios: np.ndarray, x_lo: float,
                      x_hi: float):
    """Piecewise (b, c, d) with sum_j Lambda_j(ratios_j x^2) = b x^2 + c x + d.

    Exact when every ball has alpha_los 2 and alpha_nlos 4.  Yields
    (x0, x1, b, c, d) sub-segments covering [x_lo, x_hi].
    """
    cuts = {x_lo, x_hi}
    for j, tj in enumerate(cfg.tiers):
        for bp in intensity.breakpoints(tj):
            x = math.sqrt(bp / ratios[j])
            if x_lo < x < x_hi:
                cuts.add(x)
    xs = sorted(cuts)
    for x0, x1 in zip(xs[:-1], xs[1:]):
        xm2 = (0.5 * (x0 + x1)) ** 2
        b = c = d = 0.0
        for j, tj in enumerate(cfg.tiers):
            pl = math.pi * tj.density
            for state in _STATES:
                for seg in intensity.state_segments(tj, state):
                    y = ratios[j] * xm2
                    if y >= seg.hi_x:
                        d += pl * seg.weight * (seg.hi_r2 - seg.lo_r2)
                    elif y > seg.lo_x:
                        if seg.alpha == 2.0:
                            b += pl * seg.weight * ratios[j] / seg.kappa
                        else:
                            c += pl * seg.weight * math.sqrt(ratios[j] / seg.kappa)
                        d -= pl * seg.weight * seg.lo_r2
        yield x0, x1, b, c, d


def snr_coverage_closed_form(cfg: NetworkConfig, thresholds, *,
                             serving_gain_override: float | None = None,
                             assoc: AssociationTable | None = None) -> CoverageCurve:
    """Noise-limited coverage in closed form for alpha pairs (2, 4).

    In the x = sqrt(path loss) variable every exponent is piecewise quadratic,
    so each serving annulus reduces to error-function segments; no quadrature.
    """
    for i, t in enumerate(cfg.tiers):
        for dd, ball in enumerate(t.balls):
            if ball.alpha_los != 2.0 or ball.alpha_nlos != 4.0:
                raise ValueError(
                    f"tiers[{i}].balls[{dd}]: closed form requires alpha_los 2 "
                    "and alpha_nlos 4")
    grid = _normalize_thresholds(cfg, thresholds)
    if assoc is None:
        assoc = association_table(cfg)
    n_pts = grid.shape[0]
    joint = np.zeros((n_pts, cfg.n_tiers, 2))
    for i in range(n_pts):
        for k, tier in enumerate(cfg.tiers):
            g0_k = serving_gain_override if serving_gain_override is not None \
                else tier.serving_gain
            ratios = power_ratios(cfg, k)
            for col, state in enumerate(_STATES):
                n_serv = cfg.fading.n(state)
                eta_s = eta(n_serv)
                a1 = eta_s * grid[i, k] * tier.noise_power / (tier.tx_power * g0_k)
                acc = 0.0
                for seg in intensity.state_segments(tier, state):
                    if seg.alpha == 2.0:
                        x_lo = math.sqrt(seg.kappa) * math.sqrt(seg.lo_r2)
                        x_hi = math.sqrt(seg.kappa) * math.sqrt(seg.hi_r2)
                        pref = (2.0 * math.pi * tier.density * seg.weight
                                / seg.kappa)
                    else:
                        x_lo = math.sqrt(seg.kappa) * seg.lo_r2
                        x_hi = math.sqrt(seg.kappa) * seg.hi_r2
                        pref = (math.pi * tier.density * seg.weight
                                / math.sqrt(seg.kappa))
                    seg_sum = 0.0
                    pieces = list(_quadratic_pieces(cfg, ratios, x_lo, x_hi))
                    for n in range(1, n_serv + 1):
                        coef = (-1.0) ** (n + 1) * math.comb(n_serv, n)
                        for x0, x1, b, c, d in pieces:
                            p = n * a1 + b
                            i_const, i_lin = _gauss_segment_integrals(
                                p, c, np.float64(x0), np.float64(x1))
                            pick = i_lin if seg.alpha == 2.0 else i_const
                            seg_sum += coef * math.exp(-d) * float(pick)
                    acc += pref * seg_sum
                joint[i, k, col] = acc
    x = grid[:, 0]
    return CoverageCurve(
        x=x, probability=joint.sum(axis=(1, 2)), joint=joint, association=assoc,
        error=np.zeros(n_pts), converged=np.ones(n_pts, dtype=bool),
        mode="closed24", exclusion_zone="with_gains",
        meta={"serving_gain_override": serving_gain_override})


def alignment_probability(beamwidth_rad: float, sigma_be_rad: float) -> float:
    """P(|error| <= beamwidth/2) for a zero-mean Gaussian pointing error."""
    if sigma_be_rad < 0:
        raise ValueError("sigma_be must be >= 0")
    if sigma_be_rad == 0.0:
        return 1.0
    return float(erf(beamwidth_rad / (2.0 * math.sqrt(2.0) * sigma_be_rad)))


def coverage_with_beam_error(cfg: NetworkConfig, thresholds,
                             sigma_be_rad: float, *, mode: str = "sinr",
                             **kwargs) -> CoverageCurve:
    """Coverage with independent Gaussian alignment errors at both link ends.

    Each end stays on its main lobe with probability F, so the serving gain is
    a three-point mixture and the curve is the matching mixture of coverage
    curves with the serving gain overridden.
    """
    f_align = alignment_probability(cfg.pattern.beamwidth_rad, sigma_be_rad)
    mg, sg = cfg.pattern.main_gain, cfg.pattern.side_gain
    weights = (f_align ** 2, 2.0 * f_align * (1.0 - f_align), (1.0 - f_align) ** 2)
    gains = (mg * mg, mg * sg, sg * sg)
    assoc = kwargs.pop("assoc", None) or association_table(cfg)
    parts = [sinr_coverage(cfg, thresholds, mode=mode,
                           serving_gain_override=g, assoc=assoc, **kwargs)
             for g in gains]
    joint = sum(w * p.joint for w, p in zip(weights, parts))
    return CoverageCurve(
        x=parts[0].x, probability=joint.sum(axis=(1, 2)), joint=joint,
        association=assoc,
        error=sum(w * p.error for w, p in zip(weights, parts)),
        converged=np.logical_and.reduce([p.converged for p in parts]),
        mode=parts[0].mode, exclusion_zone=parts[0].exclusion_zone,
        meta={"sigma_be_rad": sigma_be_rad, "alignment_probability": f_align})
