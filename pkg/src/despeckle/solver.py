"""Time stepping for the three despeckling models.

All three intensity equations have the damped-wave form ``I_tt + gamma I_t = F``
and are advanced with a three-level weighted scheme::

    (1 + g) I+ - tau^2 th1 F(I+) = 2 I + tau^2 (1 - th1 - th2) F(I)
                                   + tau^2 th2 F(I-) + (g - 1) I-,   g = gamma tau / 2

The diffusion coefficient and the fidelity term inside ``F(I+)`` are frozen at
the current level, so each step is one sparse linear solve, done by
Gauss-Seidel. The edge variable ``u`` of the coupled models follows
``u_t - nu^2/2 lap u + u = h(.)`` through a theta-scheme.
"""
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse

from . import coefficients as coef
from .gauss_seidel import gauss_seidel
from .grid import (
    as_field,
    divergence_flux,
    gaussian_convolve,
    gradient_magnitude_sq,
    laplacian,
    laplacian_matrix,
    max_abs,
)
from .metrics import (
    IterationRecord,
    MetricsReport,
    SsimParams,
    psnr,
    relative_change,
    speckle_index,
    ssim,
)
from .params import ModelParams, SchemeWeights, StopRule, _check_model
from .stencils import flux_system, fourth_order_system

__all__ = [
    "SolverError",
    "SolverState",
    "StepResult",
    "diffusion_coefficient",
    "rhs_force",
    "intensity_operator",
    "init_state",
    "step_intensity",
    "step_edge",
    "advance",
    "run_model",
    "run_color",
]


class SolverError(RuntimeError):
    """Raised when a run cannot continue (non-finite values, stalled linear solve)."""


def diffusion_coefficient(kind, I, u, p):
    _check_model(kind)
    if kind == "proposed":
        return coef.coeff_proposed(I, u, p)
    if kind == "tdfm":
        return coef.coeff_tdfm(I, p)
    return coef.coeff_hpcpde(I, u, p)


def _fidelity(kind, I, J, p, eps_div):
    if kind == "hpcpde" or p.lam == 0:
        return np.zeros_like(I)
    if kind == "tdfm":
        r = (I - J) / np.maximum(I, eps_div)
        return -p.lam * r * r
    d = I - J
    if p.fidelity == "signed":
        return -p.lam * d
    return -p.lam * d * d


def _linear_force(kind, c, I):
    if kind == "hpcpde":
        return divergence_flux(c, I)
    return -laplacian(c * laplacian(I))


def _default_eps_div(J):
    return 1e-3 * max_abs(J)


def rhs_force(kind, I, u, J, p, eps_div=None):
    """Right-hand side ``F`` of ``I_tt + gamma I_t = F`` at one time level.

    proposed: ``-lap(D lap I) - lam (I - J)^2``
    tdfm:     ``-lap(C lap I) - lam ((I - J) / max(I, eps_div))^2``
    hpcpde:   ``div(c grad I)``
    """
    _check_model(kind)
    if eps_div is None:
        eps_div = _default_eps_div(J)
    c = diffusion_coefficient(kind, I, u, p)
    return _linear_force(kind, c, I) + _fidelity(kind, I, J, p, eps_div)


def intensity_operator(kind, c, a=0.0, b=1.0):
    """Sparse ``a * Id + b * K`` where ``K @ I.ravel() == -(linear part of F)`` for frozen ``c``.

    Fourth-order models give ``K = lap diag(c) lap`` (13-point stencil); HPCPDE
    gives ``K = -div(c grad .)`` (5-point). Both ``K`` are symmetric positive
    semidefinite.
    """
    _check_model(kind)
    if kind == "hpcpde":
        return flux_system(c, a, b)
    return fourth_order_system(c, a, b)


@dataclass
class SolverState:
    """Three intensity levels, the edge variable and run monitors for one channel."""

    J: np.ndarray
    I_prev: np.ndarray
    I_cur: np.ndarray
    u: np.ndarray
    F_prev: np.ndarray
    eps_div: float
    iter: int = 0
    coef_min: float = math.inf
    coef_max: float = -math.inf
    coef_violations: int = 0
    gs_residuals: list = field(default_factory=list)
    edge_matrix: object = None


class StepResult(NamedTuple):
    I_next: np.ndarray
    F_cur: np.ndarray
    coefficient: np.ndarray
    gs_sweeps: int
    gs_residual: float


def init_state(noisy, kind, p):
    """Initial levels ``I_prev = I_cur = J`` (zero initial velocity), ``u = G_xi * |grad J|^2``."""
    J = as_field(noisy, "noisy image").copy()
    u = gaussian_convolve(gradient_magnitude_sq(J), p.xi)
    eps_div = _default_eps_div(J)
    F0 = rhs_force(kind, J, u, J, p, eps_div)
    return SolverState(J=J, I_prev=J.copy(), I_cur=J.copy(), u=u, F_prev=F0, eps_div=eps_div)


def _solve(A, rhs, init, w, what):
    if not np.all(np.isfinite(rhs)):
        raise SolverError(f"non-finite right-hand side in {what}")
    res = gauss_seidel(A, rhs, init, tol=w.gs_tol, max_sweeps=w.gs_max_sweeps)
    if not res.converged:
        final = res.residuals[-1] if res.sweeps else math.nan
        raise SolverError(f"Gauss-Seidel did not converge for {what}: residual {final:.3e} "
                          f"after {res.sweeps} sweeps")
    return res


def step_intensity(state, w, kind, p):
    """Advance the intensity by one step; returns the new level without mutating ``state``."""
    _check_model(kind)
    I, I_old, J = state.I_cur, state.I_prev, state.J
    tau2 = w.tau * w.tau
    g = 0.5 * p.gamma * w.tau
    c = diffusion_coefficient(kind, I, state.u, p)
    fid = _fidelity(kind, I, J, p, state.eps_div)
    F_cur = _linear_force(kind, c, I) + fid
    rhs = (2.0 * I + tau2 * (1.0 - w.theta1 - w.theta2) * F_cur
           + tau2 * w.theta2 * state.F_prev + (g - 1.0) * I_old
           + tau2 * w.theta1 * fid)
    if w.theta1 == 0.0:
        return StepResult(rhs / (1.0 + g), F_cur, c, 0, 0.0)
    A = intensity_operator(kind, c, 1.0 + g, tau2 * w.theta1)
    # linear extrapolation in time as the starting guess
    res = _solve(A, rhs, 2.0 * I - I_old, w, f"intensity step {state.iter + 1}")
    final = float(res.residuals[-1]) if res.sweeps else 0.0
    return StepResult(res.x, F_cur, c, res.sweeps, final)


def _edge_matrix(shape, w, nu):
    n = shape[0] * shape[1]
    a = 0.5 * nu * nu * w.tau * w.theta
    return (1.0 + w.tau * w.theta) * sparse.identity(n, format="csr") - a * laplacian_matrix(shape)


def edge_source(kind, I, p):
    """``h(|lap(G_xi * I)|)`` for the proposed model, ``h(|grad(G_xi * I)|)`` for HPCPDE."""
    I_xi = gaussian_convolve(I, p.xi)
    if kind == "hpcpde":
        s = np.sqrt(gradient_magnitude_sq(I_xi))
    else:
        s = np.abs(laplacian(I_xi))
    return coef.edge_h(s, p.k_h, p.h_kind)


def step_edge(u, I, w, nu, p, kind="proposed", matrix=None):
    """Theta-scheme update of the edge variable driven by the current intensity ``I``."""
    source = edge_source(kind, I, p)
    a = 0.5 * nu * nu * w.tau
    rhs = (1.0 - w.tau * (1.0 - w.theta)) * u + w.tau * source
    if a * (1.0 - w.theta) != 0.0:
        rhs = rhs + a * (1.0 - w.theta) * laplacian(u)
    if a * w.theta == 0.0:
        return rhs / (1.0 + w.tau * w.theta)
    if matrix is None:
        matrix = _edge_matrix(u.shape, w, nu)
    return _solve(matrix, rhs, u, w, "edge step").x


def advance(state, w, kind, p):
    """One full time step in place: intensity, then (for coupled models) the edge variable."""
    step = step_intensity(state, w, kind, p)
    if kind != "tdfm":
        if state.edge_matrix is None and 0.5 * p.nu * p.nu * w.tau * w.theta != 0.0:
            state.edge_matrix = _edge_matrix(state.u.shape, w, p.nu)
        state.u = step_edge(state.u, state.I_cur, w, p.nu, p, kind, state.edge_matrix)
    state.I_prev, state.I_cur = state.I_cur, step.I_next
    state.F_prev = step.F_cur
    state.iter += 1
    c = step.coefficient
    lo, hi = float(c.min()), float(c.max())
    state.coef_min = min(state.coef_min, lo)
    state.coef_max = max(state.coef_max, hi)
    state.coef_violations += int(np.count_nonzero((c < 0.0) | (c > 1.0)))
    state.gs_residuals.append(step.gs_residual)
    if not (np.all(np.isfinite(state.I_cur)) and np.all(np.isfinite(state.u))):
        raise SolverError(f"non-finite values at iteration {state.iter}")
    return step


def _check_channels(noisy):
    arr = np.asarray(noisy, dtype=np.float64)
    if arr.ndim == 2:
        return arr[None], False
    if arr.ndim == 3:
        return arr, True
    raise ValueError(f"expected (H, W) or (C, H, W) input, got shape {arr.shape}")


def _run(noisy, kind, p, w, stop, reference, callback, ssim_params, floor, scale):
    _check_model(kind)
    channels, _ = _check_channels(noisy)
    if reference is not None:
        reference = np.asarray(reference, dtype=np.float64).reshape(channels.shape)
    if stop.mode == "best-psnr" and reference is None:
        raise ValueError("best-psnr stopping needs a reference image")
    if not scale > 0:
        raise ValueError("intensity scale must be > 0")
    J_all = np.maximum(channels, floor) if floor is not None else channels.copy()
    # the PDEs run on intensities in units of `scale`; everything reported is in input units
    states = [init_state(J / scale, kind, p) for J in J_all]
    n_ch = len(states)
    refs = list(reference) if reference is not None else [None] * n_ch

    def channel_metrics(img, ref):
        out = {"speckle_index": speckle_index(img)}
        if ref is not None:
            out["psnr_db"] = psnr(ref, img)
            out["ssim"] = ssim(ref, img, ssim_params)[0]
        return out

    def joint_metrics(imgs):
        out = {"speckle_index": speckle_index(imgs)}
        if reference is not None:
            out["psnr_db"] = psnr(reference, imgs)
            out["ssim"] = float(np.mean([ssim(r, c, ssim_params)[0] for r, c in zip(reference, imgs)]))
        return out

    noisy_joint = joint_metrics(channels)
    noisy_per = [channel_metrics(c, r) for c, r in zip(channels, refs)]
    start_joint = joint_metrics(J_all)

    rho, theta = float(J_all.min()), float(J_all.max())
    delta = 0.05 * (theta - rho)
    records = []
    ch_records = [[] for _ in range(n_ch)]
    ssim_sum = 0.0
    ch_ssim_sum = [0.0] * n_ch
    # iterate 0 (the floored input) competes for best PSNR too
    best_iter, best_img, stall = 0, J_all.copy(), 0
    best_psnr = start_joint.get("psnr_db", -math.inf)
    selected, reason = None, "max-iters"
    mp_violations = 0
    run_min, run_max = math.inf, -math.inf

    for k in range(1, stop.max_iters + 1):
        prev = np.stack([s.I_cur for s in states])
        steps = [advance(s, w, kind, p) for s in states]
        cur_scaled = np.stack([s.I_cur for s in states])
        cur = cur_scaled * scale
        rel = relative_change(prev, cur_scaled)
        m = joint_metrics(cur)
        lo, hi = float(cur.min()), float(cur.max())
        run_min, run_max = min(run_min, lo), max(run_max, hi)
        if lo < rho - delta or hi > theta + delta:
            mp_violations += 1
        rec = IterationRecord(
            iter=k, rel_change=rel, speckle_index=m["speckle_index"],
            gs_sweeps=int(sum(st.gs_sweeps for st in steps)), min_I=lo, max_I=hi,
        )
        if reference is not None:
            ssim_sum += m["ssim"]
            rec.psnr_db, rec.ssim, rec.mssim_paper = m["psnr_db"], m["ssim"], ssim_sum / k
        records.append(rec)
        if n_ch > 1:
            for c in range(n_ch):
                cm = channel_metrics(cur[c], refs[c])
                crec = IterationRecord(
                    iter=k, rel_change=relative_change(prev[c], cur_scaled[c]),
                    speckle_index=cm["speckle_index"], gs_sweeps=steps[c].gs_sweeps,
                    min_I=float(cur[c].min()), max_I=float(cur[c].max()),
                )
                if reference is not None:
                    ch_ssim_sum[c] += cm["ssim"]
                    crec.psnr_db, crec.ssim = cm["psnr_db"], cm["ssim"]
                    crec.mssim_paper = ch_ssim_sum[c] / k
                ch_records[c].append(crec)
        if callback is not None:
            callback({"iter": k, "psnr_db": rec.psnr_db, "rel_change": rel,
                      "gs_sweeps": rec.gs_sweeps, "min_I": lo, "max_I": hi})

        if stop.mode == "best-psnr":
            if rec.psnr_db > best_psnr:
                best_iter, best_psnr, best_img, stall = k, rec.psnr_db, cur, 0
            else:
                stall += 1
            if best_psnr == math.inf:
                # an exact match with the reference cannot be improved on
                reason = "exact-match"
                break
            if stall >= stop.patience:
                reason = "patience"
                break
            # converged and no longer improving
            if rel <= stop.epsilon and stall > 0:
                reason = "relative-change"
                break
        elif stop.mode == "relative-change":
            if rel <= stop.epsilon:
                selected, reason = k, "relative-change"
                break

    if stop.mode == "best-psnr":
        restored = best_img
    else:
        best_iter = selected if selected is not None else len(records)
        restored = np.stack([s.I_cur for s in states]) * scale

    def final_for(recs, img, ref, start):
        out = {"iter": best_iter, "speckle_index": speckle_index(img)}
        if best_iter == 0:
            out["rel_change"] = 0.0
            if ref is not None:
                out["psnr_db"], out["mssim"] = start["psnr_db"], start["ssim"]
        else:
            r = recs[best_iter - 1]
            out["rel_change"] = r.rel_change
            if ref is not None:
                out["psnr_db"], out["mssim"] = r.psnr_db, r.ssim
        if ref is not None:
            out["mssim_paper"] = float(np.mean([x.ssim for x in recs]))
        return out

    monitors = {
        "rho": rho, "theta": theta, "delta": delta,
        "min_I": run_min, "max_I": run_max,
        "max_principle_violations": mp_violations,
        "coef_min": min(s.coef_min for s in states),
        "coef_max": max(s.coef_max for s in states),
        "coef_violations": sum(s.coef_violations for s in states),
        "gs_sweeps_total": int(sum(r.gs_sweeps for r in records)),
        "gs_final_residual_max": max((max(s.gs_residuals) for s in states if s.gs_residuals), default=0.0),
    }
    echo = {"model": kind, "params": p.as_dict(), "scheme": w.as_dict(), "stop": stop.as_dict(),
            "floor": floor, "intensity_scale": scale}
    report = MetricsReport(
        records=records, best_iter=best_iter, stop_reason=reason,
        final=final_for(records, restored, reference, start_joint), noisy=noisy_joint,
        monitors=monitors, params=echo,
    )
    if n_ch > 1:
        for c in range(n_ch):
            start_c = channel_metrics(J_all[c], refs[c])
            report.channels.append(MetricsReport(
                records=ch_records[c], best_iter=best_iter, stop_reason=reason,
                final=final_for(ch_records[c], restored[c], refs[c], start_c), noisy=noisy_per[c],
                monitors={"coef_min": states[c].coef_min, "coef_max": states[c].coef_max,
                          "coef_violations": states[c].coef_violations},
                params=echo,
            ))
    return restored, report


def run_model(noisy, kind="proposed", params=None, weights=None, stop=None, reference=None,
              callback=None, ssim_params=None, floor=1.0, intensity_scale=255.0):
    """Despeckle one single-channel image.

    Iterates until the stop rule fires and returns ``(restored, report)``.
    With ``best-psnr`` the highest-PSNR iterate against ``reference`` is
    returned; the run ends after ``stop.patience`` non-improving iterations or
    once the relative change drops to ``stop.epsilon``. With
    ``relative-change`` the first iterate whose relative change is at most
    ``epsilon`` is returned. ``max_iters`` bounds every mode. A run whose best
    iterate matches the reference exactly stops at once.

    Input pixels are floored at ``floor`` (pass ``None`` to disable) so the
    image stays strictly positive. The equations are integrated on
    intensities divided by ``intensity_scale`` (8-bit data: 255), which is
    the unit the model parameters refer to; inputs, outputs and metrics stay
    in the caller's units. With ``best-psnr`` the floored input itself is
    iterate 0 and is returned when no later iterate beats it.
    """
    p = params or ModelParams()
    w = weights or SchemeWeights()
    stop = stop or (StopRule() if reference is not None else StopRule(mode="relative-change"))
    noisy = as_field(noisy, "noisy image")
    if reference is not None:
        reference = as_field(reference, "reference")
        if reference.shape != noisy.shape:
            raise ValueError(f"shape mismatch: {reference.shape} vs {noisy.shape}")
    # a diverging run is caught by the finite check in advance(); keep numpy quiet until then
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        restored, report = _run(noisy, kind, p, w, stop, reference, callback,
                                ssim_params or SsimParams(), floor, intensity_scale)
    return restored[0], report


def run_color(noisy_rgb, kind="proposed", params=None, weights=None, stop=None, reference=None,
              callback=None, ssim_params=None, floor=1.0, intensity_scale=255.0):
    """Despeckle a ``(3, H, W)`` stack, each channel evolving independently with the same parameters.

    Channels advance in lockstep so the stop rule sees the recombined image;
    PSNR is computed jointly over all channels and SSIM is the channel mean.
    The report carries per-channel reports in ``report.channels``.
    """
    arr = np.asarray(noisy_rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ValueError(f"expected a (3, H, W) stack, got shape {arr.shape}")
    for i, ch in enumerate(arr):
        as_field(ch, f"channel {i}")
    if reference is not None:
        reference = np.asarray(reference, dtype=np.float64)
        if reference.shape != arr.shape:
            raise ValueError(f"shape mismatch: {reference.shape} vs {arr.shape}")
    p = params or ModelParams()
    w = weights or SchemeWeights()
    stop = stop or (StopRule() if reference is not None else StopRule(mode="relative-change"))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _run(arr, kind, p, w, stop, reference, callback, ssim_params or SsimParams(),
                    floor, intensity_scale)
