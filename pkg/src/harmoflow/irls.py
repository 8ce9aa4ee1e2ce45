"""Models II and III by iteratively reweighted least squares.

Model II penalizes ``|G_v|`` and ``||grad v||`` (L1 data, TV smoothness);
Model III penalizes ``|G_v|`` and ``||grad v||^2``. Both replace ``|.|`` by the
Huber function ``h_eps`` and minimize quadratic majorants built at the current
iterate; each majorant is a weighted harmonic system solved by warm-started CG.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import check_images, velocity_from_amplitude
from .diffops import velocity_gradient_norm
from .model1 import assemble_system, cg_solve
from .multiscale import run_pyramid

log = logging.getLogger(__name__)

SMOOTHING_FLOOR = 1e-8
MODELS = (2, 3)


def huber(x, eps):
    """Huber smoothing of ``|x|``: ``|x|`` outside ``[-eps, eps]``, ``x^2/(2 eps) + eps/2`` inside."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    ax = np.abs(x)
    return np.where(ax >= eps, ax, 0.5 * ax * ax / eps + 0.5 * eps)


def quad_majorant(x, z, eps):
    """Quadratic majorant of ``huber(., eps)`` touching it at ``z``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = np.maximum(eps, np.abs(z))
    return 0.5 * np.square(x) / m + 0.5 * m


@dataclass(frozen=True)
class Weights:
    """IRLS weights per ``(t, x)``; ``reg`` is the scalar 2.0 for Model III."""

    data: np.ndarray
    reg: object


@dataclass(frozen=True)
class SmoothingSchedule:
    eps: float
    delta: float
    k: int = 0
    floor: float = SMOOTHING_FLOOR


def _check_model(model):
    if model not in MODELS:
        raise ValueError(f"model must be 2 or 3, got {model!r}")


def compute_weights(derivs, v, eps, delta, model):
    """Weights of the majorant at the velocity ``v`` (warped derivatives allowed)."""
    _check_model(model)
    G = derivs.residual(v)
    data = 1.0 / np.maximum(eps, np.abs(G))
    if model == 3:
        return Weights(data, 2.0)
    return Weights(data, 1.0 / np.maximum(delta, velocity_gradient_norm(v)))


def unit_weights(derivs, model):
    """Weights of a majorant built at zero residual scale: ``w_D = 1`` (debugging aid)."""
    _check_model(model)
    return Weights(np.ones(derivs.dt.shape), 2.0 if model == 3 else 1.0)


def assemble_weighted(derivs, h, lam, weights):
    """Normal equations of the weighted quadratic majorant."""
    if np.any(weights.data <= 0) or np.any(np.asarray(weights.reg) <= 0):
        raise ValueError("IRLS weights must be strictly positive")
    return assemble_system(derivs, h, lam, data_weights=weights.data, reg_weights=weights.reg)


def update_smoothing(schedule, residual, grad_norm=None):
    """Decay rule: ``eps <- max(min(eps, 0.1 mean|G| / sqrt(k+1)), c / sqrt(k+1))``.

    ``delta`` follows the same rule with ``mean ||grad v||``; it is left alone
    when ``grad_norm`` is None (Model III has no ``delta``).
    """
    root = math.sqrt(schedule.k + 1)
    lower = schedule.floor / root
    eps = max(min(schedule.eps, 0.1 * float(np.mean(np.abs(residual))) / root), lower)
    delta = schedule.delta
    if grad_norm is not None:
        delta = max(min(delta, 0.1 * float(np.mean(grad_norm)) / root), lower)
    return replace(schedule, eps=eps, delta=delta, k=schedule.k + 1)


def smoothed_energy(a, derivs, h, lam, eps, delta, model):
    """``E_{eps,delta}(v)``: Huber-smoothed Model II/III energy of ``v = Re(a e^{i w t})``."""
    _check_model(model)
    v = velocity_from_amplitude(a, h)
    data = float(np.sum(huber(derivs.residual(v), eps)))
    gn = velocity_gradient_norm(v)
    if model == 3:
        return data + lam * float(np.sum(gn ** 2))
    return data + lam * float(np.sum(huber(gn, delta)))


def majorant_energy(a, a_ref, derivs, h, lam, eps, delta, model):
    """Quadratic majorant ``E_{u,eps,delta}(v)`` built at ``u = Re(a_ref e^{i w t})``."""
    _check_model(model)
    v = velocity_from_amplitude(a, h)
    u = velocity_from_amplitude(a_ref, h)
    data = float(np.sum(quad_majorant(derivs.residual(v), derivs.residual(u), eps)))
    gv = velocity_gradient_norm(v)
    if model == 3:
        return data + lam * float(np.sum(gv ** 2))
    return data + lam * float(np.sum(quad_majorant(gv, velocity_gradient_norm(u), delta)))


def l1_energy(a, derivs, h, lam, model):
    """Unsmoothed energy (``eps, delta -> 0``) of Model II or III."""
    _check_model(model)
    v = velocity_from_amplitude(a, h)
    data = float(np.sum(np.abs(derivs.residual(v))))
    gn = velocity_gradient_norm(v)
    return data + lam * float(np.sum(gn ** 2 if model == 3 else gn))


def irls_solve(derivs, h, lam, a0, model, eps0=1.0, delta0=1.0, irls_iters=5,
               cg_iters=50, cg_tol=1e-10, debug_unit_weights=False, trace=None, level=0):
    """IRLS on fixed derivatives; returns ``(a, energies)``.

    ``energies[k]`` is the smoothed energy ``E_{eps^k, delta^k}(v^k)``, which
    is nonincreasing in ``k``. ``trace`` (a list) receives
    ``(level, irls_iteration, cg_iteration, relative_residual)`` rows.
    """
    _check_model(model)
    if irls_iters < 1:
        raise ValueError("irls_iters must be >= 1")
    schedule = SmoothingSchedule(eps0, delta0)
    a = a0
    energies = [smoothed_energy(a, derivs, h, lam, schedule.eps, schedule.delta, model)]
    for k in range(irls_iters):
        if debug_unit_weights:
            weights = unit_weights(derivs, model)
        else:
            weights = compute_weights(derivs, velocity_from_amplitude(a, h),
                                      schedule.eps, schedule.delta, model)
        system = assemble_weighted(derivs, h, lam, weights)
        history = []
        a = cg_solve(system, a, cg_iters, cg_tol, history=history)
        if trace is not None:
            trace.extend((level, k, i, r) for i, r in enumerate(history))
        v = velocity_from_amplitude(a, h)
        grad_norm = velocity_gradient_norm(v) if model == 2 else None
        schedule = update_smoothing(schedule, derivs.residual(v), grad_norm)
        energies.append(smoothed_energy(a, derivs, h, lam, schedule.eps, schedule.delta, model))
        log.debug("IRLS level %d iter %d: eps=%.3e delta=%.3e E=%.6e",
                  level, k, schedule.eps, schedule.delta, energies[-1])
    return a, energies


def irls_reconstruct(images, h, config, model, debug_unit_weights=False, trace=None):
    """Model II or III through the full multiscale pipeline.

    The smoothing parameters restart from ``eps0, delta0`` on every level.
    """
    images = check_images(images, h)
    _check_model(model)

    def solve(derivs, a_init, level):
        a, _ = irls_solve(derivs, h, config.lam, a_init, model,
                          eps0=config.eps0, delta0=config.delta0,
                          irls_iters=config.irls_iters, cg_iters=config.cg_iters,
                          cg_tol=config.cg_tol, debug_unit_weights=debug_unit_weights,
                          trace=trace, level=level)
        return a

    return run_pyramid(images, h, config, solve)
