"""Exact solution of the 1D Euler Riemann problem for an ideal gas.

Vectorized over independent left/right states. Velocities of both initial
states may be nonzero; only density is sampled from the self-similar
solution, along with the star-region pressure and velocity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAMMA = 1.4


class RiemannError(RuntimeError):
    pass


@dataclass(frozen=True)
class StarState:
    pressure: np.ndarray
    velocity: np.ndarray
    iterations: int


def _sound_speed(rho, p, gamma):
    return np.sqrt(gamma * p / rho)


def _pressure_function(p, rho, pk, gamma):
    """Velocity jump across one wave and its derivative in p."""
    a = 2.0 / ((gamma + 1.0) * rho)
    b = (gamma - 1.0) / (gamma + 1.0) * pk
    c = _sound_speed(rho, pk, gamma)
    shock = p > pk
    ps = np.where(shock, p, pk)  # keeps sqrt arguments sane off-branch
    root = np.sqrt(a / (ps + b))
    f_shock = (p - pk) * root
    df_shock = root * (1.0 - 0.5 * (p - pk) / (ps + b))
    ratio = np.maximum(p, 1e-300) / pk
    ex = (gamma - 1.0) / (2.0 * gamma)
    f_rare = 2.0 * c / (gamma - 1.0) * (ratio**ex - 1.0)
    df_rare = ratio ** (-(gamma + 1.0) / (2.0 * gamma)) / (rho * c)
    return np.where(shock, f_shock, f_rare), np.where(shock, df_shock, df_rare)


def star_state(rho_l, u_l, p_l, rho_r, u_r, p_r, gamma: float = GAMMA,
               tol: float = 1e-12, max_iter: int = 100) -> StarState:
    """Star-region pressure and velocity by safeguarded Newton iteration."""
    rho_l, u_l, p_l, rho_r, u_r, p_r = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (rho_l, u_l, p_l, rho_r, u_r, p_r)))
    if np.any(rho_l <= 0) or np.any(rho_r <= 0) or np.any(p_l <= 0) or np.any(p_r <= 0):
        raise RiemannError("densities and pressures must be positive")
    c_l, c_r = _sound_speed(rho_l, p_l, gamma), _sound_speed(rho_r, p_r, gamma)
    du = u_r - u_l
    if np.any(2.0 * (c_l + c_r) / (gamma - 1.0) <= du):
        raise RiemannError("initial states generate vacuum")

    # two-rarefaction guess is exact when both waves are rarefactions
    ex = (gamma - 1.0) / (2.0 * gamma)
    p = ((c_l + c_r - 0.5 * (gamma - 1.0) * du) / (c_l / p_l**ex + c_r / p_r**ex)) ** (1.0 / ex)
    p = np.maximum(p, 1e-8 * np.minimum(p_l, p_r))
    for it in range(1, max_iter + 1):
        f_l, d_l = _pressure_function(p, rho_l, p_l, gamma)
        f_r, d_r = _pressure_function(p, rho_r, p_r, gamma)
        step = (f_l + f_r + du) / (d_l + d_r)
        p_new = p - step
        # halve toward zero instead of stepping to a negative pressure
        p_new = np.where(p_new > 0.0, p_new, 0.5 * p)
        change = 2.0 * np.abs(p_new - p) / (p_new + p)
        p = p_new
        if np.all(change < tol):
            f_l, _ = _pressure_function(p, rho_l, p_l, gamma)
            f_r, _ = _pressure_function(p, rho_r, p_r, gamma)
            u = 0.5 * (u_l + u_r) + 0.5 * (f_r - f_l)
            return StarState(p, u, it)
    raise RiemannError(f"Newton iteration did not converge in {max_iter} steps")


def sample_density(xi, rho_l, u_l, p_l, rho_r, u_r, p_r, gamma: float = GAMMA) -> np.ndarray:
    """Density of the self-similar solution at ``xi = (x - x0) / t``."""
    xi, rho_l, u_l, p_l, rho_r, u_r, p_r = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (xi, rho_l, u_l, p_l, rho_r, u_r, p_r)))
    star = star_state(rho_l, u_l, p_l, rho_r, u_r, p_r, gamma)
    ps, us = star.pressure, star.velocity
    g6 = (gamma - 1.0) / (gamma + 1.0)
    g_fan = 2.0 / (gamma - 1.0)
    ex = (gamma - 1.0) / (2.0 * gamma)

    def side(rho, u, pk, sign):
        # sign = -1 for the left wave, +1 for the right wave
        c = _sound_speed(rho, pk, gamma)
        ratio = ps / pk
        shock = ps > pk
        s_shock = u + sign * c * np.sqrt((gamma + 1.0) / (2.0 * gamma) * ratio + ex)
        rho_shock = rho * (ratio + g6) / (g6 * ratio + 1.0)
        head = u + sign * c
        tail = us + sign * c * ratio**ex
        rho_rare = rho * ratio ** (1.0 / gamma)
        fan = rho * np.maximum(2.0 / (gamma + 1.0) - sign * g6 / c * (u - xi), 0.0) ** g_fan
        outside = sign * (xi - np.where(shock, s_shock, head)) > 0
        in_star = np.where(shock, ~outside, sign * (xi - tail) <= 0)
        out = np.where(in_star, np.where(shock, rho_shock, rho_rare), fan)
        return np.where(outside, rho, out)

    left = side(rho_l, u_l, p_l, -1.0)
    right = side(rho_r, u_r, p_r, 1.0)
    return np.where(xi <= us, left, right)
