"""Integrating-factor Adams-Bashforth time stepping for spectral vorticity.

The linear (viscous) term is solved exactly through per-mode exponential
damping; the explicit tendency history is damped from each entry's own time
level up to the new time. Startup uses a damped forward-Euler step followed
by a damped two-step Adams-Bashforth step before the three-step scheme
takes over.
"""

from __future__ import annotations

import numpy as np

from .spectral import Grid

AB3_WEIGHTS = (23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0)
AB2_WEIGHTS = (1.5, -0.5)

__all__ = [
    "BlowUpError",
    "Stepper",
    "if_euler_update",
    "if_ab2_update",
    "if_ab3_update",
]


class BlowUpError(RuntimeError):
    """A stepped field or tendency stopped being finite."""


def if_euler_update(y, rhs, decay, dt):
    """One forward-Euler step with exact damping of the linear term."""
    damp = np.exp(-decay * dt)
    return damp * (y + dt * rhs)


def if_ab2_update(y, rhs_now, rhs_prev, decay, dt):
    """Two-step update; the older tendency is damped across two intervals."""
    damp = np.exp(-decay * dt)
    return damp * y + dt * (
        AB2_WEIGHTS[0] * damp * rhs_now + AB2_WEIGHTS[1] * damp**2 * rhs_prev
    )


def if_ab3_update(y, rhs_now, rhs_prev, rhs_prev2, decay, dt):
    """Three-step update; each history level is damped from its own time."""
    damp = np.exp(-decay * dt)
    return damp * y + dt * (
        AB3_WEIGHTS[0] * damp * rhs_now
        + AB3_WEIGHTS[1] * damp**2 * rhs_prev
        + AB3_WEIGHTS[2] * damp**3 * rhs_prev2
    )


class Stepper:
    """Carries one spectral vorticity field forward in time.

    ``history`` holds up to two ``(time, tendency)`` pairs, newest first,
    covering the two previous steps. After every step the state is
    re-projected onto the dealiased band and kept mean-free.
    """

    def __init__(self, grid: Grid, omega_hat, nu: float, dt: float, *,
                 t: float = 0.0, step_index: int = 0, history=None):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if nu < 0:
            raise ValueError("viscosity must be nonnegative")
        self.grid = grid
        omega = np.array(omega_hat, dtype=np.complex128, copy=True)
        if omega.shape != grid.shape:
            raise ValueError(f"state shape {omega.shape} does not match grid {grid.shape}")
        omega *= grid.dealias_mask
        omega[0, 0] = 0.0
        self.omega_hat = omega
        self.nu = float(nu)
        self.dt = float(dt)
        self.t = float(t)
        self.step_index = int(step_index)
        self.history = list(history) if history else []
        if len(self.history) > 2:
            raise ValueError("history holds at most two tendencies")
        damp = np.exp(-self.nu * grid.k2 * self.dt)
        self._damp1 = damp
        self._damp2 = damp * damp
        self._damp3 = self._damp2 * damp

    @property
    def bootstrapped(self) -> bool:
        return len(self.history) >= 2

    def step(self, rhs_hat) -> None:
        """Advance one dt with the startup-appropriate scheme."""
        if self.bootstrapped:
            self.ab3_step(rhs_hat)
        else:
            self.bootstrap_step(rhs_hat)

    def bootstrap_step(self, rhs_hat) -> None:
        """Startup step: damped Euler first, then damped two-step AB."""
        if self.bootstrapped:
            raise RuntimeError("startup already complete; use ab3_step")
        rhs = self._checked(rhs_hat)
        if not self.history:
            new = self._damp1 * (self.omega_hat + self.dt * rhs)
        else:
            new = self._damp1 * self.omega_hat + self.dt * (
                AB2_WEIGHTS[0] * self._damp1 * rhs
                + AB2_WEIGHTS[1] * self._damp2 * self.history[0][1]
            )
        self._commit(new, rhs)

    def ab3_step(self, rhs_hat) -> None:
        """Third-order step; requires the two stored tendencies."""
        if not self.bootstrapped:
            raise RuntimeError("two stored tendencies required before the three-step scheme")
        rhs = self._checked(rhs_hat)
        c0, c1, c2 = AB3_WEIGHTS
        new = self._damp1 * self.omega_hat + self.dt * (
            c0 * self._damp1 * rhs
            + c1 * self._damp2 * self.history[0][1]
            + c2 * self._damp3 * self.history[1][1]
        )
        self._commit(new, rhs)

    def add_increment(self, delta_hat) -> None:
        """Apply an explicit state increment outside the multistep history."""
        new = self.omega_hat + delta_hat
        if not np.all(np.isfinite(new)):
            raise BlowUpError("non-finite vorticity after increment")
        new[0, 0] = 0.0
        self.omega_hat = new

    def _checked(self, rhs_hat) -> np.ndarray:
        rhs = np.asarray(rhs_hat)
        if rhs.shape != self.grid.shape:
            raise ValueError(f"tendency shape {rhs.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(rhs)):
            raise BlowUpError("non-finite tendency")
        if not np.all(np.isfinite(self.omega_hat)):
            raise BlowUpError("non-finite vorticity")
        return rhs

    def _commit(self, new_omega: np.ndarray, rhs_now: np.ndarray) -> None:
        if not np.all(np.isfinite(new_omega)):
            raise BlowUpError("non-finite vorticity after step")
        new_omega *= self.grid.dealias_mask
        new_omega[0, 0] = 0.0
        self.history = [(self.t, rhs_now), *self.history[:1]]
        self.omega_hat = new_omega
        self.t += self.dt
        self.step_index += 1
