"""Binary checkpoint of a stepper state; restarts are bit-exact.

Layout: a little-endian header (magic, version, n, nu, grashof, seed, t,
step_index, history length) followed by the raw complex128 vorticity
coefficients and, per history entry, its time level and raw tendency
coefficients.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import Grid
from .stepping import Stepper

MAGIC = b"NUDGECKP"
VERSION = 1
_HEADER = struct.Struct("<8sII d d Q d Q I")

__all__ = ["MAGIC", "VERSION", "Checkpoint", "save_checkpoint", "load_checkpoint",
           "stepper_from_checkpoint"]


@dataclass
class Checkpoint:
    n: int
    nu: float
    grashof: float
    seed: int
    t: float
    step_index: int
    omega_hat: np.ndarray
    history: list[tuple[float, np.ndarray]]


def save_checkpoint(path, stepper: Stepper, *, grashof: float, seed: int) -> None:
    """Write the stepper state (including tendency history) to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = stepper.grid.n
    header = _HEADER.pack(MAGIC, VERSION, n, stepper.nu, float(grashof),
                          int(seed), stepper.t, stepper.step_index,
                          len(stepper.history))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(stepper.omega_hat, dtype="<c16").tobytes())
        for t_level, rhs in stepper.history:
            fh.write(struct.pack("<d", t_level))
            fh.write(np.ascontiguousarray(rhs, dtype="<c16").tobytes())


def load_checkpoint(path) -> Checkpoint:
    """Read a checkpoint; raises ValueError on format problems."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: file too short for a checkpoint header")
    magic, version, n, nu, grashof, seed, t, step_index, n_hist = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    field_bytes = 16 * n * n
    expected = _HEADER.size + field_bytes + n_hist * (8 + field_bytes)
    if len(raw) != expected:
        raise ValueError(f"{path}: truncated checkpoint ({len(raw)} of {expected} bytes)")
    offset = _HEADER.size
    omega = np.frombuffer(raw, dtype="<c16", count=n * n, offset=offset).reshape(n, n).copy()
    offset += field_bytes
    history = []
    for _ in range(n_hist):
        (t_level,) = struct.unpack_from("<d", raw, offset)
        offset += 8
        rhs = np.frombuffer(raw, dtype="<c16", count=n * n, offset=offset).reshape(n, n).copy()
        offset += field_bytes
        history.append((t_level, rhs))
    return Checkpoint(n=n, nu=nu, grashof=grashof, seed=seed, t=t,
                      step_index=step_index, omega_hat=omega, history=history)


def stepper_from_checkpoint(ck: Checkpoint, grid: Grid, dt: float) -> Stepper:
    """Rebuild the stepper on ``grid``; continues bit-for-bit."""
    if grid.n != ck.n:
        raise ValueError(f"checkpoint grid n={ck.n} does not match configured n={grid.n}")
    return Stepper(grid, ck.omega_hat, ck.nu, dt, t=ck.t,
                   step_index=ck.step_index, history=ck.history)
