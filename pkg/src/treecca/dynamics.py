"""Synchronous CCA and GHM dynamics on finite tree truncations.

CCA: a node advances one color mod kappa when at least theta neighbors hold
its successor color, else it keeps its color.  GHM: color 0 is resting,
color 1 excited, colors 2..kappa-1 refractory; a resting node becomes
excited when at least theta neighbors are excited, every non-resting node
advances one state per step.  Both rules read the full previous snapshot
(double-buffered).

On a truncation of depth R the root's trajectory equals the infinite-tree
trajectory for all t <= R (radius-1 synchronous light cone); Trajectory
records that validity bound.  Fixation of the root on the infinite tree is
only ever approximated through censored horizons, never asserted.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ModelMismatchError, ParameterError
from .tree import Coloring, TreeTopology

CCA = "cca"
GHM = "ghm"


class _Censored:
    """Marker for a last-excitation time that may exceed the horizon."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "CENSORED"


CENSORED = _Censored()


@dataclass(frozen=True)
class ModelParams:
    """Model selector plus color count and contact threshold."""

    model: str
    kappa: int
    theta: int

    def __post_init__(self):
        if self.model not in (CCA, GHM):
            raise ParameterError(f"model must be '{CCA}' or '{GHM}', got {self.model!r}")
        if self.kappa < 3:
            raise ParameterError(f"kappa must be >= 3, got {self.kappa}")
        if self.theta < 1:
            raise ParameterError(f"theta must be >= 1, got {self.theta}")

    @property
    def outside_regime(self) -> bool:
        """theta=1 is accepted for exploration; the probabilistic machinery
        in numerics/experiments assumes theta >= 2."""
        return self.theta < 2


@dataclass
class Trajectory:
    """Aggregate record of one run; full configurations are not stored."""

    model: str
    kappa: int
    theta: int
    horizon: int
    root_colors: np.ndarray    # horizon+1 entries
    excited_count: np.ndarray  # GHM: #color-1 nodes; CCA: #changed nodes (0 at t=0)
    last_excited: int          # GHM only: last t <= horizon with root color 1, -1 never
    censored: bool             # GHM only: root excited at the final step
    lightcone_valid_upto: int


def _step_kernel(model):
    return _kernels.cca_step_kernel if model == CCA else _kernels.ghm_step_kernel


def cca_step(topology: TreeTopology, coloring: Coloring, theta: int) -> Coloring:
    """One synchronous CCA step; returns a new coloring."""
    if theta < 1:
        raise ParameterError(f"theta must be >= 1, got {theta}")
    out = np.empty_like(coloring.colors)
    _kernels.cca_step_kernel(coloring.colors, out, topology.parent,
                             topology.child_ptr, coloring.kappa, theta)
    return Coloring(coloring.kappa, out, topology)


def ghm_step(topology: TreeTopology, coloring: Coloring, theta: int) -> Coloring:
    """One synchronous GHM step; returns a new coloring."""
    if theta < 1:
        raise ParameterError(f"theta must be >= 1, got {theta}")
    out = np.empty_like(coloring.colors)
    _kernels.ghm_step_kernel(coloring.colors, out, topology.parent,
                             topology.child_ptr, coloring.kappa, theta)
    return Coloring(coloring.kappa, out, topology)


def run(topology: TreeTopology, initial: Coloring, params: ModelParams,
        horizon: int) -> Trajectory:
    """Apply the selected rule `horizon` times from the initial coloring."""
    if horizon < 0:
        raise ParameterError(f"horizon must be >= 0, got {horizon}")
    if initial.kappa != params.kappa:
        raise ParameterError("coloring kappa does not match params")
    kernel = _step_kernel(params.model)
    cur = initial.colors.copy()
    buf = np.empty_like(cur)
    root_colors = np.empty(horizon + 1, dtype=np.int64)
    excited = np.empty(horizon + 1, dtype=np.int64)
    root_colors[0] = cur[topology.root]
    if params.model == GHM:
        excited[0] = int(np.count_nonzero(cur == 1))
    else:
        excited[0] = 0
    for t in range(1, horizon + 1):
        kernel(cur, buf, topology.parent, topology.child_ptr,
               params.kappa, params.theta)
        if params.model == GHM:
            excited[t] = int(np.count_nonzero(buf == 1))
        else:
            excited[t] = _kernels.changed_count(cur, buf)
        cur, buf = buf, cur
        root_colors[t] = cur[topology.root]
    if params.model == GHM:
        excited_times = np.nonzero(root_colors == 1)[0]
        last = int(excited_times[-1]) if excited_times.size else -1
        censored = bool(root_colors[horizon] == 1)
    else:
        last = -1
        censored = False
    return Trajectory(model=params.model, kappa=params.kappa,
                      theta=params.theta, horizon=horizon,
                      root_colors=root_colors, excited_count=excited,
                      last_excited=last, censored=censored,
                      lightcone_valid_upto=min(horizon, topology.depth))


def last_excited_time(trajectory: Trajectory):
    """Last t <= horizon with the root excited; -1 if never.

    Returns CENSORED when the root is excited at the final step, since the
    true last excitation time may lie beyond the horizon.
    """
    if trajectory.model != GHM:
        raise ModelMismatchError(
            f"last_excited_time needs a GHM trajectory, got {trajectory.model}")
    if trajectory.censored:
        return CENSORED
    return trajectory.last_excited


@dataclass(frozen=True)
class FixationResult:
    """Outcome of cycle detection on a finite deterministic run."""

    kind: str         # "fixed" | "periodic" | "undecided"
    at_step: int = -1      # fixed: first step whose configuration repeats forever
    period: int = -1       # periodic only
    from_step: int = -1    # periodic only


def _fingerprint(arr: np.ndarray) -> bytes:
    return hashlib.blake2b(arr.tobytes(), digest_size=16).digest()


def detect_fixation(topology: TreeTopology, initial: Coloring,
                    params: ModelParams, max_steps: int) -> FixationResult:
    """Detect a fixed point or a cycle within max_steps.

    Keeps 128-bit fingerprints of every visited configuration; a
    fingerprint match is verified by recomputing the matched configuration
    from the initial coloring and comparing in full, so a false positive is
    impossible.  Returns undecided if neither occurs within max_steps.
    """
    if max_steps < 1:
        raise ParameterError(f"max_steps must be >= 1, got {max_steps}")
    kernel = _step_kernel(params.model)

    def replay(steps: int) -> np.ndarray:
        c = initial.colors.copy()
        b = np.empty_like(c)
        for _ in range(steps):
            kernel(c, b, topology.parent, topology.child_ptr,
                   params.kappa, params.theta)
            c, b = b, c
        return c

    seen: dict[bytes, list[int]] = {_fingerprint(initial.colors): [0]}
    cur = initial.colors.copy()
    buf = np.empty_like(cur)
    for t in range(1, max_steps + 1):
        kernel(cur, buf, topology.parent, topology.child_ptr,
               params.kappa, params.theta)
        if np.array_equal(cur, buf):
            return FixationResult(kind="fixed", at_step=t - 1)
        cur, buf = buf, cur
        fp = _fingerprint(cur)
        for s in seen.get(fp, ()):
            if np.array_equal(replay(s), cur):
                return FixationResult(kind="periodic", period=t - s, from_step=s)
        seen.setdefault(fp, []).append(t)
    return FixationResult(kind="undecided")
