"""Two-state linear resonate-and-fire (RAF) neuron dynamics.

The subthreshold system is the linear ODE

    du/dt = -u/tau_u - omega_v * v + I_u(t)
    dv/dt =  omega_u * u - v/tau_v

with a Heaviside spike output z = H(v - theta) and no reset: crossing the
threshold never modifies the state. Because the system is linear, stepping
uses the exact closed-form matrix exponential, so traces carry no step-size
artifacts. States are dimensionless and centered at zero; the hardware layer
maps them onto volts around the common-mode voltage.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SimulationError

__all__ = [
    "RafParams",
    "NeuronState",
    "InputSignal",
    "StateTrace",
    "transition_terms",
    "transition_matrix",
    "input_vector",
    "step",
    "simulate",
    "resonance_response",
]


@dataclass(frozen=True)
class RafParams:
    """Mathematical neuron parameters.

    omega_u, omega_v: cross-coupling rates (rad/s), >= 0.
    tau_u, tau_v: decay time constants (s), > 0; math.inf means no decay.
    theta: spike threshold on the v state (state units), finite.
    """

    omega_u: float
    omega_v: float
    tau_u: float = math.inf
    tau_v: float = math.inf
    theta: float = 1.0

    def __post_init__(self):
        for name in ("omega_u", "omega_v"):
            w = getattr(self, name)
            if not (w >= 0.0 and math.isfinite(w)):
                raise ValueError(f"{name} must be finite and >= 0, got {w!r}")
        for name in ("tau_u", "tau_v"):
            tau = getattr(self, name)
            if not tau > 0.0:  # inf allowed
                raise ValueError(f"{name} must be > 0 (inf = no decay), got {tau!r}")
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta!r}")

    @property
    def k_u(self) -> float:
        """Decay rate 1/tau_u (0 for no decay)."""
        return 0.0 if math.isinf(self.tau_u) else 1.0 / self.tau_u

    @property
    def k_v(self) -> float:
        return 0.0 if math.isinf(self.tau_v) else 1.0 / self.tau_v

    @property
    def resonance_frequency(self) -> float:
        """Natural oscillation frequency Im(eigenvalue)/2pi in Hz (0 if overdamped)."""
        delta = 0.5 * (self.k_u - self.k_v)
        disc = self.omega_u * self.omega_v - delta * delta
        return math.sqrt(disc) / (2.0 * math.pi) if disc > 0.0 else 0.0


@dataclass(frozen=True)
class NeuronState:
    """Instantaneous (u, v) state pair."""

    u: float = 0.0
    v: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError(f"state must be finite, got ({self.u!r}, {self.v!r})")


class InputSignal:
    """Input current I_u(t) driving the u state.

    Two representations, which may be combined:
      * ``events``: sparse weighted impulses (time, amplitude); each impulse
        adds its amplitude to u at the end of the step containing it.
      * ``dense``: per-step current values (state units / s), held constant
        over each step (zero-order hold, integrated exactly).
    """

    def __init__(self, dense=None, events=None):
        self.dense = None if dense is None else np.asarray(dense, dtype=float)
        if events:
            events = sorted(events, key=lambda e: e[0])
            times = [t for t, _ in events]
            if any(t < 0 for t in times):
                raise ValueError("event times must be >= 0")
            self.events = [(float(t), float(a)) for t, a in events]
        else:
            self.events = []

    @classmethod
    def zero(cls) -> "InputSignal":
        return cls()

    @classmethod
    def from_dense(cls, currents) -> "InputSignal":
        return cls(dense=currents)

    @classmethod
    def from_events(cls, events) -> "InputSignal":
        return cls(events=events)

    @classmethod
    def impulse(cls, amplitude: float, time: float = 0.0) -> "InputSignal":
        return cls(events=[(time, amplitude)])

    def impulse_increments(self, dt: float, n_steps: int) -> np.ndarray:
        """Per-step impulse amounts; an event at t lands in step floor(t/dt)."""
        inc = np.zeros(n_steps)
        for t, amp in self.events:
            idx = min(int(t / dt), n_steps - 1)
            inc[idx] += amp
        return inc

    def dense_currents(self, n_steps: int) -> np.ndarray:
        if self.dense is None:
            return np.zeros(n_steps)
        if len(self.dense) != n_steps:
            raise ValueError(
                f"dense input has {len(self.dense)} samples, expected {n_steps}"
            )
        return self.dense


@dataclass
class StateTrace:
    """Recorded trajectory: arrays of post-step (u, v, z) values.

    Sample i holds the state after i+1 steps, at time t = (i+1)*dt.
    """

    dt: float
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if len(self.u) == 0:
            raise ValueError("trace must be nonempty")

    def __len__(self):
        return len(self.u)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(1, len(self.u) + 1)

    @property
    def samples(self):
        """Ordered (u, v, z) triples."""
        return list(zip(self.u.tolist(), self.v.tolist(), self.z.tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "u", "v", "z"])
            for t, u, v, z in zip(self.times, self.u, self.v, self.z):
                writer.writerow([repr(float(t)), repr(float(u)), repr(float(v)), int(z)])

    @classmethod
    def from_csv(cls, path, metadata=None) -> "StateTrace":
        rows = np.genfromtxt(path, delimiter=",", skip_header=1)
        rows = np.atleast_2d(rows)
        dt = rows[0, 0] if len(rows) == 1 else rows[1, 0] - rows[0, 0]
        return cls(dt=float(dt), u=rows[:, 1], v=rows[:, 2],
                   z=rows[:, 3].astype(int), metadata=metadata or {})


def transition_terms(omega_u, omega_v, k_u, k_v, dt):
    """Entries (m00, m01, m10, m11) of exp(A*dt) for A = [[-k_u, -omega_v], [omega_u, -k_v]].

    Closed form via A = mu*I + N with N*N = -disc*I: disc > 0 gives damped
    rotation, disc < 0 real (overdamped) modes, disc = 0 the critical limit.
    The overdamped branch is evaluated through exp((mu +- lam)*dt), whose
    arguments are never positive, so no intermediate overflows. Works
    elementwise on arrays.
    """
    ou, ov, ku, kv = np.broadcast_arrays(
        np.asarray(omega_u, dtype=float), np.asarray(omega_v, dtype=float),
        np.asarray(k_u, dtype=float), np.asarray(k_v, dtype=float))
    shape = ou.shape
    ou, ov, ku, kv = (np.atleast_1d(x).astype(float).ravel()
                      for x in (ou, ov, ku, kv))
    with np.errstate(over="ignore", invalid="ignore"):
        mu = -0.5 * (ku + kv)
        delta = 0.5 * (ku - kv)
        disc = ou * ov - delta * delta

        # EC = exp(mu*dt)*c(dt), ES = exp(mu*dt)*s(dt), c/s the branch kernels
        EC = np.empty_like(mu)
        ES = np.empty_like(mu)
        osc = disc > 0.0
        if osc.any():
            om = np.sqrt(disc[osc])
            env = np.exp(mu[osc] * dt)
            EC[osc] = env * np.cos(om * dt)
            ES[osc] = env * np.sin(om * dt) / om
        over = disc < 0.0
        if over.any():
            lam = np.sqrt(-disc[over])
            m = mu[over]
            ep = np.exp((m + lam) * dt)  # lam <= |mu|: both exponents <= 0
            em = np.exp((m - lam) * dt)
            EC[over] = 0.5 * (ep + em)
            es = np.empty_like(lam)
            small = lam * dt < 0.5
            if small.any():
                es[small] = (np.exp(m[small] * dt)
                             * np.sinh(lam[small] * dt) / lam[small])
            big = ~small
            if big.any():
                es[big] = (ep[big] - em[big]) / (2.0 * lam[big])
            ES[over] = es
        crit = disc == 0.0
        if crit.any():
            env = np.exp(mu[crit] * dt)
            EC[crit] = env
            ES[crit] = env * dt

        m00 = (EC - delta * ES).reshape(shape)
        m01 = (-ov * ES).reshape(shape)
        m10 = (ou * ES).reshape(shape)
        m11 = (EC + delta * ES).reshape(shape)
    return m00, m01, m10, m11


def transition_matrix(params: RafParams, dt: float) -> np.ndarray:
    """Exact one-step propagator exp(A*dt) as a 2x2 array."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    m00, m01, m10, m11 = transition_terms(
        params.omega_u, params.omega_v, params.k_u, params.k_v, dt)
    mat = np.array([[m00, m01], [m10, m11]], dtype=float)
    if not np.all(np.isfinite(mat)):
        raise SimulationError(f"non-finite transition matrix for {params!r}, dt={dt!r}")
    return mat


def input_vector(params: RafParams, dt: float) -> np.ndarray:
    """Zero-order-hold input weights b = integral_0^dt exp(A*s) @ [1, 0] ds.

    A constant current I held over the step contributes b*I to the state.
    Evaluated as G(dt) @ e1 with G(h) = integral of exp(A*s): a short Taylor
    series at a halved step, then doubled via G(2h) = (I + exp(A*h)) @ G(h).
    Immune to the singular-A corner cases of the eigenvalue formulas.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    A = np.array([[-params.k_u, -params.omega_v],
                  [params.omega_u, -params.k_v]], dtype=float)
    scale = np.max(np.abs(A)) * dt
    n_half = max(0, int(math.ceil(math.log2(scale / 0.5)))) if scale > 0.5 else 0
    h = dt / (1 << n_half)

    # G(h) = sum_k A^k h^(k+1) / (k+1)!   (14 terms: remainder < 1e-17 at |A|h <= 0.5)
    G = np.eye(2) * h
    term = np.eye(2) * h
    for k in range(1, 15):
        term = term @ A * (h / (k + 1))
        G = G + term

    E = transition_matrix(params, h)
    for _ in range(n_half):
        G = G + E @ G
        E = E @ E
    b = G @ np.array([1.0, 0.0])
    if not np.all(np.isfinite(b)):
        raise SimulationError(f"non-finite input vector for {params!r}, dt={dt!r}")
    return b


def step(state: NeuronState, params: RafParams, input_increment: float,
         dt: float, hold_current: float = 0.0):
    """Advance one step of size dt; returns (new_state, spiked).

    input_increment is added to u at the step boundary (impulse model);
    hold_current is a constant current integrated exactly over the step.
    The spike flag is v >= theta evaluated on the new state; the state
    itself is never reset.
    """
    m00, m01, m10, m11 = transition_terms(
        params.omega_u, params.omega_v, params.k_u, params.k_v, dt)
    u = m00 * state.u + m01 * state.v + input_increment
    v = m10 * state.u + m11 * state.v
    if hold_current != 0.0:
        b = input_vector(params, dt)
        u = u + b[0] * hold_current
        v = v + b[1] * hold_current
    if not (np.isfinite(u) and np.isfinite(v)):
        raise SimulationError(
            f"non-finite state ({u!r}, {v!r}) after step with {params!r}, dt={dt!r}")
    new_state = NeuronState(float(u), float(v))
    return new_state, bool(new_state.v >= params.theta)


def simulate(params: RafParams, input_signal: InputSignal, dt: float,
             n_steps: int, initial_state: NeuronState | None = None) -> StateTrace:
    """Simulate n_steps of the neuron; deterministic given its inputs."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps!r}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    state = initial_state or NeuronState()
    inc_u = input_signal.impulse_increments(dt, n_steps)
    inc_v = np.zeros(n_steps)
    currents = input_signal.dense_currents(n_steps)
    if np.any(currents):
        b = input_vector(params, dt)
        inc_u = inc_u + b[0] * currents
        inc_v = b[1] * currents

    m00, m01, m10, m11 = transition_terms(
        params.omega_u, params.omega_v, params.k_u, params.k_v, dt)
    u, v = state.u, state.v
    us = np.empty(n_steps)
    vs = np.empty(n_steps)
    zs = np.empty(n_steps, dtype=np.int8)
    for i in range(n_steps):
        u, v = (m00 * u + m01 * v + inc_u[i],
                m10 * u + m11 * v + inc_v[i])
        if not (np.isfinite(u) and np.isfinite(v)):
            raise SimulationError(
                f"non-finite state at step {i} with {params!r}, dt={dt!r}")
        us[i], vs[i], zs[i] = u, v, v >= params.theta
    return StateTrace(dt=dt, u=us, v=vs, z=zs,
                      metadata={"params": params, "n_steps": n_steps})


def resonance_response(params: RafParams, drive_frequency: float,
                       drive_amplitude: float, duration: float,
                       steps_per_cycle: int = 64) -> float:
    """Peak |v| over the steady portion of a sinusoidally driven run.

    The drive current amp*sin(2*pi*f*t) is sampled at step midpoints and
    applied zero-order-hold; the first 60% of the run is discarded as
    transient, so duration should cover several decay times.
    """
    if not drive_frequency > 0:
        raise ValueError(f"drive_frequency must be > 0, got {drive_frequency!r}")
    f_ref = max(drive_frequency, params.resonance_frequency)
    dt = 1.0 / (steps_per_cycle * f_ref)
    n_steps = max(int(round(duration / dt)), 2)
    t_mid = (np.arange(n_steps) + 0.5) * dt
    currents = drive_amplitude * np.sin(2.0 * math.pi * drive_frequency * t_mid)
    trace = simulate(params, InputSignal.from_dense(currents), dt, n_steps)
    steady = trace.v[int(0.6 * n_steps):]
    return float(np.max(np.abs(steady)))
