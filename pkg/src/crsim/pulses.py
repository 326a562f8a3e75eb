"""Pulse envelopes, tones, and the CNOT pulse-program builders.

A drive on transmon i is a gate-charge offset

    n_g,i(t) = sum_tones [ Omega(t - t0) cos(2 pi f (t - t0) - gamma)
                           + beta Omega'(t - t0) sin(2 pi f (t - t0) - gamma) ]

with the quadrature (DRAG) term present only on tones that carry a
DragModifier. The carrier phase is referenced to the tone's own start time
for every tone.

Flat-top support layout: the literal piecewise definition gives a plateau of
length T_S preceded/followed by sin^q rises of length T_rise = rho*T_S, so the
total support is T_S + 2*T_rise ("literal"). The alternative reading makes T_S
the total support with the rise and fall inside it ("inclusive", plateau
T_S - 2*T_rise). Both are implemented; every program records which one it was
built under.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "GaussianEnvelope",
    "FlatTopEnvelope",
    "DragModifier",
    "Tone",
    "PulseProgram",
    "CnotAsymParams",
    "EcrParams",
    "build_asym_cnot",
    "build_ecr_cnot",
    "load_pulse_records",
    "PARAM_NAMES",
    "LAYOUTS",
]

LAYOUTS = ("literal", "inclusive")


class PulseError(ValueError):
    """Invalid pulse parameters or program."""


@dataclass(frozen=True)
class GaussianEnvelope:
    """Lifted Gaussian: zero at both edges, peak amplitude at T_X/2, sigma = T_X/4."""

    amplitude: float
    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise PulseError("Gaussian duration must be positive")
        if self.amplitude < 0:
            raise PulseError("amplitude must be non-negative")

    @property
    def sigma(self):
        return self.duration / 4.0

    def value(self, t):
        t = np.asarray(t, dtype=float)
        sig = self.sigma
        edge = np.exp(-self.duration**2 / (8.0 * sig * sig))  # value removed at t=0
        raw = np.exp(-((t - self.duration / 2.0) ** 2) / (2.0 * sig * sig))
        val = self.amplitude * (raw - edge) / (1.0 - edge)
        return np.where((t <= 0.0) | (t >= self.duration), 0.0, val)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        sig = self.sigma
        edge = np.exp(-self.duration**2 / (8.0 * sig * sig))
        raw = np.exp(-((t - self.duration / 2.0) ** 2) / (2.0 * sig * sig))
        val = self.amplitude * raw * (-(t - self.duration / 2.0) / sig**2) / (1.0 - edge)
        return np.where((t <= 0.0) | (t >= self.duration), 0.0, val)


@dataclass(frozen=True)
class FlatTopEnvelope:
    """sin^q flat-top. ``t_s`` is the plateau length under the literal layout
    and the total support under the inclusive layout."""

    amplitude: float
    t_s: float
    rho: float  # rising ratio, T_rise = rho * t_s
    q: int = 2
    layout: str = "literal"

    def __post_init__(self):
        if not 0.0 < self.rho < 0.5:
            raise PulseError("rising ratio must satisfy 0 < rho < 0.5")
        if self.t_s <= 0:
            raise PulseError("t_s must be positive")
        if self.q < 1 or int(self.q) != self.q:
            raise PulseError("shape index q must be an integer >= 1")
        if self.layout not in LAYOUTS:
            raise PulseError(f"unknown layout {self.layout!r}")
        if self.amplitude < 0:
            raise PulseError("amplitude must be non-negative")

    @property
    def t_rise(self):
        return self.rho * self.t_s

    @property
    def duration(self):
        if self.layout == "literal":
            return self.t_s + 2.0 * self.t_rise
        return self.t_s

    @property
    def plateau(self):
        return self.duration - 2.0 * self.t_rise

    def value(self, t):
        t = np.asarray(t, dtype=float)
        tr = self.t_rise
        dur = self.duration
        # fall is the exact time mirror of the rise
        rise = np.sin(np.pi * np.clip(t, 0.0, tr) / (2.0 * tr)) ** self.q
        fall = np.sin(np.pi * np.clip(dur - t, 0.0, tr) / (2.0 * tr)) ** self.q
        val = self.amplitude * np.where(t < tr, rise, np.where(t > dur - tr, fall, 1.0))
        return np.where((t <= 0.0) | (t >= dur), 0.0, val)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        tr = self.t_rise
        dur = self.duration
        k = np.pi / (2.0 * tr)
        rise_d = self.q * np.sin(k * t) ** (self.q - 1) * np.cos(k * t) * k
        fall_d = -self.q * np.sin(k * (dur - t)) ** (self.q - 1) * np.cos(k * (dur - t)) * k
        val = self.amplitude * np.where(t < tr, rise_d, np.where(t > dur - tr, fall_d, 0.0))
        return np.where((t <= 0.0) | (t >= dur), 0.0, val)


@dataclass(frozen=True)
class DragModifier:
    """Quadrature coefficient beta (ns); the builders set beta = 0.5 / E_C of
    the driven transmon."""

    beta: float

    def __post_init__(self):
        if self.beta < 0:
            raise PulseError("DRAG coefficient must be non-negative")


@dataclass(frozen=True)
class Tone:
    envelope: object  # GaussianEnvelope | FlatTopEnvelope
    frequency: float  # GHz
    phase: float  # rad
    start_time: float = 0.0
    drag: DragModifier | None = None

    @property
    def duration(self):
        return self.envelope.duration

    @property
    def end_time(self):
        return self.start_time + self.duration

    def offset(self, t):
        """Gate-charge offset contributed by this tone (vectorized in t)."""
        u = np.asarray(t, dtype=float) - self.start_time
        arg = 2.0 * np.pi * self.frequency * u - self.phase
        val = self.envelope.value(u) * np.cos(arg)
        if self.drag is not None:
            val = val + self.drag.beta * self.envelope.derivative(u) * np.sin(arg)
        return val


@dataclass(frozen=True)
class PulseProgram:
    """Per-transmon tone schedule plus virtual-Z angles.

    channels maps transmon index -> tuple of tones. Channels without an entry
    are idle. Tones on one channel may not overlap unless allow_overlap is set
    (summing overlapping tones is supported by sample_offsets but unused by
    the gate protocols here).
    """

    n_transmons: int
    channels: dict
    total_time: float
    vz_angles: tuple | None = None
    allow_overlap: bool = False
    layout: str = "literal"

    def __post_init__(self):
        chans = {int(q): tuple(tones) for q, tones in self.channels.items()}
        object.__setattr__(self, "channels", chans)
        vz = self.vz_angles if self.vz_angles is not None else (0.0,) * self.n_transmons
        object.__setattr__(self, "vz_angles", tuple(float(a) for a in vz))
        for q, tones in chans.items():
            if not 0 <= q < self.n_transmons:
                raise PulseError(f"channel index {q} out of range")
            if not self.allow_overlap:
                spans = sorted((t.start_time, t.end_time) for t in tones)
                for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
                    if b0 < a1 - 1e-12:
                        raise PulseError(f"overlapping tones on channel {q}")
        end = max((t.end_time for ts in chans.values() for t in ts), default=0.0)
        if self.total_time < end - 1e-9:
            raise PulseError("total_time earlier than the last tone end")
        if len(self.vz_angles) != self.n_transmons:
            raise PulseError("need one VZ angle per transmon")

    def sample_offsets(self, times) -> np.ndarray:
        """n_g for every channel at the given times; shape (n_transmons, len(times))."""
        times = np.asarray(times, dtype=float)
        out = np.zeros((self.n_transmons, times.size))
        for q, tones in self.channels.items():
            for tone in tones:
                out[q] += tone.offset(times)
        return out

    def driven_channels(self):
        return sorted(q for q, ts in self.channels.items() if ts)


# ---------------------------------------------------------------------------
# parameter records (Tables 3-5 schema)
# ---------------------------------------------------------------------------

# Canonical optimization-vector ordering for the asymmetric protocol.
PARAM_NAMES = (
    "f1", "f2", "TX", "TS", "OmegaX", "OmegaS",
    "rho", "gamma1", "gamma2", "theta0", "theta1", "theta2",
)


@dataclass(frozen=True)
class CnotAsymParams:
    """Parameters of the single-CR + auxiliary-pulse CNOT.

    The 12-dim optimization vector is (f1, f2, TX, TS, OmegaX, OmegaS, rho,
    gamma1, gamma2, theta0, theta1, theta2); shape index q, the (control,
    target) pair and the layout are fixed, not optimized.
    """

    f1: float
    f2: float
    t_x: float
    t_s: float
    omega_x: float
    omega_s: float
    rho: float
    gamma1: float
    gamma2: float
    thetas: tuple
    q: int = 2
    control: int = 0
    target: int = 1
    cr_layout: str = "literal"
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(float(v) for v in self.thetas))
        if self.control == self.target:
            raise PulseError("control and target must differ")
        if self.q not in (1, 2):
            raise PulseError("shape index q must be 1 or 2")

    def as_vector(self) -> np.ndarray:
        th = list(self.thetas) + [0.0] * (3 - len(self.thetas))
        return np.array([
            self.f1, self.f2, self.t_x, self.t_s, self.omega_x, self.omega_s,
            self.rho, self.gamma1, self.gamma2, th[0], th[1], th[2],
        ])

    def with_vector(self, x) -> "CnotAsymParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (12,):
            raise PulseError("parameter vector must have 12 entries")
        n_theta = len(self.thetas)
        return replace(
            self, f1=float(x[0]), f2=float(x[1]), t_x=float(x[2]),
            t_s=float(x[3]), omega_x=float(x[4]), omega_s=float(x[5]),
            rho=float(x[6]), gamma1=float(x[7]), gamma2=float(x[8]),
            thetas=tuple(float(v) for v in x[9:9 + n_theta]),
        )

    def to_record(self) -> dict:
        rec = {
            "label": self.label,
            "protocol": "asym",
            "f1_GHz": self.f1, "f2_GHz": self.f2,
            "TX_ns": self.t_x, "TS_ns": self.t_s,
            "OmegaX": self.omega_x, "OmegaS": self.omega_s,
            "q": self.q, "rho": self.rho,
            "gamma1": self.gamma1, "gamma2": self.gamma2,
            "control": self.control, "target": self.target,
            "cr_layout": self.cr_layout,
        }
        for i, th in enumerate(self.thetas):
            rec[f"theta{i}"] = th
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "CnotAsymParams":
        thetas = []
        i = 0
        while f"theta{i}" in rec:
            thetas.append(float(rec[f"theta{i}"]))
            i += 1
        if not thetas:
            thetas = [0.0, 0.0, 0.0]
        return cls(
            f1=float(rec["f1_GHz"]), f2=float(rec["f2_GHz"]),
            t_x=float(rec["TX_ns"]), t_s=float(rec["TS_ns"]),
            omega_x=float(rec["OmegaX"]), omega_s=float(rec["OmegaS"]),
            rho=float(rec["rho"]), gamma1=float(rec["gamma1"]),
            gamma2=float(rec["gamma2"]), thetas=tuple(thetas),
            q=int(rec.get("q", 2)), control=int(rec["control"]),
            target=int(rec["target"]),
            cr_layout=str(rec.get("cr_layout", "literal")),
            label=str(rec.get("label", "")),
        )


@dataclass(frozen=True)
class EcrParams:
    """Echoed-CR CNOT parameters (two-transmon).

    The echo composition (X, CR/2, X, CR/2 on the control; one final tone on
    the target) is a standard guess -- the source tables list only the four
    control phases and one target phase, so the exact segment ordering is
    provisional. rho and q of the CR segments are likewise free choices.
    """

    f_c: float
    f_t: float
    t_xc: float
    t_xt: float
    t_cr: float
    omega_xc: float
    omega_xt: float
    omega_cr: float
    gammas_c: tuple  # (gamma1C, gamma2C, gamma3C, gamma4C)
    gamma1_t: float
    thetas: tuple
    rho: float = 0.25
    q: int = 2
    control: int = 0
    target: int = 1
    cr_layout: str = "literal"
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gammas_c", tuple(float(g) for g in self.gammas_c))
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        if len(self.gammas_c) != 4:
            raise PulseError("need four control phases")

    def to_record(self) -> dict:
        rec = {
            "label": self.label,
            "protocol": "ecr",
            "fC_GHz": self.f_c, "fT_GHz": self.f_t,
            "TXC_ns": self.t_xc, "TXT_ns": self.t_xt, "TCR_ns": self.t_cr,
            "OmegaXC": self.omega_xc, "OmegaXT": self.omega_xt,
            "OmegaCR": self.omega_cr,
            "gamma1C": self.gammas_c[0], "gamma2C": self.gammas_c[1],
            "gamma3C": self.gammas_c[2], "gamma4C": self.gammas_c[3],
            "gamma1T": self.gamma1_t,
            "q": self.q, "rho": self.rho,
            "control": self.control, "target": self.target,
            "cr_layout": self.cr_layout,
        }
        for i, th in enumerate(self.thetas):
            rec[f"theta{i}"] = th
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "EcrParams":
        thetas = []
        i = 0
        while f"theta{i}" in rec:
            thetas.append(float(rec[f"theta{i}"]))
            i += 1
        return cls(
            f_c=float(rec["fC_GHz"]), f_t=float(rec["fT_GHz"]),
            t_xc=float(rec["TXC_ns"]), t_xt=float(rec["TXT_ns"]),
            t_cr=float(rec["TCR_ns"]), omega_xc=float(rec["OmegaXC"]),
            omega_xt=float(rec["OmegaXT"]), omega_cr=float(rec["OmegaCR"]),
            gammas_c=(
                float(rec["gamma1C"]), float(rec["gamma2C"]),
                float(rec["gamma3C"]), float(rec["gamma4C"]),
            ),
            gamma1_t=float(rec["gamma1T"]), thetas=tuple(thetas),
            rho=float(rec.get("rho", 0.25)), q=int(rec.get("q", 2)),
            control=int(rec["control"]), target=int(rec["target"]),
            cr_layout=str(rec.get("cr_layout", "literal")),
            label=str(rec.get("label", "")),
        )


def record_to_params(rec: dict):
    if rec.get("protocol", "asym") == "ecr":
        return EcrParams.from_record(rec)
    return CnotAsymParams.from_record(rec)


def load_pulse_records(path) -> list:
    """Load a pulse parameter file: a list of records or a single record."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    return [record_to_params(rec) for rec in data]


# ---------------------------------------------------------------------------
# program builders
# ---------------------------------------------------------------------------

def build_asym_cnot(params: CnotAsymParams, n_transmons: int,
                    ec_target: float) -> PulseProgram:
    """CR tone on the control at f1, then a DRAG Gaussian on the target at f2.

    The auxiliary tone starts when the CR envelope ends, so total_time is the
    CR support plus T_X under either layout. beta = 0.5 / E_C of the target.
    """
    if not (0 <= params.control < n_transmons and 0 <= params.target < n_transmons):
        raise PulseError("qubit index out of range")
    cr_env = FlatTopEnvelope(
        amplitude=params.omega_s, t_s=params.t_s, rho=params.rho,
        q=params.q, layout=params.cr_layout,
    )
    cr = Tone(envelope=cr_env, frequency=params.f1, phase=params.gamma1)
    aux = Tone(
        envelope=GaussianEnvelope(amplitude=params.omega_x, duration=params.t_x),
        frequency=params.f2,
        phase=params.gamma2,
        start_time=cr_env.duration,
        drag=DragModifier(beta=0.5 / ec_target),
    )
    thetas = params.thetas
    if len(thetas) != n_transmons:
        thetas = tuple(list(thetas)[:n_transmons]) + (0.0,) * max(0, n_transmons - len(thetas))
    return PulseProgram(
        n_transmons=n_transmons,
        channels={params.control: (cr,), params.target: (aux,)},
        total_time=cr_env.duration + params.t_x,
        vz_angles=thetas,
        layout=params.cr_layout,
    )


def build_ecr_cnot(params: EcrParams, n_transmons: int,
                   ec_control: float, ec_target: float) -> PulseProgram:
    """Echoed-CR composition: control = [X, CR/2, X, CR/2], target = final X.

    Control X tones drive at f_C with DRAG beta = 0.5/E_C,control; CR segments
    drive the control at f_T; the target's closing tone drives at f_T with
    beta = 0.5/E_C,target.
    """
    if not (0 <= params.control < n_transmons and 0 <= params.target < n_transmons):
        raise PulseError("qubit index out of range")
    g1, g2, g3, g4 = params.gammas_c
    x_env = GaussianEnvelope(amplitude=params.omega_xc, duration=params.t_xc)
    cr_env = FlatTopEnvelope(
        amplitude=params.omega_cr, t_s=params.t_cr / 2.0, rho=params.rho,
        q=params.q, layout=params.cr_layout,
    )
    drag_c = DragModifier(beta=0.5 / ec_control)
    t = 0.0
    control_tones = []
    control_tones.append(Tone(x_env, params.f_c, g1, t, drag_c))
    t += x_env.duration
    control_tones.append(Tone(cr_env, params.f_t, g2, t))
    t += cr_env.duration
    control_tones.append(Tone(x_env, params.f_c, g3, t, drag_c))
    t += x_env.duration
    control_tones.append(Tone(cr_env, params.f_t, g4, t))
    t += cr_env.duration
    target_tone = Tone(
        GaussianEnvelope(amplitude=params.omega_xt, duration=params.t_xt),
        params.f_t, params.gamma1_t, t, DragModifier(beta=0.5 / ec_target),
    )
    total = t + target_tone.duration
    thetas = params.thetas
    if len(thetas) != n_transmons:
        thetas = tuple(list(thetas)[:n_transmons]) + (0.0,) * max(0, n_transmons - len(thetas))
    return PulseProgram(
        n_transmons=n_transmons,
        channels={params.control: tuple(control_tones), params.target: (target_tone,)},
        total_time=total,
        vz_angles=thetas,
        layout=params.cr_layout,
    )
