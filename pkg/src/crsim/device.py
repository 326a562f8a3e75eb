"""Device model: transmon and resonator Hamiltonians on the truncated product space.

Conventions used throughout the package:

* hbar = 1, time in ns, energies in GHz. All tabulated energies (E_C, E_J,
  omega_R, G) are cyclic frequencies, i.e. the quantity usually written E/2pi.
  Propagators therefore exponentiate ``exp(-i * 2*pi * H * tau)``; this module
  stores plain cyclic-GHz matrices and never applies the 2pi itself.
* A transmon at zero gate offset is diagonalized in the charge basis
  n in [-N_c, N_c]: diagonal ``4 E_C n^2``, off-diagonal ``-E_J/2`` on the two
  first off-diagonals (the cos-phi term couples adjacent charge states).
* Tensor ordering of the product space is (resonator, T0, T1, ...); all flat
  indexing goes through :class:`BasisIndexer`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TransmonSpec",
    "ResonatorSpec",
    "CouplingSpec",
    "DeviceSpec",
    "EigenSolution",
    "BasisIndexer",
    "SystemOperators",
    "diagonalize_transmon",
    "qubit_frequency",
    "anharmonicity",
    "build_system",
    "convergence_check",
    "load_device",
    "save_device",
]

# Hard cap on the product-space dimension; 3 transmons x 4 levels x 4 Fock
# states is 256, so anything beyond a few thousand signals a config mistake.
DIMENSION_CAP = 4096


class DeviceError(ValueError):
    """Invalid device specification."""


@dataclass(frozen=True)
class TransmonSpec:
    """Fixed-frequency transmon parameters (cyclic GHz)."""

    charging_energy: float  # E_C
    josephson_energy: float  # E_J
    charge_cutoff: int = 15  # charge basis spans n in [-N_c, N_c]
    kept_levels: int = 4

    def __post_init__(self):
        if self.charging_energy <= 0 or self.josephson_energy <= 0:
            raise DeviceError("E_C and E_J must be positive")
        if self.charge_cutoff < 5:
            raise DeviceError("charge cutoff N_c must be >= 5")
        if self.kept_levels > 2 * self.charge_cutoff + 1 - 2:
            raise DeviceError("kept_levels leaves no convergence headroom")


@dataclass(frozen=True)
class ResonatorSpec:
    """LC resonator (cyclic GHz), truncated to the lowest Fock states."""

    frequency: float  # omega_R
    kept_levels: int = 4

    def __post_init__(self):
        if self.frequency <= 0:
            raise DeviceError("resonator frequency must be positive")
        if self.kept_levels < 2:
            raise DeviceError("resonator needs at least 2 kept levels")


@dataclass(frozen=True)
class CouplingSpec:
    """Transmon-resonator coupling energies G_i (cyclic GHz)."""

    couplings: tuple

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(g) for g in self.couplings))


@dataclass(frozen=True)
class DeviceSpec:
    transmons: tuple
    resonator: ResonatorSpec
    coupling: CouplingSpec

    def __post_init__(self):
        object.__setattr__(self, "transmons", tuple(self.transmons))
        if not 1 <= len(self.transmons) <= 3:
            raise DeviceError("1-3 transmons supported")
        if len(self.coupling.couplings) != len(self.transmons):
            raise DeviceError("need one coupling energy per transmon")

    @property
    def n_transmons(self):
        return len(self.transmons)


GAUGE_CONVENTION = "largest-charge-component-real-positive"


@dataclass(frozen=True)
class EigenSolution:
    """Kept eigenpairs of a single transmon at n_g = 0.

    ``energies`` are shifted so the ground level is exactly 0.
    ``charge_matrix`` is n-hat projected into the kept eigenbasis; real in the
    declared gauge (eigenvectors of a real symmetric matrix, sign-fixed).
    """

    energies: np.ndarray
    charge_matrix: np.ndarray
    gauge_convention: str = GAUGE_CONVENTION


def _charge_hamiltonian(spec: TransmonSpec, n_c: int | None = None) -> np.ndarray:
    n_c = spec.charge_cutoff if n_c is None else n_c
    n = np.arange(-n_c, n_c + 1, dtype=float)
    h = np.diag(4.0 * spec.charging_energy * n**2)
    off = -spec.josephson_energy / 2.0 * np.ones(2 * n_c)
    h += np.diag(off, 1) + np.diag(off, -1)
    return h


def diagonalize_transmon(spec: TransmonSpec, n_c: int | None = None) -> EigenSolution:
    """Diagonalize the charge-basis transmon and project n-hat onto kept levels."""
    n_c = spec.charge_cutoff if n_c is None else n_c
    h = _charge_hamiltonian(spec, n_c)
    w, v = np.linalg.eigh(h)
    keep = spec.kept_levels
    w = w[:keep] - w[0]
    v = v[:, :keep].copy()
    # Gauge: largest-magnitude charge component real positive, so the sign of
    # each eigenvector (and hence of the charge matrix) is reproducible.
    for j in range(keep):
        i = int(np.argmax(np.abs(v[:, j])))
        if v[i, j] < 0:
            v[:, j] = -v[:, j]
    n_vals = np.arange(-n_c, n_c + 1, dtype=float)
    charge = (v.T * n_vals) @ v
    charge = 0.5 * (charge + charge.T)  # symmetrize away eigh roundoff
    return EigenSolution(energies=w, charge_matrix=charge)


def qubit_frequency(sol: EigenSolution) -> float:
    """omega_01 = E_1 - E_0 in GHz."""
    return float(sol.energies[1] - sol.energies[0])


def anharmonicity(sol: EigenSolution) -> float:
    """(E_2 - E_1) - (E_1 - E_0) in GHz; about -E_C for a transmon."""
    if len(sol.energies) < 3:
        raise DeviceError("anharmonicity needs kept_levels >= 3")
    e = sol.energies
    return float((e[2] - e[1]) - (e[1] - e[0]))


def convergence_check(spec: TransmonSpec, n_c_list) -> dict:
    """Max kept-level energy change between successive charge cutoffs."""
    n_c_list = list(n_c_list)
    if any(b <= a for a, b in zip(n_c_list, n_c_list[1:])):
        raise DeviceError("cutoff list must be ascending")
    sols = [diagonalize_transmon(spec, n_c=n_c) for n_c in n_c_list]
    deltas = [
        float(np.max(np.abs(a.energies - b.energies)))
        for a, b in zip(sols, sols[1:])
    ]
    return {
        "cutoffs": n_c_list,
        "max_abs_delta": deltas,
        "energies": [s.energies.tolist() for s in sols],
    }


class BasisIndexer:
    """Bijection between flat indices and labels (k, m_0, ..., m_{nt-1}).

    The flat index is row-major over (resonator, T0, T1, ...), so for the
    three-transmon system index = ((k*4 + m0)*4 + m1)*4 + m2. Computational
    basis C = {k = 0, every m_i in {0, 1}}, listed in ascending flat order,
    i.e. bitstring m0 m1 m2 read as a binary number.
    """

    def __init__(self, dims):
        self.dims = tuple(int(d) for d in dims)
        self.n_transmons = len(self.dims) - 1
        self.dimension = int(np.prod(self.dims))
        # computational-basis flat indices, ascending
        comp = []
        for flat in range(self.dimension):
            lab = self.labels(flat)
            if lab[0] == 0 and all(m in (0, 1) for m in lab[1:]):
                comp.append(flat)
        self.comp_indices = np.array(comp, dtype=np.int64)

    def flat_index(self, labels) -> int:
        labels = tuple(labels)
        if len(labels) != len(self.dims):
            raise IndexError("label arity mismatch")
        flat = 0
        for lab, dim in zip(labels, self.dims):
            if not 0 <= lab < dim:
                raise IndexError(f"label {labels} outside dims {self.dims}")
            flat = flat * dim + lab
        return flat

    def labels(self, flat: int) -> tuple:
        if not 0 <= flat < self.dimension:
            raise IndexError("flat index out of range")
        out = []
        for dim in reversed(self.dims):
            out.append(flat % dim)
            flat //= dim
        return tuple(reversed(out))

    def is_computational(self, flat: int) -> bool:
        return flat in set(self.comp_indices.tolist())

    def comp_bitstrings(self):
        """Bitstrings 'm0m1...' for each computational index, in order."""
        return ["".join(str(m) for m in self.labels(i)[1:]) for i in self.comp_indices]

    def slot_label_of_flat(self, slot: int) -> np.ndarray:
        """Vector over all flat indices giving the label of one slot."""
        idx = np.arange(self.dimension)
        inner = int(np.prod(self.dims[slot + 1:], dtype=int)) if slot + 1 < len(self.dims) else 1
        return (idx // inner) % self.dims[slot]


def _embed(ops_per_slot) -> np.ndarray:
    out = np.eye(1)
    for op in ops_per_slot:
        out = np.kron(out, op)
    return out


@dataclass(eq=False)
class SystemOperators:
    """Precomputed operators of the coupled system on the product eigenbasis.

    All matrices are real (the transmon gauge keeps n-hat real and a+adag is
    real in the Fock basis) and in cyclic GHz. ``static_diagonal`` holds
    H_0 = E_k + sum_i E_{m_i}; ``drive_ops[i]`` is n-hat_i embedded in the full
    space (the operator multiplied by c_i(t) = -8 E_C,i n_g,i(t)); ``h_int``
    is sum_i G_i (a + adag) x n-hat_i.

    The factored attributes (slot energy vectors, slot eigensystems of the
    interaction family) are consumed by the Trotter kernel; they describe the
    same operators and are validated against the dense forms in tests.
    """

    device: DeviceSpec
    indexer: BasisIndexer
    static_diagonal: np.ndarray  # (D,)
    drive_ops: list  # dense (D, D) per transmon
    h_int: np.ndarray  # dense (D, D)
    # --- factored data for the propagation kernel ---
    slot_energies: list = field(repr=False, default=None)  # per slot (d_s,)
    charge_mats: list = field(repr=False, default=None)  # per transmon (d, d)
    x_resonator: np.ndarray = field(repr=False, default=None)  # a + adag, (d_r, d_r)
    slot_vecs: list = field(repr=False, default=None)  # eigvecs of x / n-hat per slot
    slot_vals: list = field(repr=False, default=None)  # eigsvals of x / n-hat per slot
    lambda_int: np.ndarray = field(repr=False, default=None)  # (D,) eigvals of H_int

    @property
    def dimension(self):
        return self.indexer.dimension

    @property
    def charging_energies(self):
        return np.array([t.charging_energy for t in self.device.transmons])


def build_system(device: DeviceSpec) -> SystemOperators:
    """Assemble the coupled transmon-resonator operators (Eqs of the model).

    Tensor ordering is (resonator, T0, T1, ...). The interaction family
    {G_i (a+adag) x n_i} + {n_i} is mutually commuting and is diagonalized by
    the fixed product basis V = V_R x V_0 x V_1 x ..., where V_R diagonalizes
    a+adag and V_i diagonalizes n-hat_i; the kernel exploits this.
    """
    dims = [device.resonator.kept_levels] + [t.kept_levels for t in device.transmons]
    dimension = int(np.prod(dims))
    if dimension > DIMENSION_CAP:
        raise DeviceError(f"product dimension {dimension} exceeds cap {DIMENSION_CAP}")
    indexer = BasisIndexer(dims)

    sols = [diagonalize_transmon(t) for t in device.transmons]
    slot_energies = [device.resonator.frequency * np.arange(dims[0], dtype=float)]
    slot_energies += [s.energies for s in sols]
    charge_mats = [s.charge_matrix for s in sols]

    d_r = dims[0]
    x = np.zeros((d_r, d_r))
    for k in range(d_r - 1):
        x[k, k + 1] = x[k + 1, k] = np.sqrt(k + 1.0)

    # H_0 diagonal: sum of slot energies over the product grid
    h0 = np.zeros(dims)
    for s, ev in enumerate(slot_energies):
        shape = [1] * len(dims)
        shape[s] = dims[s]
        h0 = h0 + ev.reshape(shape)
    h0 = h0.ravel()

    eyes = [np.eye(d) for d in dims]
    drive_ops = []
    h_int = np.zeros((dimension, dimension))
    for i, g in enumerate(device.coupling.couplings):
        ops = list(eyes)
        ops[i + 1] = charge_mats[i]
        drive_ops.append(_embed(ops))
        ops = list(eyes)
        ops[0] = g * x
        ops[i + 1] = charge_mats[i]
        h_int += _embed(ops)

    # simultaneous eigenbasis of the interaction family (per-slot, all real)
    xw, xv = np.linalg.eigh(x)
    slot_vals = [xw]
    slot_vecs = [xv]
    for cm in charge_mats:
        nw, nv = np.linalg.eigh(cm)
        slot_vals.append(nw)
        slot_vecs.append(nv)
    lam = np.zeros(dims)
    for i, g in enumerate(device.coupling.couplings):
        shape_x = [1] * len(dims)
        shape_x[0] = dims[0]
        shape_n = [1] * len(dims)
        shape_n[i + 1] = dims[i + 1]
        lam = lam + g * slot_vals[0].reshape(shape_x) * slot_vals[i + 1].reshape(shape_n)
    lambda_int = lam.ravel()

    return SystemOperators(
        device=device,
        indexer=indexer,
        static_diagonal=h0,
        drive_ops=drive_ops,
        h_int=h_int,
        slot_energies=slot_energies,
        charge_mats=charge_mats,
        x_resonator=x,
        slot_vecs=slot_vecs,
        slot_vals=slot_vals,
        lambda_int=lambda_int,
    )


# ---------------------------------------------------------------------------
# device JSON round-trip
# ---------------------------------------------------------------------------

def device_from_dict(cfg: dict) -> DeviceSpec:
    try:
        n_c = int(cfg.get("charge_cutoff", 15))
        t_levels = int(cfg.get("transmon_levels", 4))
        transmons = tuple(
            TransmonSpec(
                charging_energy=float(t["EC_GHz"]),
                josephson_energy=float(t["EJ_GHz"]),
                charge_cutoff=n_c,
                kept_levels=t_levels,
            )
            for t in cfg["transmons"]
        )
        resonator = ResonatorSpec(
            frequency=float(cfg["resonator"]["omega_GHz"]),
            kept_levels=int(cfg["resonator"].get("levels", 4)),
        )
        coupling = CouplingSpec(tuple(float(g) for g in cfg["couplings_GHz"]))
    except (KeyError, TypeError) as exc:
        raise DeviceError(f"malformed device config: {exc}") from exc
    return DeviceSpec(transmons=transmons, resonator=resonator, coupling=coupling)


def device_to_dict(device: DeviceSpec) -> dict:
    return {
        "transmons": [
            {"EC_GHz": t.charging_energy, "EJ_GHz": t.josephson_energy}
            for t in device.transmons
        ],
        "resonator": {
            "omega_GHz": device.resonator.frequency,
            "levels": device.resonator.kept_levels,
        },
        "couplings_GHz": list(device.coupling.couplings),
        "charge_cutoff": device.transmons[0].charge_cutoff,
        "transmon_levels": device.transmons[0].kept_levels,
    }


def load_device(path) -> DeviceSpec:
    with open(path) as fh:
        return device_from_dict(json.load(fh))


def save_device(device: DeviceSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(device_to_dict(device), fh, indent=2)
        fh.write("\n")
