"""Gate quality metrics on the computational subspace.

The computational block of a propagator is the 2^n x 2^n matrix
<b'| U |b> over C = {resonator vacuum, each transmon in {0, 1}}, with the
bitstring m_0 m_1 ... read as a big-endian binary index. All metrics operate
on that block after the per-transmon virtual-Z correction

    R_Z(theta)|m_0 m_1 ...> = exp(i sum_i theta_i m_i)|m_0 m_1 ...>,

which is applied after the pulse unitary. Success probabilities and leakage
use only magnitudes, so they are independent of the virtual-Z angles and of
the rotating-frame convention; the average fidelity is not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ideal_cnot",
    "ideal_swap",
    "vz_diagonal",
    "apply_vz",
    "average_fidelity",
    "squared_overlap_fidelity",
    "success_probabilities",
    "leakage_diagnostics",
    "FidelityReport",
    "gate_report",
]


class MetricsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# ideal gates and virtual Z
# ---------------------------------------------------------------------------

def _bit_patterns(n_qubits: int) -> np.ndarray:
    """(2^n, n) array of bits, big-endian: column 0 is qubit 0, the MSB."""
    idx = np.arange(2**n_qubits)
    return (idx[:, None] >> np.arange(n_qubits - 1, -1, -1)[None, :]) & 1


def ideal_cnot(n_qubits: int, control: int, target: int) -> np.ndarray:
    """Permutation matrix of CNOT_{control,target} on n qubits (spectators id)."""
    if control == target or not (0 <= control < n_qubits and 0 <= target < n_qubits):
        raise MetricsError("bad control/target")
    dim = 2**n_qubits
    bits = _bit_patterns(n_qubits)
    out_bits = bits.copy()
    out_bits[:, target] ^= bits[:, control]
    weights = 1 << np.arange(n_qubits - 1, -1, -1)
    out_idx = out_bits @ weights
    u = np.zeros((dim, dim))
    u[out_idx, np.arange(dim)] = 1.0
    return u


def ideal_swap(n_qubits: int, a: int, b: int) -> np.ndarray:
    """Permutation matrix of SWAP_{a,b}; equals CNOT_ab CNOT_ba CNOT_ab."""
    if a == b or not (0 <= a < n_qubits and 0 <= b < n_qubits):
        raise MetricsError("bad qubit pair")
    dim = 2**n_qubits
    bits = _bit_patterns(n_qubits)
    out_bits = bits.copy()
    out_bits[:, [a, b]] = bits[:, [b, a]]
    weights = 1 << np.arange(n_qubits - 1, -1, -1)
    out_idx = out_bits @ weights
    u = np.zeros((dim, dim))
    u[out_idx, np.arange(dim)] = 1.0
    return u


def vz_diagonal(thetas) -> np.ndarray:
    """Diagonal of the virtual-Z product, exp(i sum_i theta_i m_i)."""
    thetas = np.asarray(thetas, dtype=float)
    bits = _bit_patterns(thetas.size)
    return np.exp(1j * bits @ thetas)


def apply_vz(block: np.ndarray, thetas) -> np.ndarray:
    """Left-multiply the computational block by the virtual-Z correction."""
    d = vz_diagonal(thetas)
    if block.shape[0] != d.size:
        raise MetricsError("block dimension does not match the angle count")
    return d[:, None] * block


# ---------------------------------------------------------------------------
# Monte-Carlo average fidelity
# ---------------------------------------------------------------------------

_CHUNK = 2048


def _chunk_states(dim: int, n: int, seed: int, chunk_index: int) -> np.ndarray:
    """Deterministic batch of Haar states: rows of normalized complex normals.

    Every chunk owns an independent Philox substream keyed by (seed, chunk),
    so results are bit-exact for a given (seed, M) regardless of chunking.
    """
    ss = np.random.SeedSequence((int(seed), int(chunk_index)))
    rng = np.random.Generator(np.random.Philox(ss))
    z = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass
class FidelityReport:
    """Monte-Carlo estimate of the mean gate overlap on Haar states."""

    fidelity: float
    stderr: float
    n_samples: int
    seed: int
    success_probs: dict = field(default_factory=dict)
    mean_success: float | None = None
    leakage: dict = field(default_factory=dict)
    res_excitation: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "F": self.fidelity,
            "stderr": self.stderr,
            "M": self.n_samples,
            "seed": self.seed,
            "success_probs": self.success_probs,
            "mean_success": self.mean_success,
            "leakage": self.leakage,
            "res_excitation": self.res_excitation,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def average_fidelity(block: np.ndarray, ideal: np.ndarray,
                     n_samples: int = 10000, seed: int = 7) -> FidelityReport:
    """F = (1/M) sum_j |<psi_j| ideal^dag U |psi_j>| over Haar states psi_j.

    The overlap magnitude (not its square) is averaged; see
    squared_overlap_fidelity for the squared variant.
    """
    if block.shape != ideal.shape or block.shape[0] != block.shape[1]:
        raise MetricsError("block and ideal must be equal square matrices")
    dim = block.shape[0]
    e = ideal.conj().T @ block
    if np.array_equal(e, np.eye(dim)):
        # <psi|I|psi> = 1 for every state: skip sampling rather than report
        # the rounding noise of a constant integrand.
        return FidelityReport(fidelity=1.0, stderr=0.0,
                              n_samples=n_samples, seed=seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk_index = 0
    while done < n_samples:
        take = min(_CHUNK, n_samples - done)
        psi = _chunk_states(dim, take, seed, chunk_index)
        amps = np.abs(np.einsum("jk,kl,jl->j", psi.conj(), e, psi))
        total += float(np.sum(amps))
        total_sq += float(np.sum(amps * amps))
        done += take
        chunk_index += 1
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    stderr = float(np.sqrt(var / n_samples))
    return FidelityReport(fidelity=mean, stderr=stderr,
                          n_samples=n_samples, seed=seed)


def squared_overlap_fidelity(block: np.ndarray, ideal: np.ndarray,
                             n_samples: int = 10000, seed: int = 7) -> float:
    """(1/M) sum_j |<psi_j| ideal^dag U |psi_j>|^2 -- a diagnostic variant;
    it is not the figure the gate designs are scored by."""
    if block.shape != ideal.shape:
        raise MetricsError("block and ideal must be equal square matrices")
    dim = block.shape[0]
    e = ideal.conj().T @ block
    total = 0.0
    done = 0
    chunk_index = 0
    while done < n_samples:
        take = min(_CHUNK, n_samples - done)
        psi = _chunk_states(dim, take, seed, chunk_index)
        amps = np.abs(np.einsum("jk,kl,jl->j", psi.conj(), e, psi))
        total += float(np.sum(amps * amps))
        done += take
        chunk_index += 1
    return total / n_samples


# ---------------------------------------------------------------------------
# basis-state diagnostics
# ---------------------------------------------------------------------------

def success_probabilities(block: np.ndarray, ideal: np.ndarray) -> dict:
    """p_b = |<ideal b| U |b>|^2 for each computational basis state b.

    Independent of virtual-Z angles and frame, since only magnitudes enter.
    Returns bitstring -> probability plus the mean under key "mean".
    """
    dim = block.shape[0]
    n_qubits = int(round(np.log2(dim)))
    if 2**n_qubits != dim or ideal.shape != block.shape:
        raise MetricsError("block must be 2^n x 2^n and match ideal")
    bits = _bit_patterns(n_qubits)
    out = {}
    probs = np.empty(dim)
    for b in range(dim):
        target_row = int(np.argmax(np.abs(ideal[:, b])))
        probs[b] = np.abs(block[target_row, b]) ** 2
        out["".join(str(x) for x in bits[b])] = float(probs[b])
    out["mean"] = float(np.mean(probs))
    return out


def leakage_diagnostics(prop) -> dict:
    """Per initial basis state: population outside C and resonator excitation.

    Works on a Propagator whose columns are computational basis states; both
    quantities are frame independent.
    """
    idx = prop.indexer
    comp = idx.comp_indices
    dims = idx.dims
    res_stride = int(np.prod(dims[1:]))
    labels = []
    leak = []
    res_exc = []
    for j, col in enumerate(prop.columns):
        amps = prop.matrix[:, j]
        lab = idx.labels(int(col))
        labels.append("".join(str(m) for m in lab[1:]))
        p_comp = float(np.sum(np.abs(amps[comp]) ** 2))
        leak.append(1.0 - p_comp)
        p_vac = float(np.sum(np.abs(amps[:res_stride]) ** 2))
        res_exc.append(1.0 - p_vac)
    return {
        "labels": labels,
        "leakage": leak,
        "max_leakage": max(leak) if leak else 0.0,
        "res_excitation": res_exc,
        "max_res_excitation": max(res_exc) if res_exc else 0.0,
    }


def gate_report(prop, ideal: np.ndarray, thetas,
                n_samples: int = 10000, seed: int = 7) -> FidelityReport:
    """Full scorecard of an evolved gate against an ideal unitary."""
    block = apply_vz(prop.comp_block(), thetas)
    rep = average_fidelity(block, ideal, n_samples=n_samples, seed=seed)
    succ = success_probabilities(block, ideal)
    rep.mean_success = succ.pop("mean")
    rep.success_probs = succ
    diag = leakage_diagnostics(prop)
    rep.leakage = dict(zip(diag["labels"], diag["leakage"]))
    rep.res_excitation = dict(zip(diag["labels"], diag["res_excitation"]))
    return rep
