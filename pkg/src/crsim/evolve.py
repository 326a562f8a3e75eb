"""Lab-frame time evolution over a pulse program.

The Hamiltonian in cyclic-GHz units is

    H(t) = H_0 + H_int + sum_i c_i(t) D_i,      c_i(t) = -8 E_C,i n_g,i(t),

and one Trotter step with midpoint t is the symmetric (palindromic) split

    exp(-i pi tau H_0) exp(-i 2pi tau [H_int + sum_i c_i D_i]) exp(-i pi tau H_0).

H_int and the drive operators D_i all commute with each other (they share the
per-slot operators a+adag and n-hat_i), so the middle exponential equals
exp(-i tau H_int/2) prod_i exp(-i tau c_i D_i) exp(-i tau H_int/2) exactly and
is diagonalized once per device by the fixed product basis
V = V_R x V_0 x V_1 x ... . The stepper therefore works in the V basis, where
each step is one elementwise phase multiply plus the fixed slot-local 4x4
matrices of V^T exp(-i 2pi tau H_0) V; adjacent half-steps of H_0 are merged.
The local splitting error is O(tau^3), giving global second order.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .device import SystemOperators

__all__ = [
    "EvolutionConfig",
    "Propagator",
    "TrajectoryRecord",
    "TrotterSplit",
    "evolve",
    "evolve_exact_step",
    "bloch_trajectory",
    "unitarity_probe",
]


class EvolveError(RuntimeError):
    """Propagation failure (non-finite drives, dimension mismatch, guards)."""


@dataclass(frozen=True)
class EvolutionConfig:
    """Stepper configuration.

    corrupt_step is a test hook: it scales one internal step matrix so the
    negative-control unitarity test has something to detect.
    """

    tau_ns: float = 0.001
    method: str = "trotter2"
    frame: str = "eigen"
    record_stride: int = 100
    columns: np.ndarray | None = None
    max_exact_steps: int = 20000
    corrupt_step: bool = False

    def __post_init__(self):
        if self.tau_ns <= 0:
            raise ValueError("tau must be positive")
        if self.method not in ("trotter2", "exact"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.frame not in ("eigen", "lab"):
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


def _resolve_columns(ops: SystemOperators, cfg: EvolutionConfig) -> np.ndarray:
    if cfg.columns is None:
        return ops.indexer.comp_indices.copy()
    cols = np.asarray(cfg.columns, dtype=np.int64)
    if cols.ndim != 1 or np.any(cols < 0) or np.any(cols >= ops.dimension):
        raise EvolveError("columns must be valid flat basis indices")
    return cols


@dataclass(eq=False)
class Propagator:
    """Evolved columns of the propagator, restricted to selected initial states."""

    matrix: np.ndarray  # (D, n_columns) complex
    columns: np.ndarray  # flat initial-state indices
    frame: str
    total_time: float
    tau_ns: float
    n_steps: int
    tau_last: float
    dims: tuple
    indexer: object = field(repr=False, default=None)

    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.matrix, axis=0)

    def block(self, rows, cols=None) -> np.ndarray:
        """Submatrix <row | U | initial col>; cols are flat indices that must
        be among the propagated columns."""
        rows = np.asarray(rows, dtype=np.int64)
        if cols is None:
            cols = self.columns
        col_pos = []
        lookup = {int(c): i for i, c in enumerate(self.columns)}
        for c in np.asarray(cols, dtype=np.int64):
            if int(c) not in lookup:
                raise EvolveError(f"column {int(c)} was not propagated")
            col_pos.append(lookup[int(c)])
        return self.matrix[np.ix_(rows, np.array(col_pos))]

    def comp_block(self) -> np.ndarray:
        """The computational-basis block <b'|U|b> in canonical C ordering."""
        comp = self.indexer.comp_indices
        return self.block(comp, comp)

    # -- serialization: JSON metadata + base64 payload ---------------------
    # payload: little-endian float64 pairs (re, im), column-major order.

    def to_json_dict(self) -> dict:
        payload = np.ascontiguousarray(self.matrix.ravel(order="F")).astype("<c16")
        return {
            "dims": list(self.dims),
            "columns": [int(c) for c in self.columns],
            "frame": self.frame,
            "total_time_ns": self.total_time,
            "tau_ns": self.tau_ns,
            "n_steps": self.n_steps,
            "tau_last_ns": self.tau_last,
            "dtype": "complex128-little-endian-interleaved-re-im",
            "order": "column-major",
            "payload_b64": base64.b64encode(payload.tobytes()).decode("ascii"),
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, data: dict) -> "Propagator":
        from .device import BasisIndexer

        dims = tuple(data["dims"])
        cols = np.array(data["columns"], dtype=np.int64)
        raw = base64.b64decode(data["payload_b64"])
        mat = np.frombuffer(raw, dtype="<c16").reshape(
            (int(np.prod(dims)), len(cols)), order="F"
        ).astype(np.complex128)
        return cls(
            matrix=mat, columns=cols, frame=data["frame"],
            total_time=float(data["total_time_ns"]), tau_ns=float(data["tau_ns"]),
            n_steps=int(data["n_steps"]), tau_last=float(data["tau_last_ns"]),
            dims=dims, indexer=BasisIndexer(dims),
        )

    @classmethod
    def load(cls, path) -> "Propagator":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(eq=False)
class TrotterSplit:
    """Per-(device, tau) precomputation for the Trotter stepper.

    slot_vecs are the real eigenvectors of a+adag (resonator slot) and of each
    n-hat_i; together they form the fixed V of the interaction family, and
    lambda_int holds the H_int eigenvalues on the product grid. slot_mats are
    V_s^T exp(-i 2pi tau E_s) V_s, the merged full-step factors of H_0.
    """

    tau: float
    dims: np.ndarray
    inners: np.ndarray
    slot_mats: np.ndarray  # (ns, dmax, dmax) complex128
    dint: np.ndarray  # (D,) exp(-i 2pi tau lambda_int)
    half: np.ndarray  # (D,) exp(-i pi tau H_0)
    h0: np.ndarray
    lambda_int: np.ndarray
    slot_vecs: list
    slot_vals: list

    @classmethod
    def build(cls, ops: SystemOperators, tau: float, corrupt: bool = False) -> "TrotterSplit":
        dims = np.array(ops.indexer.dims, dtype=np.int64)
        ns = len(dims)
        dmax = int(dims.max())
        inners = np.array(
            [int(np.prod(dims[s + 1:])) if s + 1 < ns else 1 for s in range(ns)],
            dtype=np.int64,
        )
        slot_mats = np.zeros((ns, dmax, dmax), dtype=np.complex128)
        for s in range(ns):
            d = dims[s]
            v = ops.slot_vecs[s]
            phase = np.exp(-2j * np.pi * tau * ops.slot_energies[s])
            slot_mats[s, :d, :d] = v.T @ (phase[:, None] * v)
        if corrupt:
            slot_mats[0] *= 1.0 + 5e-4  # test hook: break unitarity visibly
        dint = np.exp(-2j * np.pi * tau * ops.lambda_int)
        half = np.exp(-1j * np.pi * tau * ops.static_diagonal)
        return cls(
            tau=tau, dims=dims, inners=inners, slot_mats=slot_mats,
            dint=dint, half=half, h0=ops.static_diagonal,
            lambda_int=ops.lambda_int, slot_vecs=ops.slot_vecs,
            slot_vals=ops.slot_vals,
        )

    def assemble_v(self) -> np.ndarray:
        """Dense V = V_R x V_0 x ... (tests: V diag(lambda) V^T == H_int)."""
        v = np.eye(1)
        for vs in self.slot_vecs:
            v = np.kron(v, vs)
        return v


def _get_split(ops: SystemOperators, tau: float, corrupt: bool) -> TrotterSplit:
    cache = ops.__dict__.setdefault("_split_cache", {})
    key = (tau, corrupt)
    if key not in cache:
        cache[key] = TrotterSplit.build(ops, tau, corrupt)
    return cache[key]


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@njit(cache=True, fastmath=True)
def _trotter_steps_planes(pr, pi, mr, mi, dims, inners, dr, di,
                          tr, ti, mindex, n0, n1):
    """Advance the V-basis state through steps [n0, n1).

    The state lives in flat real/imaginary planes pr, pi of length D*C (row
    dflat occupies [dflat*C, (dflat+1)*C)). Splitting complex128 into planes
    lets the inner loops vectorize; scalar complex chains do not. Because the
    layout is row-major, the group of rows sharing one value of slot s's label
    is contiguous over inner*C entries, so each slot contraction gathers a
    contiguous group into local scratch, contracts local-to-local (provably
    alias-free, hence SIMD), and scatters back contiguously.

    Step n applies the merged H_0 full-step (slot matrices mr + i*mi) for
    n > 0, then the diagonal phase of step n: the static interaction phase
    dr + i*di times the per-driven-slot drive phases from tables tr + i*ti.
    """
    DC = pr.shape[0]
    D = dr.shape[0]
    C = DC // D
    ns = dims.shape[0]
    nd = tr.shape[0]
    maxblk = 0
    for s in range(ns):
        if inners[s] * C > maxblk:
            maxblk = inners[s] * C
    dmax = mr.shape[1]
    gr = np.empty((dmax, maxblk))
    gi = np.empty((dmax, maxblk))
    ar = np.empty((dmax, maxblk))
    ai = np.empty((dmax, maxblk))
    for n in range(n0, n1):
        if n == 0:
            # no merged H_0 factor before the first diagonal phase
            for dflat in range(D):
                fr = dr[dflat]
                fi = di[dflat]
                for j in range(nd):
                    m = mindex[j, dflat]
                    sr = tr[j, n, m]
                    si = ti[j, n, m]
                    fr, fi = fr * sr - fi * si, fr * si + fi * sr
                off = dflat * C
                for c in range(C):
                    a = pr[off + c]
                    b = pi[off + c]
                    pr[off + c] = fr * a - fi * b
                    pi[off + c] = fr * b + fi * a
            continue
        for s in range(ns):
            d = dims[s]
            blk = inners[s] * C
            outer = DC // (d * blk)
            fuse_phase = s == ns - 1  # apply step phase during the scatter
            for o in range(outer):
                base = o * d * blk
                for m in range(d):
                    src = base + m * blk
                    for t in range(blk):
                        gr[m, t] = pr[src + t]
                        gi[m, t] = pi[src + t]
                if d == 4:
                    for k in range(4):
                        w0r = mr[s, k, 0]
                        w0i = mi[s, k, 0]
                        w1r = mr[s, k, 1]
                        w1i = mi[s, k, 1]
                        w2r = mr[s, k, 2]
                        w2i = mi[s, k, 2]
                        w3r = mr[s, k, 3]
                        w3i = mi[s, k, 3]
                        for t in range(blk):
                            ar[k, t] = (
                                (w0r * gr[0, t] - w0i * gi[0, t])
                                + (w1r * gr[1, t] - w1i * gi[1, t])
                                + (w2r * gr[2, t] - w2i * gi[2, t])
                                + (w3r * gr[3, t] - w3i * gi[3, t])
                            )
                            ai[k, t] = (
                                (w0r * gi[0, t] + w0i * gr[0, t])
                                + (w1r * gi[1, t] + w1i * gr[1, t])
                                + (w2r * gi[2, t] + w2i * gr[2, t])
                                + (w3r * gi[3, t] + w3i * gr[3, t])
                            )
                else:
                    for k in range(d):
                        for t in range(blk):
                            ar[k, t] = 0.0
                            ai[k, t] = 0.0
                        for m in range(d):
                            wr = mr[s, k, m]
                            wi = mi[s, k, m]
                            for t in range(blk):
                                ar[k, t] += wr * gr[m, t] - wi * gi[m, t]
                                ai[k, t] += wr * gi[m, t] + wi * gr[m, t]
                if fuse_phase:
                    for k in range(d):
                        dflat = o * d + k
                        fr = dr[dflat]
                        fi = di[dflat]
                        for j in range(nd):
                            m = mindex[j, dflat]
                            sr = tr[j, n, m]
                            si = ti[j, n, m]
                            fr, fi = fr * sr - fi * si, fr * si + fi * sr
                        dst = base + k * blk
                        for t in range(blk):
                            a = ar[k, t]
                            b = ai[k, t]
                            pr[dst + t] = fr * a - fi * b
                            pi[dst + t] = fr * b + fi * a
                else:
                    for k in range(d):
                        dst = base + k * blk
                        for t in range(blk):
                            pr[dst + t] = ar[k, t]
                            pi[dst + t] = ai[k, t]


def _split_planes(split: "TrotterSplit", tabs):
    return (
        np.ascontiguousarray(split.slot_mats.real),
        np.ascontiguousarray(split.slot_mats.imag),
        split.dims, split.inners,
        np.ascontiguousarray(split.dint.real),
        np.ascontiguousarray(split.dint.imag),
        np.ascontiguousarray(tabs.real), np.ascontiguousarray(tabs.imag),
    )


def _trotter_steps(phi, slot_mats, dims, inners, dint, tabs, mindex, n0, n1):
    """Complex-array front end of the plane kernel; phi is updated in place."""
    pr = np.ascontiguousarray(phi.real).ravel()
    pi = np.ascontiguousarray(phi.imag).ravel()
    _trotter_steps_planes(
        pr, pi,
        np.ascontiguousarray(slot_mats.real), np.ascontiguousarray(slot_mats.imag),
        dims, inners,
        np.ascontiguousarray(dint.real), np.ascontiguousarray(dint.imag),
        np.ascontiguousarray(tabs.real), np.ascontiguousarray(tabs.imag),
        mindex, n0, n1,
    )
    phi.real = pr.reshape(phi.shape)
    phi.imag = pi.reshape(phi.shape)


def _apply_slot_mats(psi: np.ndarray, mats, dims) -> np.ndarray:
    """Apply kron(mats) to psi (D, C) via per-slot contractions (numpy)."""
    D, C = psi.shape
    t = psi.reshape(tuple(dims) + (C,))
    for s, m in enumerate(mats):
        t = np.moveaxis(t, s, 0)
        shape = t.shape
        t = (m @ t.reshape(dims[s], -1)).reshape(shape)
        t = np.moveaxis(t, 0, s)
    return np.ascontiguousarray(t.reshape(D, C))


def _trotter_steps_numpy(phi, split: TrotterSplit, tabs, mindex, n0, n1):
    """Reference implementation of _trotter_steps (tests compare the two)."""
    dims = split.dims
    nd = tabs.shape[0]
    mats = [split.slot_mats[s, : dims[s], : dims[s]] for s in range(len(dims))]
    for n in range(n0, n1):
        if n > 0:
            phi = _apply_slot_mats(phi, mats, dims)
        p = split.dint.copy()
        for j in range(nd):
            p = p * tabs[j, n][mindex[j]]
        phi = p[:, None] * phi
    return phi


# ---------------------------------------------------------------------------
# drive sampling
# ---------------------------------------------------------------------------

def _drive_tables(program, ops: SystemOperators, split: TrotterSplit, mids):
    """Per-driven-slot phase tables exp(-i 2pi tau c_i(t) nu_i) at midpoints."""
    coeffs = -8.0 * ops.charging_energies[:, None] * program.sample_offsets(mids)
    if not np.all(np.isfinite(coeffs)):
        raise EvolveError("drive coefficients are not finite")
    driven = [i for i in range(coeffs.shape[0]) if np.any(coeffs[i] != 0.0)]
    n = mids.size
    dmax = int(split.dims.max())
    tabs = np.ones((max(len(driven), 1), n, dmax), dtype=np.complex128)
    mindex = np.zeros((max(len(driven), 1), ops.dimension), dtype=np.int64)
    for j, i in enumerate(driven):
        nu = np.asarray(split.slot_vals[i + 1])
        tabs[j, :, : nu.size] = np.exp(
            -2j * np.pi * split.tau * coeffs[i][:, None] * nu[None, :]
        )
        mindex[j] = ops.indexer.slot_label_of_flat(i + 1)
    if not driven:
        tabs = tabs[:0]
        mindex = mindex[:0]
    return tabs, mindex, coeffs


def _step_grid(total_time: float, tau: float):
    """Number of full tau steps plus the trailing partial step length."""
    n_full = int(np.floor(total_time / tau + 1e-9))
    tau_last = total_time - n_full * tau
    if tau_last < 1e-9 * max(tau, 1.0):
        tau_last = 0.0
    return n_full, tau_last


# ---------------------------------------------------------------------------
# steppers
# ---------------------------------------------------------------------------

def _evolve_trotter(program, ops, cfg, record_hook=None):
    split = _get_split(ops, cfg.tau_ns, cfg.corrupt_step)
    cols = _resolve_columns(ops, cfg)
    D = ops.dimension
    psi = np.zeros((D, cols.size), dtype=np.complex128)
    psi[cols, np.arange(cols.size)] = 1.0

    n_full, tau_last = _step_grid(program.total_time, cfg.tau_ns)
    mids = (np.arange(n_full) + 0.5) * cfg.tau_ns
    tabs, mindex, _ = _drive_tables(program, ops, split, mids)

    vt = [v.T for v in split.slot_vecs]
    if n_full > 0:
        phi = _apply_slot_mats(split.half[:, None] * psi, vt, split.dims)
        shape = phi.shape
        pr = np.ascontiguousarray(phi.real).ravel()
        pi = np.ascontiguousarray(phi.imag).ravel()
        args = _split_planes(split, tabs) + (mindex,)
        if record_hook is None:
            _trotter_steps_planes(pr, pi, *args, 0, n_full)
        else:
            record_hook(0, psi)
            stride = cfg.record_stride
            for n0 in range(0, n_full, stride):
                n1 = min(n0 + stride, n_full)
                _trotter_steps_planes(pr, pi, *args, n0, n1)
                out = split.half[:, None] * _apply_slot_mats(
                    (pr + 1j * pi).reshape(shape), split.slot_vecs, split.dims)
                record_hook(n1, out)
        psi = split.half[:, None] * _apply_slot_mats(
            (pr + 1j * pi).reshape(shape), split.slot_vecs, split.dims)
    elif record_hook is not None:
        record_hook(0, psi)

    if tau_last > 0.0:
        t_mid = np.array([n_full * cfg.tau_ns + tau_last / 2.0])
        coeffs = -8.0 * ops.charging_energies[:, None] * program.sample_offsets(t_mid)
        if not np.all(np.isfinite(coeffs)):
            raise EvolveError("drive coefficients are not finite")
        lam = split.lambda_int.copy()
        for i in range(coeffs.shape[0]):
            if coeffs[i, 0] != 0.0:
                nu = np.asarray(split.slot_vals[i + 1])
                lam = lam + coeffs[i, 0] * nu[ops.indexer.slot_label_of_flat(i + 1)]
        half_l = np.exp(-1j * np.pi * tau_last * split.h0)
        phase_l = np.exp(-2j * np.pi * tau_last * lam)
        psi = half_l[:, None] * psi
        psi = _apply_slot_mats(psi, vt, split.dims)
        psi = phase_l[:, None] * psi
        psi = _apply_slot_mats(psi, split.slot_vecs, split.dims)
        psi = half_l[:, None] * psi
        if record_hook is not None:
            record_hook(None, psi)

    return psi, cols, n_full, tau_last


def _evolve_exact(program, ops, cfg, record_hook=None):
    cols = _resolve_columns(ops, cfg)
    D = ops.dimension
    psi = np.zeros((D, cols.size), dtype=np.complex128)
    psi[cols, np.arange(cols.size)] = 1.0

    n_full, tau_last = _step_grid(program.total_time, cfg.tau_ns)
    n_total = n_full + (1 if tau_last > 0 else 0)
    if n_total > cfg.max_exact_steps:
        raise EvolveError(
            f"exact stepping needs {n_total} dense eigendecompositions "
            f"(cap {cfg.max_exact_steps}); use trotter2 or raise the cap"
        )
    taus = np.full(n_total, cfg.tau_ns)
    if tau_last > 0:
        taus[-1] = tau_last
    mids = np.concatenate(([0.0], np.cumsum(taus)))[:-1] + taus / 2.0
    coeffs = -8.0 * ops.charging_energies[:, None] * program.sample_offsets(mids)
    if not np.all(np.isfinite(coeffs)):
        raise EvolveError("drive coefficients are not finite")

    h_static = np.diag(ops.static_diagonal) + ops.h_int
    if record_hook is not None:
        record_hook(0, psi)
    for n in range(n_total):
        h = h_static.copy()
        for i in range(coeffs.shape[0]):
            if coeffs[i, n] != 0.0:
                h += coeffs[i, n] * ops.drive_ops[i]
        w, q = np.linalg.eigh(h)
        psi = q @ (np.exp(-2j * np.pi * taus[n] * w)[:, None] * (q.T @ psi))
        if record_hook is not None and ((n + 1) % cfg.record_stride == 0 or n == n_total - 1):
            record_hook(n + 1 if n < n_full else None, psi)
    return psi, cols, n_full, tau_last


def evolve(program, ops: SystemOperators, cfg: EvolutionConfig | None = None) -> Propagator:
    """Propagate the selected basis columns through the program."""
    cfg = cfg or EvolutionConfig()
    if program.total_time < 0:
        raise EvolveError("negative program duration")
    stepper = _evolve_trotter if cfg.method == "trotter2" else _evolve_exact
    psi, cols, n_full, tau_last = stepper(program, ops, cfg)
    if cfg.frame == "eigen":
        psi = np.exp(2j * np.pi * ops.static_diagonal * program.total_time)[:, None] * psi
    norms = np.linalg.norm(psi, axis=0)
    if psi.size and not cfg.corrupt_step and np.max(np.abs(norms - 1.0)) > 1e-6:
        raise EvolveError(f"column norm drifted to {norms}")
    return Propagator(
        matrix=psi, columns=cols, frame=cfg.frame,
        total_time=program.total_time, tau_ns=cfg.tau_ns,
        n_steps=n_full, tau_last=tau_last,
        dims=ops.indexer.dims, indexer=ops.indexer,
    )


def evolve_exact_step(program, ops: SystemOperators,
                      cfg: EvolutionConfig | None = None) -> Propagator:
    """Reference stepper: dense eigendecomposition of H(t) every step."""
    cfg = cfg or EvolutionConfig()
    if cfg.method != "exact":
        cfg = EvolutionConfig(
            tau_ns=cfg.tau_ns, method="exact", frame=cfg.frame,
            record_stride=cfg.record_stride, columns=cfg.columns,
            max_exact_steps=cfg.max_exact_steps,
        )
    return evolve(program, ops, cfg)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    """Reduced single-transmon observables sampled along an evolution.

    bloch[q, j] holds (x, y, z) of transmon q at sample j, taken from the
    (0,1) block of the reduced density matrix without renormalization;
    leak_pop[q, j] is the population of levels >= 2; res_excited[j] is the
    probability of any resonator excitation.
    """

    times: np.ndarray
    bloch: np.ndarray  # (n_transmons, n_samples, 3)
    leak_pop: np.ndarray  # (n_transmons, n_samples)
    res_excited: np.ndarray  # (n_samples,)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t_ns,qubit,bloch_x,bloch_y,bloch_z,leak_pop,res_excited_prob\n")
            for j, t in enumerate(self.times):
                for q in range(self.bloch.shape[0]):
                    x, y, z = self.bloch[q, j]
                    fh.write(
                        f"{t:.6f},{q},{x:.9f},{y:.9f},{z:.9f},"
                        f"{self.leak_pop[q, j]:.9f},{self.res_excited[j]:.9f}\n"
                    )


def reduced_transmon_rho(psi: np.ndarray, dims, transmon: int) -> np.ndarray:
    """Partial trace of |psi><psi| down to one transmon (slot transmon+1)."""
    t = psi.reshape(dims)
    slot = transmon + 1
    axes = tuple(i for i in range(len(dims)) if i != slot)
    return np.tensordot(t, t.conj(), axes=(axes, axes))


def bloch_trajectory(program, ops: SystemOperators, cfg: EvolutionConfig,
                     initial) -> TrajectoryRecord:
    """Evolve one initial state and record reduced observables.

    initial may be a flat simulation-basis index or a label tuple
    (k, m_0, m_1, ...).
    """
    idx = ops.indexer
    if isinstance(initial, (int, np.integer)):
        col = int(initial)
    elif isinstance(initial, (tuple, list)) and len(initial) == len(idx.dims):
        col = idx.flat_index(initial)
    else:
        raise EvolveError("initial must be a flat index or a label tuple")

    times, blochs, leaks, res = [], [], [], []
    nt = idx.n_transmons
    dims = idx.dims

    def hook(n_step, psi_mat):
        t = program.total_time if n_step is None else n_step * cfg.tau_ns
        vec = psi_mat[:, 0]
        if cfg.frame == "eigen":
            vec = np.exp(2j * np.pi * ops.static_diagonal * t) * vec
        times.append(t)
        bl = np.zeros((nt, 3))
        lk = np.zeros(nt)
        for q in range(nt):
            rho = reduced_transmon_rho(vec, dims, q)
            bl[q, 0] = 2.0 * rho[0, 1].real
            bl[q, 1] = -2.0 * rho[0, 1].imag
            bl[q, 2] = (rho[0, 0] - rho[1, 1]).real
            lk[q] = np.sum(np.diag(rho).real[2:])
        blochs.append(bl)
        leaks.append(lk)
        k0 = np.abs(vec.reshape(dims)[0]) ** 2
        res.append(1.0 - float(np.sum(k0)))

    sub_cfg = EvolutionConfig(
        tau_ns=cfg.tau_ns, method=cfg.method, frame=cfg.frame,
        record_stride=cfg.record_stride, columns=np.array([col]),
        max_exact_steps=cfg.max_exact_steps, corrupt_step=cfg.corrupt_step,
    )
    stepper = _evolve_trotter if cfg.method == "trotter2" else _evolve_exact
    stepper(program, ops, sub_cfg, record_hook=hook)
    return TrajectoryRecord(
        times=np.array(times),
        bloch=np.stack(blochs, axis=1) if blochs else np.zeros((nt, 0, 3)),
        leak_pop=np.stack(leaks, axis=1) if leaks else np.zeros((nt, 0)),
        res_excited=np.array(res),
    )


def unitarity_probe(program, ops: SystemOperators,
                    cfg: EvolutionConfig | None = None) -> float:
    """||U^dag U - I||_F over the full basis (lab frame)."""
    cfg = cfg or EvolutionConfig()
    full = EvolutionConfig(
        tau_ns=cfg.tau_ns, method=cfg.method, frame="lab",
        record_stride=cfg.record_stride,
        columns=np.arange(ops.dimension),
        max_exact_steps=cfg.max_exact_steps, corrupt_step=cfg.corrupt_step,
    )
    prop = evolve(program, ops, full)
    u = prop.matrix
    gram = u.conj().T @ u
    return float(np.linalg.norm(gram - np.eye(ops.dimension)))
