"""Derivative-free calibration of CNOT pulse parameters.

The optimizer minimizes 1 - F over (a subset of) the 12-dim parameter vector
(f1, f2, TX, TS, OmegaX, OmegaS, rho, gamma1, gamma2, theta0, theta1, theta2)
with a hand-rolled Nelder-Mead working in scaled coordinates. The evolution
only depends on the first nine entries, so a tiny cache makes virtual-Z-only
trial points free. The three-step seeding workflow (CR sweet-spot sweep,
auxiliary-pulse fit against basis success probability, VZ angle fit) is
provided for starting points that are not taken from a published table.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .evolve import EvolutionConfig, evolve
from .metrics import (apply_vz, average_fidelity, gate_report, ideal_cnot,
                      success_probabilities, vz_diagonal, _chunk_states)
from .pulses import (CnotAsymParams, FlatTopEnvelope, PARAM_NAMES, PulseProgram,
                     Tone, build_asym_cnot)

__all__ = [
    "NmConfig",
    "ParamSpace",
    "OptimizationTrace",
    "nelder_mead",
    "cnot_param_space",
    "OptimizeConfig",
    "GateCalibration",
    "optimize_gate",
    "vz_fit",
    "sweet_spot_search",
    "aux_and_vz_fit",
    "sweep_metric",
]


class OptimizeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Nelder-Mead
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NmConfig:
    """Simplex coefficients and stopping rules.

    alpha/gamma/beta/delta are reflection, expansion, contraction, shrink.
    xatol is the scaled simplex diameter, fatol the best-worst value spread;
    either one stops the loop. init_step is the per-coordinate displacement
    of the initial simplex in scaled units (5% of the scale by default).
    """

    alpha: float = 1.0
    gamma: float = 2.0
    beta: float = 0.5
    delta: float = 0.5
    xatol: float = 1e-6
    fatol: float = 1e-7
    max_evals: int = 2000
    init_step: float = 0.05
    penalty_weight: float = 100.0

    def __post_init__(self):
        if not (self.gamma > 1.0 > self.beta > 0.0):
            raise OptimizeError("need expansion > 1 > contraction > 0")
        if self.alpha <= 0 or not 0.0 < self.delta < 1.0:
            raise OptimizeError("bad reflection or shrink coefficient")


@dataclass
class ParamSpace:
    """Names, scales, soft box bounds and the free-coordinate mask."""

    names: tuple
    scales: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    mask: np.ndarray  # True = optimized

    def __post_init__(self):
        n = len(self.names)
        self.scales = np.asarray(self.scales, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if not (self.scales.shape == self.lower.shape == self.upper.shape
                == self.mask.shape == (n,)):
            raise OptimizeError("space field lengths disagree")
        if np.any(self.scales <= 0):
            raise OptimizeError("scales must be positive")
        if np.any(self.lower > self.upper):
            raise OptimizeError("lower bound above upper bound")

    @property
    def free_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


@dataclass
class OptimizationTrace:
    """Per-iteration progress: (evaluations, best value, simplex diameter)."""

    rows: list = field(default_factory=list)
    wall_time: float = 0.0
    n_evals: int = 0
    converged: bool = False
    final_x: np.ndarray | None = None

    def append(self, n_evals: int, best_f: float, diameter: float) -> None:
        if self.rows and best_f > self.rows[-1][1] + 1e-15:
            raise OptimizeError("best value increased; bookkeeping bug")
        self.rows.append((n_evals, best_f, diameter))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,evals,best_f,diameter\n")
            for i, (n, f, d) in enumerate(self.rows):
                fh.write(f"{i},{n},{f:.12g},{d:.6g}\n")


def nelder_mead(objective, x0, space: ParamSpace, cfg: NmConfig | None = None):
    """Minimize objective(x) over the free coordinates of space.

    Returns (x_best, f_best, trace). Deterministic; NaN objective values are
    treated as +inf; points outside the box are evaluated at the clipped
    location with a quadratic penalty in scaled units added.
    """
    cfg = cfg or NmConfig()
    x0 = np.asarray(x0, dtype=float)
    free = space.free_indices
    evals = 0

    def full_x(y):
        x = x0.copy()
        x[free] = y * space.scales[free]
        return x

    def feval(y):
        nonlocal evals
        evals += 1
        x = full_x(y)
        xc = np.clip(x, space.lower, space.upper)
        excess = (x - xc) / space.scales
        f = objective(xc)
        if np.isnan(f):
            f = np.inf
        return f + cfg.penalty_weight * float(excess @ excess)

    trace = OptimizationTrace()
    t_start = time.monotonic()

    if free.size == 0:
        f0 = feval(np.empty(0))
        trace.append(evals, f0, 0.0)
        trace.wall_time = time.monotonic() - t_start
        trace.n_evals = evals
        trace.converged = True
        trace.final_x = x0.copy()
        return x0.copy(), f0, trace

    m = free.size
    y0 = x0[free] / space.scales[free]
    verts = [y0.copy()]
    for i in range(m):
        y = y0.copy()
        y[i] += cfg.init_step
        verts.append(y)
    verts = np.array(verts)
    fvals = np.array([feval(v) for v in verts])

    def record():
        order = np.argsort(fvals, kind="stable")
        diam = float(np.max(np.abs(verts - verts[order[0]])))
        trace.append(evals, float(fvals[order[0]]), diam)
        return order, diam

    order, diam = record()
    while evals < cfg.max_evals:
        order = np.argsort(fvals, kind="stable")
        best, worst = order[0], order[-1]
        second_worst = order[-2]
        diam = float(np.max(np.abs(verts - verts[best])))
        spread = float(fvals[worst] - fvals[best])
        if diam < cfg.xatol or spread < cfg.fatol:
            trace.converged = True
            break
        centroid = np.mean(verts[order[:-1]], axis=0)
        y_r = centroid + cfg.alpha * (centroid - verts[worst])
        f_r = feval(y_r)
        if f_r < fvals[best]:
            y_e = centroid + cfg.gamma * (y_r - centroid)
            f_e = feval(y_e)
            if f_e < f_r:
                verts[worst], fvals[worst] = y_e, f_e
            else:
                verts[worst], fvals[worst] = y_r, f_r
        elif f_r < fvals[second_worst]:
            verts[worst], fvals[worst] = y_r, f_r
        else:
            if f_r < fvals[worst]:
                y_c = centroid + cfg.beta * (y_r - centroid)
            else:
                y_c = centroid + cfg.beta * (verts[worst] - centroid)
            f_c = feval(y_c)
            if f_c < min(f_r, fvals[worst]):
                verts[worst], fvals[worst] = y_c, f_c
            else:
                y_best = verts[best].copy()
                for i in range(len(verts)):
                    if i == best:
                        continue
                    verts[i] = y_best + cfg.delta * (verts[i] - y_best)
                    fvals[i] = feval(verts[i])
                    if evals >= cfg.max_evals:
                        break
        order, diam = record()

    best = int(np.argsort(fvals, kind="stable")[0])
    x_best = full_x(verts[best])
    x_best = np.clip(x_best, space.lower, space.upper)
    trace.wall_time = time.monotonic() - t_start
    trace.n_evals = evals
    trace.final_x = x_best.copy()
    return x_best, float(fvals[best]), trace


# Default scales/bounds for the 12-dim CNOT vector: MHz-scale frequency moves,
# ns-scale durations, 1e-3 amplitude moves, 0.05 rad phase moves.
_CNOT_SCALES = np.array([0.02, 0.02, 20.0, 20.0, 0.02, 0.02, 0.2, 1.0, 1.0, 1.0, 1.0, 1.0])
_CNOT_LOWER = np.array([3.0, 3.0, 2.0, 20.0, 0.0, 0.0, 0.05, -7.0, -7.0, -7.0, -7.0, -7.0])
_CNOT_UPPER = np.array([7.0, 7.0, 50.0, 400.0, 0.2, 0.3, 0.45, 7.0, 7.0, 7.0, 7.0, 7.0])


def cnot_param_space(free) -> ParamSpace:
    """The canonical 12-dim space; ``free`` lists parameter names to optimize."""
    unknown = set(free) - set(PARAM_NAMES)
    if unknown:
        raise OptimizeError(f"unknown parameter names {sorted(unknown)}")
    mask = np.array([name in free for name in PARAM_NAMES])
    return ParamSpace(
        names=PARAM_NAMES, scales=_CNOT_SCALES.copy(),
        lower=_CNOT_LOWER.copy(), upper=_CNOT_UPPER.copy(), mask=mask,
    )


# ---------------------------------------------------------------------------
# virtual-Z fit (evolution-free)
# ---------------------------------------------------------------------------

def _fidelity_vs_theta(block, ideal, psi):
    b_dag = ideal.conj().T

    def f_of(thetas):
        e = b_dag @ (vz_diagonal(thetas)[:, None] * block)
        amps = np.abs(np.einsum("jk,kl,jl->j", psi.conj(), e, psi))
        return float(np.mean(amps))

    return f_of


def _phase_regression(block, ideal, n_qubits):
    """Initial VZ angles from the single-excitation diagonal phases.

    For a permutation ideal, input e_i maps to some output pattern; aligning
    arg<out(b)|U|b> + theta . m_out(b) across b = 0 and the single-bit inputs
    gives a small linear system (triangular for CNOT).
    """
    dim = 2**n_qubits
    out_of = np.array([int(np.argmax(np.abs(ideal[:, b]))) for b in range(dim)])
    bits_of = lambda idx: [(idx >> (n_qubits - 1 - i)) & 1 for i in range(n_qubits)]
    phi0 = np.angle(block[out_of[0], 0])
    rows, rhs = [], []
    for i in range(n_qubits):
        b = 1 << (n_qubits - 1 - i)
        rows.append(bits_of(out_of[b]))
        amp = block[out_of[b], b]
        rhs.append(phi0 - np.angle(amp))
    rows = np.array(rows, dtype=float)
    rhs = np.array(rhs)
    theta, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    return np.mod(theta + np.pi, 2 * np.pi) - np.pi


def vz_fit(block: np.ndarray, ideal: np.ndarray, n_samples: int = 512,
           seed: int = 7, polish: bool = True):
    """Fit the per-qubit virtual-Z angles maximizing the mean overlap.

    The pulse block is fixed, so every trial is a cheap diagonal rephasing;
    no re-evolution happens here. Returns (thetas, F at the fit sample size).
    """
    dim = block.shape[0]
    n_qubits = int(round(np.log2(dim)))
    psi = _chunk_states(dim, n_samples, seed, 0)
    f_of = _fidelity_vs_theta(block, ideal, psi)
    theta0 = _phase_regression(block, ideal, n_qubits)
    if not polish:
        return theta0, f_of(theta0)

    space = ParamSpace(
        names=tuple(f"theta{i}" for i in range(n_qubits)),
        scales=np.ones(n_qubits), lower=np.full(n_qubits, -7.0),
        upper=np.full(n_qubits, 7.0), mask=np.ones(n_qubits, dtype=bool),
    )
    cfg = NmConfig(max_evals=400, xatol=1e-8, fatol=1e-12)
    best = None
    for start in (theta0, np.zeros(n_qubits)):
        x, f, _ = nelder_mead(lambda th: -f_of(th), start, space, cfg)
        if best is None or f < best[1]:
            best = (x, f)
    thetas = np.mod(best[0] + np.pi, 2 * np.pi) - np.pi
    return thetas, -best[1]


# ---------------------------------------------------------------------------
# gate optimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizeConfig:
    """Evaluation settings shared by the calibration entry points."""

    tau_ns: float = 0.001
    method: str = "trotter2"
    inner_samples: int = 512
    final_samples: int = 10000
    mc_seed: int = 7
    nm: NmConfig = field(default_factory=NmConfig)
    reset_threshold: float = 0.9  # below this the fit is flagged a local max


@dataclass
class GateCalibration:
    params: CnotAsymParams
    report: object  # FidelityReport
    trace: OptimizationTrace
    n_evolutions: int
    local_maximum: bool = False


def _comp_block_for(params: CnotAsymParams, ops, cfg: OptimizeConfig):
    program = build_asym_cnot(
        params, ops.indexer.n_transmons,
        ec_target=ops.device.transmons[params.target].charging_energy,
    )
    prop = evolve(program, ops, EvolutionConfig(
        tau_ns=cfg.tau_ns, method=cfg.method, frame="eigen"))
    return prop, prop.comp_block()


def optimize_gate(ops, seed_params: CnotAsymParams, free,
                  cfg: OptimizeConfig | None = None) -> GateCalibration:
    """Nelder-Mead over the named free parameters of the 12-dim vector.

    The propagation depends only on the nine pulse entries, so blocks are
    cached per pulse point and theta-only trial moves cost no evolution. The
    inner objective is 1 - F at inner_samples with a fixed seed (common random
    numbers); the returned report is re-evaluated at final_samples.
    """
    cfg = cfg or OptimizeConfig()
    space = cnot_param_space(free)
    n_t = ops.indexer.n_transmons
    ideal = ideal_cnot(n_t, seed_params.control, seed_params.target)
    psi = _chunk_states(2**n_t, cfg.inner_samples, cfg.mc_seed, 0)

    cache: dict = {}
    cache_order: list = []
    n_evolutions = 0

    def block_at(x):
        nonlocal n_evolutions
        key = tuple(np.asarray(x[:9], dtype=float))
        if key not in cache:
            _, blk = _comp_block_for(seed_params.with_vector(x), ops, cfg)
            cache[key] = blk
            cache_order.append(key)
            n_evolutions += 1
            if len(cache_order) > 32:
                cache.pop(cache_order.pop(0))
        return cache[key]

    def objective(x):
        blk = block_at(x)
        f_of = _fidelity_vs_theta(blk, ideal, psi)
        return 1.0 - f_of(x[9:9 + n_t])

    x0 = seed_params.as_vector()
    # The VZ angles are frame corrections and cost no evolution: initialize
    # any free ones analytically at the seed pulse point instead of trusting
    # the seed values, which may come from a different frame convention.
    free_thetas = [i for i in space.free_indices if i >= 9 and i - 9 < n_t]
    if free_thetas:
        th_fit, _ = vz_fit(block_at(x0), ideal,
                           n_samples=cfg.inner_samples, seed=cfg.mc_seed)
        for i in free_thetas:
            x0[i] = th_fit[i - 9]
    x_best, f_best, trace = nelder_mead(objective, x0, space, cfg.nm)

    final = seed_params.with_vector(x_best)
    prop, blk = _comp_block_for(final, ops, cfg)
    n_evolutions += 1
    report = gate_report(prop, ideal, final.thetas,
                         n_samples=cfg.final_samples, seed=cfg.mc_seed)
    return GateCalibration(
        params=final, report=report, trace=trace,
        n_evolutions=n_evolutions,
        local_maximum=report.fidelity < cfg.reset_threshold,
    )


# ---------------------------------------------------------------------------
# seed-search workflow: CR sweet spot, auxiliary fit, VZ fit
# ---------------------------------------------------------------------------

def _cr_only_program(params: CnotAsymParams, n_transmons: int) -> PulseProgram:
    env = FlatTopEnvelope(amplitude=params.omega_s, t_s=params.t_s,
                          rho=params.rho, q=params.q, layout=params.cr_layout)
    tone = Tone(envelope=env, frequency=params.f1, phase=params.gamma1)
    return PulseProgram(
        n_transmons=n_transmons, channels={params.control: (tone,)},
        total_time=env.duration, layout=params.cr_layout,
    )


def _conditional_target_overlap(prop, control: int, target: int) -> float:
    """Tr(rho_T^(c=0) rho_T^(c=1)) for initial states |0...0> and |e_c>."""
    idx = prop.indexer
    n_t = idx.n_transmons
    lab0 = (0,) + (0,) * n_t
    lab1 = list(lab0)
    lab1[1 + control] = 1
    rhos = []
    for lab in (lab0, tuple(lab1)):
        col = idx.flat_index(lab)
        pos = int(np.flatnonzero(prop.columns == col)[0])
        vec = prop.matrix[:, pos].reshape(idx.dims)
        axes = tuple(i for i in range(len(idx.dims)) if i != 1 + target)
        rho = np.tensordot(vec, vec.conj(), axes=(axes, axes))
        rhos.append(rho[:2, :2])  # computational part of the target
    return float(np.real(np.trace(rhos[0] @ rhos[1])))


@dataclass
class SeedSearchReport:
    """Scored CR grid: low score = equal success probabilities and orthogonal
    conditional target states."""

    axes: dict
    points: list  # dicts of the varied parameters
    scores: np.ndarray
    variances: np.ndarray
    overlaps: np.ndarray

    def ranked(self) -> np.ndarray:
        return np.argsort(self.scores, kind="stable")

    def to_csv(self, path) -> None:
        names = list(self.axes.keys())
        with open(path, "w") as fh:
            fh.write(",".join(names + ["succ_variance", "cond_overlap", "score"]) + "\n")
            for i, pt in enumerate(self.points):
                vals = [f"{pt[n]:.9g}" for n in names]
                fh.write(",".join(vals + [
                    f"{self.variances[i]:.9g}", f"{self.overlaps[i]:.9g}",
                    f"{self.scores[i]:.9g}",
                ]) + "\n")


def sweet_spot_search(ops, base: CnotAsymParams, axes: dict,
                      cfg: OptimizeConfig | None = None) -> SeedSearchReport:
    """Grid sweep of the CR tone alone, scored for CNOT-seeding quality.

    axes maps parameter names (among f1, TS, OmegaS, rho, gamma1) to value
    arrays; the cartesian product is evaluated. Score = variance of the basis
    success probabilities + overlap of the conditional target states, both of
    which vanish at the ideal seeding point.
    """
    cfg = cfg or OptimizeConfig()
    allowed = {"f1": "f1", "TS": "t_s", "OmegaS": "omega_s",
               "rho": "rho", "gamma1": "gamma1"}
    bad = set(axes) - set(allowed)
    if bad:
        raise OptimizeError(f"sweep axes must be CR parameters, got {sorted(bad)}")
    n_t = ops.indexer.n_transmons
    ideal = ideal_cnot(n_t, base.control, base.target)
    names = list(axes.keys())
    grids = np.meshgrid(*[np.asarray(axes[n], dtype=float) for n in names],
                        indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=-1) if names else np.zeros((1, 0))

    points, variances, overlaps = [], [], []
    for row in flat:
        kw = {allowed[n]: float(v) for n, v in zip(names, row)}
        p = replace(base, **kw)
        prog = _cr_only_program(p, n_t)
        prop = evolve(prog, ops, EvolutionConfig(
            tau_ns=cfg.tau_ns, method=cfg.method, frame="eigen"))
        succ = success_probabilities(prop.comp_block(), ideal)
        probs = np.array([v for k, v in succ.items() if k != "mean"])
        variances.append(float(np.var(probs)))
        overlaps.append(_conditional_target_overlap(prop, p.control, p.target))
        points.append({n: float(v) for n, v in zip(names, row)})
    variances = np.array(variances)
    overlaps = np.array(overlaps)
    return SeedSearchReport(
        axes=axes, points=points, scores=variances + overlaps,
        variances=variances, overlaps=overlaps,
    )


def aux_and_vz_fit(ops, cr_point: CnotAsymParams,
                   cfg: OptimizeConfig | None = None) -> GateCalibration:
    """Fit the auxiliary pulse, then the VZ angles, on top of a CR point.

    Step 2 maximizes the mean basis success probability over
    (f2, TX, OmegaX, gamma2) -- a virtual-Z-free objective. Step 3 fits the
    VZ angles on the resulting block without further evolution. A result
    below the reset threshold is flagged as a local maximum.
    """
    cfg = cfg or OptimizeConfig()
    n_t = ops.indexer.n_transmons
    ideal = ideal_cnot(n_t, cr_point.control, cr_point.target)
    n_evolutions = 0

    def objective(x):
        nonlocal n_evolutions
        p = cr_point.with_vector(x)
        _, blk = _comp_block_for(p, ops, cfg)
        n_evolutions += 1
        return 1.0 - success_probabilities(blk, ideal)["mean"]

    space = cnot_param_space(("f2", "TX", "OmegaX", "gamma2"))
    x_best, _, trace = nelder_mead(objective, cr_point.as_vector(), space, cfg.nm)

    prop, blk = _comp_block_for(cr_point.with_vector(x_best), ops, cfg)
    n_evolutions += 1
    thetas, _ = vz_fit(blk, ideal, n_samples=cfg.inner_samples, seed=cfg.mc_seed)
    final = replace(cr_point.with_vector(x_best), thetas=tuple(thetas))
    report = gate_report(prop, ideal, final.thetas,
                         n_samples=cfg.final_samples, seed=cfg.mc_seed)
    return GateCalibration(
        params=final, report=report, trace=trace, n_evolutions=n_evolutions,
        local_maximum=report.fidelity < cfg.reset_threshold,
    )


# ---------------------------------------------------------------------------
# generic parameter sweep (CLI `sweep` verb)
# ---------------------------------------------------------------------------

def sweep_metric(ops, base: CnotAsymParams, axes: dict,
                 cfg: OptimizeConfig | None = None) -> list:
    """Evaluate mean success and fidelity on a parameter grid.

    axes maps any of the 12 parameter names to value arrays. Returns one dict
    per grid point (evaluation-order independent by construction: each point
    is a pure function of the base parameters and the grid values).
    """
    cfg = cfg or OptimizeConfig()
    bad = set(axes) - set(PARAM_NAMES)
    if bad:
        raise OptimizeError(f"unknown sweep axes {sorted(bad)}")
    n_t = ops.indexer.n_transmons
    ideal = ideal_cnot(n_t, base.control, base.target)
    names = list(axes.keys())
    grids = np.meshgrid(*[np.asarray(axes[n], dtype=float) for n in names],
                        indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=-1)
    x0 = base.as_vector()
    rows = []
    for row in flat:
        x = x0.copy()
        for n, v in zip(names, row):
            x[PARAM_NAMES.index(n)] = v
        p = base.with_vector(x)
        _, blk = _comp_block_for(p, ops, cfg)
        succ = success_probabilities(blk, ideal)
        blk_vz = apply_vz(blk, list(p.thetas) + [0.0] * (n_t - len(p.thetas)))
        rep = average_fidelity(blk_vz, ideal, n_samples=cfg.inner_samples,
                               seed=cfg.mc_seed)
        entry = {n: float(v) for n, v in zip(names, row)}
        entry["mean_success"] = succ["mean"]
        entry["fidelity"] = rep.fidelity
        rows.append(entry)
    return rows
