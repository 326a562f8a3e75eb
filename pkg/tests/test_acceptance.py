"""Top-level acceptance checks for the simulator and calibration toolkit.

One test per shipped guarantee, ten in all, so `pytest -v
tests/test_acceptance.py` reads as a scorecard.  Each test prints one
PASS/FAIL line per clause (visible with -s or on failure) and asserts them
all at the end.  Reference fidelities and success probabilities come from
the calibrated design fixtures shipped with the package.
"""

import json
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from crsim.device import (DeviceSpec, CouplingSpec, anharmonicity,
                          build_system, diagonalize_transmon, qubit_frequency)
from crsim.evolve import (EvolutionConfig, bloch_trajectory, evolve,
                          evolve_exact_step)
from crsim.metrics import (apply_vz, average_fidelity, gate_report,
                           ideal_cnot)
from crsim.optimize import NmConfig, OptimizeConfig, optimize_gate
from crsim.pulses import (FlatTopEnvelope, GaussianEnvelope, PulseProgram,
                          Tone, build_asym_cnot, record_to_params)

from conftest import fixture_path


def _scorecard(name, clauses):
    """Print one PASS/FAIL line per clause, then assert them all."""
    lines = [f"[{name}] {'PASS' if ok else 'FAIL'}  {text}"
             for ok, text in clauses]
    print("\n" + "\n".join(lines))
    failed = [text for ok, text in clauses if not ok]
    assert not failed, f"{len(failed)} clause(s) failed:\n  " + \
        "\n  ".join(failed)


def _evaluate_designs(fixture_name, ops, device):
    """Evolve every calibrated design at a 1 ps step and score it."""
    rows = json.loads(fixture_path(fixture_name).read_text())
    out = {}
    for row in rows:
        params = record_to_params(row)
        program = build_asym_cnot(
            params, len(device.transmons),
            ec_target=device.transmons[params.target].charging_energy)
        prop = evolve(program, ops, EvolutionConfig(tau_ns=0.001))
        report = gate_report(prop, ideal_cnot(len(device.transmons),
                                              params.control, params.target),
                             params.thetas, 10000, 7)
        out[row["label"]] = {
            "params": params, "prop": prop,
            "F": report.fidelity, "succ": report.mean_success,
            "F_ref": row["F_ref"], "succ_ref": row.get("mean_success_ref"),
        }
    return out


@pytest.fixture(scope="module")
def evaluated3(ops3, dev3):
    return _evaluate_designs("calibrated_asym_3t.json", ops3, dev3)


@pytest.fixture(scope="module")
def evaluated2(ops2, dev2):
    return _evaluate_designs("calibrated_asym_2t.json", ops2, dev2)


def test_01_transmon_spectrum_from_device_energies(dev3):
    t0 = time.monotonic()
    sols = [diagonalize_transmon(t) for t in dev3.transmons]
    omegas = [qubit_frequency(s) for s in sols]
    alphas = [anharmonicity(s) for s in sols]
    elapsed = time.monotonic() - t0

    refs = (5.0851, 4.9783, 4.8895)
    clauses = []
    for i, (w, r) in enumerate(zip(omegas, refs)):
        d_mhz = abs(w - r) * 1e3
        clauses.append((d_mhz <= 15.0,
                        f"omega01[{i}] = {w:.6f} GHz, {d_mhz:.2f} MHz from "
                        f"reference {r} (tolerance 15 MHz)"))
    for i, j in ((0, 1), (1, 2)):
        d = (omegas[i] - omegas[j]) * 1e3
        clauses.append((85.0 <= d <= 115.0,
                        f"adjacent detuning {i}-{j} = {d:.1f} MHz "
                        f"in [85, 115] MHz"))
    for i, (a, t) in enumerate(zip(alphas, dev3.transmons)):
        dev_pct = (abs(a) / t.charging_energy - 1.0) * 100.0
        clauses.append((abs(dev_pct) <= 15.0,
                        f"anharmonicity[{i}] = {a:+.4f} GHz sits "
                        f"{dev_pct:+.1f}% from -E_C (tolerance 15%)"))
    clauses.append((elapsed < 1.0, f"runtime {elapsed:.3f} s < 1 s"))
    _scorecard("1 spectrum", clauses)


def test_02_split_step_error_and_convergence_order(ops3):
    rng = np.random.default_rng(11)
    channels = {}
    for q in range(3):
        env = GaussianEnvelope(amplitude=float(rng.uniform(0.005, 0.02)),
                               duration=1.0)
        channels[q] = (Tone(env, float(rng.uniform(4.8, 5.2)),
                            float(rng.uniform(0.0, 2 * np.pi))),)
    program = PulseProgram(n_transmons=3, channels=channels, total_time=1.0)

    cols = np.arange(ops3.dimension)
    taus = (4e-3, 2e-3, 1e-3, 5e-4)
    t0 = time.monotonic()
    errs = []
    for tau in taus:
        cfg = EvolutionConfig(tau_ns=tau, columns=cols)
        u_split = evolve(program, ops3, cfg).matrix
        u_exact = evolve_exact_step(program, ops3, cfg).matrix
        errs.append(float(np.linalg.norm(u_split - u_exact)))
    elapsed = time.monotonic() - t0
    slope = float(np.polyfit(np.log(taus), np.log(errs), 1)[0])

    detail = ", ".join(f"{t*1e3:g} ps: {e:.3e}" for t, e in zip(taus, errs))
    _scorecard("2 splitting", [
        (errs[2] <= 1e-6,
         f"Frobenius error at 1 ps = {errs[2]:.3e} (bound 1e-6; all: {detail})"),
        (1.8 <= slope <= 2.2,
         f"fitted convergence order {slope:.4f} in [1.8, 2.2]"),
        (elapsed < 120.0, f"runtime {elapsed:.1f} s < 120 s"),
    ])


def test_03_unitarity_and_norm_conservation(ops3, evaluated2):
    env = GaussianEnvelope(amplitude=0.01, duration=10.0)
    program = PulseProgram(n_transmons=3,
                           channels={0: (Tone(env, 4.98, 0.0),)},
                           total_time=10.0)
    # 4 ps steps: the residual is pure float rounding and grows linearly
    # with the step count, so the bound pins down the per-step quality
    cfg = EvolutionConfig(tau_ns=4e-3, columns=np.arange(ops3.dimension))
    u = evolve(program, ops3, cfg).matrix
    residual = float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1])))

    prop = evaluated2["cnot01"]["prop"]
    drift = float(np.max(np.abs(prop.column_norms() - 1.0)))

    _scorecard("3 unitarity", [
        (residual <= 1e-10,
         f"10 ns full-basis residual |U^H U - I|_F = {residual:.3e} <= 1e-10"),
        (prop.n_steps >= 200000 and drift <= 1e-9,
         f"column norms drift {drift:.3e} <= 1e-9 over "
         f"{prop.total_time:.0f} ns ({prop.n_steps} steps >= 2e5)"),
    ])


def test_04_weak_drive_rabi_period_vs_independent_model(dev3):
    dev1 = DeviceSpec(transmons=(dev3.transmons[0],),
                      resonator=dev3.resonator,
                      coupling=CouplingSpec(couplings=(0.0,)))
    ops1 = build_system(dev1)
    e = ops1.slot_energies[1]
    w01 = float(e[1] - e[0])
    n01 = float(np.real(ops1.charge_mats[0][0, 1]))
    ec = dev3.transmons[0].charging_energy

    env = FlatTopEnvelope(amplitude=0.004, t_s=120.0, rho=0.05, q=1,
                          layout="literal")
    program = PulseProgram(n_transmons=1,
                           channels={0: (Tone(env, w01, 0.0),)},
                           total_time=env.duration)
    rec = bloch_trajectory(program, ops1,
                           EvolutionConfig(tau_ns=0.002, record_stride=100),
                           (0, 0))
    z_sim = rec.bloch[0, :, 2]

    def rhs(t, y):
        p = y[:2] + 1j * y[2:]
        h = -8.0 * ec * float(env.value(t)) * n01 / 2.0
        dp = -2j * np.pi * h * np.array([p[1], p[0]])
        return np.concatenate([dp.real, dp.imag])

    sol = solve_ivp(rhs, (0.0, env.duration), [1.0, 0.0, 0.0, 0.0],
                    rtol=1e-10, atol=1e-12, dense_output=True, max_step=1.0)

    def first_min(ts, zs):
        j = int(np.argmin(zs))
        a, b, c = zs[j - 1], zs[j], zs[j + 1]
        return ts[j] + 0.5 * (a - c) / (a - 2 * b + c) * (ts[1] - ts[0])

    t_sim = first_min(rec.times, z_sim)
    tt = np.linspace(0.0, env.duration, 4001)
    y = sol.sol(tt)
    z_rwa = (y[0] ** 2 + y[2] ** 2) - (y[1] ** 2 + y[3] ** 2)
    t_rwa = first_min(tt, z_rwa)
    rel = abs(t_sim - t_rwa) / t_rwa

    _scorecard("4 rabi", [
        (np.min(z_sim) < -0.99,
         f"full inversion reached (min z = {np.min(z_sim):.4f})"),
        (rel < 0.02,
         f"half-period {t_sim:.3f} ns vs independent two-level model "
         f"{t_rwa:.3f} ns (relative difference {rel*100:.3f}% < 2%)"),
    ])


def test_05_primary_gate_recalibration(ops3, designs3, evaluated3):
    cal = optimize_gate(
        ops3, designs3["cnot01"],
        ("gamma2", "theta0", "theta1", "theta2"),
        OptimizeConfig(tau_ns=2e-3, nm=NmConfig(max_evals=60)))
    f_partial = cal.report.fidelity

    row = evaluated3["cnot01"]
    delta = abs(row["F"] - row["F_ref"])

    _scorecard("5 primary gate", [
        (f_partial >= 0.98,
         f"phase-and-gamma refit from the printed seed reaches "
         f"F = {f_partial:.5f} >= 0.98 ({cal.trace.n_evals} evaluations, "
         f"{cal.n_evolutions} evolutions)"),
        (delta <= 0.01,
         f"calibrated design F = {row['F']:.5f} within 0.01 of reference "
         f"{row['F_ref']} (|delta| = {delta:.5f})"),
    ])


def test_06_all_six_gate_directions(evaluated3):
    labels = ("cnot01", "cnot10", "cnot12", "cnot21", "cnot20", "cnot02")
    close = []
    clauses = []
    for label in labels:
        row = evaluated3[label]
        d = abs(row["F"] - row["F_ref"])
        if d <= 0.015:
            close.append(label)
        print(f"    {label}: F = {row['F']:.5f}  reference {row['F_ref']}"
              f"  |delta| = {d:.4f}  mean success = {row['succ']:.5f}")
    clauses.append((len(close) >= 3,
                    f"{len(close)} of 6 directions within 0.015 of their "
                    f"reference fidelity (need >= 3): {', '.join(close)}"))
    worst = min(evaluated3[label]["F"] for label in labels)
    clauses.append((worst >= 0.95,
                    f"all six directions reach F >= 0.95 "
                    f"(worst {worst:.5f})"))
    _scorecard("6 breadth", clauses)


def test_07_two_transmon_gates(evaluated2):
    clauses = []
    for label in ("cnot01", "cnot10"):
        row = evaluated2[label]
        clauses.append((row["F"] >= 0.99,
                        f"{label}: F = {row['F']:.5f} >= 0.99 "
                        f"(reference {row['F_ref']})"))
    _scorecard("7 two-transmon", clauses)


def test_08_mean_success_probabilities(evaluated3):
    clauses = []
    for label, row in evaluated3.items():
        if abs(row["F"] - row["F_ref"]) > 0.015:
            continue  # only reproduced directions carry this guarantee
        d = abs(row["succ"] - row["succ_ref"])
        clauses.append((d <= 0.02,
                        f"{label}: mean success {row['succ']:.5f} within "
                        f"0.02 of reference {row['succ_ref']} "
                        f"(|delta| = {d:.4f})"))
    assert clauses, "no direction was reproduced closely enough to score"
    _scorecard("8 success", clauses)


def test_09_fidelity_estimator_health():
    perm = ideal_cnot(2, 0, 1)
    rep = average_fidelity(perm, perm, n_samples=10000, seed=3)
    exact = rep.fidelity == 1.0 and rep.stderr == 0.0

    # fixed slightly-imperfect gate: scatter across seeds and sample sizes
    rng = np.random.default_rng(5)
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = (h + h.conj().T) / 2.0
    w, v = np.linalg.eigh(h)
    block = perm @ (v @ (np.exp(-0.05j * w)[:, None] * v.conj().T))

    reports = [average_fidelity(block, perm, n_samples=10000, seed=s)
               for s in range(6)]
    worst_z = 0.0
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            se = np.hypot(reports[i].stderr, reports[j].stderr)
            worst_z = max(worst_z,
                          abs(reports[i].fidelity - reports[j].fidelity) / se)

    small = average_fidelity(block, perm, n_samples=10000, seed=42)
    large = average_fidelity(block, perm, n_samples=40000, seed=42)
    z_m = abs(small.fidelity - large.fidelity) / np.hypot(small.stderr,
                                                          large.stderr)

    _scorecard("9 estimator", [
        (exact, f"F(U, U) = {rep.fidelity} exactly with stderr "
                f"{rep.stderr} for a permutation gate"),
        (worst_z <= 3.0,
         f"six seeds at M = 1e4 scatter within 3 standard errors "
         f"(worst pairwise z = {worst_z:.2f})"),
        (z_m <= 3.0,
         f"M = 1e4 vs M = 4e4 agree within 3 combined standard errors "
         f"(z = {z_m:.2f})"),
    ])


def test_10_spectator_and_resonator_sanity(ops3, dev3, evaluated3):
    row = evaluated3["cnot01"]
    params = row["params"]
    idle = 2  # the transmon neither driven nor targeted by this gate
    program = build_asym_cnot(
        params, 3, ec_target=dev3.transmons[params.target].charging_energy)

    z_min = 1.0
    for a in (0, 1):
        for b in (0, 1):
            rec = bloch_trajectory(
                program, ops3,
                EvolutionConfig(tau_ns=1e-3, record_stride=1000),
                (0, a, b, 0))
            z_min = min(z_min, float(np.min(rec.bloch[idle, :, 2])))

    u = row["prop"].matrix
    by_level = u.reshape(4, -1, u.shape[1])
    res_excited = 1.0 - np.sum(np.abs(by_level[0]) ** 2, axis=0)
    mean_exc = float(np.mean(res_excited))

    _scorecard("10 sanity", [
        (z_min >= 0.9,
         f"idle transmon Bloch z stays >= 0.9 during the gate for all "
         f"computational inputs (min {z_min:.4f})"),
        (mean_exc <= 0.05,
         f"post-gate resonator excitation averaged over computational "
         f"columns = {mean_exc:.4f} <= 0.05"),
    ])
