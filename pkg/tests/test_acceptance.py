"""Acceptance gate: eleven criteria, one PASS/FAIL line each.

Each test measures what it needs, records the verdict through the
``acceptance`` fixture (so the summary line always prints), and then
asserts.  Tolerances are fixed here on purpose; loosening them is a
library regression, not a test problem.
"""

import json
import time
from functools import lru_cache

import numpy as np

import kolmlab as kl
from conftest import tame_state
from kolmlab.cli import main
from kolmlab.mixtures import mixture_to_phase

OMEGA = kl.PeriodicBalls(period=(1.0, 1.0), centers=((0.0, 0.0),), radius=0.3)
TWO_PIECE = kl.TimeSet(1.0, ((0.0, 0.5), (0.75, 1.0)))


def _states(seed, count, n_terms=2):
    rng = np.random.default_rng(seed)
    return [tame_state(rng, n_terms=n_terms) for _ in range(count)]


def _rel_field_err(a, b):
    return float(np.linalg.norm(a.values - b.values) / np.linalg.norm(b.values))


@lru_cache(maxsize=1)
def _fitted_c1():
    """Norm-form spectral constant for OMEGA, shared by criteria 7 and 9."""
    fit = kl.fit_spectral_constant(OMEGA, n_values=(1, 2, 4, 8, 16),
                                   samples_per_n=24, seed=0)
    return fit.fitted_constant / 2.0 + kl.DecayConstants(d=1).c3


def test_criterion_01_propagator_exactness(acceptance):
    start = time.perf_counter()
    grid = kl.PhaseGrid(1, 128, 10.0)
    states = _states(20260818, 20)
    worst_agree = 0.0
    for s in states:
        f0 = mixture_to_phase(s, grid)
        for t in (0.1, 0.5, 1.0):
            gt = kl.propagate_grid(f0, t)
            mt = mixture_to_phase(kl.propagate_mixture(s, t), grid)
            worst_agree = max(worst_agree, _rel_field_err(gt, mt))

    # finite-difference reference: first order, so the error halves when
    # space and time steps are refined together
    s = states[0]
    fd_errs = []
    for m in (64, 128, 256):
        g = kl.PhaseGrid(1, m, 10.0)
        f0 = mixture_to_phase(s, g)
        ref = mixture_to_phase(kl.propagate_mixture(s, 0.5), g)
        fd_errs.append(_rel_field_err(kl.fd_solve(f0, 0.5, steps=2 * m), ref))
        if m == 256:
            grid_err_at_fd = _rel_field_err(kl.propagate_grid(f0, 0.5), ref)
    ratios = [fd_errs[i] / fd_errs[i + 1] for i in range(2)]
    elapsed = time.perf_counter() - start

    ok = (
        worst_agree <= 1e-6
        and all(1.6 <= r <= 2.4 for r in ratios)
        and grid_err_at_fd < min(fd_errs)
        and elapsed <= 60.0
    )
    acceptance.record(1, ok,
        f"worst rel err {worst_agree:.2e} over 60 runs, fd halving ratios "
        f"{ratios[0]:.2f}/{ratios[1]:.2f}, {elapsed:.1f}s")


def test_criterion_02_pointwise_decay(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(102)
    n = 10**6
    t = (1.0 - rng.random(n)) * 10.0
    radius = 1e3 * np.sqrt(rng.random(n))
    angle = rng.uniform(0.0, 2.0 * np.pi, n)
    xi, eta = radius * np.cos(angle), radius * np.sin(angle)
    ok_mask = kl.pointwise_decay_ok(t, xi, eta)
    violations = int(n - ok_mask.sum())

    # spot check the vectorized path against the scalar symbol
    agree = all(
        kl.pointwise_decay_ok(t[i], xi[i], eta[i])
        == bool(
            kl.symbol(t[i], np.array([xi[i], eta[i]])).exponent
            >= (xi[i] ** 2 + eta[i] ** 2) * kl.time_scale(t[i]) / 30.0
        )
        for i in range(0, n, n // 500)
    )
    elapsed = time.perf_counter() - start
    ok = violations == 0 and agree and elapsed <= 10.0
    acceptance.record(2, ok,
        f"{violations} violations in 1e6 samples, scalar spot check "
        f"{'agrees' if agree else 'DISAGREES'}, {elapsed:.1f}s")


def test_criterion_03_frequency_tail_table(acceptance):
    start = time.perf_counter()
    n_values = np.geomspace(0.5, 6.0, 10)
    t_values = np.linspace(0.1, 2.0, 10)
    violations = 0
    worst_log_margin = -np.inf
    for s in _states(103, 5):
        mass0 = kl.mixture_norm(s) ** 2
        for t in t_values:
            st = kl.propagate_mixture(s, float(t))
            for n in n_values:
                tail = kl.tail_mass(st, float(n))
                bound = kl.decay_bound(float(n), float(t), mass0)
                if tail > bound * (1.0 + 1e-9) + 1e-12 * mass0:
                    violations += 1
                if tail > 0.0 and bound > 0.0:
                    worst_log_margin = max(worst_log_margin, float(np.log(tail / bound)))
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed <= 60.0
    acceptance.record(3, ok,
        f"{violations} violations on 5x10x10 table, worst log(tail/bound) "
        f"{worst_log_margin:.2f}, {elapsed:.1f}s")


def test_criterion_04_semigroup_contraction(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(104)
    states = _states(104, 20)

    worst_mix = 0.0
    for s in states:
        z = rng.uniform(-6.0, 6.0, size=(64, 2))
        left = kl.evaluate_mixture(
            kl.propagate_mixture(kl.propagate_mixture(s, 0.3), 0.7), z)
        right = kl.evaluate_mixture(kl.propagate_mixture(s, 1.0), z)
        worst_mix = max(worst_mix, float(np.max(np.abs(left - right)) / np.max(np.abs(right))))

    grid = kl.PhaseGrid(1, 128, 10.0)
    worst_grid = 0.0
    for s in states[:5]:
        f0 = mixture_to_phase(s, grid)
        left = kl.propagate_grid(kl.propagate_grid(f0, 0.3), 0.7)
        worst_grid = max(worst_grid, _rel_field_err(left, kl.propagate_grid(f0, 1.0)))

    mono_violations = 0
    for s in states[:10]:
        norms = kl.spectral_trajectory_norms(s, np.linspace(0.05, 2.0, 20))
        mono_violations += sum(
            norms[i + 1] > norms[i] * (1.0 + 1e-12) for i in range(len(norms) - 1))

    elapsed = time.perf_counter() - start
    ok = worst_mix <= 1e-10 and worst_grid <= 1e-7 and mono_violations == 0
    acceptance.record(4, ok,
        f"identity err mixture {worst_mix:.1e} / grid {worst_grid:.1e}, "
        f"{mono_violations} contraction violations, {elapsed:.1f}s")


def test_criterion_05_epsilon_minimization(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(105)
    n = 10**4
    a = 10.0 ** rng.uniform(-3, 1, n)
    b = 10.0 ** rng.uniform(-3, 1, n)
    k = 10.0 ** rng.uniform(np.log10(0.1), np.log10(8.0), n)

    closed = np.array([kl.epsilon_minimize(a[i], b[i], k[i]).min_value for i in range(n)])

    # vectorized golden-section search in log(eps), fully independent of
    # the closed form (fixed wide bracket)
    lo = np.full(n, np.log(1e-8))
    hi = np.full(n, np.log(1e8))
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    objective = lambda u: a * np.exp(-k * u) + b * np.exp(u)
    for _ in range(200):
        m1 = hi - phi * (hi - lo)
        m2 = lo + phi * (hi - lo)
        take_left = objective(m1) <= objective(m2)
        hi = np.where(take_left, m2, hi)
        lo = np.where(take_left, lo, m1)
    searched = objective(0.5 * (lo + hi))
    worst_rel = float(np.max(np.abs(searched - closed) / closed))

    # exponents under the alpha -> k(alpha) map
    alphas = rng.uniform(0.05, 0.95, 100)
    k_of = alphas / (1.0 - alphas)
    exp_err = float(max(
        np.max(np.abs(1.0 / (k_of + 1.0) - (1.0 - alphas))),
        np.max(np.abs(k_of / (k_of + 1.0) - alphas)),
    ))
    value_err = 0.0
    for alpha in alphas[:20]:
        kk = alpha / (1.0 - alpha)
        em = kl.epsilon_minimize(2.0, 3.0, kk)
        direct = kl.balance_constant(kk) * 2.0 ** (1.0 - alpha) * 3.0**alpha
        value_err = max(value_err, abs(em.min_value - direct) / direct)

    elapsed = time.perf_counter() - start
    ok = worst_rel <= 1e-9 and exp_err <= 1e-12 and value_err <= 1e-12
    acceptance.record(5, ok,
        f"closed form vs search worst rel {worst_rel:.1e} over 1e4, exponent "
        f"identity err {exp_err:.1e}, {elapsed:.1f}s")


def test_criterion_06_constant_assembly(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(106)

    young_violations = 0
    worst_gap = np.inf
    for _ in range(1000):
        ledger = kl.ConstantLedger(
            c1=float(rng.uniform(0.0, 10.0)),
            c2=float(rng.uniform(1e-3, 5.0)),
            c3=float(rng.uniform(0.0, 5.0)),
            alpha=float(rng.uniform(0.02, 0.98)),
            horizon=float(rng.uniform(0.05, 10.0)),
        )
        gaps = kl.young_gap(rng.uniform(0.0, 60.0, 100), ledger)
        scale = max(ledger.c1, 1.0) * 60.0
        young_violations += int(np.sum(gaps < -1e-12 * scale))
        worst_gap = min(worst_gap, float(np.min(gaps)))

    envelope_violations = 0
    worst_slack = np.inf
    for _ in range(10**4):
        ledger = kl.ConstantLedger(
            c1=float(rng.uniform(0.0, 10.0)),
            c2=float(rng.uniform(1e-3, 5.0)),
            c3=float(rng.uniform(0.0, 5.0)),
            alpha=float(rng.uniform(0.02, 0.98)),
            horizon=float(rng.uniform(0.05, 10.0)),
        )
        slack = ledger.log_envelope - ledger.log_c_tilde1
        if slack < -1e-12 * max(abs(ledger.log_envelope), 1.0):
            envelope_violations += 1
        worst_slack = min(worst_slack, slack)

    elapsed = time.perf_counter() - start
    ok = young_violations == 0 and envelope_violations == 0
    acceptance.record(6, ok,
        f"young split {young_violations} violations in 1e5 (worst gap "
        f"{worst_gap:.1e}), envelope {envelope_violations} in 1e4 "
        f"(min log slack {worst_slack:.2f}), {elapsed:.1f}s")


def test_criterion_07_interpolation_end_to_end(acceptance):
    start = time.perf_counter()
    c1 = _fitted_c1()
    violations = 0
    worst_frac = 0.0
    for s in _states(107, 5):
        for horizon in (0.25, 1.0, 4.0):
            for alpha in (0.25, 0.5, 0.75):
                rep = kl.verify_interpolation(s, OMEGA, horizon, alpha, c1)
                budget = rep.ledger.observed_budget
                if not rep.holds or rep.observed_constant > budget:
                    violations += 1
                worst_frac = max(worst_frac, rep.observed_constant / budget)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed <= 300.0
    acceptance.record(7, ok,
        f"{violations} violations in 45 instances, c1 {c1:.3f}, worst "
        f"observed/budget {worst_frac:.1e}, {elapsed:.1f}s")


def test_criterion_08_telescope_geometry(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(108)
    lam = 0.95
    identity_bad = 0
    measure_bad = 0
    constants_bad = 0
    for _ in range(20):
        horizon = float(rng.uniform(0.5, 2.0))
        cuts = np.sort(rng.uniform(0.0, horizon, size=2 * int(rng.integers(1, 4))))
        intervals = [
            (float(cuts[2 * j]), float(cuts[2 * j + 1]))
            for j in range(len(cuts) // 2)
            if cuts[2 * j + 1] - cuts[2 * j] > 1e-3
        ]
        if not intervals:
            intervals = [(0.1 * horizon, 0.6 * horizon)]
        time_set = kl.TimeSet(horizon, tuple(intervals))
        l = kl.find_density_point(time_set)
        l1 = kl.select_l1(time_set, l, lam)
        seq = kl.build_sequence(time_set, l, lam, l1, 8)
        m0 = kl.containment_index(time_set, l, lam, l1)

        for m in range(1, seq.depth - 1):
            step = seq.level(m) - seq.level(m + 1)
            want = lam ** (m - 1) * (1.0 - lam) * (l1 - l)
            if abs(step - want) > 1e-12 * max(want, 1e-30):
                identity_bad += 1
        for m in range(1, min(seq.depth, m0)):
            hi, lo = seq.level(m), seq.level(m + 1)
            if 3.0 * time_set.intersect_measure(lo, hi) < (hi - lo) * (1.0 - 1e-12):
                measure_bad += 1

        consts = kl.assemble_constants(seq, 1.0)
        beta = lam**6 / (2.0 * lam**6 - 1.0)
        c2 = (1.0 + 1.0 / lam) ** 3 * (1.0 + lam**3 * ((1.0 - lam) * (l1 - l)) ** 2)
        log_cobs = np.log(3.0) + 1.0 + beta * c2 / seq.gap(1) ** 3
        for got, want in ((consts.beta, beta), (consts.c2, c2), (consts.log_cobs, log_cobs)):
            if abs(got - want) > 1e-12 * abs(want):
                constants_bad += 1

    try:
        kl.build_sequence(TWO_PIECE, 0.005, 0.5, 0.4, 5)
        lambda_rejected = False
    except kl.DataError:
        lambda_rejected = True

    elapsed = time.perf_counter() - start
    ok = identity_bad == 0 and measure_bad == 0 and constants_bad == 0 and lambda_rejected
    acceptance.record(8, ok,
        f"20 random sets: {identity_bad} identity / {measure_bad} measure / "
        f"{constants_bad} constant mismatches, lambda=0.5 "
        f"{'rejected' if lambda_rejected else 'ACCEPTED'}, {elapsed:.1f}s")


def test_criterion_09_observability_two_piece(acceptance):
    start = time.perf_counter()
    c1 = _fitted_c1()
    l = kl.find_density_point(TWO_PIECE)
    l1 = kl.select_l1(TWO_PIECE, l, 0.95)
    seq = kl.build_sequence(TWO_PIECE, l, 0.95, l1, 8)
    consts = kl.assemble_constants(seq, c1)

    violations = 0
    worst_log_ratio = -np.inf
    for s in _states(109, 5):
        rep = kl.verify_observability(s, OMEGA, TWO_PIECE, seq, consts)
        if rep.log_ratio > 1e-9 or not rep.all_steps_hold or rep.identity_abs_err > 1e-8:
            violations += 1
        worst_log_ratio = max(worst_log_ratio, rep.log_ratio)

    residual, slope, intercept = kl.interval_scaling_residual([0.5, 1.0, 2.0, 4.0], c1)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and residual <= 0.01 and slope > 0.0
    acceptance.record(9, ok,
        f"{violations} trajectory violations (worst log ratio "
        f"{worst_log_ratio:.1f}), interval scaling residual {residual:.1e}, "
        f"{elapsed:.1f}s")


def test_criterion_10_thickness_margins(acceptance):
    start = time.perf_counter()
    half = kl.HalfSpace(normal=(1.0, 0.0), offset=0.0)
    verdict = kl.check_thickness(half, delta=0.4, r=0.1)
    expected_worst = 10.0 * 0.4 + 0.1
    half_ok = (
        not verdict.thick
        and verdict.counterexample is not None
        and abs(verdict.worst_distance - expected_worst) <= 1e-12 * expected_worst
    )

    minimal = kl.minimal_delta(OMEGA, 0.25, sampling_step=1e-3)
    target = np.sqrt(0.5) - 0.05
    balls_ok = abs(minimal - target) <= 2e-3

    elapsed = time.perf_counter() - start
    ok = half_ok and balls_ok
    acceptance.record(10, ok,
        f"half space worst {verdict.worst_distance} vs {expected_worst}, "
        f"minimal delta {minimal:.6f} vs {target:.6f}, {elapsed:.1f}s")


def test_criterion_11_cli_determinism(acceptance, tmp_path):
    start = time.perf_counter()
    initial = {"random": {"count": 2, "n_terms": 2, "eig_range": [0.5, 1.0],
                          "imag_scale": 0.1, "center_scale": 1.0, "phase_scale": 0.5}}
    jobs = {
        "spectral-fit": {
            "set": {"variant": "periodic_balls", "period": [1.0, 1.0],
                    "centers": [[0.0, 0.0]], "radius": 0.3},
            "n_values": [1, 2, 4],
            "samples_per_n": 6,
            "seed": 5,
        },
        "decay-check": {
            "initial": initial,
            "n_values": [1.0, 2.0],
            "t_values": [0.25, 1.0],
            "seed": 3,
        },
    }
    identical = True
    seed_sensitive = True
    for kind, body in jobs.items():
        cfg = tmp_path / f"{kind}.json"
        cfg.write_text(json.dumps(body), encoding="utf-8")
        outs = [tmp_path / f"{kind}-{i}" for i in range(3)]
        assert main([kind, "--config", str(cfg), "--out", str(outs[0])]) == 0
        assert main([kind, "--config", str(cfg), "--out", str(outs[1])]) == 0
        assert main([kind, "--config", str(cfg), "--out", str(outs[2]), "--seed", "99"]) == 0
        for name in outs[0].glob("*.csv"):
            base = name.name
            first = (outs[0] / base).read_bytes()
            if first != (outs[1] / base).read_bytes():
                identical = False
            if first == (outs[2] / base).read_bytes():
                seed_sensitive = False
    elapsed = time.perf_counter() - start
    ok = identical and seed_sensitive
    acceptance.record(11, ok,
        f"csv bytes {'identical' if identical else 'DIFFER'} across reruns, "
        f"seed override {'changes' if seed_sensitive else 'KEEPS'} them, "
        f"{elapsed:.1f}s")
