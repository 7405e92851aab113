"""Acceptance battery: one test per criterion, each recorded as a PASS/FAIL line.

The lines are printed in the terminal summary (see conftest.py).
"""
import math

import numpy as np
import pytest

from franson_qkd.channel import ChannelParams, dispersion_spread
from franson_qkd.distillation import (
    binary_entropy,
    calibrate_ec_inefficiency,
    entropy_model,
    estimate_qber,
    final_key_length,
    privacy_amplify,
    reconcile,
)
from franson_qkd.interference import PhaseSetting, correlation_probs, outcome_probs_with_visibility
from franson_qkd.montecarlo import analytic_comparison, run_session, sift, simulate_session, summarize
from franson_qkd.profiles import LAB_20M, SPOOL_8450M
from franson_qkd.qber_model import (
    LinkBudget,
    SourceParams,
    compare_plugplay,
    compare_pulsed_source,
    crossing_loss,
    qber_breakdown,
    sweep_attenuation,
)
from franson_qkd.security import (
    SecurityLevel,
    SystemDescription,
    THIS_SYSTEM,
    classify,
    faint_pulse_penalty,
    multiphoton_prob,
)

LAB = LinkBudget(
    source=SourceParams(mu=0.64, nu=0.011, f_alice=1e5),
    link_loss_db=0.0,
    bob_loss_db=5.2,
    eta_d=0.084,
    p_cs=3.9e-5,
    visibility=0.918,
)


def test_c1_lab_breakdown(criterion):
    br = qber_breakdown(LAB)
    got = (br.qber_det, br.qber_opt, br.qber_acc, br.total)
    target = (0.010, 0.041, 0.0086, 0.059)
    ok = all(abs(g - t) <= 0.002 for g, t in zip(got, target))
    detail = "det/opt/acc/total = " + "/".join(f"{g:.4%}" for g in got)
    assert criterion("C1 lab-run breakdown", ok, detail)


def test_c2_spool_breakdown(criterion):
    b = SPOOL_8450M.budget()
    br = qber_breakdown(b)
    ok = 0.028 <= br.qber_det <= 0.030 and abs(br.total - 0.081) <= 0.003 and b.link_loss_db == pytest.approx(4.7)
    detail = f"det {br.qber_det:.4%}, total {br.total:.4%} at V={b.visibility}"
    assert criterion("C2 spool-run breakdown", ok, detail)


def test_c3_ten_percent_crossing(criterion):
    # the QBER proper is incorrect / (incorrect + correct); its small-error approximation is the sum
    exact = crossing_loss(LAB, 0.10, measure="counted")
    approx = crossing_loss(LAB, 0.10, measure="total")
    rows = sweep_attenuation(LAB, np.arange(0.0, 12.01, 0.01))
    first = next(loss for loss, br in rows if br.counted >= 0.10)
    ok = abs(exact - 8.5) <= 0.5 and abs(first - exact) <= 0.01
    detail = f"crossing {exact:.2f} dB (additive approximation {approx:.2f} dB)"
    assert criterion("C3 10% QBER extrapolation", ok, detail)


def test_c4_comparison_ratios(criterion):
    r1 = compare_plugplay(1.0, 0.5, 0.1, 1.0)
    r2 = compare_plugplay(0.6, 0.5, 0.1, 1.0)
    r3 = compare_pulsed_source()
    ok = math.isclose(r1, 2.5, rel_tol=1e-15) and math.isclose(r2, 1.5, rel_tol=1e-15) and r3 == 0.75
    assert criterion("C4 comparison ratios", ok, f"{r1}, {r2}, {r3}")


def test_c5_dispersion(criterion):
    spread = dispersion_spread(ChannelParams(length=10.0, spectral_width=6.0, dispersion_coeff=18.0))
    ok = spread == pytest.approx(1080.0, abs=1e-9) and abs(spread - 1000.0) <= 100.0
    assert criterion("C5 dispersion spread", ok, f"{spread:.1f} ps")


@pytest.mark.slow
@pytest.mark.parametrize("profile", [LAB_20M, SPOOL_8450M], ids=lambda p: p.name)
def test_c6_monte_carlo_matches_model(criterion, profile):
    cfg = profile.simulation_config()
    br = qber_breakdown(cfg.budget)
    passed, passed_vs_sum, worst = 0, 0, 0.0
    for seed in range(20):
        stats = run_session(cfg, seed, 10_000_000)
        cmp = analytic_comparison(cfg, stats)
        good = abs(cmp["qber_z"]) < 3 and abs(cmp["rate_z"]) < 3
        passed += good
        worst = max(worst, abs(cmp["qber_z"]), abs(cmp["rate_z"]))
        sigma = math.sqrt(br.total * (1 - br.total) / stats.sifted_bits)
        passed_vs_sum += abs(stats.measured_qber - br.total) < 3 * sigma
    ok = passed >= 19
    detail = (f"{passed}/20 seeds within 3 sigma (max |z| {worst:.2f}); "
              f"against the additive approximation {passed_vs_sum}/20")
    assert criterion(f"C6 Monte Carlo vs model [{profile.name}]", ok, detail)


@pytest.mark.slow
def test_c7_distillation_round_trip(criterion):
    cfg = LAB_20M.simulation_config()
    failures, min_sifted, min_final, bound_ok = [], math.inf, math.inf, True
    for seed in range(100):
        keys = sift(simulate_session(cfg, seed, 25_000_000))
        min_sifted = min(min_sifted, len(keys))
        est, rest = estimate_qber(keys, 0.1, rng=[seed, 1])
        bob, log = reconcile(rest.alice, rest.bob, est.value, seed=seed)
        final_a = privacy_amplify(rest.alice, log.leaked_bits, est.high, seed=seed)
        final_b = privacy_amplify(bob, log.leaked_bits, est.high, seed=seed)
        if not (np.array_equal(bob, rest.alice) and np.array_equal(final_a, final_b)):
            failures.append(seed)
        n = len(rest)
        bound = n * (1 - binary_entropy(est.value)) - log.parities_disclosed
        bound_ok &= 0 < final_a.size <= bound
        assert final_a.size == final_key_length(n, est.high, log.leaked_bits)
        min_final = min(min_final, final_a.size)

    f = calibrate_ec_inefficiency(450.0, 0.059, 178.0)
    model = entropy_model(f)
    row1, row2 = 450.0 * model(0.059), 134.0 * model(0.086)
    rates_ok = abs(row1 - 178) <= 10 and abs(row2 - 32) <= 6
    ok = not failures and min_sifted >= 100_000 and bound_ok and rates_ok
    detail = (f"{100 - len(failures)}/100 identical, min sifted {min_sifted}, min final {min_final}; "
              f"net rates {row1:.1f} Hz and {row2:.1f} Hz with f={f:.4f}")
    assert criterion("C7 distillation round trip", ok, detail)


def poisson_tail(mu, nmax=50):
    return sum(math.exp(-mu) * mu**k / math.factorial(k) for k in range(2, nmax + 1))


def test_c8_security_accounting(criterion):
    p = multiphoton_prob(0.1)
    levels = (
        classify(THIS_SYSTEM),
        classify(SystemDescription("faint_pulse", mean_photon_number=0.1, loss_db=10.0)),
        classify(SystemDescription("classical")),
    )
    table = [a.level for a in levels] == [
        SecurityLevel.PAIR_PASSIVE_IMMUNE,
        SecurityLevel.FAINT_PULSE_PRACTICAL,
        SecurityLevel.CLASSICAL_PUBLIC_KEY,
    ] and [a.level.rank for a in levels] == [1, 2, 3]
    table &= not levels[0].pns_vulnerable and levels[0].multiphoton_fraction == 0.0
    ok = abs(p - poisson_tail(0.1)) < 1e-9 and abs(p - 4.679e-3) < 5e-7 and faint_pulse_penalty(0.1) == 10.0 and table
    assert criterion("C8 security accounting", ok, f"P(n>=2|0.1)={p:.6e}, penalty {faint_pulse_penalty(0.1)} dB")


def test_c9_property_suites(criterion):
    rng = np.random.default_rng(20240)
    norm_ok = True
    for pa, pb in rng.uniform(-4 * np.pi, 4 * np.pi, size=(10_000, 2)):
        ka, kb = rng.integers(0, 2, 2)
        s = PhaseSetting(pa, pb, int(ka), int(kb))
        c, a = correlation_probs(s)
        cv, av = outcome_probs_with_visibility(s, float(rng.random()))
        norm_ok &= c + a == 1.0 and cv + av == 1.0

    base = qber_breakdown(LAB)
    inv_ok = all(
        br.qber_opt == base.qber_opt and math.isclose(br.qber_acc, base.qber_acc, rel_tol=1e-12)
        for _, br in sweep_attenuation(LAB, np.linspace(0, 30, 301))
    )

    cfg = LAB_20M.simulation_config(verification=True)
    t1 = simulate_session(cfg, 77, 1_000_000)
    t2 = simulate_session(cfg, 77, 1_000_000, workers=4)
    det_ok = t1.to_csv().encode() == t2.to_csv().encode() and summarize(t1).to_json() == summarize(t2).to_json()

    ok = norm_ok and inv_ok and det_ok
    detail = f"normalization {norm_ok}, T_L invariance {inv_ok}, byte-exact seeds {det_ok}"
    assert criterion("C9 property suites", ok, detail)
