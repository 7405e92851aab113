"""Command-line driver.

Exit codes: 0 success, 2 configuration error, 3 model-domain error,
4 reconciliation failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import distillation as dist
from .errors import ConfigError, DomainError, ReconciliationError
from .interference import coincidence_histogram
from .montecarlo import analytic_comparison, sift, simulate_session, summarize
from .profiles import apply_overrides, dumps, load_profile, parse_assignment
from .qber_model import crossing_loss, qber_breakdown, sweep_attenuation, sweep_to_csv
from .security import THIS_SYSTEM, SystemDescription, classify

EXIT_CONFIG, EXIT_DOMAIN, EXIT_RECONCILE = 2, 3, 4


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _profile(args):
    profile = load_profile(args.profile)
    overrides = [parse_assignment(s) for s in args.set or []]
    if getattr(args, "seed", None) is not None:
        overrides.append(("seed", str(args.seed)))
    if getattr(args, "gates", None) is not None:
        overrides.append(("gates", str(args.gates)))
    return apply_overrides(profile, overrides)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_analytic(args) -> int:
    profile = _profile(args)
    br = qber_breakdown(profile.budget())
    report = {"profile": profile.name, **br.as_dict()}
    print(f"{profile.name}: QBER_det={br.qber_det:.4%} QBER_opt={br.qber_opt:.4%} "
          f"QBER_acc={br.qber_acc:.4%} total={br.total:.4%} raw rate={br.raw_rate:.1f} Hz")
    if args.out_dir:
        (_out_dir(args) / "analytic.json").write_text(_dump(report))
    return 0


def cmd_simulate(args) -> int:
    profile = _profile(args)
    cfg = profile.simulation_config(verification=args.verification)
    transcript = simulate_session(cfg, profile.seed, profile.gates, workers=args.workers)
    stats = summarize(transcript)
    report = {"profile": profile.name, "seed": profile.seed, "stats": stats.as_dict(),
              "analytic": analytic_comparison(cfg, stats)}
    out = _out_dir(args)
    (out / "stats.json").write_text(_dump(report))
    (out / "transcript.csv").write_text(transcript.to_csv())
    print(f"{profile.name}: {stats.sifted_bits} sifted bits, QBER={stats.measured_qber:.4%}, "
          f"raw rate={stats.raw_rate:.1f} Hz")
    return 0


def cmd_sweep(args) -> int:
    profile = _profile(args)
    if args.step <= 0 or args.max < args.min:
        raise ConfigError("sweep needs max >= min and a positive step")
    n = int(np.floor((args.max - args.min) / args.step + 1e-9)) + 1
    losses = [round(args.min + i * args.step, 12) for i in range(n)]
    rows = sweep_attenuation(profile.budget(), losses)
    text = sweep_to_csv(rows)
    if args.out_dir:
        (_out_dir(args) / "sweep.csv").write_text(text)
    else:
        sys.stdout.write(text)
    b = profile.budget()
    for measure in ("counted", "total"):
        try:
            print(f"10% crossing ({measure}): {crossing_loss(b, 0.10, measure):.2f} dB", file=sys.stderr)
        except DomainError:
            pass
    return 0


def cmd_distill(args) -> int:
    profile = _profile(args)
    cfg = profile.simulation_config()
    stats_transcript = simulate_session(cfg, profile.seed, profile.gates, workers=args.workers)
    keys = sift(stats_transcript)
    estimate, rest = dist.estimate_qber(keys, args.sample_fraction, rng=[profile.seed, 1])
    bob_key, log = dist.reconcile(rest.alice, rest.bob, estimate.value, seed=profile.seed)
    hash_seed = int(np.random.default_rng([profile.seed, 2]).integers(1 << 62))
    final_a = dist.privacy_amplify(rest.alice, log.leaked_bits, estimate.high, args.margin, hash_seed)
    final_b = dist.privacy_amplify(bob_key, log.leaked_bits, estimate.high, args.margin, hash_seed)
    if not np.array_equal(final_a, final_b):
        raise ReconciliationError("final keys differ")
    out = _out_dir(args)
    meta = {"qber_estimate": estimate.value, "qber_upper": estimate.high,
            "leaked_bits": log.leaked_bits, "hash_seed": hash_seed, "sifted_bits": len(keys)}
    dist.write_key(out / "final_key.bin", final_a, **meta)
    (out / "reconciliation.json").write_text(log.to_json() + "\n")
    stats = summarize(stats_transcript)
    seconds = profile.gates / profile.source.f_alice
    print(f"{profile.name}: sifted {len(keys)} bits, QBER estimate {estimate.value:.4%}, "
          f"leaked {log.leaked_bits}, final {final_a.size} bits ({final_a.size / seconds:.1f} Hz); "
          f"net-rate model {dist.net_rate(stats.raw_rate, stats.measured_qber):.1f} Hz")
    if final_a.size == 0:
        print("warning: no secret key left after privacy amplification", file=sys.stderr)
    return 0


def cmd_security(args) -> int:
    if args.source == "this":
        system = THIS_SYSTEM
    else:
        system = SystemDescription(args.source, args.preparation, args.mu_fp, args.loss_db, args.conditional)
    assessment = classify(system)
    text = assessment.to_json() + "\n"
    if args.out_dir:
        (_out_dir(args) / "security.json").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_histogram(args) -> int:
    peaks = _profile(args).peaks()
    text = coincidence_histogram(peaks, bin_width=args.bin_width).to_csv()
    if args.out_dir:
        (_out_dir(args) / "histogram.csv").write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_profile(args) -> int:
    sys.stdout.write(dumps(_profile(args)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="franson-qkd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    def add(name, func, help_, out_default=None, mc=False):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--profile", default="lab-20m", help="built-in profile name or profile file")
        s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a profile field")
        s.add_argument("--out-dir", default=out_default)
        if mc:
            s.add_argument("--seed", type=int, default=None)
            s.add_argument("--gates", type=int, default=None)
            s.add_argument("--workers", type=int, default=1)
        s.set_defaults(func=func)
        return s

    add("analytic", cmd_analytic, "closed-form QBER breakdown")
    s = add("simulate", cmd_simulate, "Monte Carlo session", out_default="out", mc=True)
    s.add_argument("--verification", action="store_true", help="send Alice's detector id to Bob")
    s = add("sweep", cmd_sweep, "QBER versus link attenuation (CSV)")
    s.add_argument("--min", type=float, default=0.0)
    s.add_argument("--max", type=float, default=12.0)
    s.add_argument("--step", type=float, default=0.5)
    s = add("distill", cmd_distill, "simulate, reconcile and privacy-amplify", out_default="out", mc=True)
    s.add_argument("--sample-fraction", type=float, default=0.1)
    s.add_argument("--margin", type=int, default=0)
    s = add("histogram", cmd_histogram, "coincidence histogram (CSV)")
    s.add_argument("--bin-width", type=float, default=None)
    add("profile", cmd_profile, "print the resolved profile")

    s = sub.add_parser("security", help="security level of a system")
    s.add_argument("--source", default="this", choices=["this", "pair", "faint_pulse", "classical"])
    s.add_argument("--preparation", default="passive", choices=["passive", "active"])
    s.add_argument("--mu-fp", type=float, default=None, help="mean photon number of faint pulses")
    s.add_argument("--loss-db", type=float, default=0.0, help="total loss T_L T_B in dB")
    s.add_argument("--conditional", action="store_true", help="use P(n>=2)/P(n>=1)")
    s.add_argument("--out-dir", default=None)
    s.set_defaults(func=cmd_security)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ReconciliationError as exc:
        print(f"reconciliation failed: {exc}", file=sys.stderr)
        return EXIT_RECONCILE


if __name__ == "__main__":
    sys.exit(main())
