"""Analytic QBER breakdown and net-rate estimate for the built-in profiles."""
import argparse

from franson_qkd.distillation import net_rate
from franson_qkd.profiles import BUILTIN_PROFILES, apply_overrides, parse_assignment
from franson_qkd.qber_model import qber_breakdown


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()
    overrides = [parse_assignment(s) for s in args.set]
    print(f"{'profile':<14}{'loss dB':>8}{'det':>9}{'opt':>9}{'acc':>9}{'total':>9}{'exact':>9}{'raw Hz':>9}{'net Hz':>9}")
    for name, profile in BUILTIN_PROFILES.items():
        p = apply_overrides(profile, overrides)
        b = p.budget()
        br = qber_breakdown(b)
        print(f"{name:<14}{b.link_loss_db:8.2f}{br.qber_det:9.4f}{br.qber_opt:9.4f}{br.qber_acc:9.4f}"
              f"{br.total:9.4f}{br.counted:9.4f}{br.raw_rate:9.1f}{net_rate(br.raw_rate, br.counted):9.1f}")


if __name__ == "__main__":
    main()
