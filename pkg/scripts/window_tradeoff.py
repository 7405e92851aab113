"""True-coincidence loss against accidental suppression when narrowing the window."""
import argparse

import numpy as np

from franson_qkd.interference import CoincidencePeaks, side_peak_leakage, window_tradeoff


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fwhm", type=float, default=0.8, help="peak FWHM, ns")
    ap.add_argument("--baseline", type=float, default=1.0, help="baseline window half-width, ns")
    args = ap.parse_args()

    peaks = CoincidencePeaks(3.0, args.fwhm, args.baseline)
    print("halfwidth_ns,true_retained,accidental_factor")
    for w in np.linspace(0.1, args.baseline, 10):
        kept, acc = window_tradeoff(peaks, w, args.baseline)
        print(f"{w:.2f},{kept:.4f},{acc:.4f}")
    for fwhm in (0.8, 1.4):
        p = CoincidencePeaks(3.0, fwhm)
        print(f"# fwhm {fwhm} ns: side-peak mass within 1 ns {side_peak_leakage(p, 1.0):.3e}, "
              f"within 2 ns {side_peak_leakage(p, 2.0):.3e}")


if __name__ == "__main__":
    main()
