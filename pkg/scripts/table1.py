"""Simulation study: FLoST-1 (true K) vs FLoST-2 (K = half) test/train RMSE and fit time.

    python scripts/table1.py --panel A --T 100 --replicates 10
    python scripts/table1.py --panel C --T 100 500 --replicates 3 --csv results.csv
"""
import argparse
import csv
import sys

from flost.experiment import DEFAULT_GRID, run_replicate, summarize

PANELS = {"A": (0.5, 10), "B": (0.5, 20), "C": (0.2, 10)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--panel", choices=sorted(PANELS), nargs="+", default=["A"])
    ap.add_argument("--T", type=int, nargs="+", default=[100])
    ap.add_argument("--replicates", type=int, default=10)
    ap.add_argument("--grid", type=float, nargs=3, default=DEFAULT_GRID,
                    metavar=("LOG_MIN", "LOG_MAX", "STEPS"))
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()
    grid = (args.grid[0], args.grid[1], int(args.grid[2]))

    rows = []
    for panel in args.panel:
        p, k_frac = PANELS[panel]
        for T in args.T:
            results = []
            for seed in range(args.replicates):
                results.extend(run_replicate(T, p, seed, k_frac=k_frac, grid=grid))
                print(f"panel {panel} T={T} replicate {seed + 1}/{args.replicates}", file=sys.stderr)
            stats = summarize(results)
            print(f"\nPanel {panel} (p={p}, K=T/{k_frac}), T={T}, {args.replicates} replicates")
            print(f"{'method':8s} {'test':>20s} {'train':>20s} {'time (s)':>10s}")
            for method in ("FLoST-1", "FLoST-2"):
                te, tr, tm = (stats[(method, k)] for k in ("test_rmse", "train_rmse", "fit_seconds"))
                print(f"{method:8s} {te[0]:.6f} ({te[1]:.6f}) {tr[0]:.6f} ({tr[1]:.6f}) {tm[0]:10.3f}")
            rows.extend(dict(panel=panel, T=T, **r.row()) for r in results)

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
