"""Wall-clock scaling of both estimators in p at fixed n, with the log-log slope of DirectLiNGAM."""

import argparse

from causalkg.cli import benchmark, loglog_slope, write_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p-grid", type=int, nargs="+", default=[4, 9, 16, 25])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--out", default="benchmark.csv")
    a = ap.parse_args()
    rows = benchmark(a.p_grid, a.n, a.trials)
    write_benchmark(rows, a.out)
    for algo in ("direct", "ica"):
        times = [r["mean_time"] for r in rows if r["algo"] == algo]
        cells = "  ".join(f"p={p}:{t:.4f}s" for p, t in zip(a.p_grid, times))
        slope = f"slope {loglog_slope(a.p_grid, times):.2f}" if len(times) > 1 else ""
        print(f"{algo:>6}  {cells}  {slope}")


if __name__ == "__main__":
    main()
