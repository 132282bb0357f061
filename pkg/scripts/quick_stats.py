#!/usr/bin/env python3
"""
Quick statistics viewer for a finished analysis run.

Reads package_metrics.csv from an output directory and prints per-ecosystem
counts, quadrant sizes and the top Nebraska packages.

Usage:
    python scripts/quick_stats.py output/
    python scripts/quick_stats.py output/ --variant unweighted --top 5
"""

import argparse
import sys
from pathlib import Path

import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.utils.file_utils import load_frame  # noqa: E402

QUADRANTS = ("pasteur", "popular", "nebraska", "majority")


def display_quick_stats(out_dir: str, variant: str = "weighted", top: int = 10) -> pd.DataFrame:
    """Print a summary of one variant; returns the variant's rows."""
    df = load_frame(Path(out_dir) / "package_metrics.csv", "package metrics")
    if df.empty:
        print("No packages found in file")
        return df

    rows = df[df["variant"] == variant].copy()
    if rows.empty:
        available = ", ".join(sorted(df["variant"].unique()))
        print(f"Variant {variant!r} not in file (available: {available})")
        return rows

    for column in ("mentions", "mention_pct", "centrality", "centrality_pct"):
        rows[column] = rows[column].astype(float)
    total = len(rows)

    print("\n" + "=" * 80)
    print("DEPENDENCY NETWORK - QUICK STATS")
    print("=" * 80)
    print(f"\nDirectory: {out_dir}")
    print(f"Variant:   {variant}")

    print(f"\n{'ECOSYSTEMS':-^80}")
    for ecosystem, group in rows.groupby("ecosystem", sort=True):
        unmentioned = int((group["mentions"] == 0).sum())
        print(
            f"  {ecosystem:14s} {len(group):6d} packages, "
            f"{unmentioned:6d} dependency-only ({unmentioned / len(group) * 100:5.1f}%)"
        )

    print(f"\n{'QUADRANTS':-^80}")
    counts = rows["quadrant"].value_counts()
    for quadrant in QUADRANTS:
        count = int(counts.get(quadrant, 0))
        pct = count / total * 100
        bar = "█" * int(pct / 2)
        print(f"  {quadrant:10s} {count:6d} ({pct:5.1f}%) {bar}")

    print(f"\n{f'TOP {top} NEBRASKA':-^80}")
    nebraska = rows[rows["mention_pct"] < 0.5].sort_values(
        ["centrality_pct", "node_key"], ascending=[False, True]
    )
    for i, row in enumerate(nebraska.head(top).itertuples(), 1):
        print(
            f"  {i:2d}. {row.software:30s} {row.ecosystem:13s} "
            f"mentions {int(row.mentions):6d}  centrality pct {row.centrality_pct:.4f}"
        )

    print("\n" + "=" * 80 + "\n")
    return rows


def main():
    parser = argparse.ArgumentParser(
        description="Display quick statistics for an analysis run",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("out_dir", help="Output directory of the pipeline")
    parser.add_argument("--variant", default="weighted")
    parser.add_argument("--top", type=int, default=10)

    args = parser.parse_args()

    try:
        display_quick_stats(args.out_dir, args.variant, args.top)
    except Exception as e:
        print(f"Error: {e}")
        import traceback

        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
