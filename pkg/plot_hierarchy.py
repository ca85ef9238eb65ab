#!/usr/bin/env python3
"""
Plot a sweep written by run_hierarchy.py (CSV or JSON)
"""

import argparse
import os
import sys

import pandas as pd

from src.visualization.plotter import HierarchyPlotter


def main():
    parser = argparse.ArgumentParser(description='Plot hierarchy sweep results')
    parser.add_argument('sweep', help='sweep.csv or sweep.json')
    parser.add_argument('--out', help='Image path (default: next to the sweep file)')
    args = parser.parse_args()

    if args.sweep.endswith('.json'):
        sweep = pd.read_json(args.sweep, orient='records')
    else:
        sweep = pd.read_csv(args.sweep)
    out = args.out or os.path.splitext(args.sweep)[0] + '_levels.png'
    HierarchyPlotter().plot_levels(sweep, save_path=out)
    print(f"Saved {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
