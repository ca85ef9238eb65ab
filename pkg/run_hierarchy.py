#!/usr/bin/env python3
"""
Fidelity Hierarchy Engine - quick-start sweep

Solves levels 1 and 2 for a small grid of built-in qubit channels at M = 2
and writes sweep.csv / sweep.json under output/.
"""

import logging
import os
import sys
from datetime import datetime

from src.core.config import RunConfig
from src.engine import FidelityHierarchyEngine

CHANNELS = [
    ('identity', 0.0),
    ('depolarizing', 0.25),
    ('dephasing', 0.5),
    ('amplitude_damping', 0.3),
]
LEVELS = [1, 2]


def main():
    """Main function for command-line usage"""
    logging.basicConfig(level=logging.INFO, format='%(message)s')
    print("Fidelity Hierarchy Engine - Quick-start Sweep")
    print("=" * 60)

    output_dir = os.path.join('output', f"sweep_{datetime.now().strftime('%Y%m%d_%H%M%S')}")
    engine = FidelityHierarchyEngine(RunConfig(M=2), output_dir=output_dir)
    print(f"Output directory: {output_dir}")

    try:
        sweep = engine.run_sweep(CHANNELS, LEVELS)
    except Exception as e:
        print(f"Error during sweep: {str(e)}")
        return 1

    print()
    print(sweep.to_string(index=False))
    print(f"\nPlot with: python plot_hierarchy.py {os.path.join(output_dir, 'sweep.csv')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
