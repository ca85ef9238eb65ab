"""
Plots of hierarchy sweeps and solver histories
"""

from typing import Dict, List, Optional, Tuple

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt
import pandas as pd


class HierarchyPlotter:
    """
    Plotting class for sweep DataFrames produced by FidelityHierarchyEngine.run_sweep
    """

    def __init__(self, figsize: Tuple[int, int] = (10, 6), dpi: int = 200):
        self.figsize = figsize
        self.dpi = dpi
        self.color_palette = plt.get_cmap('tab10').colors

    def _finish(self, fig, save_path: Optional[str], show: bool):
        fig.tight_layout()
        if save_path:
            fig.savefig(save_path, dpi=self.dpi, bbox_inches='tight')
        if show:
            plt.show()
        else:
            plt.close(fig)
        return fig

    def plot_levels(self, sweep: pd.DataFrame, save_path: Optional[str] = None, show: bool = False):
        """
        Upper bound against level, one line per channel, with the seesaw lower bound

        Args:
            sweep: DataFrame with channel, param, level, value and seesaw columns
            save_path: Path to save the plot
            show: Display the figure instead of closing it
        """
        missing = {'channel', 'param', 'level', 'value'} - set(sweep.columns)
        if missing:
            raise ValueError(f"Sweep is missing columns: {sorted(missing)}")

        fig, ax = plt.subplots(figsize=self.figsize)
        for k, ((channel, param), group) in enumerate(sweep.groupby(['channel', 'param'], sort=False)):
            color = self.color_palette[k % len(self.color_palette)]
            group = group.sort_values('level')
            ax.plot(group['level'], group['value'], marker='o', color=color, label=f'{channel} ({param:g})')
            if 'seesaw' in group and group['seesaw'].notna().any():
                ax.axhline(group['seesaw'].dropna().iloc[0], color=color, linestyle='--', alpha=0.6)

        ax.set_title('Fidelity upper bound by hierarchy level (dashed: seesaw lower bound)')
        ax.set_xlabel('Level n')
        ax.set_ylabel('Bound on F(N, M)')
        ax.set_xticks(sorted(sweep['level'].unique()))
        ax.grid(True, alpha=0.3)
        ax.legend()
        return self._finish(fig, save_path, show)

    def plot_parameter_sweep(self, sweep: pd.DataFrame, channel: str, save_path: Optional[str] = None,
                             show: bool = False):
        """Bound against the channel parameter for each level of one channel family"""
        data = sweep[sweep['channel'] == channel]
        if data.empty:
            raise ValueError(f"No rows for channel '{channel}'")

        fig, ax = plt.subplots(figsize=self.figsize)
        for k, (level, group) in enumerate(data.groupby('level')):
            group = group.sort_values('param')
            ax.plot(group['param'], group['value'], marker='o', color=self.color_palette[k % 10],
                    label=f'n = {level}')
        if 'seesaw' in data and data['seesaw'].notna().any():
            lower = data.drop_duplicates('param').sort_values('param')
            ax.plot(lower['param'], lower['seesaw'], color='black', linestyle='--', label='seesaw')

        ax.set_title(f'{channel}: bounds against channel parameter')
        ax.set_xlabel('Parameter')
        ax.set_ylabel('Bound on F(N, M)')
        ax.grid(True, alpha=0.3)
        ax.legend()
        return self._finish(fig, save_path, show)

    def plot_convergence(self, history: List[Dict[str, float]], save_path: Optional[str] = None,
                         show: bool = False):
        """Residual / gap history of one solver run on a log scale"""
        if not history:
            raise ValueError("Empty solver history")
        frame = pd.DataFrame(history)
        fig, ax = plt.subplots(figsize=self.figsize)
        for k, column in enumerate(c for c in ('primal_residual', 'dual_residual', 'gap') if c in frame):
            ax.semilogy(frame['iteration'], frame[column].clip(lower=1e-16), color=self.color_palette[k],
                        label=column.replace('_', ' '))
        ax.set_title('Solver convergence')
        ax.set_xlabel('Iteration')
        ax.grid(True, alpha=0.3)
        ax.legend()
        return self._finish(fig, save_path, show)
