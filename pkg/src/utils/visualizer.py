import os
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import seaborn as sns


class ResultVisualizer:
    """Creates SVG charts for Lyapunov runs, sweeps and kernel profiles"""

    def __init__(self, output_dir: str = "results/plots", figure_size=(8, 5),
                 palette: str = "husl", hashsalt: str = "quantum-lyapunov"):
        self.output_dir = output_dir
        self.figure_size = figure_size
        os.makedirs(output_dir, exist_ok=True)

        # Set style
        plt.style.use('default')
        sns.set_palette(palette)
        plt.rcParams['font.size'] = 10
        # fixed salt and no date keep repeated SVGs byte-identical
        plt.rcParams['svg.hashsalt'] = hashsalt
        plt.rcParams['svg.fonttype'] = 'path'

    def _save(self, fig, filename: str) -> str:
        path = os.path.join(self.output_dir, filename)
        fig.savefig(path, format='svg', bbox_inches='tight', metadata={'Date': None})
        plt.close(fig)
        print(f"✅ Saved {filename}")
        return path

    def plot_delta_series(self, steps: np.ndarray, delta: np.ndarray, report: Optional[Dict] = None,
                          filename: str = "delta.svg", title: str = "") -> str:
        """log Delta(n) against n with the fitted growth law overlaid"""
        fig, ax = plt.subplots(figsize=self.figure_size)

        positive = delta > 0
        ax.semilogy(steps[positive], delta[positive], 'o-', markersize=3, linewidth=1, label='Δ(n)')

        if report:
            lo, hi = report['fit_window']
            window = (steps >= lo) & (steps <= hi) & positive
            if window.any():
                n0 = steps[window][0]
                anchor = delta[window][0]
                n = steps[window].astype(float)
                if report['verdict'] == 'exponential':
                    fitted = anchor * np.exp(report['lambda_hat'] * (n - n0))
                    label = f"exp fit, λ = {report['lambda_hat']:.4f}/kick"
                else:
                    n_safe = np.maximum(n, 1.0)
                    fitted = anchor * (n_safe / max(n0, 1.0)) ** report['degree_hat']
                    label = f"power fit, degree = {report['degree_hat']:.3f}"
                ax.semilogy(n, fitted, '--', color='red', label=label)
                ax.axvspan(lo, hi, color='grey', alpha=0.1)
            ax.set_title(f"{title} verdict: {report['verdict']}".strip(), fontsize=12, fontweight='bold')
        elif title:
            ax.set_title(title, fontsize=12, fontweight='bold')

        ax.set_xlabel('kick n')
        ax.set_ylabel('Δ(n)')
        ax.grid(True, alpha=0.3)
        ax.legend()
        return self._save(fig, filename)

    def plot_sweep(self, values: List, lambdas: List[Optional[float]], degrees: List[Optional[float]],
                   parameter: str, filename: str = "sweep.svg") -> str:
        """Fitted rate and degree per sweep point"""
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(self.figure_size[0] * 1.5, self.figure_size[1]))
        labels = [str(v) for v in values]
        nan = float('nan')

        ax1.bar(labels, [nan if x is None else x for x in lambdas], edgecolor='black', alpha=0.7)
        ax1.set_title('Exponential rate λ per kick', fontsize=12, fontweight='bold')
        ax1.set_xlabel(parameter)
        ax1.grid(True, alpha=0.3, axis='y')

        ax2.bar(labels, [nan if x is None else x for x in degrees], color='orange', edgecolor='black', alpha=0.7)
        ax2.set_title('Polynomial degree', fontsize=12, fontweight='bold')
        ax2.set_xlabel(parameter)
        ax2.grid(True, alpha=0.3, axis='y')

        plt.tight_layout()
        return self._save(fig, filename)

    def plot_kernel_profile(self, edges: np.ndarray, fractions: np.ndarray,
                            filename: str = "kernel_profile.svg") -> str:
        """Kernel mass against eigenphase gap (qualitative diagnostic)"""
        fig, ax = plt.subplots(figsize=self.figure_size)
        centers = 0.5 * (edges[:-1] + edges[1:])
        ax.bar(centers, fractions, width=np.diff(edges), edgecolor='black', alpha=0.7)
        ax.set_title('Kernel concentration (qualitative)', fontsize=12, fontweight='bold')
        ax.set_xlabel('|E_μ − E_ν|')
        ax.set_ylabel('fraction of Σ|K|')
        ax.set_xlim(0, np.pi)
        ax.grid(True, alpha=0.3, axis='y')
        return self._save(fig, filename)
