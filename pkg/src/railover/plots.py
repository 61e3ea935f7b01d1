"""Figure rendering for evaluation reports (PNG files next to the CSV)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# no timestamps or tool versions in the PNGs: reports must be reproducible
_PNG_METADATA = {"Software": None}


def plot_accuracy_bars(results, path: str | Path) -> None:
    """Grouped bar chart: accuracy per sensor for every method."""
    sensors = sorted({s for r in results for s in r.per_sensor})
    x = np.arange(len(sensors))
    width = 0.8 / max(len(results), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, r in enumerate(results):
        vals = [r.per_sensor.get(s, np.nan) for s in sensors]
        ax.bar(x + (i - (len(results) - 1) / 2) * width, vals, width,
               label=r.method)
    ax.set_xticks(x)
    ax.set_xticklabels(sensors, rotation=15)
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.05)
    ax.legend(loc="lower right")
    ax.set_title("Detection accuracy per sensor position")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)


def plot_confusions(results, out_dir: str | Path) -> None:
    """One heatmap per method/sensor confusion matrix, if present."""
    out_dir = Path(out_dir)
    for r in results:
        for sensor, conf in r.confusions.items():
            conf = np.asarray(conf)
            fig, ax = plt.subplots(figsize=(4, 3.5))
            im = ax.imshow(conf, cmap="Blues")
            labels = (["non-event", "event"] if conf.shape[0] == 2
                      else ["none", "steel", "wood", "stone", "bone"])
            ax.set_xticks(range(len(labels)))
            ax.set_yticks(range(len(labels)))
            ax.set_xticklabels(labels, rotation=45, ha="right")
            ax.set_yticklabels(labels)
            ax.set_xlabel("predicted")
            ax.set_ylabel("true")
            for (i, j), v in np.ndenumerate(conf):
                ax.text(j, i, str(int(v)), ha="center", va="center",
                        color="black" if v < conf.max() * 0.6 else "white")
            fig.colorbar(im, ax=ax, shrink=0.8)
            ax.set_title(f"{r.method} / {sensor}")
            fig.tight_layout()
            fig.savefig(out_dir / f"confusion_{r.method}_{sensor}.png",
                        metadata=_PNG_METADATA)
            plt.close(fig)
