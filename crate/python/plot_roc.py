"""Plot roc.csv written by `nrjam roc` or `nrjam sweep`.

    python python/plot_roc.py out/roc.csv roc.png
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(csv_path, png_path):
    df = pd.read_csv(csv_path, na_values="NA")
    fig, ax = plt.subplots(figsize=(5, 5))
    for n, g in df.groupby("n"):
        g = g.dropna(subset=["p_f", "p_d"]).sort_values("p_f")
        ax.plot(g["p_f"], g["p_d"], marker="o", label=f"N = {n}")
    ax.plot([0, 1], [0, 1], color="grey", linestyle=":", linewidth=1)
    ax.set_xlabel("P_F")
    ax.set_ylabel("P_D")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit("usage: plot_roc.py ROC_CSV OUT_PNG")
    main(sys.argv[1], sys.argv[2])
