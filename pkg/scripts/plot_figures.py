"""Render the portrait and trace CSVs written by the CLI.

    helisoliton portrait --h 2 --window=-3:3 --out portrait.csv
    helisoliton trace --h 1 --out trace.csv
    python scripts/plot_figures.py portrait.csv trace.csv --out figures.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def load(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: data[name] for name in data.dtype.names}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("portrait")
    ap.add_argument("trace")
    ap.add_argument("--out", default="figures.png")
    args = ap.parse_args(argv)

    p, t = load(args.portrait), load(args.trace)
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(11, 5))

    n = int(round(np.sqrt(len(p["tau"]))))
    tau, mu = p["tau"].reshape(n, n), p["mu"].reshape(n, n)
    u, v = p["dtau"].reshape(n, n), p["dmu"].reshape(n, n)
    ax0.streamplot(tau.T, mu.T, u.T, v.T, density=1.3, linewidth=0.7, color="0.3")
    ax0.plot(t["tau"], t["mu"], color="tab:red", lw=1.2)
    ax0.set(xlabel="tau", ylabel="mu", title="phase plane", aspect="equal",
            xlim=(tau.min(), tau.max()), ylim=(mu.min(), mu.max()))

    ax1.add_patch(plt.Circle((0, 0), 1, fill=False, color="0.6"))
    left = t["tau"] < 0
    ax1.plot(t["disk_x"][left], t["disk_y"][left], color="tab:blue", lw=1)
    ax1.plot(t["disk_x"][~left], t["disk_y"][~left], color="tab:orange", lw=1)
    ax1.set(xlim=(-1.05, 1.05), ylim=(-1.05, 1.05), aspect="equal", title="generating curve (disk)")
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
