"""Figure rendering for the report paths.

All functions write straight to a file (format inferred from the suffix,
.png or .svg both work) and never open a window; the Agg backend is forced
so the CLI stays usable on headless machines.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def plot_two_ring(ds, split, preds_by_method, path):
    """Scatter panels: ground truth on the left, one panel per method after.

    Labeled samples are drawn as black stars on every panel; points are
    colored by class id so a ring split between classes is visible at a
    glance.
    """
    panels = [("ground truth", ds.truth)] + list(preds_by_method.items())
    fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 4),
                             sharex=True, sharey=True, squeeze=False)
    x, y = ds.features[:, 0], ds.features[:, 1]
    for ax, (title, labels) in zip(axes[0], panels):
        ax.scatter(x, y, c=np.asarray(labels), s=6, cmap="coolwarm")
        ax.scatter(x[split.labeled_indices], y[split.labeled_indices],
                   c="black", marker="*", s=90, label="labeled")
        ax.set_title(title)
        ax.set_aspect("equal")
    axes[0, 0].legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_points(ds, path):
    """Point cloud over the first two feature dimensions, colored by class."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(ds.features[:, 0], ds.features[:, 1], c=ds.truth, s=6,
               cmap="coolwarm")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_anchor_scaling(ms, accuracies, seconds, path):
    """Accuracy (left axis) and solve time (right axis, log-log) versus m."""
    fig, ax_acc = plt.subplots(figsize=(6, 4))
    ax_acc.plot(ms, accuracies, "o-", color="tab:blue", label="accuracy")
    ax_acc.set_xlabel("anchors m")
    ax_acc.set_ylabel("mean accuracy", color="tab:blue")
    ax_acc.set_xscale("log", base=2)
    ax_time = ax_acc.twinx()
    ax_time.plot(ms, seconds, "s--", color="tab:red", label="solve seconds")
    ax_time.set_ylabel("mean solve seconds", color="tab:red")
    ax_time.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_label_curve(per_class_list, acc_by_method, path):
    """Mean accuracy versus labeled samples per class, one line per method."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, accs in acc_by_method.items():
        ax.plot(per_class_list, accs, "o-", label=method)
    ax.set_xlabel("labeled samples per class")
    ax.set_ylabel("mean accuracy")
    ax.grid(True)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
