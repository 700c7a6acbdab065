"""Render the warpbasis CSV exports as figure images.

Reads the four files the warpbasis CLI writes (fig1_target.csv,
fig2_map.csv, fig3_convergence.csv, fig4_bases.csv) and draws one image per
file: the target function, the perturbing map, the convergence comparison
on a logarithmic error axis, and the basis overlay with solid unperturbed
and dashed perturbed curves.

This module does no numerical work beyond parsing: every plotted value is
a CSV value.  Missing or malformed input exits nonzero with a message.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

EXPECTED_FILES = ("fig1_target.csv", "fig2_map.csv", "fig3_convergence.csv",
                  "fig4_bases.csv")


class FigureInputError(ValueError):
    """A required CSV is missing or does not match the expected contract."""


@dataclass(frozen=True)
class FigureJob:
    input_dir: Path
    output_dir: Path
    image_format: str = "png"

    def __post_init__(self):
        if self.image_format not in ("png", "svg"):
            raise FigureInputError(f"unsupported format {self.image_format!r}")


def read_columns(path: Path, expected_header: list[str] | None = None):
    """Parse a CSV into (header, columns as float lists)."""
    if not path.is_file():
        raise FigureInputError(f"missing input file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows) < 2:
        raise FigureInputError(f"{path.name}: no data rows")
    header = rows[0]
    if expected_header is not None and header != expected_header:
        raise FigureInputError(
            f"{path.name}: header {header!r} does not match {expected_header!r}")
    try:
        columns = [[float(row[i]) for row in rows[1:]] for i in range(len(header))]
    except (ValueError, IndexError) as exc:
        raise FigureInputError(f"{path.name}: malformed data row ({exc})") from exc
    return header, columns


def overlay_header_pairs(header: list[str]) -> int:
    """Validate the basis-overlay header x,herm0..hermK,pert0..pertK and
    return the number of overlaid functions."""
    if not header or header[0] != "x" or len(header) % 2 == 0:
        raise FigureInputError(f"fig4 header {header!r} not of form x,herm*,pert*")
    count = (len(header) - 1) // 2
    want = [f"herm{i}" for i in range(count)] + [f"pert{i}" for i in range(count)]
    if header[1:] != want:
        raise FigureInputError(f"fig4 header {header!r} not of form x,herm*,pert*")
    return count


def plot_target(columns) -> plt.Figure:
    x, f = columns
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, f, color="tab:blue")
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.set_title("Target function")
    ax.grid(True, alpha=0.3)
    return fig

def plot_map(columns) -> plt.Figure:
    x, h = columns
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, h, color="tab:green")
    ax.set_xlabel("x")
    ax.set_ylabel("h(x)")
    ax.set_title("Perturbing map")
    ax.grid(True, alpha=0.3)
    return fig


def plot_convergence(columns) -> plt.Figure:
    n, err_plain, err_warped = columns
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, err_plain, marker="o", label="reference basis")
    ax.plot(n, err_warped, marker="s", label="perturbed basis")
    ax.set_yscale("log")
    ax.set_xlabel("number of basis functions N")
    ax.set_ylabel("L2 error")
    ax.set_title("Convergence of the expansion error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return fig


def plot_basis_overlay(header, columns) -> plt.Figure:
    count = overlay_header_pairs(header)
    x = columns[0]
    fig, ax = plt.subplots(figsize=(8, 5))
    cycle = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i in range(count):
        color = cycle[i % len(cycle)]
        ax.plot(x, columns[1 + i], color=color, linestyle="-",
                label=f"n={i}" if i < 3 else None)
        ax.plot(x, columns[1 + count + i], color=color, linestyle="--")
    ax.set_xlabel("x")
    ax.set_title("Basis functions: solid unperturbed, dashed perturbed")
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    return fig


def render_all(job: FigureJob) -> list[Path]:
    """Render all four figures; returns the written image paths."""
    _, fig1_cols = read_columns(job.input_dir / "fig1_target.csv", ["x", "f"])
    _, fig2_cols = read_columns(job.input_dir / "fig2_map.csv", ["x", "h"])
    _, fig3_cols = read_columns(job.input_dir / "fig3_convergence.csv",
                                ["N", "err_hermite", "err_perturbed"])
    fig4_header, fig4_cols = read_columns(job.input_dir / "fig4_bases.csv")

    figures = [
        ("fig1_target", plot_target(fig1_cols)),
        ("fig2_map", plot_map(fig2_cols)),
        ("fig3_convergence", plot_convergence(fig3_cols)),
        ("fig4_bases", plot_basis_overlay(fig4_header, fig4_cols)),
    ]
    job.output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, fig in figures:
        path = job.output_dir / f"{name}.{job.image_format}"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figplot", description="Render warpbasis CSV exports as images")
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="directory holding the four CSV exports")
    parser.add_argument("--out", dest="output_dir", required=True,
                        help="directory for the rendered images")
    parser.add_argument("--format", dest="image_format", default="png",
                        choices=("png", "svg"))
    args = parser.parse_args(argv)
    try:
        job = FigureJob(input_dir=Path(args.input_dir),
                        output_dir=Path(args.output_dir),
                        image_format=args.image_format)
        written = render_all(job)
    except FigureInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
