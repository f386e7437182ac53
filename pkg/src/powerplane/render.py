"""SVG drawings of partitions, pins and handles."""

from __future__ import annotations

import colorsys
from pathlib import Path
from typing import List, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .model import Partition, Problem

CANVAS = 600
LEGEND_WIDTH = 170


def net_color(net_id: int) -> str:
    h = ((net_id - 1) * 0.618034) % 1.0
    r, g, b = colorsys.hls_to_rgb(h, 0.72, 0.55)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


def _dark(net_id: int) -> str:
    h = ((net_id - 1) * 0.618034) % 1.0
    r, g, b = colorsys.hls_to_rgb(h, 0.3, 0.7)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


def partition_svg(
    problem: Problem,
    partition: Partition,
    handles: Optional[np.ndarray] = None,
    title: str = "",
) -> str:
    """SVG text for one partition.

    Board y grows upward; the drawing flips it so row 0 sits at the bottom.
    ``handles`` is an (m, k, 2) array in board units, drawn as crosses.
    """
    labels = np.asarray(partition.labels)
    res = labels.shape[0]
    cell = CANVAS / res
    counts = partition.island_counts()
    top = 30 if title else 0
    height = CANVAS + top
    out: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS + LEGEND_WIDTH}" '
        f'height="{height}" viewBox="0 0 {CANVAS + LEGEND_WIDTH} {height}">',
    ]
    if title:
        out.append(f'<text x="8" y="20" font-family="sans-serif" font-size="15">{escape(title)}</text>')
    out.append(f'<g transform="translate(0,{top})">')

    # one rect per horizontal run keeps the file small
    for row in range(res):
        y = (res - 1 - row) * cell
        vals = labels[row]
        cuts = [0, *(np.flatnonzero(np.diff(vals)) + 1).tolist(), res]
        for a, b in zip(cuts[:-1], cuts[1:]):
            out.append(
                f'<rect x="{a * cell:.2f}" y="{y:.2f}" width="{(b - a) * cell:.2f}" '
                f'height="{cell:.2f}" fill="{net_color(int(vals[a]))}" shape-rendering="crispEdges"/>'
            )
    out.append(f'<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="none" stroke="#333"/>')

    if handles is not None and len(handles):
        for idx, net_handles in enumerate(np.asarray(handles), start=1):
            for hx, hy in net_handles:
                cx, cy = hx * CANVAS, (1.0 - hy) * CANVAS
                out.append(
                    f'<path d="M{cx - 4:.1f},{cy - 4:.1f}L{cx + 4:.1f},{cy + 4:.1f}'
                    f'M{cx - 4:.1f},{cy + 4:.1f}L{cx + 4:.1f},{cy - 4:.1f}" '
                    f'stroke="{_dark(idx)}" stroke-width="1.5" class="handle"/>'
                )

    for net in problem.nets:
        for p in net.pins:
            cx, cy = p.x * CANVAS, (1.0 - p.y) * CANVAS
            out.append(
                f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="4.5" fill="{_dark(net.id)}" '
                f'stroke="white" class="pin"/>'
            )
            out.append(
                f'<text x="{cx + 6:.1f}" y="{cy - 5:.1f}" font-family="sans-serif" '
                f'font-size="10">{escape(net.label)}</text>'
            )
    out.append("</g>")

    out.append(f'<g transform="translate({CANVAS + 12},{top + 10})" class="legend">')
    for i, net in enumerate(problem.nets):
        y = i * 20
        n = counts.get(net.id, 0)
        out.append(f'<rect x="0" y="{y}" width="14" height="14" fill="{net_color(net.id)}" stroke="#333"/>')
        out.append(
            f'<text x="20" y="{y + 11}" font-family="sans-serif" font-size="12">'
            f'{escape(net.label)}: {n} island{"" if n == 1 else "s"}</text>'
        )
    out.append("</g></svg>")
    return "\n".join(out) + "\n"


def render_partition(problem, partition, out_path, handles=None, title="") -> Path:
    path = Path(out_path)
    path.write_text(partition_svg(problem, partition, handles, title))
    return path


def render_snapshots(problem, snapshots: Sequence, out_dir, k: int, stem="generation") -> List[Path]:
    """One SVG per stored generation, handles overlaid."""
    from .fitness import make_partition
    from .genopt import handles_of

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for snap in snapshots:
        part = make_partition(np.asarray(snap.labels), problem.m)
        hs = handles_of(np.asarray(snap.chromosome), k, problem.m) if k else None
        paths.append(render_partition(
            problem, part, out_dir / f"{stem}_{snap.generation:03d}.svg",
            handles=hs, title=f"generation {snap.generation}",
        ))
    return paths
