"""
CSV and SVG emission of sweep, trajectory and stress results.
"""

import csv
from enum import Enum
from itertools import groupby
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from seaqtsim import _log as log  # noqa: E402
from seaqtsim.harness import StressReport  # noqa: E402
from seaqtsim.linalg import Matrix  # noqa: E402
from seaqtsim.metrics import MetricsRecord  # noqa: E402
from seaqtsim.protocol import SampleRecord, SweepRecord  # noqa: E402

METRIC_COLUMNS = (
    "concurrence",
    "fidelity",
    "entropy_kB",
    "entropy_rate_kB_per_ns",
    "purity",
    "min_eigenvalue",
)
SWEEP_COLUMNS = ("tau_ns", "d_eps_uV") + METRIC_COLUMNS
SAMPLE_COLUMNS = ("time_ns", "d_eps_uV") + METRIC_COLUMNS
STRESS_COLUMNS = (
    "case",
    "time_ns",
    "lambda_1",
    "lambda_2",
    "lambda_3",
    "lambda_4",
    "concurrence",
)
TERM_COLUMNS = ("term", "row", "col", "real_per_us", "imag_per_us")

# Fixed so repeated runs produce identical SVG ids.
SVG_HASH_SALT = "seaqtsim"

Records = Sequence[SweepRecord] | Sequence[SampleRecord]


class PlotKind(Enum):
    """
    Figure rendered by emit_plot.
    """

    FIDELITY = "fidelity"
    CONCURRENCE = "concurrence"
    ENTROPY = "entropy"
    EIGENVALUES = "eigenvalues"
    STRESS_CONCURRENCE = "stress-concurrence"
    PURITY = "purity"


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _metric_values(m: MetricsRecord) -> list[str]:
    m.validate()
    return [
        _fmt(v)
        for v in (
            m.concurrence,
            m.fidelity,
            m.entropy,
            m.entropy_rate,
            m.purity,
            m.min_eigenvalue,
        )
    ]


def _record_row(record: SweepRecord | SampleRecord) -> list[str]:
    x = record.tau if isinstance(record, SweepRecord) else record.time
    return [_fmt(x), _fmt(record.d_eps)] + _metric_values(record.metrics)


def _stress_rows(report: StressReport) -> Iterable[list[str]]:
    for case in report.cases:
        for t, values, c in zip(case.times, case.eigenvalues, case.concurrences):
            yield [str(case.index), _fmt(t)] + [_fmt(v) for v in values] + [_fmt(c)]


def emit_csv(
    records: Records | StressReport,
    path: str | Path,
    comments: Sequence[str] = (),
) -> None:
    """
    Write records as a UTF-8 CSV file with LF line endings.
    Metric rows are re-validated before they are written.

    :param records: Sweep or trajectory records, or a stress report.
    :param path: Output file.
    :param comments: Lines written first, each prefixed with '# '.
    :raises MetricsRangeError: if a record violates its value ranges.
    """
    if isinstance(records, StressReport):
        header: Sequence[str] = STRESS_COLUMNS
        rows: Iterable[list[str]] = _stress_rows(records)
        comments = [
            f"generator={records.generator} seed={records.seed} "
            f"method={records.method.value}",
            *comments,
        ]
    else:
        samples = bool(records) and isinstance(records[0], SampleRecord)
        header = SAMPLE_COLUMNS if samples else SWEEP_COLUMNS
        rows = [_record_row(r) for r in records]

    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in comments:
            f.write(f"# {line}\n")

        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    log.info("💾", f"Wrote {path}")


def emit_terms_csv(symplectic: Matrix, dissipative: Matrix, path: str | Path) -> None:
    """
    Write the entries of the SEAQT equation-of-motion terms in units of 1/μs.

    :param symplectic: Commutator term -i[H, ρ] (1/ns).
    :param dissipative: Dissipation term (1/ns).
    :param path: Output file.
    """
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TERM_COLUMNS)
        for name, term in (("symplectic", symplectic), ("dissipative", dissipative)):
            for (i, j), value in np.ndenumerate(1e3 * term):
                writer.writerow([name, i, j, _fmt(value.real), _fmt(value.imag)])

    log.info("💾", f"Wrote {path}")


def _x_of(record: SweepRecord | SampleRecord) -> float:
    return record.tau if isinstance(record, SweepRecord) else record.time


def _series(
    records: Records,
) -> list[tuple[float, list[SweepRecord | SampleRecord]]]:
    ordered = sorted(records, key=lambda r: r.d_eps)
    return [(d, list(group)) for d, group in groupby(ordered, key=lambda r: r.d_eps)]


def _x_label(records: Records) -> str:
    return "tau_ns" if isinstance(records[0], SweepRecord) else "time_ns"


def _plot_metric(records: Records, attr: str, label: str) -> plt.Figure:
    fig, ax = plt.subplots()
    for d_eps, group in _series(records):
        ax.plot(
            [_x_of(r) for r in group],
            [getattr(r.metrics, attr) for r in group],
            label=f"d_eps = {d_eps:g} uV",
        )

    ax.set_xlabel(_x_label(records))
    ax.set_ylabel(label)
    ax.legend()
    return fig


def _plot_entropy(records: Records) -> plt.Figure:
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True)
    for d_eps, group in _series(records):
        x = [_x_of(r) for r in group]
        top.plot(x, [r.metrics.entropy for r in group], label=f"d_eps = {d_eps:g} uV")
        bottom.plot(x, [r.metrics.entropy_rate for r in group])

    top.set_ylabel("entropy_kB")
    top.legend()
    bottom.set_ylabel("entropy_rate_kB_per_ns")
    bottom.set_xlabel(_x_label(records))
    return fig


def _plot_eigenvalues(report: StressReport) -> plt.Figure:
    fig, ax = plt.subplots()
    for case in report.cases:
        for k in range(case.eigenvalues.shape[1]):
            ax.plot(case.times, case.eigenvalues[:, k], linewidth=0.3)

    ax.axhline(0.0, color="black", linestyle="--", linewidth=0.8)
    ax.set_xlabel("time_ns")
    ax.set_ylabel("eigenvalue")
    return fig


def _plot_stress_concurrence(report: StressReport) -> plt.Figure:
    fig, ax = plt.subplots()
    for case in report.cases:
        ax.plot(case.times, case.concurrences, linewidth=0.3)

    ax.set_xlabel("time_ns")
    ax.set_ylabel("concurrence")
    return fig


def _plot_purity(report: StressReport) -> plt.Figure:
    fig, ax = plt.subplots()
    ax.hist(report.initial_purities, bins=40, range=(0.25, 1.0))
    ax.set_xlabel("purity")
    ax.set_ylabel("cases")
    return fig


def _render(records: Records | StressReport, kind: PlotKind) -> plt.Figure:
    if isinstance(records, StressReport):
        match kind:
            case PlotKind.EIGENVALUES:
                return _plot_eigenvalues(records)
            case PlotKind.STRESS_CONCURRENCE:
                return _plot_stress_concurrence(records)
            case PlotKind.PURITY:
                return _plot_purity(records)
    else:
        match kind:
            case PlotKind.FIDELITY:
                fig = _plot_metric(records, "fidelity", "fidelity")
                # Separable states stay at or below 0.5.
                fig.axes[0].axhline(0.5, color="black", linestyle="--", linewidth=0.8)
                return fig
            case PlotKind.CONCURRENCE:
                return _plot_metric(records, "concurrence", "concurrence")
            case PlotKind.ENTROPY:
                return _plot_entropy(records)

    raise ValueError(f"plot {kind.value} does not apply to these records")


def emit_plot(
    records: Records | StressReport, path: str | Path, kind: PlotKind
) -> None:
    """
    Render records as a static SVG figure, one polyline per detuning.

    :param records: Sweep or trajectory records, or a stress report.
    :param path: Output file.
    :param kind: Figure to render.
    """
    if not isinstance(records, StressReport) and not records:
        raise ValueError("nothing to plot")

    plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT
    fig = _render(records, kind)
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)

    log.info("🖼️", f"Wrote {path}")
