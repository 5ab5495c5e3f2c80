"""
Evaluation reports, metrics CSV files, learning-curve plots and trajectory traces.
"""

import csv
import logging

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from stlpack.errors import StlPackError  # noqa: E402

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ('step', 'mean_return', 'success_rate', 'alpha', 'critic_loss', 'actor_loss')

plt.rcParams['svg.hashsalt'] = 'stlpack'


class EvalReport:
    """Result of one evaluation point.
    """

    def __init__(self, step, returns, satisfied, alpha=None, critic_loss=None, actor_loss=None):
        """
        Args:
            step (int): Training step of the evaluated policy.
            returns (list): Discounted return of every trajectory.
            satisfied (list): Whether every trajectory satisfies the specification.
            alpha (float, optional): Entropy temperature at `step`.
            critic_loss (float, optional): Last critic loss.
            actor_loss (float, optional): Last actor loss.
        """
        if not len(returns):
            raise StlPackError('An evaluation needs at least one trajectory')
        self.step = step
        self.returns = [float(r) for r in returns]
        self.satisfied = [bool(s) for s in satisfied]
        self.alpha = alpha
        self.critic_loss = critic_loss
        self.actor_loss = actor_loss

    @property
    def mean_return(self):
        return float(np.mean(self.returns))

    @property
    def success_rate(self):
        return sum(self.satisfied) / len(self.satisfied)

    def row(self):
        return {
            'step': self.step,
            'mean_return': self.mean_return,
            'success_rate': self.success_rate,
            'alpha': self.alpha,
            'critic_loss': self.critic_loss,
            'actor_loss': self.actor_loss,
        }

    def to_dict(self):
        out = self.row()
        out['returns'] = self.returns
        out['satisfied'] = self.satisfied
        return out


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_metrics(reports, csv_path, svg_path=None):
    """Writes one CSV row per evaluation point and optionally the learning-curve plot.

    Raises:
        StlPackError: Raised with the path when a file cannot be written.
    """
    try:
        with open(csv_path, 'w', newline='', encoding='utf-8') as fh:
            writer = csv.writer(fh, lineterminator='\n')
            writer.writerow(METRIC_COLUMNS)
            for report in reports:
                row = report.row()
                writer.writerow([_cell(row[c]) for c in METRIC_COLUMNS])
    except OSError as ex:
        raise StlPackError('Cannot write metrics %s: %s' % (csv_path, ex))
    if svg_path is not None:
        plot_curves({'run': [read_rows(reports)]}, svg_path)


def read_rows(reports):
    return [report.row() for report in reports]


def read_metrics(csv_path):
    """Reads a metrics CSV back into rows of floats (`None` for empty cells).

    Raises:
        StlPackError: Raised with the path when the file cannot be read.
    """
    try:
        with open(csv_path, 'r', newline='', encoding='utf-8') as fh:
            rows = []
            for raw in csv.DictReader(fh):
                row = {c: (float(raw[c]) if raw.get(c) else None) for c in METRIC_COLUMNS}
                rows.append(row)
    except (OSError, ValueError, KeyError) as ex:
        raise StlPackError('Cannot read metrics %s: %s' % (csv_path, ex))
    return rows


def plot_curves(series, svg_path):
    """Plots mean return and success rate against the training step.

    Args:
        series (dict): Label to a list of runs, each run a list of metric rows. Every run is
            drawn as a thin line; labels with several runs also get their mean and a mean +- std band.
        svg_path (str): Output file.

    Raises:
        StlPackError: Raised with the path when the figure cannot be written.
    """
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for (label, runs), color in zip(series.items(), plt.rcParams['axes.prop_cycle'].by_key()['color'] * 10):
        runs = [run for run in runs if run]
        if not runs:
            continue
        for ax, key in zip(axes, ('mean_return', 'success_rate')):
            for run in runs:
                ax.plot([r['step'] for r in run], [r[key] for r in run], color=color, alpha=0.3, linewidth=0.8)
            if len(runs) > 1:
                length = min(len(run) for run in runs)
                steps = np.array([r['step'] for r in runs[0][:length]])
                values = np.array([[r[key] for r in run[:length]] for run in runs], dtype=np.float64)
                mean, std = values.mean(axis=0), values.std(axis=0)
                ax.plot(steps, mean, color=color, label=label)
                ax.fill_between(steps, mean - std, mean + std, color=color, alpha=0.2)
            else:
                ax.lines[-1].set_label(label)
    axes[0].set_ylabel('mean return')
    axes[1].set_ylabel('success rate')
    axes[1].set_xlabel('step')
    axes[0].legend(loc='best')
    fig.tight_layout()
    try:
        fig.savefig(svg_path, format='svg', metadata={'Date': None})
    except OSError as ex:
        raise StlPackError('Cannot write plot %s: %s' % (svg_path, ex))
    finally:
        plt.close(fig)


def write_trace(path, states, inputs, rewards, sensor_depths, actuator_depths):
    """Writes one row per step: `t, x0.., u0.., reward, sensor_queue, actuator_queue`.

    The `x` columns are the format read back by the monitor command.
    """
    states = np.asarray(states)
    inputs = np.asarray(inputs)
    header = (['t'] + ['x%d' % i for i in range(states.shape[1])] + ['u%d' % i for i in range(inputs.shape[1])]
              + ['reward', 'sensor_queue', 'actuator_queue'])
    try:
        with open(path, 'w', newline='', encoding='utf-8') as fh:
            writer = csv.writer(fh, lineterminator='\n')
            writer.writerow(header)
            for t in range(len(states)):
                writer.writerow([t] + [repr(float(v)) for v in states[t]] + [repr(float(v)) for v in inputs[t]]
                                + [repr(float(rewards[t])), sensor_depths[t], actuator_depths[t]])
    except OSError as ex:
        raise StlPackError('Cannot write trace %s: %s' % (path, ex))


def read_trace(path):
    """Reads the `x0, x1, ...` columns of a trace CSV.

    Returns:
        numpy.ndarray: `(length, n_x)` array.

    Raises:
        StlPackError: Raised when the file cannot be read or has no `x` columns.
    """
    try:
        with open(path, 'r', newline='', encoding='utf-8') as fh:
            reader = csv.DictReader(fh)
            columns = [c for c in (reader.fieldnames or []) if c[:1] == 'x' and c[1:].isdigit()]
            columns.sort(key=lambda c: int(c[1:]))
            if not columns or columns != ['x%d' % i for i in range(len(columns))]:
                raise StlPackError('Trace %s needs columns x0 .. x<n-1>' % path)
            states = [[float(row[c]) for c in columns] for row in reader]
    except (OSError, ValueError) as ex:
        raise StlPackError('Cannot read trace %s: %s' % (path, ex))
    return np.array(states, dtype=np.float64).reshape(-1, len(columns))
