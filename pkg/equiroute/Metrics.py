import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import numpy as np
from .Oracle import feasible_mask, select
from .Utils import NumericsError

# Budget sweep and the curve metrics computed from it.
#
#   sweep      route every query of a split at each budget of a grid; realized cost and performance
#              always use the true table values
#   nauc       trapezoidal area under (mean cost, mean perf) normalized by the cost range
#   peak_score max mean perf on the curve, ties to the lowest cost
#   qnc        lowest mean cost reaching the best single model's mean perf, relative to that model's cost
#   rci        mean per-query collapse score of a selection (dominated or missed a cheaper equal model)

QNC_NOT_ACHIEVED = '/'


@dataclass(frozen=True)
class SweepPoint:
    budget: float
    mean_cost: float
    mean_perf: float
    calls: tuple
    clamped: int


@dataclass(frozen=True)
class SweepCurve:
    points: tuple

    @property
    def xs(self):
        return np.array([p.mean_cost for p in self.points])

    @property
    def ys(self):
        return np.array([p.mean_perf for p in self.points])

    def xy(self):
        return [(p.mean_cost, p.mean_perf) for p in self.points]


@dataclass(frozen=True)
class CollapseReport:
    query_index: np.ndarray
    selected: np.ndarray
    a_sel: np.ndarray
    a_star: np.ndarray
    cheaper: np.ndarray     # X_n, models strictly cheaper than the selection
    matched: np.ndarray     # K_n, cheaper models matching or beating the selection
    score: np.ndarray       # s_n
    rci: float
    call_rates: np.ndarray

    def rows(self):
        return zip(self.query_index, self.selected, self.a_sel, self.a_star, self.cheaper, self.matched, self.score)


@dataclass(frozen=True)
class MetricsSummary:
    nauc: float
    peak_score: float
    peak_cost: float
    qnc: object
    qnc_relative: object
    rci: float
    a_max: float
    x_max: float
    j_max: int

    def as_dict(self):
        return {
            'nauc': self.nauc,
            'peak_score': self.peak_score,
            'peak_cost': self.peak_cost,
            'qnc': self.qnc,
            'qnc_relative': self.qnc_relative,
            'rci': self.rci,
            'a_max': self.a_max,
            'x_max': self.x_max,
            'j_max': self.j_max,
        }


def _xy(curve):
    if isinstance(curve, SweepCurve):
        return curve.xy()
    return [(float(x), float(y)) for x, y in curve]


def budget_grid(table, indices, n_points = 100):
    if n_points < 2:
        raise ValueError(f"budget grid needs at least 2 points, got {n_points}")
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise ValueError("budget grid over an empty split")
    costs = table.cost[indices]
    return np.linspace(costs.min(axis=1).min(), costs.max(), n_points)


def sweep(router, table, indices, grid, cost_source = 'predicted', workers = 1):
    indices = np.asarray(indices, dtype=np.int64)
    grid = [float(C) for C in grid]
    if len(grid) == 0:
        raise ValueError("empty budget grid")
    scores = router.score_queries(table, indices)
    costs = router.decision_costs(table, indices, cost_source)
    true_perf = table.perf[indices]
    true_cost = table.cost[indices]
    rows = np.arange(indices.size)

    def evaluate(C):
        mask, clamped = feasible_mask(costs, C)
        chosen = select(scores, costs, mask)
        point = SweepPoint(
            budget=C,
            mean_cost=float(np.mean(true_cost[rows, chosen])),
            mean_perf=float(np.mean(true_perf[rows, chosen])),
            calls=tuple(int(c) for c in np.bincount(chosen, minlength=table.n_models)),
            clamped=int(clamped.sum()),
        )
        logging.debug(f"sweep {router.kind} C={C}: cost={point.mean_cost} perf={point.mean_perf} clamped={point.clamped}")
        return point

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(evaluate, grid))
    else:
        points = [evaluate(C) for C in grid]
    points.sort(key=lambda p: p.mean_cost)
    logging.info(f"Swept {router.kind} over {len(grid)} budgets on {indices.size} queries ({cost_source} costs)")
    return SweepCurve(points=tuple(points))


def merge_equal_x(curve):
    merged = {}
    for x, y in _xy(curve):
        merged[x] = max(y, merged.get(x, -np.inf))
    return sorted(merged.items())


def trapezoid_auc(xs, ys):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    return float(np.sum((ys[1:] + ys[:-1]) / 2.0 * np.diff(xs)))


def nauc(curve):
    points = merge_equal_x(curve)
    if len(points) < 2 or points[-1][0] <= points[0][0]:
        raise NumericsError("degenerate cost range")
    xs, ys = zip(*points)
    return trapezoid_auc(xs, ys) / (xs[-1] - xs[0])


def peak_score(curve):
    points = sorted(_xy(curve), key=lambda p: (-p[1], p[0]))
    if len(points) == 0:
        raise ValueError("peak score of an empty curve")
    y, x = points[0][1], points[0][0]
    return y, x


def standalone_best(table, indices):
    indices = np.asarray(indices, dtype=np.int64)
    means = table.perf[indices].mean(axis=0)
    j_max = int(np.argmax(means))
    return float(means[j_max]), float(table.cost[indices, j_max].mean()), j_max


def qnc_value(curve, a_max):
    reached = [x for x, y in merge_equal_x(curve) if y >= a_max]
    return min(reached) if reached else None


def qnc_relative(curve, a_max, x_max):
    value = qnc_value(curve, a_max)
    return QNC_NOT_ACHIEVED if value is None else value / x_max


def qnc(curve, table, indices):
    a_max, x_max, _ = standalone_best(table, indices)
    value = qnc_value(curve, a_max)
    if value is None:
        return QNC_NOT_ACHIEVED, QNC_NOT_ACHIEVED
    return value, value / x_max


def rci(table, selections, indices):
    indices = np.asarray(indices, dtype=np.int64)
    selections = np.asarray(selections, dtype=np.int64)
    if selections.shape != indices.shape:
        raise ValueError(f"one selection per query expected: {selections.shape} selections for {indices.shape} queries")
    if selections.size and (selections.min() < 0 or selections.max() >= table.n_models):
        bad = int(np.flatnonzero((selections < 0) | (selections >= table.n_models))[0])
        raise ValueError(f"selection {selections[bad]} out of range for query {indices[bad]}")

    perf = table.perf[indices]
    cost = table.cost[indices]
    rows = np.arange(indices.size)
    a_sel = perf[rows, selections]
    a_star = perf.max(axis=1)
    cheaper = cost < cost[rows, selections][:, None]
    n_cheaper = cheaper.sum(axis=1)
    n_matched = (cheaper & (perf >= a_sel[:, None])).sum(axis=1)
    score = np.where(a_sel < a_star, 1.0, np.where(n_cheaper > 0, n_matched / np.maximum(n_cheaper, 1), 0.0))
    call_rates = np.bincount(selections, minlength=table.n_models) / max(selections.size, 1)
    value = float(score.mean()) if score.size else 0.0
    return CollapseReport(query_index=indices, selected=selections, a_sel=a_sel, a_star=a_star, cheaper=n_cheaper, matched=n_matched, score=score, rci=value, call_rates=call_rates)


def call_rate_curve(curve):
    calls = np.array([p.calls for p in curve.points], dtype=np.float64)
    return calls / calls.sum(axis=1, keepdims=True)


def unconstrained_selections(router, table, indices, cost_source = 'predicted'):
    return router.decide(table, indices, np.inf, cost_source)[0]


def summarize(router, table, indices, n_points = 100, cost_source = 'predicted', workers = 1):
    """Sweep the router over the budget grid of `indices` and collect every curve metric."""
    grid = budget_grid(table, indices, n_points)
    curve = sweep(router, table, indices, grid, cost_source, workers)
    collapse = rci(table, unconstrained_selections(router, table, indices, cost_source), indices)
    a_max, x_max, j_max = standalone_best(table, indices)
    ps, ps_cost = peak_score(curve)
    value = qnc_value(curve, a_max)
    summary = MetricsSummary(
        nauc=nauc(curve),
        peak_score=ps,
        peak_cost=ps_cost,
        qnc=QNC_NOT_ACHIEVED if value is None else value,
        qnc_relative=QNC_NOT_ACHIEVED if value is None else value / x_max,
        rci=collapse.rci,
        a_max=a_max,
        x_max=x_max,
        j_max=j_max,
    )
    logging.info(f"{router.kind}: nAUC={summary.nauc:.4f} Ps={summary.peak_score:.4f} QNC={summary.qnc_relative} RCI={summary.rci:.4f}")
    return curve, summary, collapse


def check_thresholds(summary, thresholds):
    """Return a message per violated acceptance threshold; unset thresholds are skipped."""
    failures = []
    if thresholds.min_nauc is not None and summary.nauc < thresholds.min_nauc:
        failures.append(f"nauc {summary.nauc} < min_nauc {thresholds.min_nauc}")
    if thresholds.min_peak_score is not None and summary.peak_score < thresholds.min_peak_score:
        failures.append(f"peak_score {summary.peak_score} < min_peak_score {thresholds.min_peak_score}")
    if thresholds.max_rci is not None and summary.rci > thresholds.max_rci:
        failures.append(f"rci {summary.rci} > max_rci {thresholds.max_rci}")
    if thresholds.max_qnc_relative is not None:
        if summary.qnc_relative == QNC_NOT_ACHIEVED:
            failures.append(f"qnc not achieved, max_qnc_relative {thresholds.max_qnc_relative}")
        elif summary.qnc_relative > thresholds.max_qnc_relative:
            failures.append(f"qnc_relative {summary.qnc_relative} > max_qnc_relative {thresholds.max_qnc_relative}")
    return failures
