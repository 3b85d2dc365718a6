"""
Diagnostics that need no data: gradient checks for every layer kind and
exact polynomial representation.

A gradient check is one randomized trial: it draws inputs and parameters,
projects the operation's output to a scalar and returns the largest
relative error between the tape gradient and central differences, taken
over every argument of the operation.
"""

from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from autodiff import ops
from autodiff.grad_check import grad_check
from autodiff.tape import Tape
from data_loaders.polynomial import build_exact_network, build_product_tree_network, evaluate_polynomial, generate_polynomial
from experiments.sweep import announce
from layers.activations import record_leaky_relu, record_log_softmax, record_sigmoid, record_tanh
from layers.dense import record_dense
from layers.network import Network
from layers.product_unit import ProductUnitLayer, punn_forward, record_punn
from layers.recurrent import LSTM_GATES, record_gated_step, record_lstm_step
from layers.window import Aggregator, WindowConfig, output_width, record_windowed, window_starts, windowed_forward
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor
from training.losses import record_mse, record_nll
from utils.config import ExperimentConfig
from utils.errors import WpunnError
from utils.report_schema import ExperimentReport, create_metric_row

GradientCheck = Callable[[Rng], float]
Recorder = Callable[..., int]

TRIALS = 20
GRADIENT_TOLERANCE = 1e-6
EXACT_TOLERANCE = 1e-10
EXACT_POINTS = 100
MAX_EXACT_DEGREE = 6
SPECIALIZATION_CASES = 50
MIN_MAGNITUDE = 0.1
MAX_MAGNITUDE = 2.0


def signed_values(rng: Rng, *shape: int) -> np.ndarray:
    """Magnitudes uniform in [0.1, 2] with a random sign, away from kinks and zeros."""
    values = np.empty(int(np.prod(shape)))
    for i in range(values.size):
        magnitude = MIN_MAGNITUDE + (MAX_MAGNITUDE - MIN_MAGNITUDE) * rng.random()
        values[i] = magnitude if rng.random() < 0.5 else -magnitude
    return values.reshape(shape)


def positive_values(rng: Rng, *shape: int) -> np.ndarray:
    return np.abs(signed_values(rng, *shape))


def check_operation(record: Recorder, arguments: Sequence[np.ndarray], rng: Rng, one_hot: bool = False) -> float:
    """
    Worst relative error over every argument of record(tape, *nodes).

    The output is reduced with a random projection, or with a one-hot
    projection onto a random output element when one_hot is set (products
    of many small factors would otherwise drown in the other outputs).
    """
    shape_tape = Tape()
    shape = shape_tape.value(record(shape_tape, *[shape_tape.leaf(Tensor(a)) for a in arguments])).shape
    size = int(np.prod(shape))
    if one_hot:
        projection = np.zeros(size)
        projection[rng.below(size)] = 1.0
    else:
        projection = np.array([-1.0 + 2.0 * rng.random() for _ in range(size)])
    projection = projection.reshape(shape)

    worst = 0.0
    for k, argument in enumerate(arguments):
        def scalar(tape: Tape, leaf: int, k=k) -> int:
            nodes = [leaf if j == k else tape.leaf(Tensor(a)) for j, a in enumerate(arguments)]
            return ops.weighted_sum(tape, record(tape, *nodes), projection)

        worst = max(worst, grad_check(scalar, Tensor(argument)))
    return worst


def _dense_check(rng: Rng) -> float:
    return check_operation(record_dense, [signed_values(rng, 2, 3), signed_values(rng, 4, 3), signed_values(rng, 4)], rng)


def _window_check(w: int, s: int, aggregator: Aggregator = Aggregator.PRODUCT) -> GradientCheck:
    cfg = WindowConfig(w, s, aggregator)

    def check(rng: Rng) -> float:
        x = signed_values(rng, w + 2 * s)
        return check_operation(lambda tape, node: record_windowed(tape, node, cfg), [x], rng, one_hot=True)

    return check


def _punn_check(rng: Rng) -> float:
    arguments = [positive_values(rng, 4), -1.0 + 2.0 * np.array([[rng.random() for _ in range(4)] for _ in range(3)])]
    return check_operation(record_punn, arguments, rng, one_hot=True)


def _activation_check(record: Recorder) -> GradientCheck:
    def check(rng: Rng) -> float:
        return check_operation(record, [signed_values(rng, 5)], rng)

    return check


def _gated_check(rng: Rng) -> float:
    arguments = [signed_values(rng, 2), positive_values(rng, 3) / MAX_MAGNITUDE, signed_values(rng, 6, 5), signed_values(rng, 6)]
    return check_operation(record_gated_step, arguments, rng)


def _bounded_away(rng: Rng, n: int, low: float) -> np.ndarray:
    """Random signs with magnitudes in [low + 0.025, low + 0.5]."""
    draws = signed_values(rng, n)
    return np.sign(draws) * (low + np.abs(draws) / 4.0)


def _lstm_check(rng: Rng) -> float:
    # |f * c_prev| > |i * g| keeps c_t off zero; the candidate bias outweighs W z.
    def record(tape: Tape, x: int, h: int, c: int, *params: int) -> int:
        gates = {gate: (params[2 * i], params[2 * i + 1]) for i, gate in enumerate(LSTM_GATES)}
        h_next, c_next = record_lstm_step(tape, x, h, c, gates)
        return ops.concat(tape, [h_next, c_next])

    biases = {
        "input": signed_values(rng, 3) / 10.0,
        "forget": 1.0 + signed_values(rng, 3) / 10.0,
        "output": signed_values(rng, 3) / 10.0,
        "candidate": _bounded_away(rng, 3, 1.0),
    }
    arguments = [signed_values(rng, 2) / 2.0, signed_values(rng, 3) / 2.0, _bounded_away(rng, 3, 1.5)]
    for gate in LSTM_GATES:
        arguments += [signed_values(rng, 3, 5) / 20.0, biases[gate]]
    return check_operation(record, arguments, rng, one_hot=True)


def _nll_check(rng: Rng) -> float:
    labels = [rng.below(4) for _ in range(3)]
    return check_operation(lambda tape, x: record_nll(tape, x, labels), [signed_values(rng, 3, 4)], rng)


def _mse_check(rng: Rng) -> float:
    target = Tensor(signed_values(rng, 6))
    return check_operation(lambda tape, x: record_mse(tape, x, target), [signed_values(rng, 6)], rng)


GRADIENT_CHECKS: Dict[str, GradientCheck] = {
    "dense": _dense_check,
    "window-w2-s2": _window_check(2, 2),
    "window-w2-s1": _window_check(2, 1),
    "window-w4-s1": _window_check(4, 1),
    "window-w4-s4": _window_check(4, 4),
    "window-w8-s1": _window_check(8, 1),
    "window-max-w3-s2": _window_check(3, 2, Aggregator.MAX),
    "punn": _punn_check,
    "sigmoid": _activation_check(record_sigmoid),
    "tanh": _activation_check(record_tanh),
    "leaky-relu": _activation_check(record_leaky_relu),
    "log-softmax": _activation_check(record_log_softmax),
    "gated-block": _gated_check,
    "lstm": _lstm_check,
    "nll": _nll_check,
    "mse": _mse_check,
}


def run_gradcheck(
    config: ExperimentConfig,
    checks: Optional[Dict[str, GradientCheck]] = None,
    trials: int = TRIALS,
) -> ExperimentReport:
    """
    Run every gradient check for a number of random trials.

    One row per check; the test metric is its worst relative error. Checks
    above GRADIENT_TOLERANCE, or that raise, are recorded as failures.
    """
    checks = GRADIENT_CHECKS if checks is None else checks
    report = ExperimentReport(config.experiment_id, config.label, config=config.echo())
    worst_errors: Dict[str, float] = {}
    base = Rng(config.seed)
    for index, (name, check) in enumerate(checks.items()):
        rng = base.derive(index)
        try:
            worst = max(check(rng) for _ in range(trials))
        except WpunnError as e:
            report.failures.append(f"{name}: {type(e).__name__}: {e}")
            announce(config.quiet, f"❌ {name} error: {e}")
            continue
        worst_errors[name] = worst
        report.add_row(create_metric_row(config.experiment_id, name, 0, None, worst))
        if worst > GRADIENT_TOLERANCE:
            report.failures.append(f"{name}: relative error {worst:.3g} exceeds {GRADIENT_TOLERANCE:g}")
            announce(config.quiet, f"❌ {name}: max relative error {worst:.3g}")
        else:
            announce(config.quiet, f"✅ {name}: max relative error {worst:.3g}")
    report.summary["max_relative_error"] = worst_errors
    report.summary["trials"] = trials
    return report


def relative_deviation(actual: np.ndarray, expected: np.ndarray) -> float:
    """max |actual - expected| / max(|expected|, 1)."""
    if actual.size == 0:
        return 0.0
    return float(np.max(np.abs(actual - expected) / np.maximum(np.abs(expected), 1.0)))


def specialization_error(rng: Rng, cases: int = SPECIALIZATION_CASES) -> float:
    """
    Worst relative gap between windowed products and product units on positive inputs.

    Each case checks both directions: a w = s = N window against one unit with
    all-ones exponents, and a general (w, s) window against a unit layer whose
    exponent rows are the 0/1 indicators of the windows.
    """
    worst = 0.0
    for _ in range(cases):
        n = 1 + rng.below(8)
        x = Tensor(positive_values(rng, n))
        whole = windowed_forward(x, WindowConfig(n, n)).array
        unit = punn_forward(ProductUnitLayer(Tensor(np.ones((1, n)))), x).array
        worst = max(worst, relative_deviation(unit, whole))

        w = 1 + rng.below(n)
        cfg = WindowConfig(w, 1 + rng.below(w))
        indicators = np.zeros((output_width(n, cfg), n))
        for row, start in enumerate(window_starts(n, cfg)):
            indicators[row, start:start + w] = 1.0
        windowed = windowed_forward(x, cfg).array
        units = punn_forward(ProductUnitLayer(Tensor(indicators)), x).array
        worst = max(worst, relative_deviation(units, windowed))
    return worst


def run_exact_poly(config: ExperimentConfig) -> ExperimentReport:
    """
    Build exact networks for random polynomials and compare with direct evaluation.

    Degrees cycle through 1..6 unless config.d fixes one. Both the flat and
    the w = s = 2 product-tree constructions are checked at 100 points each;
    deviations above EXACT_TOLERANCE are failures.
    """
    report = ExperimentReport(config.experiment_id, config.label, config=config.echo())
    rng = Rng(config.seed)
    term_counts: List[int] = []
    worst = {"flat": 0.0, "tree": 0.0}
    for index in range(config.count):
        degree = config.d if config.d is not None else 1 + index % MAX_EXACT_DEGREE
        polynomial = generate_polynomial(degree, rng)
        points = -1.0 + 2.0 * np.array([[rng.random(), rng.random()] for _ in range(EXACT_POINTS)])
        expected = evaluate_polynomial(polynomial, points[:, 0], points[:, 1])
        term_counts.append(polynomial.term_count)
        for construction, build in (("flat", build_exact_network), ("tree", build_product_tree_network)):
            label = f"d{degree:02d}-p{index:03d}-{construction}"
            spec, params = build(polynomial)
            actual = Network(spec, params).predict(Tensor(points)).array.reshape(-1)
            deviation = relative_deviation(actual, expected)
            worst[construction] = max(worst[construction], deviation)
            report.add_row(create_metric_row(config.experiment_id, label, 0, None, deviation))
            if deviation > EXACT_TOLERANCE:
                report.failures.append(f"{label}: deviation {deviation:.3g} exceeds {EXACT_TOLERANCE:g}")
        announce(config.quiet, f"   p{index:03d}: degree {degree}, {polynomial.term_count} terms")

    specialization = specialization_error(rng)
    report.add_row(create_metric_row(config.experiment_id, "punn-specialization", 0, None, specialization))
    if specialization > EXACT_TOLERANCE:
        report.failures.append(f"punn-specialization: deviation {specialization:.3g} exceeds {EXACT_TOLERANCE:g}")

    report.summary["term_counts"] = term_counts
    report.summary["max_deviation"] = worst
    report.summary["specialization_deviation"] = specialization
    status = "✅" if report.passed else "❌"
    announce(
        config.quiet,
        f"{status} max deviation: flat {worst['flat']:.3g}, tree {worst['tree']:.3g}, "
        f"product unit specialization {specialization:.3g}",
    )
    return report
