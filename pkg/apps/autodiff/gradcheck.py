"""Central finite-difference verification of analytic adjoints."""
import numpy as np

from .tensor import FLOAT64

DEFAULT_STEP = 1e-3


def relative_error(analytic, numeric):
    """max |a - n| / max(1e-8, |a| + |n|); non-finite values count as failure (inf)."""
    analytic = np.asarray(analytic, dtype=FLOAT64)
    numeric = np.asarray(numeric, dtype=FLOAT64)
    if not (np.all(np.isfinite(analytic)) and np.all(np.isfinite(numeric))):
        return float('inf')
    denominator = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denominator, initial=0.0))


def _numeric_gradient(objective, array, step):
    numeric = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + step
        plus = objective()
        array[index] = original - step
        minus = objective()
        array[index] = original
        numeric[index] = (plus - minus) / (2 * step)
    return numeric


def grad_check(forward, backward, x, step=DEFAULT_STEP, rng=None):
    """Check ``backward`` against central differences of ``forward`` at ``x``.

    The scalar objective is <forward(x), r> for a random projection r, so the
    whole Jacobian-vector product is exercised. Run in 64-bit precision.
    """
    rng = rng or np.random.default_rng(0)
    x = np.array(x, dtype=FLOAT64)
    out = np.asarray(forward(x), dtype=FLOAT64)
    projection = rng.standard_normal(out.shape)
    analytic = backward(projection)

    def objective():
        return float(np.sum(np.asarray(forward(x), dtype=FLOAT64) * projection))

    return relative_error(analytic, _numeric_gradient(objective, x, step))


def check_layer(layer, x, step=DEFAULT_STEP, rng=None):
    """Max relative error over the input adjoint and every parameter gradient.

    The layer must already be cast to float64.
    """
    rng = rng or np.random.default_rng(0)
    x = np.array(x, dtype=FLOAT64)

    def backward(projection):
        layer.zero_grad()
        return layer.backward(projection.astype(FLOAT64))

    errors = [grad_check(layer.forward, backward, x, step, rng)]

    out = layer.forward(x)
    projection = rng.standard_normal(out.shape)
    for name, parameter in layer.named_parameters():
        layer.zero_grad()
        layer.forward(x)
        layer.backward(projection)
        analytic = parameter.grad.copy()

        def objective():
            return float(np.sum(layer.forward(x) * projection))

        errors.append(relative_error(analytic, _numeric_gradient(objective, parameter.value, step)))
    return max(errors)
