"""Central finite-difference gradient checking for nn modules (float64)."""
import numpy as np

from ecg_har.nn import Context

REL_TOL = 1e-4
ABS_TOL = 1e-7
STEP = 1e-5


def fd_gradient(loss_fn, arr):
    """Central differences of a scalar function w.r.t. arr, in place."""
    grad = np.zeros_like(arr)
    flat = arr.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        h = STEP * (1.0 + abs(orig))
        flat[i] = orig + h
        fp = loss_fn()
        flat[i] = orig - h
        fm = loss_fn()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def assert_grads_close(analytic, numeric, what=""):
    err = np.abs(analytic - numeric)
    tol = REL_TOL * np.maximum(np.abs(analytic), np.abs(numeric)) + ABS_TOL
    worst = np.max(err - tol)
    assert worst <= 0, f"gradient mismatch{f' ({what})' if what else ''}: excess {worst:.3e}"


def check_module(make_module, x_shape, seed=0, train=False, dropout_seed=123):
    """Verify input and parameter gradients of a module on a random input."""
    rng = np.random.default_rng(seed)
    module = make_module(rng).astype(np.float64)
    x = rng.normal(size=x_shape)

    def run():
        # fresh dropout stream per evaluation so FD sees a fixed mask
        return module.forward(x, Context(train=train, rng=np.random.default_rng(dropout_seed)))

    direction = np.random.default_rng(seed + 1).normal(size=run().shape)

    def loss():
        return float(np.sum(run() * direction))

    module.zero_grad()
    run()
    dx = module.backward(direction)
    assert_grads_close(dx, fd_gradient(loss, x), "input")
    for p in module.parameters():
        assert_grads_close(p.grad, fd_gradient(loss, p.value), p.name)
