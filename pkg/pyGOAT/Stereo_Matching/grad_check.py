import numpy as np

from pyGOAT.Stereo_Matching.constants import CHECK_DTYPE


def grad_check(f, x, eps=1e-6, max_elements=512, rng=None):
    """
    Compare tape gradients of a scalar function with central differences.

    `x` is promoted to 64-bit for the duration of the check, so everything
    computed from it is evaluated in 64-bit as well; parameters captured by
    `f` keep their own precision.  The original buffer is restored afterwards.

    Parameters
    ----------
    f : callable
        Function of `x` returning a scalar Tensor.
    x : Tensor
        Leaf to differentiate against.
    eps : float
        Finite-difference step.
    max_elements : int
        Larger inputs are checked on a random subset of this many entries.
    rng : numpy.random.Generator, optional
        Chooses the subset.

    Returns
    -------
    float
        max |g - g_fd| / max(|g|, |g_fd|, 1e-8) over the checked entries.
    """
    original_data = x.data
    original_flag = x.requires_grad
    x.data = original_data.astype(CHECK_DTYPE)
    x.requires_grad = True
    x.grad = None
    try:
        f(x).backward()
        analytic = np.zeros(x.shape, dtype=CHECK_DTYPE) if x.grad is None \
            else x.grad.reshape(-1)

        flat = x.data.reshape(-1)
        positions = np.arange(flat.size)
        if flat.size > max_elements:
            rng = rng if rng is not None else np.random.default_rng(0)
            positions = rng.choice(flat.size, size=max_elements, replace=False)

        worst = 0.0
        for pos in positions:
            centre = flat[pos]
            flat[pos] = centre + eps
            plus = f(x).item()
            flat[pos] = centre - eps
            minus = f(x).item()
            flat[pos] = centre
            numeric = (plus - minus) / (2 * eps)
            g = float(analytic.reshape(-1)[pos])
            worst = max(worst, abs(g - numeric) / max(abs(g), abs(numeric), 1e-8))
        return worst
    finally:
        x.data = original_data
        x.requires_grad = original_flag
        x.grad = None
