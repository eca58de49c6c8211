"""Independent reference computations used by the tests."""
import numpy as np

from hiered.ranking import RankingDataset


def grid_svm(X, y, C=1.0, lo=-4.0, hi=4.0, step=0.01):
    """Brute-force minimiser of 0.5|w|^2 + C sum hinge over a (w, b) grid.

    Returns ``(objective, w, b)``. Supports 1-D and 2-D features.
    """
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    y = np.asarray(y, dtype=float)
    axis = np.arange(round((hi - lo) / step) + 1) * step + lo
    if X.shape[1] == 1:
        W, B = np.meshgrid(axis, axis, indexing="ij")
        margins = y[None, None, :] * (W[..., None] * X[:, 0] + B[..., None])
        obj = 0.5 * W ** 2 + C * np.maximum(0, 1 - margins).sum(axis=-1)
        i, j = np.unravel_index(np.argmin(obj), obj.shape)
        return float(obj[i, j]), np.array([W[i, j]]), float(B[i, j])
    best = (np.inf, None, None)
    W1, W2 = np.meshgrid(axis, axis, indexing="ij")
    for b in axis:
        margins = y * (W1[..., None] * X[:, 0] + W2[..., None] * X[:, 1] + b)
        obj = 0.5 * (W1 ** 2 + W2 ** 2) + C * np.maximum(0, 1 - margins).sum(axis=-1)
        k = np.unravel_index(np.argmin(obj), obj.shape)
        if obj[k] < best[0]:
            best = (float(obj[k]), np.array([W1[k], W2[k]]), float(b))
    return best


def one_d_instance():
    return RankingDataset(np.array([[2.0], [3.0], [0.0], [1.0]]), np.array([1, 1, -1, -1]))


def gaussian_instance(seed=42, d=12, n=100, separation=4.0):
    """Two unit-variance clusters whose centres are ``separation`` sigma apart."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    pos = rng.standard_normal((n, d)) + 0.5 * separation * u
    neg = rng.standard_normal((n, d)) - 0.5 * separation * u
    return RankingDataset(np.vstack([pos, neg]), np.r_[np.ones(n), -np.ones(n)])


def finite_difference(f, x, h=1e-4):
    """Central differences of ``f`` with respect to every entry of array ``x`` (in place).

    ``f`` returns either a scalar or ``(scalar, state)``. With a state, the
    second result flags entries whose +h and -h evaluations saw different
    states, e.g. a ReLU activation pattern flipping inside the stencil.
    """
    g = np.zeros_like(x)
    flipped = np.zeros(x.shape, dtype=bool)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f()
        x[i] = old - h
        fm = f()
        x[i] = old
        if isinstance(fp, tuple):
            (fp, sp), (fm, sm) = fp, fm
            flipped[i] = sp != sm
        g[i] = (fp - fm) / (2 * h)
    return g, flipped
