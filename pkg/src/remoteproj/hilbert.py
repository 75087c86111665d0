"""Real inner-product arithmetic on dense float64 vectors."""
import numpy as np

#: default absolute comparison tolerance
ATOL = 1e-10


class DimensionMismatch(ValueError):
    pass


def as_vector(x, dim=None):
    """Coerce ``x`` to a finite 1-D float64 array, optionally of length ``dim``."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.size}")
    return v


def _check_dims(u, v):
    if u.shape != v.shape:
        raise DimensionMismatch(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")


def inner(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_dims(u, v)
    return float(u @ v)


def norm(v):
    v = np.asarray(v, dtype=np.float64)
    return float(np.sqrt(v @ v))


def axpy(alpha, x, y):
    """Return ``alpha * x + y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_dims(x, y)
    return alpha * x + y


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    n = norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n
