import numpy


def is_row_stochastic(matrix: numpy.ndarray, atol: float = 1e-12) -> bool:
    """Check whether a matrix is a valid transition matrix

    Parameters
    ----------
    matrix : numpy.ndarray
        A square matrix
    atol : float, optional
        Absolute tolerance on row sums, by default 1e-12

    Returns
    -------
    bool
        True if all entries are non-negative and every row sums to one
    """
    matrix = numpy.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    if numpy.any(matrix < 0):
        return False
    return bool(numpy.allclose(matrix.sum(axis=1), 1.0, rtol=0.0, atol=atol))


def is_stationary(
    matrix: numpy.ndarray, distribution: numpy.ndarray, atol: float = 1e-12
) -> bool:
    """Check the left fixed point identity pi P = pi entrywise"""
    distribution = numpy.asarray(distribution)
    flow = distribution @ numpy.asarray(matrix)
    return bool(numpy.allclose(flow, distribution, rtol=0.0, atol=atol))


def satisfies_detailed_balance(
    matrix: numpy.ndarray, distribution: numpy.ndarray, atol: float = 1e-12
) -> bool:
    """Check pi(v) P[v, u] = pi(u) P[u, v] for all pairs

    A chain that satisfies detailed balance with respect to ``distribution``
    is reversible and has ``distribution`` as a stationary distribution.
    """
    flows = numpy.asarray(distribution)[:, None] * numpy.asarray(matrix)
    return bool(numpy.allclose(flows, flows.T, rtol=0.0, atol=atol))
