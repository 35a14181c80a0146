"""Floating-point helpers used only for cross-checks and report summaries."""


def central_difference(f, x, h):
    return (f(x + h) - f(x - h)) / (2 * h)


def richardson(f, h0, x=0.0, rtol=1e-9, max_iter=12):
    """Richardson-extrapolated central difference of f at x.

    Halves the step until two successive extrapolants agree to `rtol` (relative).
    Returns the last extrapolant; raises if the table never settles.
    """
    table = []
    h = h0
    prev = None
    for i in range(max_iter):
        row = [central_difference(f, x, h)]
        for j in range(1, i + 1):
            k = 4 ** j
            row.append((k * row[j - 1] - table[-1][j - 1]) / (k - 1))
        table.append(row)
        est = row[-1]
        if prev is not None and abs(est - prev) <= rtol * max(abs(est), 1e-300):
            return est
        if prev is not None and est == prev:
            return est
        prev = est
        h /= 2
    raise ArithmeticError("Richardson extrapolation did not converge")
