"""Convergence thresholds frozen from an oracle run before the test suite was written.

Generated with seed 42, t = 1 and n in (16, 64, 256, 1024, 4096). Each value is
about 1.5x the observed err(4096), rounded up, so that BLAS-level rounding
differences across machines cannot flip a test while a regression in the
product ordering or in the limit (typically an O(1) change) is still caught.
"""

SEED = 42
T = 1.0
N_VALUES = (16, 64, 256, 1024, 4096)

# scenario -> (dim, observed err(4096), locked threshold)
LOCKED = {
    "example1-dft": (8, 5.235e-4, 8e-4),
    "example2-blocks": (2, 1.320e-5, 2e-5),
    "example3-two-unitaries": (3, 1.086e-4, 1.7e-4),
    "decoupling": (2, 9.026e-5, 1.4e-4),
    "cyclic": (3, 4.862e-5, 7.5e-5),
    "zeno": (4, 1.233e-4, 1.9e-4),
    "custom": (3, 1.365e-4, 2.1e-4),
}
