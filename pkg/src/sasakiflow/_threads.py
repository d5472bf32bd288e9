"""BLAS threading guard.

Every dense problem in this package is small (N <= 512); multi-threaded BLAS
loses an order of magnitude to thread hand-offs on matrices this size, so the
long-running entry points pin BLAS to one thread for their duration.
"""

from contextlib import contextmanager

try:
    from threadpoolctl import threadpool_limits

    def single_threaded_blas():
        return threadpool_limits(limits=1, user_api="blas")

except ImportError:  # pragma: no cover - threadpoolctl ships with scipy stacks

    @contextmanager
    def single_threaded_blas():
        yield
