"""Optional floating-point operation accounting.

Cost model (in flop units, complex multiply-add = 1 unit):

  matmul(p, q, r)   p*q*r      product of a (p x q) and a (q x r) matrix
  inverse(n)        n**3       inverse or linear solve with an n x n matrix
  logdet(n)         n**3       log-determinant of an n x n matrix
  svd(n, m)         n*m*m      singular values of an n x m matrix (m <= n)

Counting is off unless a :class:`FlopCounter` has been activated; the hooks
below are then called from the precoding and rate routines. The counter is a
plain accumulator and is not thread safe; instrumented runs are serial.
"""

from __future__ import annotations

from contextlib import contextmanager

_active: "FlopCounter | None" = None


class FlopCounter:
    """Accumulates flop units for an instrumented run."""

    def __init__(self) -> None:
        self.total = 0

    def add(self, units: int) -> None:
        self.total += int(units)


@contextmanager
def activate(counter: FlopCounter):
    """Route all counting hooks into ``counter`` for the duration."""
    global _active
    previous = _active
    _active = counter
    try:
        yield counter
    finally:
        _active = previous


def matmul(p: int, q: int, r: int) -> None:
    if _active is not None:
        _active.add(p * q * r)


def inverse(n: int) -> None:
    if _active is not None:
        _active.add(n ** 3)


def logdet(n: int) -> None:
    if _active is not None:
        _active.add(n ** 3)


def svd(n: int, m: int) -> None:
    if _active is not None:
        _active.add(n * m * m)
