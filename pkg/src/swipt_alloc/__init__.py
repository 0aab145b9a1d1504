"""swipt_alloc: resource-allocation solvers and Monte-Carlo harness for
SWIPT-enabled OFDMA networks."""

__version__ = "0.1.0"
