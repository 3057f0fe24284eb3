"""Uplink NOMA link simulator: Zadoff-Chu preambles, multi-user channel
estimation, synchronisation and iterative LMMSE detection."""

__version__ = "0.1.0"
