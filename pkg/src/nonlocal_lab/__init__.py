"""Correlation models, CHSH bounds, nonsignaling audits and jamming geometry."""

__version__ = "0.1.0"
