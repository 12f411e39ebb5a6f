"""Degenerate Coercivity Lab"""
__version__ = "0.3.0"
