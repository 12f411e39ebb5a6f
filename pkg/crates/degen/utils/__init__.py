"""Utility modules for the lab"""
from .logging import setup_logging
from .validation import validate_config

__all__ = ['setup_logging', 'validate_config']
