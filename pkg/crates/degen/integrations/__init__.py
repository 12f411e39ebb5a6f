"""Output formats for the lab"""
from .export import TableExporter, write_json

__all__ = ['TableExporter', 'write_json']
