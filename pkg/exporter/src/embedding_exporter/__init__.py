"""Contextual token-embedding exporter for the hypersent interchange format."""

__version__ = "0.1.0"

from .exporting import ExportConfig, ExportReport, FetchError, export

__all__ = ["ExportConfig", "ExportReport", "FetchError", "export"]
