"""Raster to vector digitisation of cadastral plot maps."""

from .pipeline import PipelineConfig, RunReport, run, run_image
from .vecmodel import Category, VectorMap, parse_ascii, write_ascii

__all__ = ["Category", "PipelineConfig", "RunReport", "VectorMap", "parse_ascii", "run", "run_image", "write_ascii"]
__version__ = "0.1.0"
