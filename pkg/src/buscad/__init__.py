"""Breast ultrasound CAD pipeline: contourlet texture analysis, RiIG and
Nakagami statistical modelling, parametric (CP/WCP) imaging, feature
extraction, and cross-validated classification."""

__version__ = "0.1.0"
