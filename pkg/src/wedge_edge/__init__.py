"""Analytic continuation tools for the wedge-of-the-edge theorem."""
