# Simultaneous stabilization by analytic interpolation
__version__ = "0.3.0"
