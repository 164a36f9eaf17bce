"""Time-adaptive local minimisation for rate-independent evolutions.

Subpackages are imported lazily so that the command line can configure
thread counts before numpy is loaded.
"""
__version__ = "0.1.0"
