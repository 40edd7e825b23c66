"""probsched: exact and statistical analysis of randomized concurrent programs"""

__version__ = "1.0.0"
