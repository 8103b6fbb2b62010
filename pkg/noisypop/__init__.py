"""
noisypop: population recovery from bit-flip-noised samples
"""

__version__ = "0.1.0"
