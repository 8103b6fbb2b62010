"""
Sample-complexity benchmark for noisypop
"""
