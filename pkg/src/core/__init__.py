"""
Core modules: linear algebra, channels, representation theory, orbit basis and reduction
"""
