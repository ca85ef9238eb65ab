"""
Named verification suites
"""
